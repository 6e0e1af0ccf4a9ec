"""Catalog of model domains in H^n, each described by a level set phi with Omega = {phi > 0}."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import GeometryError, Point, gauge_distance_arr

CATALOG = ("gauge-ball", "gauge-ring", "slab", "paraboloid", "touching-ball")


@dataclass
class DomainSpec:
    """Omega = {levelset > 0}. ``levelset_arr`` acts on stacked coordinates (m, 2n+1).

    ``bbox`` is a pair (lo, hi) of coordinate arrays enclosing the part of Omega used for
    grids and sampling; ``rho_max`` caps boundary-distance searches on unbounded domains.
    """

    domain_id: str
    params: tuple
    n: int
    levelset_arr: Callable[[np.ndarray], np.ndarray]
    bbox: tuple
    rho_max: float
    bounded: bool = True
    meta: dict = field(default_factory=dict)

    def levelset(self, g: Point) -> float:
        return float(self.levelset_arr(g.as_array()[None, :])[0])

    def contains(self, g: Point) -> bool:
        return self.levelset(g) > 0

    def euclidean_gradient(self, g: Point, h: float = 1e-6) -> np.ndarray:
        """Central-difference gradient of phi in the coordinates (z, t)."""
        a = g.as_array()
        E = np.eye(a.size) * h
        vals = self.levelset_arr(np.concatenate([a + E, a - E]))
        return (vals[: a.size] - vals[a.size:]) / (2.0 * h)

    def horizontal_gradient(self, g: Point, h: float = 1e-6) -> np.ndarray:
        """X_i phi from the Euclidean gradient: X_i = d/dx_i - y_i/2 d/dt, X_{n+i} = d/dy_i + x_i/2 d/dt."""
        grad = self.euclidean_gradient(g, h)
        n = g.n
        gz, gt = grad[:-1], grad[-1]
        out = gz.copy()
        out[:n] -= 0.5 * g.y * gt
        out[n:] += 0.5 * g.x * gt
        return out

    def describe(self) -> dict:
        return {"domain": self.domain_id, "params": list(self.params), "n": self.n}


def _split_center(params: Sequence[float], tail: int, n_default: int = 1):
    """Params are either the trailing scalars alone (center e) or 2n+1 center coordinates first."""
    params = [float(v) for v in params]
    if len(params) == tail:
        return Point.identity(n_default), params
    head = len(params) - tail
    if head < 3 or head % 2 == 0:
        raise GeometryError(f"expected {tail} values or 2n+1 center coordinates followed by {tail} values")
    return Point.from_array(params[:head]), params[head:]


def _ball_box(c: Point, R: float):
    lo = np.append(c.z - R, c.t - R * R / 4 - 0.5 * R * np.linalg.norm(c.z))
    hi = np.append(c.z + R, c.t + R * R / 4 + 0.5 * R * np.linalg.norm(c.z))
    return lo, hi


def gauge_ball(params) -> DomainSpec:
    c, (R,) = _split_center(params, 1)
    if not R > 0:
        raise GeometryError("gauge-ball radius must be positive")
    ca = c.as_array()

    def phi(a):
        return R - gauge_distance_arr(np.broadcast_to(ca, a.shape), a)

    return DomainSpec("gauge-ball", tuple(params), c.n, phi, _ball_box(c, R), 2.0 * R,
                      meta={"center": c, "R": R})


def gauge_ring(params) -> DomainSpec:
    c, (r1, r2) = _split_center(params, 2)
    if not 0 < r1 < r2:
        raise GeometryError("gauge-ring needs 0 < r_in < r_out")
    ca = c.as_array()

    def phi(a):
        d = gauge_distance_arr(np.broadcast_to(ca, a.shape), a)
        return np.minimum(d - r1, r2 - d)

    return DomainSpec("gauge-ring", tuple(params), c.n, phi, _ball_box(c, r2), 2.0 * r2,
                      meta={"center": c, "r_in": r1, "r_out": r2})


def slab(params) -> DomainSpec:
    """0 < <z, omega> < w. Params: w alone (omega = e_1 in H^1) or omega followed by w."""
    params = [float(v) for v in params]
    if len(params) == 1:
        omega, w = np.array([1.0, 0.0]), params[0]
    elif len(params) >= 3 and len(params) % 2 == 1:
        omega, w = np.array(params[:-1]), params[-1]
        omega = omega / np.linalg.norm(omega)
    else:
        raise GeometryError("slab params are w or omega_1..omega_2n,w")
    if not w > 0:
        raise GeometryError("slab width must be positive")
    n = omega.size // 2
    L = max(w, 1.0)

    def phi(a):
        s = a[..., :-1] @ omega
        return np.minimum(s, w - s)

    mid = 0.5 * w * omega
    lo = np.append(mid - L, -L * L / 2)
    hi = np.append(mid + L, L * L / 2)
    return DomainSpec("slab", tuple(params), n, phi, (lo, hi), 4.0 * L, bounded=False,
                      meta={"omega": omega, "w": w})


def paraboloid(params) -> DomainSpec:
    """t > -M |z|^2."""
    params = [float(v) for v in params]
    if len(params) not in (1, 2):
        raise GeometryError("paraboloid params are M or M,n")
    M = params[0]
    n = int(params[1]) if len(params) == 2 else 1
    if not M > 0:
        raise GeometryError("paraboloid needs M > 0")

    def phi(a):
        return a[..., -1] + M * np.sum(a[..., :-1] ** 2, axis=-1)

    lo = np.append(-np.ones(2 * n), -1.0)
    hi = np.append(np.ones(2 * n), 1.0)
    return DomainSpec("paraboloid", tuple(params), n, phi, (lo, hi), 4.0, bounded=False, meta={"M": M})


def touching_ball(params=()) -> DomainSpec:
    """The gauge ball B((0, 1), 2) = {|z|^4 + 16 (t - 1)^2 < 16}; e and (0, 2) are its poles."""
    params = [float(v) for v in params]
    n = int(params[0]) if params else 1

    def phi(a):
        r2 = np.sum(a[..., :-1] ** 2, axis=-1)
        return 16.0 - r2 * r2 - 16.0 * (a[..., -1] - 1.0) ** 2

    lo = np.append(-2.0 * np.ones(2 * n), 0.0)
    hi = np.append(2.0 * np.ones(2 * n), 2.0)
    c = np.zeros(2 * n + 1)
    c[-1] = 1.0
    return DomainSpec("touching-ball", tuple(params), n, phi, (lo, hi), 4.0,
                      meta={"center": Point.from_array(c), "R": 2.0})


_BUILDERS = {
    "gauge-ball": gauge_ball,
    "gauge-ring": gauge_ring,
    "slab": slab,
    "paraboloid": paraboloid,
    "touching-ball": touching_ball,
}


def make_domain(domain_id: str, params=()) -> DomainSpec:
    if domain_id not in _BUILDERS:
        raise GeometryError(f"unknown domain {domain_id!r}; choose from {', '.join(CATALOG)}")
    return _BUILDERS[domain_id](list(params))

