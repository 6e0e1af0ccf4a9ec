"""Boundary diagnostics on catalog domains: gauge distance to the boundary, characteristic
points, corkscrew and outer-ball tests, and decay / comparison profiles near a boundary point."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .core import (GeometryError, Point, dilate, gauge_distance, gauge_norm, gauge_norm_arr, inverse,
                   multiply, multiply_arr, sample_ball)
from .defaults import default
from .domains import DomainSpec
from .hyperplanes import graph_tangent_lambda, tangent_ball_to_plane
from .solver import DiscreteField

RHO_FLOOR = 1e-9
RHO_STEPS = 90


def unit_sphere_directions(n: int, mesh=default("sphere_mesh"), seed: int = default("seed")) -> np.ndarray:
    """Points of the unit gauge sphere {N = 1}.

    In H^1 a (theta, phi) grid of (sqrt(cos theta) (cos phi, sin phi), sin(theta) / 4);
    for n > 1 seeded Gaussian directions pushed to the sphere by a dilation.
    """
    n_theta, n_phi = mesh
    if n == 1:
        th = np.linspace(-np.pi / 2, np.pi / 2, n_theta)
        ph = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
        TH, PH = np.meshgrid(th, ph, indexing="ij")
        c = np.sqrt(np.clip(np.cos(TH), 0.0, None))
        out = np.stack([c * np.cos(PH), c * np.sin(PH), np.sin(TH) / 4.0], axis=-1).reshape(-1, 3)
        return np.unique(np.round(out, 15), axis=0)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n_theta * n_phi, 2 * n + 1))
    return _to_sphere(v)


def _to_sphere(v: np.ndarray) -> np.ndarray:
    v = np.atleast_2d(np.asarray(v, float))
    N = gauge_norm_arr(v)
    out = v.copy()
    out[:, :-1] /= N[:, None]
    out[:, -1] /= N ** 2
    return out


def _ray_points(g: np.ndarray, sigma: np.ndarray, rho) -> np.ndarray:
    rho = np.asarray(rho, float)
    q = sigma * np.ones_like(rho)[..., None]
    q[..., :-1] *= rho[..., None]
    q[..., -1] *= rho ** 2
    return multiply_arr(np.broadcast_to(g, q.shape), q)


def _first_exit(D: DomainSpec, g: np.ndarray, sigma: np.ndarray, iters: int = 64, rhos=None) -> np.ndarray:
    """First rho of the grid ``rhos`` (geometric up to rho_max by default) where
    phi(g delta_rho sigma) <= 0, sharpened by bisection. Directions that never leave get +inf."""
    if rhos is None:
        rhos = np.geomspace(RHO_FLOOR * D.rho_max, D.rho_max, RHO_STEPS)
    m = sigma.shape[0]
    vals = D.levelset_arr(_ray_points(g, sigma[:, None, :], np.broadcast_to(rhos, (m, rhos.size))))
    out = vals <= 0
    hit = out.any(axis=1)
    k = np.argmax(out, axis=1)
    lo = np.where(k > 0, rhos[np.maximum(k - 1, 0)], 0.0)
    hi = rhos[k]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = D.levelset_arr(_ray_points(g, sigma, mid)) > 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return np.where(hit, hi, np.inf)


def boundary_distance(g: Point, D: DomainSpec, mesh=default("sphere_mesh"), refine: bool = True):
    """Gauge distance from g to the boundary of D and a nearest boundary point.

    Every gauge sphere around g is g delta_rho(S) with S the unit sphere, so the distance is the
    smallest first-exit radius over directions in S: a direction mesh gives a start that
    Nelder-Mead then polishes.
    """
    if not D.contains(g):
        raise GeometryError("boundary_distance needs a point inside the domain")
    ga = g.as_array()
    sig = unit_sphere_directions(g.n, mesh)
    rho = _first_exit(D, ga, sig)
    if not np.isfinite(rho).any():
        raise GeometryError("no boundary point found within rho_max")
    j = int(np.argmin(rho))
    best_sig, best_rho = sig[j], float(rho[j])
    if refine:
        # near the best direction the exit radius stays close to best_rho
        local = np.linspace(best_rho / 32.0, 3.0 * best_rho, 48)

        def exit_radius(v):
            r = _first_exit(D, ga, _to_sphere(v), iters=56, rhos=local)[0]
            return r if np.isfinite(r) else 10.0 * best_rho

        res = minimize(exit_radius, best_sig, method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-15 * best_rho, "maxiter": 400})
        if res.fun < best_rho:
            best_sig, best_rho = _to_sphere(res.x)[0], float(res.fun)
    foot = _ray_points(ga, best_sig[None, :], np.array([best_rho]))[0]
    return best_rho, Point.from_array(foot)


def characteristic_points(D: DomainSpec, mesh: float = default("charset_mesh"), tol: float = default("charset_tol"), merge: float | None = None):
    """Boundary points where |X phi| <= tol |grad phi|.

    Boundary points are found where phi changes sign between neighbors of a lattice with
    spacing ``mesh`` over D.bbox, located by bisection along the lattice edge. Nearby hits
    (within ``merge``, default 2 * mesh) are reported once.
    """
    lo, hi = (np.asarray(b, float) for b in D.bbox)
    axes = [mesh * np.arange(np.floor(a / mesh) - 1, np.ceil(b / mesh) + 2) for a, b in zip(lo, hi)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack(grids, axis=-1)
    phi = D.levelset_arr(pts)
    found = []
    for ax in range(pts.shape[-1]):
        a = [slice(None)] * phi.ndim
        b = [slice(None)] * phi.ndim
        a[ax], b[ax] = slice(None, -1), slice(1, None)
        pa, pb = phi[tuple(a)], phi[tuple(b)]
        cross = (pa > 0) != (pb > 0)
        if not cross.any():
            continue
        A, B = pts[tuple(a)][cross], pts[tuple(b)][cross]
        inA = pa[cross] > 0
        inside, outside = np.where(inA[:, None], A, B), np.where(inA[:, None], B, A)
        for _ in range(60):
            mid = 0.5 * (inside + outside)
            ok = D.levelset_arr(mid) > 0
            inside = np.where(ok[:, None], mid, inside)
            outside = np.where(ok[:, None], outside, mid)
        found.append(outside)
    if not found:
        raise GeometryError("no boundary crossings inside the bounding box")
    bpts = np.concatenate(found)
    ratio = _horizontal_ratio(D, bpts)
    cand = bpts[ratio <= tol]
    order = np.argsort(ratio[ratio <= tol])
    merge = 2.0 * mesh if merge is None else merge
    kept: list[np.ndarray] = []
    for q in cand[order]:
        if all(np.max(np.abs(q - k)) > merge for k in kept):
            kept.append(q)
    return [Point.from_array(q) for q in kept]


def _horizontal_ratio(D: DomainSpec, pts: np.ndarray, h: float = 1e-6) -> np.ndarray:
    dim = pts.shape[-1]
    n = (dim - 1) // 2
    grad = np.empty_like(pts)
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = h
        grad[:, k] = (D.levelset_arr(pts + e) - D.levelset_arr(pts - e)) / (2 * h)
    gz, gt = grad[:, :-1].copy(), grad[:, -1]
    gz[:, :n] -= 0.5 * pts[:, n:-1] * gt[:, None]
    gz[:, n:] += 0.5 * pts[:, :n] * gt[:, None]
    return np.linalg.norm(gz, axis=1) / np.maximum(np.linalg.norm(grad, axis=1), 1e-300)


def normal_point(g0: Point, D: DomainSpec, depth: float, inward: bool = True) -> Point:
    """Center of the gauge ball of radius ``depth`` tangent at g0 to the tangent plane of the boundary."""
    grad = D.euclidean_gradient(g0)
    if not np.linalg.norm(grad) > 0:
        raise GeometryError("level set gradient vanishes at g0")
    return tangent_ball_to_plane(g0, grad, depth, inward=inward).center


def corkscrew_point(g0: Point, r: float, D: DomainSpec, M: float = default("corkscrew_M"), min_scale: float = 1e-6,
                    samples: int = 400, seed: int = default("seed")):
    """A point A with r/M < d(A, g0) <= r and d(A, boundary) > r/M, or None when none is found.

    Candidates are taken along the inward metric normal at decreasing depths, then among
    seeded samples of B(g0, r) ranked by boundary distance. Scales below ``min_scale`` are
    not resolved and report None.
    """
    if not r > 0 or not M > 1:
        raise GeometryError("need r > 0 and M > 1")
    if r / M < min_scale:
        return None

    def ok(A: Point) -> bool:
        if not D.contains(A):
            return False
        dA = gauge_distance(A, g0)
        if not (r / M < dA <= r):
            return False
        return boundary_distance(A, D, mesh=(17, 32))[0] > r / M

    for frac in (0.5, 0.75, 1.0, 0.35, 0.25):
        try:
            A = normal_point(g0, D, frac * r)
        except GeometryError:
            break
        if ok(A):
            return A
    rng = np.random.default_rng(seed)
    pts = sample_ball(g0, r, samples, rng)
    pts = pts[D.levelset_arr(pts) > 0]
    best, best_d = None, -1.0
    for a in pts:
        A = Point.from_array(a)
        d = boundary_distance(A, D, mesh=(9, 16), refine=False)[0]
        if d > best_d:
            best, best_d = A, d
    if best is not None and ok(best):
        return best
    return None


def outer_ball_check(g0: Point, r: float | None, D: DomainSpec, samples: int = default("outer_samples"),
                     seed: int = default("seed")) -> bool:
    """True when the gauge ball of radius r tangent at g0 from outside misses the domain
    on every one of ``samples`` seeded uniform samples.

    r = None is allowed on the paraboloid, where it defaults to graph_tangent_lambda(M).
    """
    if r is None:
        if D.domain_id != "paraboloid":
            raise GeometryError("r is required outside the paraboloid")
        r = graph_tangent_lambda(D.meta["M"])
    center = normal_point(g0, D, r, inward=False)
    rng = np.random.default_rng(seed)
    pts = sample_ball(center, r, samples, rng)
    return not bool(np.any(D.levelset_arr(pts) > 0))


def field_values(u, pts: np.ndarray) -> np.ndarray:
    """Evaluate a DiscreteField, an array field (m, d) -> (m,), or a Point field at stacked points."""
    pts = np.atleast_2d(pts)
    if isinstance(u, DiscreteField):
        return u.interpolator()(pts)
    if getattr(u, "vectorized", False):
        return np.asarray(u(pts), dtype=float)
    return np.array([u(Point.from_array(p)) for p in pts], dtype=float)


@dataclass
class DecayProfile:
    base: Point
    r: float
    anchor: Point
    d_over_r: np.ndarray
    ratio: np.ndarray
    exponent: float
    constant: float
    meta: dict = field(default_factory=dict)

    def rows(self):
        return list(zip(self.d_over_r.tolist(), self.ratio.tolist()))

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_list(), "r": self.r, "anchor": self.anchor.to_list(),
            "d_over_r": self.d_over_r.tolist(), "ratio": self.ratio.tolist(),
            "exponent": self.exponent, "constant": self.constant, "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecayProfile":
        return cls(Point.from_array(d["base"]), float(d["r"]), Point.from_array(d["anchor"]),
                   np.asarray(d["d_over_r"], float), np.asarray(d["ratio"], float),
                   float(d["exponent"]), float(d["constant"]), dict(d.get("meta", {})))


def _anchor(g0: Point, r: float, D: DomainSpec, depth: float | None) -> Point:
    depth = default("anchor_depth") * r if depth is None else depth
    try:
        A = normal_point(g0, D, depth)
        if D.contains(A):
            return A
    except GeometryError:
        pass
    A = corkscrew_point(g0, r, D, M=default("corkscrew_M"))
    if A is None:
        raise GeometryError("no interior reference point A_r found")
    return A


def sample_near(g0: Point, D: DomainSpec, r: float, count: int, kappa: float = default("kappa"),
                mode: str = "cone", fit_range=default("fit_range"), seed: int = default("seed")):
    """Interior points near g0 with boundary distances spread over fit_range * r.

    mode "normal": points on the inward metric normal at log-spaced depths.
    mode "cone": random points around those normal points, kept when they lie in
    B(g0, r) and in the cone d(g, g0) <= kappa d(g, boundary).
    Returns stacked coordinates and their boundary distances.
    """
    lo, hi = fit_range
    if mode == "normal":
        pts, dist = [], []
        for s in np.geomspace(lo * r, hi * r, count):
            q = normal_point(g0, D, s)
            if D.contains(q):
                pts.append(q.as_array())
                dist.append(boundary_distance(q, D)[0])
        return np.array(pts), np.array(dist)
    if mode != "cone":
        raise GeometryError(f"unknown sampling mode {mode!r}")
    rng = np.random.default_rng(seed)
    pts, dist = [], []
    attempts = 0
    while len(pts) < count and attempts < 40 * count:
        attempts += 1
        s = float(np.exp(rng.uniform(np.log(lo * r), np.log(hi * r))))
        c = normal_point(g0, D, s)
        sig = _to_sphere(rng.standard_normal((1, 2 * g0.n + 1)))
        q = _ray_points(c.as_array(), sig, np.array([s * rng.uniform(0.0, 0.6)]))[0]
        Q = Point.from_array(q)
        if not D.contains(Q):
            continue
        dq = gauge_distance(Q, g0)
        if dq > r:
            continue
        db = boundary_distance(Q, D, mesh=(17, 32))[0]
        if dq > kappa * db:
            continue
        pts.append(q)
        dist.append(db)
    if not pts:
        raise GeometryError("no admissible samples near g0")
    return np.array(pts), np.array(dist)


def _fit(x: np.ndarray, y: np.ndarray, fit_range) -> tuple[float, float]:
    sel = (x >= fit_range[0] * (1 - 1e-9)) & (x <= fit_range[1] * (1 + 1e-9))
    if np.count_nonzero(sel) < 2:
        raise GeometryError("fewer than two samples inside the fitting window")
    slope, icept = np.polyfit(np.log(x[sel]), np.log(y[sel]), 1)
    return float(slope), float(np.exp(icept))


def characteristic_clearance(g0: Point, D: DomainSpec) -> float:
    """Gauge distance from g0 to the characteristic set of D (inf when it is empty).
    The set is computed once per domain and kept in ``D.meta``."""
    if "characteristic_set" not in D.meta:
        D.meta["characteristic_set"] = characteristic_points(D)
    pts = D.meta["characteristic_set"]
    return min((gauge_distance(g0, q) for q in pts), default=float("inf"))


def _check_scale(g0: Point, r: float, D: DomainSpec, M: float, diagnostic: bool) -> float:
    """Enforce r < d(g0, characteristic set) / M unless running as a diagnostic."""
    if not r > 0:
        raise GeometryError("r must be positive")
    clearance = characteristic_clearance(g0, D)
    if not diagnostic and not r * M < clearance:
        raise GeometryError(f"r = {r} must be below d(g0, characteristic set) / M = {clearance / M:.4g}; "
                            "pass diagnostic=True to sample a characteristic configuration anyway")
    return clearance


def decay_profile(u, D: DomainSpec, g0: Point, r: float, M: float = default("M"), count: int = default("decay_count"),
                  kappa: float = default("kappa"), mode: str = "cone", anchor_depth: float | None = None,
                  fit_range=default("fit_range"), seed: int = default("seed"),
                  diagnostic: bool = False) -> DecayProfile:
    """Samples (d(g, boundary)/r, u(g)/u(A_r)) near g0 and fits the log-log slope.

    A_r is the point on the inward metric normal at depth anchor_depth (default r/2).
    Requires r < d(g0, characteristic set) / M unless ``diagnostic`` is set.
    """
    clearance = _check_scale(g0, r, D, M, diagnostic)
    A = _anchor(g0, r, D, anchor_depth)
    pts, dist = sample_near(g0, D, r, count, kappa, mode, fit_range, seed)
    uA = float(field_values(u, A.as_array())[0])
    vals = field_values(u, pts)
    if not uA > 0 or not np.all(vals > 0):
        raise GeometryError("field must be positive near g0 (non-positive sample found)")
    x = dist / r
    y = vals / uA
    order = np.argsort(x)
    x, y = x[order], y[order]
    slope, const = _fit(x, y, fit_range)
    meta = {"domain": D.domain_id, "params": list(D.params), "M": M, "kappa": kappa, "mode": mode,
            "characteristic_clearance": clearance if np.isfinite(clearance) else None, "diagnostic": diagnostic}
    return DecayProfile(g0, float(r), A, x, y, slope, const, meta)


@dataclass
class ComparisonReport:
    min_ratio: float
    max_ratio: float
    spread: float
    d_over_r: np.ndarray
    ratio: np.ndarray

    def to_dict(self) -> dict:
        return {"min_ratio": self.min_ratio, "max_ratio": self.max_ratio, "spread": self.spread,
                "d_over_r": self.d_over_r.tolist(), "ratio": self.ratio.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ComparisonReport":
        return cls(float(d["min_ratio"]), float(d["max_ratio"]), float(d["spread"]),
                   np.asarray(d["d_over_r"], float), np.asarray(d["ratio"], float))


def comparison_ratio(u, v, D: DomainSpec, g0: Point, r: float, count: int = default("decay_count"),
                     kappa: float = default("kappa"),
                     mode: str = "cone", anchor_depth: float | None = None,
                     fit_range=default("fit_range"), seed: int = default("seed"), M: float = default("M"),
                     diagnostic: bool = False) -> ComparisonReport:
    """(u(g)/v(g)) / (u(A_r)/v(A_r)) over samples near g0; spread = max / min.
    Requires r < d(g0, characteristic set) / M unless ``diagnostic`` is set."""
    _check_scale(g0, r, D, M, diagnostic)
    A = _anchor(g0, r, D, anchor_depth)
    pts, dist = sample_near(g0, D, r, count, kappa, mode, fit_range, seed)
    uA = float(field_values(u, A.as_array())[0])
    vA = float(field_values(v, A.as_array())[0])
    uv, vv = field_values(u, pts), field_values(v, pts)
    if not (uA > 0 and vA > 0 and np.all(uv > 0) and np.all(vv > 0)):
        raise GeometryError("both fields must be positive near g0")
    ratio = (uv / vv) / (uA / vA)
    order = np.argsort(dist)
    lo, hi = float(ratio.min()), float(ratio.max())
    return ComparisonReport(lo, hi, hi / lo, dist[order] / r, ratio[order])


def ball_boundary_gap(g: Point, center: Point, R: float) -> float:
    """|R - d(center, g)|, a lower bound for the distance from g to the sphere of radius R
    (triangle inequality through the center)."""
    return abs(R - gauge_distance(center, g))


def ball_radial_gap(g: Point, center: Point, R: float) -> float:
    """d(g, radial point of the sphere through g), an upper bound for the distance from g to
    the sphere of radius R. The radial point is center * delta_{R/N}(center^-1 g)."""
    q = multiply(inverse(center), g)
    N = gauge_norm(q)
    if N == 0.0:
        return float(R)
    return gauge_distance(q, dilate(R / N, q))

