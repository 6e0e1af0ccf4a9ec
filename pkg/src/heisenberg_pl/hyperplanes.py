"""Metric projections onto vertical and characteristic hyperplanes, tangent gauge balls and the
segment / quasi-segment paths that realize the distance to a hyperplane.

Vertical hyperplane:        Pi_w = {<z, w> = 0},  half-space H_w = {<z, w> > 0}.
Characteristic hyperplane:  Pi_0 = {t = 0},       half-space H_0 = {t > 0}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import GeometryError, Point, gauge_distance, multiply, perp
from .defaults import default


@dataclass(frozen=True)
class VerticalHyperplane:
    omega: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float).reshape(-1)
        if w.size == 0 or w.size % 2:
            raise GeometryError("omega must have even length 2n")
        if abs(np.linalg.norm(w) - 1.0) > 1e-12:
            raise GeometryError(f"omega must be a unit vector, |omega| = {np.linalg.norm(w)!r}")
        object.__setattr__(self, "omega", w)

    @classmethod
    def normalized(cls, w) -> "VerticalHyperplane":
        w = np.asarray(w, dtype=float)
        return cls(w / np.linalg.norm(w))

    def signed(self, g: Point) -> float:
        return float(np.dot(g.z, self.omega))


@dataclass(frozen=True)
class MetricFoot:
    foot: Point
    distance: float
    lam: float


@dataclass(frozen=True)
class TangentBall:
    center: Point
    radius: float
    touch: Point


def _require_inside_vertical(g: Point, P: VerticalHyperplane) -> float:
    if g.n != P.omega.size // 2:
        raise GeometryError("hyperplane and point live in different dimensions")
    s = P.signed(g)
    if not s > 0:
        raise GeometryError(f"point must satisfy <z, omega> > 0, got {s}")
    return s


def vertical_projection(g: Point, P: VerticalHyperplane) -> MetricFoot:
    """Closest point of Pi_w to g; it lies on the horizontal plane through g."""
    s = _require_inside_vertical(g, P)
    w = P.omega
    foot = Point(g.z - s * w, g.t + 0.5 * s * float(np.dot(perp(g.z), w)))
    return MetricFoot(foot, s, s)


def vertical_segment(g: Point, P: VerticalHyperplane, lam: float) -> Point:
    """g(lam): the horizontal segment from the foot (lam = 0) through g (lam = 1)."""
    s = _require_inside_vertical(g, P)
    if lam < 0:
        raise GeometryError("segment parameter must be nonnegative")
    w = P.omega
    c = lam - 1.0
    return Point(g.z + c * s * w, g.t - 0.5 * c * s * float(np.dot(perp(g.z), w)))


def vertical_tangent_center(gbar: Point, P: VerticalHyperplane, lam: float) -> TangentBall:
    """Gauge ball of radius lam inside H_w touching Pi_w only at gbar."""
    if abs(P.signed(gbar)) > 1e-10 * (1.0 + np.linalg.norm(gbar.z)):
        raise GeometryError("gbar must lie on the hyperplane")
    if not lam > 0:
        raise GeometryError("radius must be positive")
    w = P.omega
    center = Point(gbar.z + lam * w, gbar.t - 0.5 * lam * float(np.dot(perp(gbar.z), w)))
    return TangentBall(center, float(lam), gbar)


def psi(lam):
    return 0.5 * np.asarray(lam) ** 3 + np.asarray(lam)


def cubic_lambda(b):
    """The real root of lam^3/2 + lam = b (Cardano), for b >= 0.

    The second cube-root argument sqrt(8/27 + b^2) - b is evaluated in the
    rationalized form (8/27)/(sqrt(..) + b); above b = 1e3 a Newton step polishes the result.
    """
    b_arr = np.asarray(b, dtype=float)
    if np.any(b_arr < 0) or not np.all(np.isfinite(b_arr)):
        raise GeometryError("cubic_lambda needs finite b >= 0")
    root = np.sqrt(8.0 / 27.0 + b_arr * b_arr)
    lam = np.cbrt(root + b_arr) - np.cbrt((8.0 / 27.0) / (root + b_arr))
    big = b_arr > 1e3
    if np.any(big):
        lam = np.where(big, lam - (psi(lam) - b_arr) / (1.5 * lam * lam + 1.0), lam)
    return float(lam) if lam.ndim == 0 else lam


def _require_above(g: Point) -> float:
    r2 = float(np.dot(g.z, g.z))
    if r2 == 0.0:
        raise GeometryError("z0 = 0: the projection onto t = 0 degenerates on the characteristic axis")
    if not g.t > 0:
        raise GeometryError(f"point must satisfy t > 0, got t = {g.t}")
    return r2


def characteristic_projection(g: Point) -> MetricFoot:
    """Closest point of Pi_0 = {t = 0} to g with t > 0 and z != 0."""
    r2 = _require_above(g)
    lam = cubic_lambda(2.0 * g.t / r2)
    foot = Point(g.z + lam * perp(g.z), 0.0)
    dist = np.sqrt(r2) * lam * (1.0 + lam * lam) ** 0.25
    return MetricFoot(foot, float(dist), float(lam))


def characteristic_tangent_ball(g: Point) -> TangentBall:
    mf = characteristic_projection(g)
    return TangentBall(g, mf.distance, mf.foot)


def characteristic_tangent_center(gbar: Point, lam: float) -> TangentBall:
    """Ball tangent to Pi_0 at gbar = (zbar, 0) from above whose metric foot is gbar."""
    if abs(gbar.t) > 1e-12:
        raise GeometryError("gbar must lie on t = 0")
    r2 = float(np.dot(gbar.z, gbar.z))
    if r2 == 0.0:
        raise GeometryError("zbar = 0 is the characteristic point of t = 0; no tangent family there")
    if not lam > 0:
        raise GeometryError("lambda must be positive")
    q = 1.0 + lam * lam
    center = Point((gbar.z - lam * perp(gbar.z)) / q, psi(lam) * r2 / (2.0 * q))
    radius = lam * np.sqrt(r2) / q ** 0.25
    return TangentBall(center, float(radius), gbar)


@dataclass(frozen=True)
class QuasiSegmentPath:
    """The curve lam -> (alpha z0 + beta z0^perp, gamma |z0|^2) joining the foot (lam = 0) to g0 (lam = lam0)."""

    lambda0: float
    z0: np.ndarray

    @classmethod
    def through(cls, g0: Point) -> "QuasiSegmentPath":
        r2 = _require_above(g0)
        return cls(float(cubic_lambda(2.0 * g0.t / r2)), g0.z.copy())

    @property
    def zbar(self) -> np.ndarray:
        return self.z0 + self.lambda0 * perp(self.z0)

    def alpha(self, lam):
        return (1.0 + self.lambda0 * lam) / (1.0 + lam * lam)

    def beta(self, lam):
        return (self.lambda0 - lam) / (1.0 + lam * lam)

    def gamma(self, lam):
        return 0.5 * (1.0 + self.lambda0 ** 2) * psi(lam) / (1.0 + lam * lam)

    def point(self, lam: float) -> Point:
        z = self.alpha(lam) * self.z0 + self.beta(lam) * perp(self.z0)
        return Point(z, self.gamma(lam) * float(np.dot(self.z0, self.z0)))

    def foot(self) -> Point:
        return Point(self.zbar, 0.0)


def quasi_segment(g0: Point, lam: float) -> Point:
    if lam < 0:
        raise GeometryError("path parameter must be nonnegative")
    return QuasiSegmentPath.through(g0).point(lam)


def quasi_segment_gap(g0: Point, lambda1: float) -> float:
    """d(g(lam1), foot) - d(g(lam1), g0) along the quasi-segment through g0."""
    path = QuasiSegmentPath.through(g0)
    lam0 = path.lambda0
    if lambda1 < lam0 * (1.0 - 1e-12):
        raise GeometryError(f"lambda1 = {lambda1} must not be below lambda0 = {lam0}")
    g1 = path.point(lambda1)
    return gauge_distance(g1, path.foot()) - gauge_distance(g1, g0)


def gap_threshold(g0: Point, lambda_max: float = default("lambda_bar"), num: int = 60) -> float:
    """Largest lam1 on a log grid in (lam0, lambda_max] for which gap >= d(g0, foot)/2.

    Returns lam0 when the inequality already fails at the first grid point.
    """
    path = QuasiSegmentPath.through(g0)
    lam0 = path.lambda0
    if lambda_max <= lam0:
        return lam0
    half = 0.5 * gauge_distance(g0, path.foot())
    best = lam0
    for lam1 in np.geomspace(lam0 * (1 + 1e-9), lambda_max, num):
        if quasi_segment_gap(g0, lam1) >= half:
            best = float(lam1)
        else:
            break
    return best


def graph_tangent_lambda(A: float) -> float:
    """Default tangent-ball parameter min(2, 1/(6A)) for a boundary that is locally the graph
    t = f(z) with |f(z)| <= A |z|^2, such as the paraboloid t > -A |z|^2."""
    if not A > 0:
        raise GeometryError("A must be positive")
    return min(2.0, 1.0 / (6.0 * A))


def phi_prime_zero(znorm: float, lambda0: float, lambda1: float) -> float:
    """Derivative at lam = 0 of lam -> d(g(lam1), g(lam)) along the quasi-segment.

    With g(lam) as in QuasiSegmentPath and |z0| = znorm the derivative is
    -znorm sqrt(1 + lam0^2) / (1 + lam1^2)^(1/4).
    """
    if not (0 < lambda0 < lambda1):
        raise GeometryError("need 0 < lambda0 < lambda1")
    if not znorm > 0:
        raise GeometryError("znorm must be positive")
    return -znorm * np.sqrt(1.0 + lambda0 ** 2) / (1.0 + lambda1 ** 2) ** 0.25


def phi_prime_zero_numeric(g0: Point, lambda1: float, step: float = 1e-6) -> float:
    """Central-difference oracle for phi_prime_zero; the path formulas extend to lam < 0."""
    path = QuasiSegmentPath.through(g0)
    g1 = path.point(lambda1)

    def phi(lam):
        z = path.alpha(lam) * path.z0 + path.beta(lam) * perp(path.z0)
        return gauge_distance(g1, Point(z, path.gamma(lam) * float(np.dot(path.z0, path.z0))))

    return (phi(step) - phi(-step)) / (2.0 * step)


def conjugate(g: Point) -> Point:
    """(x, y, t) -> (x, -y, -t), a gauge isometry exchanging {t > 0} and {t < 0}."""
    n = g.n
    z = g.z.copy()
    z[n:] *= -1.0
    return Point(z, -g.t)


def tangent_ball_to_plane(g0: Point, normal, radius: float, inward: bool = True) -> TangentBall:
    """Gauge ball of the given radius touching the Euclidean hyperplane through g0 with
    normal (n_z, n_t) at g0 only, on the side where <normal, q - g0> > 0 (inward) or < 0.

    Left translation by g0^{-1} sends the plane to one through e. A plane through e is either
    vertical, equal to t = 0, or of the form t = <w, z>; the last kind is carried to t = 0 by a
    further left translation by (2Jw, 0), where the tangent family of t = 0 applies.
    """
    if not radius > 0:
        raise GeometryError("radius must be positive")
    nv = np.asarray(normal, dtype=float).reshape(-1)
    if nv.size != 2 * g0.n + 1 or not np.linalg.norm(nv) > 0:
        raise GeometryError("normal must be a nonzero vector of length 2n+1")
    nv = nv / np.linalg.norm(nv)
    if not inward:
        nv = -nv
    nz, nt = nv[:-1], nv[-1]
    # q = g0 q' is affine in q' with linear part A; the plane normal becomes A^T n
    nz_e = nz - 0.5 * nt * perp(g0.z)
    scale = max(np.linalg.norm(nz_e), abs(nt))
    if abs(nt) <= 1e-12 * scale:
        P = VerticalHyperplane.normalized(nz_e)
        ball = vertical_tangent_center(Point.identity(g0.n), P, radius)
        local = ball.center
    elif np.linalg.norm(nz_e) <= 1e-12 * scale:
        local = Point(np.zeros(2 * g0.n), np.sign(nt) * radius * radius / 4.0)
    else:
        w = -nz_e / nt
        z_h = 2.0 * perp(w)
        zbar = -z_h
        target = radius / np.linalg.norm(zbar)
        lam = brentq(lambda s: s / (1.0 + s * s) ** 0.25 - target, 0.0, max(2.0, 2.0 * target ** 2 + 2.0),
                     xtol=1e-15, rtol=1e-15)
        if nt > 0:
            c2 = characteristic_tangent_center(Point(zbar, 0.0), lam).center
        else:
            c2 = conjugate(characteristic_tangent_center(conjugate(Point(zbar, 0.0)), lam).center)
        local = multiply(Point(z_h, 0.0), c2)
    return TangentBall(multiply(g0, local), float(radius), g0)

