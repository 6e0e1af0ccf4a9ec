"""Fundamental solutions of the horizontal p-Laplacian, ring barriers, finite-difference
residuals and the shapes of the Green-function bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (GeometryError, Point, ScalarField, gauge_distance, gauge_norm_arr,
                   homogeneous_dimension, horizontal_derivative, horizontal_gradient_arr,
                   unit_ball_volume)
from .defaults import default

WEIGHT_FLOOR = 1e-14


@dataclass(frozen=True)
class PExponent:
    p: float
    n: int = 1

    def __post_init__(self):
        if not self.p > 1:
            raise GeometryError(f"p must exceed 1, got {self.p}")
        if int(self.n) != self.n or self.n < 1:
            raise GeometryError("n must be a positive integer")

    @property
    def Q(self) -> int:
        return homogeneous_dimension(self.n)

    @property
    def a(self) -> float:
        return (self.p - self.Q) / (self.p - 1.0)

    @property
    def is_log(self) -> bool:
        return abs(self.p - self.Q) < 1e-12


@dataclass(frozen=True)
class SigmaP:
    omega_p: float
    sigma_p: float
    std_error: float = 0.0

    @classmethod
    def from_omega(cls, omega_p: float, Q: int, std_error: float = 0.0) -> "SigmaP":
        return cls(float(omega_p), float(Q * omega_p), float(std_error))

    def check(self, Q: int) -> None:
        if self.sigma_p != Q * self.omega_p:
            raise GeometryError("sigma_p must equal Q * omega_p")


def gauge_gradient_magnitude(pts: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """|X N| at stacked points, by central differences (analytically |z| / N)."""
    grad = horizontal_gradient_arr(gauge_norm_arr, pts, h)
    return np.linalg.norm(grad, axis=-1)


def estimate_omega_p(pe: PExponent, samples: int = default("omega_samples"), seed: int = default("seed")) -> SigmaP:
    """Monte Carlo value of the integral of |X N|^p over the unit gauge ball."""
    if samples < 100_000:
        raise GeometryError("need at least 1e5 samples")
    rng = np.random.default_rng(seed)
    n = pe.n
    box = 2.0 ** (2 * n) * 0.5
    vals = np.zeros(samples)
    chunk = 100_000
    for s in range(0, samples, chunk):
        m = min(chunk, samples - s)
        pts = np.empty((m, 2 * n + 1))
        pts[:, :-1] = rng.uniform(-1, 1, size=(m, 2 * n))
        pts[:, -1] = rng.uniform(-0.25, 0.25, size=m)
        inside = gauge_norm_arr(pts) < 1.0
        v = np.zeros(m)
        v[inside] = gauge_gradient_magnitude(pts[inside]) ** pe.p
        vals[s:s + m] = v
    est = box * vals.mean()
    se = box * vals.std(ddof=1) / np.sqrt(samples)
    return SigmaP.from_omega(est, pe.Q, se)


def gamma_of_distance(d, pe: PExponent, sp: SigmaP):
    d = np.asarray(d, dtype=float)
    c = sp.sigma_p ** (-1.0 / (pe.p - 1.0))
    if pe.is_log:
        return -c * np.log(d)
    return (pe.p - 1.0) / (pe.Q - pe.p) * c * d ** pe.a


def gamma_p(g: Point, gprime: Point, pe: PExponent, sp: SigmaP) -> float:
    d = gauge_distance(g, gprime)
    if d == 0.0:
        raise GeometryError("Gamma_p is singular at coincident points")
    return float(gamma_of_distance(d, pe, sp))


def ring_barrier_of_distance(d, r_in: float, r_out: float, pe: PExponent):
    """0 on d = r_in, 1 on d = r_out, a function of Gamma_p in between."""
    if not (0 < r_in < r_out):
        raise GeometryError(f"need 0 < r_in < r_out, got {r_in}, {r_out}")
    d = np.asarray(d, dtype=float)
    if pe.is_log:
        return (np.log(d) - np.log(r_in)) / (np.log(r_out) - np.log(r_in))
    a = pe.a
    return (r_in ** a - d ** a) / (r_in ** a - r_out ** a)


def ring_barrier(gq: Point, center: Point, r_in: float, r_out: float, pe: PExponent) -> float:
    return float(ring_barrier_of_distance(gauge_distance(center, gq), r_in, r_out, pe))


def p_laplacian_residual(f: ScalarField, g: Point, h: float, pe: PExponent,
                         with_flag: bool = False):
    """Nested central-difference value of sum_i X_i(|Xf|^{p-2} X_i f) at g.

    Inner gradients and the outer divergence share the step h. The squared gradient is
    clamped below at 1e-14; for p < 2 a vanishing gradient at g raises GeometryError.
    """
    if not h > 0:
        raise GeometryError("step must be positive")
    m = 2 * g.n
    degenerate = False

    def grad(q):
        return np.array([horizontal_derivative(f, q, i, h) for i in range(m)])

    def flux(q, i):
        nonlocal degenerate
        gr = grad(q)
        s = float(gr @ gr)
        if s < WEIGHT_FLOOR:
            degenerate = True
            s = WEIGHT_FLOOR
        return s ** (0.5 * pe.p - 1.0) * gr[i]

    g0 = grad(g)
    if pe.p < 2 and float(g0 @ g0) < WEIGHT_FLOOR:
        raise GeometryError("horizontal gradient vanishes at g; the p < 2 weight is singular there")
    total = 0.0
    for i in range(m):
        total += horizontal_derivative(lambda q: flux(q, i), g, i, h)
    return (total, degenerate) if with_flag else total


def green_bound(g: Point, gprime: Point, pe: PExponent, d_g: float, d_gp: float,
                diam: float, symmetric: bool = False) -> float:
    """Right-hand side shape of the Green-function upper bound, without its constant.

    p < Q:  (d / |B(g, d)|)^{1/(p-1)} d_gp            or, symmetric, times d_g / d
    p = Q:  log(diam / d) d_gp / d                    or, symmetric, times d_g / d
    with d = d(g, g') and |B(g, r)| = alpha_n r^Q.
    """
    if pe.p > pe.Q + 1e-12:
        raise GeometryError(f"p = {pe.p} exceeds Q = {pe.Q}; only 1 < p <= Q is supported")
    if d_g < 0 or d_gp < 0 or not diam > 0:
        raise GeometryError("boundary distances must be nonnegative and diam positive")
    d = gauge_distance(g, gprime)
    if d == 0.0:
        raise GeometryError("green_bound needs distinct points")
    if pe.is_log:
        val = np.log(diam / d) * d_gp / d
    else:
        vol = unit_ball_volume(pe.n) * d ** pe.Q
        val = (d / vol) ** (1.0 / (pe.p - 1.0)) * d_gp
    if symmetric:
        val *= d_g / d
    return float(val)

