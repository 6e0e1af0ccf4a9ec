"""Heisenberg group algebra, the Koranyi gauge metric and horizontal derivatives.

A point of H^n is stored as ``Point(z, t)`` with ``z = (x_1..x_n, y_1..y_n)``.
Array helpers (suffix ``_arr``) take stacked coordinates of shape ``(..., 2n+1)``
with ``t`` in the last slot, so large batches can be checked without Python loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import beta, gamma as gamma_fn

from .defaults import default


class GeometryError(ValueError):
    """A precondition of a geometric operation is violated."""


@dataclass(frozen=True)
class Point:
    z: np.ndarray
    t: float

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float).reshape(-1)
        if z.size == 0 or z.size % 2:
            raise GeometryError(f"z must have even positive length, got {z.size}")
        t = float(self.t)
        if not (np.all(np.isfinite(z)) and np.isfinite(t)):
            raise GeometryError("point components must be finite")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t", t)

    @property
    def n(self) -> int:
        return self.z.size // 2

    @property
    def x(self) -> np.ndarray:
        return self.z[: self.n]

    @property
    def y(self) -> np.ndarray:
        return self.z[self.n:]

    def as_array(self) -> np.ndarray:
        return np.append(self.z, self.t)

    @classmethod
    def from_array(cls, a) -> "Point":
        a = np.asarray(a, dtype=float).reshape(-1)
        if a.size < 3 or a.size % 2 == 0:
            raise GeometryError(f"expected 2n+1 coordinates, got {a.size}")
        return cls(a[:-1], a[-1])

    @classmethod
    def identity(cls, n: int = 1) -> "Point":
        return cls(np.zeros(2 * n), 0.0)

    def to_list(self) -> list:
        return [float(v) for v in self.as_array()]

    def __eq__(self, other):
        if not isinstance(other, Point):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.z, other.z)

    def __hash__(self):
        return hash((self.z.tobytes(), self.t))


@dataclass(frozen=True)
class HorizontalVector:
    """Coefficients of a horizontal vector on X_1, ..., X_2n."""

    components: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float).reshape(-1)
        if c.size == 0 or c.size % 2:
            raise GeometryError("horizontal vector needs even length 2n")
        object.__setattr__(self, "components", c)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.components))


ScalarField = Callable[[Point], float]


def symplectic_matrix(n: int) -> np.ndarray:
    """J = [[0, I], [-I, 0]], so that J z = (y, -x)."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


@dataclass(frozen=True)
class UnitarySymmetry:
    """An orthogonal matrix commuting with J; acts on H^n by (z, t) -> (Sz, t)."""

    S: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
            raise GeometryError("S must be a square 2n x 2n matrix")
        m = S.shape[0]
        if np.max(np.abs(S.T @ S - np.eye(m))) > self.tol:
            raise GeometryError("S is not orthogonal, so it is not a gauge isometry")
        J = symplectic_matrix(m // 2)
        if np.max(np.abs(S @ J - J @ S)) > self.tol:
            raise GeometryError("S does not commute with J, so it is not a gauge isometry")
        object.__setattr__(self, "S", S)

    @property
    def n(self) -> int:
        return self.S.shape[0] // 2

    @classmethod
    def block_rotation(cls, n: int, theta: float) -> "UnitarySymmetry":
        """Rotation by theta in every (x_i, y_i) plane."""
        c, s = np.cos(theta), np.sin(theta)
        I = np.eye(n)
        return cls(np.block([[c * I, -s * I], [s * I, c * I]]))

    @classmethod
    def from_complex(cls, U: np.ndarray) -> "UnitarySymmetry":
        """Real form [[A, -B], [B, A]] of a complex unitary U = A + iB."""
        A, B = U.real, U.imag
        return cls(np.block([[A, -B], [B, A]]))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "UnitarySymmetry":
        M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        q, r = np.linalg.qr(M)
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        return cls.from_complex(q)


def _check_same_dim(g: Point, h: Point):
    if g.z.size != h.z.size:
        raise GeometryError(f"dimension mismatch: H^{g.n} vs H^{h.n}")


def perp(z) -> np.ndarray:
    """z^perp = Jz = (y, -x)."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] % 2:
        raise GeometryError("perp needs an even-length vector")
    n = z.shape[-1] // 2
    return np.concatenate([z[..., n:], -z[..., :n]], axis=-1)


def symplectic_form(z, w) -> np.ndarray:
    """<z, w^perp> = sum_i x_i v_i - y_i u_i for z = (x, y), w = (u, v); each pair cancels exactly at z = w."""
    z, w = np.asarray(z, float), np.asarray(w, float)
    n = z.shape[-1] // 2
    return np.sum(z[..., :n] * w[..., n:] - z[..., n:] * w[..., :n], axis=-1)


def multiply(g: Point, h: Point) -> Point:
    _check_same_dim(g, h)
    return Point(g.z + h.z, g.t + h.t + 0.5 * float(symplectic_form(g.z, h.z)))


def inverse(g: Point) -> Point:
    return Point(-g.z, -g.t)


def gauge_norm(g: Point) -> float:
    return float((np.dot(g.z, g.z) ** 2 + 16.0 * g.t * g.t) ** 0.25)


def gauge_distance(g: Point, h: Point) -> float:
    _check_same_dim(g, h)
    dz = h.z - g.z
    s = h.t - g.t + 0.5 * float(symplectic_form(h.z, g.z))
    return float((np.dot(dz, dz) ** 2 + 16.0 * s * s) ** 0.25)


def dilate(lam: float, g: Point) -> Point:
    if not lam > 0:
        raise GeometryError(f"dilation factor must be positive, got {lam}")
    return Point(lam * g.z, lam * lam * g.t)


def unitary_apply(S: UnitarySymmetry, g: Point) -> Point:
    if S.n != g.n:
        raise GeometryError(f"symmetry acts on H^{S.n}, point lies in H^{g.n}")
    return Point(S.S @ g.z, g.t)


# batched versions on stacked coordinates (..., 2n+1)

def multiply_arr(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a, float), np.asarray(b, float)
    out = a + b
    out[..., -1] += 0.5 * symplectic_form(a[..., :-1], b[..., :-1])
    return out


def inverse_arr(a: np.ndarray) -> np.ndarray:
    return -np.asarray(a, float)


def gauge_norm_arr(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, float)
    r2 = np.sum(a[..., :-1] ** 2, axis=-1)
    return (r2 * r2 + 16.0 * a[..., -1] ** 2) ** 0.25


def gauge_distance_arr(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a, float), np.asarray(b, float)
    za, zb = a[..., :-1], b[..., :-1]
    dz2 = np.sum((zb - za) ** 2, axis=-1)
    s = b[..., -1] - a[..., -1] + 0.5 * symplectic_form(zb, za)
    return (dz2 * dz2 + 16.0 * s * s) ** 0.25


def dilate_arr(lam, a: np.ndarray) -> np.ndarray:
    a = np.array(a, float)
    lam = np.asarray(lam, float)
    a[..., :-1] *= lam[..., None] if lam.ndim else lam
    a[..., -1] *= lam * lam
    return a


def default_step(g: Point) -> float:
    return default("fd_step") * (1.0 + gauge_norm(g))


def _shift(g: Point, i: int, s: float) -> Point:
    """g * (s e_i, 0): the point reached by flowing along X_i for time s."""
    e = np.zeros_like(g.z)
    e[i] = s
    return multiply(g, Point(e, 0.0))


def horizontal_derivative(f: ScalarField, g: Point, i: int, h: float) -> float:
    """Central difference of X_i f at g along the integral line of X_i."""
    return (f(_shift(g, i, h)) - f(_shift(g, i, -h))) / (2.0 * h)


def horizontal_gradient(f: ScalarField, g: Point, h: float | None = None) -> HorizontalVector:
    """(X_1 f, ..., X_2n f)(g) with O(h^2) error.

    X_i f(g) is the derivative of s -> f(g (s e_i, 0)) at s = 0, and the curve is
    a straight line in coordinates, so a symmetric difference quotient suffices.
    """
    if h is None:
        h = default_step(g)
    if not h > 0:
        raise GeometryError("finite-difference step must be positive")
    return HorizontalVector([horizontal_derivative(f, g, i, h) for i in range(2 * g.n)])


def t_coordinate(g: Point) -> float:
    return g.t


def commutator_check(g: Point, h: float | None = None, i: int = 0, j: int | None = None,
                     f: ScalarField = t_coordinate) -> float:
    """Nested central differences for ([X_i, X_{n+j}] f)(g); expect 1 when i == j and f = t."""
    if h is None:
        h = 1e-3 * (1.0 + gauge_norm(g))
    n = g.n
    j = i if j is None else j
    a, b = i, n + j

    def Xa(q):
        return horizontal_derivative(f, q, a, h)

    def Xb(q):
        return horizontal_derivative(f, q, b, h)

    return horizontal_derivative(Xb, g, a, h) - horizontal_derivative(Xa, g, b, h)


def homogeneous_dimension(n: int) -> int:
    return 2 * n + 2


def unit_ball_volume(n: int) -> float:
    """Lebesgue measure of B(e, 1) in H^n.

    Integrating over |z| = r gives |S^{2n-1}| * int_0^1 r^{2n-1} sqrt(1 - r^4)/2 dr,
    which reduces to pi^n B(n/2, 3/2) / (4 Gamma(n)).
    """
    return float(np.pi ** n * beta(n / 2.0, 1.5) / (4.0 * gamma_fn(n)))


def ball_volume(R: float, n: int) -> float:
    return unit_ball_volume(n) * R ** homogeneous_dimension(n)


def ball_volume_mc(R: float, n: int, samples: int, seed: int) -> float:
    """Monte Carlo estimate of |B(e, R)|.

    N <= R forces |z_i| <= R and |t| <= R^2/4, so the box
    [-R, R]^2n x [-R^2/4, R^2/4] contains the ball.
    """
    if not R > 0:
        raise GeometryError("radius must be positive")
    if samples < 10_000:
        raise GeometryError("need at least 1e4 samples")
    rng = np.random.default_rng(seed)
    box = (2.0 * R) ** (2 * n) * (R * R / 2.0)
    inside = 0
    chunk = 200_000
    left = samples
    while left > 0:
        m = min(chunk, left)
        pts = np.empty((m, 2 * n + 1))
        pts[:, :-1] = rng.uniform(-R, R, size=(m, 2 * n))
        pts[:, -1] = rng.uniform(-R * R / 4, R * R / 4, size=m)
        inside += int(np.count_nonzero(gauge_norm_arr(pts) < R))
        left -= m
    return box * inside / samples


def sample_ball(center: Point, radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples of B(center, radius) by rejection from the enclosing box at e, left-translated."""
    n = center.n
    out = []
    got = 0
    while got < count:
        m = max(2 * (count - got), 1000)
        pts = np.empty((m, 2 * n + 1))
        pts[:, :-1] = rng.uniform(-radius, radius, size=(m, 2 * n))
        pts[:, -1] = rng.uniform(-radius ** 2 / 4, radius ** 2 / 4, size=m)
        pts = pts[gauge_norm_arr(pts) < radius]
        out.append(pts)
        got += len(pts)
    pts = np.concatenate(out)[:count]
    return multiply_arr(np.broadcast_to(center.as_array(), pts.shape), pts)


def horizontal_gradient_arr(f_arr: Callable[[np.ndarray], np.ndarray], pts: np.ndarray, h: float) -> np.ndarray:
    """Batched horizontal_gradient for a field acting on stacked coordinates (m, 2n+1)."""
    pts = np.asarray(pts, float)
    m2 = pts.shape[-1] - 1
    out = np.empty(pts.shape[:-1] + (m2,))
    for i in range(m2):
        step = np.zeros(m2 + 1)
        step[i] = h
        fwd = f_arr(multiply_arr(pts, np.broadcast_to(step, pts.shape)))
        bwd = f_arr(multiply_arr(pts, np.broadcast_to(-step, pts.shape)))
        out[..., i] = (fwd - bwd) / (2.0 * h)
    return out


def vectorized(f: Callable[[np.ndarray], np.ndarray]):
    """Mark a function of stacked coordinates (m, 2n+1) -> (m,) as an array field."""
    f.vectorized = True
    return f
