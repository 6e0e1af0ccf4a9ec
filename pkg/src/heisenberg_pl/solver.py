"""Variational solver for the Dirichlet problem of the horizontal p-Laplacian on grids in H^1.

The discrete p-energy averages forward and backward difference stencils of X_1, X_2 over
every cell touching an unknown, and is minimized by damped Newton steps with Armijo
backtracking; each Newton system is solved by conjugate gradients preconditioned with
smoothed-aggregation algebraic multigrid.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pyamg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RegularGridInterpolator
from scipy.ndimage import minimum_filter

from .core import GeometryError
from .defaults import default
from .domains import DomainSpec, make_domain
from .potentials import PExponent

log = logging.getLogger(__name__)

EXTERIOR, BOUNDARY, INTERIOR = 0, 1, 2
STATIONARY_DECREMENT = 1e-15


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass
class GridDomain:
    """Lattice with spacing h in x, y and t_ratio * h in t, each node tagged
    exterior / boundary / interior. A node is interior when the whole box
    [x +- h] x [y +- h] x [t +- ht] lies in the domain, so every stencil
    neighbor of an interior node is interior or boundary."""

    spec: DomainSpec
    h: float
    ht: float
    axes: tuple
    status: np.ndarray
    bbox: tuple

    @property
    def domain_id(self) -> str:
        return self.spec.domain_id

    @property
    def shape(self) -> tuple:
        return self.status.shape

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(self.status == INTERIOR))

    @property
    def n_boundary(self) -> int:
        return int(np.count_nonzero(self.status == BOUNDARY))

    def mesh(self):
        return np.meshgrid(*self.axes, indexing="ij")

    def coordinates(self, mask=None) -> np.ndarray:
        X, Y, T = self.mesh()
        pts = np.stack([X, Y, T], axis=-1)
        return pts.reshape(-1, 3) if mask is None else pts[mask]

    def same_lattice(self, other: "GridDomain") -> bool:
        return (self.shape == other.shape and self.h == other.h and self.ht == other.ht
                and all(np.array_equal(a, b) for a, b in zip(self.axes, other.axes))
                and np.array_equal(self.status, other.status))


@dataclass
class DiscreteField:
    grid: GridDomain
    values: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        active = self.grid.status > EXTERIOR
        if not np.all(np.isfinite(self.values[active])):
            raise GeometryError("field values must be finite at interior and boundary nodes")

    def interior(self) -> np.ndarray:
        return self.values[self.grid.status == INTERIOR]

    def boundary(self) -> np.ndarray:
        return self.values[self.grid.status == BOUNDARY]

    def scaled(self, c: float) -> "DiscreteField":
        return DiscreteField(self.grid, c * self.values)

    def shifted(self, c: float) -> "DiscreteField":
        return DiscreteField(self.grid, self.values + c)

    def interpolator(self) -> Callable[[np.ndarray], np.ndarray]:
        """Trilinear interpolation on stacked (m, 3) coordinates; NaN outside the lattice."""
        f = RegularGridInterpolator(self.grid.axes, self.values, bounds_error=False, fill_value=np.nan)
        return lambda a: f(np.atleast_2d(a))

    def as_scalar_field(self):
        f = self.interpolator()
        return lambda g: float(f(g.as_array())[0])


def _lattice(lo: float, hi: float, step: float, shift: float = 0.0) -> np.ndarray:
    k0 = int(np.floor((lo - shift) / step)) - 1
    k1 = int(np.ceil((hi - shift) / step)) + 1
    return shift + step * np.arange(k0, k1 + 1)


def _box_margin(a: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    return np.minimum(np.min(a - lo, axis=-1), np.min(hi - a, axis=-1))


def build_domain(domain_id: str | DomainSpec, params=(), h: float = default("h"), bbox=None,
                 t_ratio: float = default("t_ratio"), t_shift: float | None = None) -> GridDomain:
    """Discretize Omega intersected with the open box ``bbox`` = (lo, hi).

    ``t_shift`` offsets the t lattice (in units of the t spacing); by default the ring is
    shifted by half a step so that no node sits on the pole of its barrier.
    """
    spec = domain_id if isinstance(domain_id, DomainSpec) else make_domain(domain_id, params)
    if spec.n != 1:
        raise GeometryError("grid solver supports H^1 only")
    if not h > 0 or not t_ratio > 0:
        raise GeometryError("grid spacings must be positive")
    lo, hi = (np.asarray(b, float) for b in (bbox if bbox is not None else spec.bbox))
    if lo.shape != (3,) or hi.shape != (3,) or np.any(hi <= lo):
        raise GeometryError("bbox needs lo < hi in all three coordinates")
    ht = t_ratio * h
    if t_shift is None:
        t_shift = 0.5 if spec.domain_id == "gauge-ring" else 0.0
    axes = (_lattice(lo[0], hi[0], h), _lattice(lo[1], hi[1], h),
            _lattice(lo[2], hi[2], ht, t_shift * ht))

    def phi(a):
        return np.minimum(spec.levelset_arr(a), _box_margin(a, lo, hi))

    # minimum of phi over the node box [-h, h]^2 x [-ht, ht], sampled at half steps
    fine = [np.linspace(ax[0], ax[-1], 2 * ax.size - 1) for ax in axes]
    FX, FY, FT = np.meshgrid(*fine, indexing="ij")
    phi_fine = phi(np.stack([FX, FY, FT], axis=-1))
    del FX, FY, FT
    box_min = minimum_filter(phi_fine, size=5, mode="constant", cval=-1.0)[::2, ::2, ::2]
    interior = box_min > 0
    interior[[0, -1], :, :] = False
    interior[:, [0, -1], :] = False
    interior[:, :, [0, -1]] = False
    if not interior.any():
        raise GeometryError(f"{spec.domain_id} has no interior nodes at h = {h}")
    status = np.zeros(interior.shape, dtype=np.int8)
    status[_stencil_nodes(interior)] = BOUNDARY
    status[interior] = INTERIOR
    return GridDomain(spec, float(h), float(ht), axes, status, (lo, hi))


def _cells(interior: np.ndarray):
    """Anchors of forward cells {j, j + e_k} and backward cells {j, j - e_k} that touch an unknown."""
    fwd = interior.copy()
    bwd = interior.copy()
    for ax in range(3):
        sl_a = [slice(None)] * 3
        sl_b = [slice(None)] * 3
        sl_a[ax], sl_b[ax] = slice(None, -1), slice(1, None)
        fwd[tuple(sl_a)] |= interior[tuple(sl_b)]
        bwd[tuple(sl_b)] |= interior[tuple(sl_a)]
    return fwd, bwd


def _stencil_nodes(interior: np.ndarray) -> np.ndarray:
    fwd, bwd = _cells(interior)
    nodes = fwd | bwd
    for ax in range(3):
        sl_a = [slice(None)] * 3
        sl_b = [slice(None)] * 3
        sl_a[ax], sl_b[ax] = slice(None, -1), slice(1, None)
        nodes[tuple(sl_b)] |= fwd[tuple(sl_a)]
        nodes[tuple(sl_a)] |= bwd[tuple(sl_b)]
    return nodes


@dataclass
class _Operators:
    X1: sp.csr_matrix       # cells x active nodes
    X2: sp.csr_matrix
    active: np.ndarray      # flat indices of interior + boundary nodes
    free: np.ndarray        # positions of interior nodes within ``active``
    vol: float


def _operators(G: GridDomain) -> _Operators:
    h, ht = G.h, G.ht
    shape = G.shape
    interior = G.status == INTERIOR
    active_mask = G.status > EXTERIOR
    active = np.flatnonzero(active_mask)
    pos = np.full(active_mask.size, -1, dtype=np.int64)
    pos[active] = np.arange(active.size)
    X, Y, _ = G.mesh()
    strides = (shape[1] * shape[2], shape[2], 1)
    fwd, bwd = _cells(interior)
    blocks1, blocks2 = [], []
    for cells, sign in ((fwd, 1), (bwd, -1)):
        anchor = np.flatnonzero(cells)
        m = anchor.size
        rows = np.arange(m)

        def diff(k, scale):
            a = pos[anchor]
            b = pos[anchor + sign * strides[k]]
            vals = np.r_[-np.ones(m), np.ones(m)] * (sign / scale)
            return sp.csr_matrix((vals, (np.r_[rows, rows], np.r_[a, b])), shape=(m, active.size))

        Dx, Dy, Dt = diff(0, h), diff(1, h), diff(2, ht)
        x = X.ravel()[anchor]
        y = Y.ravel()[anchor]
        blocks1.append(Dx - sp.diags(0.5 * y) @ Dt)
        blocks2.append(Dy + sp.diags(0.5 * x) @ Dt)
    X1 = sp.vstack(blocks1).tocsr()
    X2 = sp.vstack(blocks2).tocsr()
    free = pos[np.flatnonzero(interior)]
    return _Operators(X1, X2, active, free, h * h * ht / 2.0)


def boundary_field(G: GridDomain, func: Callable[[np.ndarray], np.ndarray]) -> DiscreteField:
    """Evaluate a vectorized function of (m, 3) coordinates at every lattice node.

    Non-finite values are allowed only at exterior nodes, where they become NaN.
    """
    vals = np.asarray(func(G.coordinates()), dtype=float).reshape(G.shape)
    vals = np.where(np.isfinite(vals), vals, np.nan)
    return DiscreteField(G, vals)


def _energy_terms(ops: _Operators, u: np.ndarray, p: float, delta: float):
    g1 = ops.X1 @ u
    g2 = ops.X2 @ u
    s = g1 * g1 + g2 * g2 + delta * delta
    return g1, g2, s


def p_energy(u: DiscreteField, G: GridDomain, pe: PExponent, delta: float = 0.0) -> float:
    """vol * sum over forward and backward cells of |X u|^p, vol = h^2 ht / 2."""
    if not u.grid.same_lattice(G):
        raise GeometryError("field lives on a different grid")
    ops = _operators(G)
    vals = u.values.ravel()[ops.active]
    if not np.all(np.isfinite(vals)):
        raise GeometryError("field has missing values on active nodes")
    _, _, s = _energy_terms(ops, vals, pe.p, delta)
    return float(ops.vol * np.sum(s ** (pe.p / 2.0)))


def _hessian(ops: _Operators, A1, A2, g1, g2, s, p):
    w = p * s ** (p / 2.0 - 1.0)
    c = p * (p - 2.0) * s ** (p / 2.0 - 2.0)
    a11 = w + c * g1 * g1
    a22 = w + c * g2 * g2
    a12 = c * g1 * g2
    H = (A1.T @ sp.diags(a11) @ A1 + A2.T @ sp.diags(a22) @ A2
         + A1.T @ sp.diags(a12) @ A2 + A2.T @ sp.diags(a12) @ A1)
    return (ops.vol * H).tocsr()


def solve_dirichlet(G: GridDomain, boundary: DiscreteField, pe: PExponent, tol: float = default("tol"),
                    max_iter: int = default("max_iter"), delta: float = default("delta")) -> DiscreteField:
    """Minimize the discrete p-energy over interior values with boundary values fixed.

    Stops when max |dE/du_j| / (p vol) <= tol, or when the Newton decrement drops below
    the double-precision resolution of the energy (then the residual is recorded as is).
    Raises ConvergenceError when neither happens within max_iter Newton steps.
    """
    if not boundary.grid.same_lattice(G):
        raise GeometryError("boundary data lives on a different grid")
    if pe.n != 1:
        raise GeometryError("grid solver supports H^1 only")
    if pe.p > pe.Q + 1e-12:
        raise GeometryError(f"p = {pe.p} exceeds Q = {pe.Q}")
    p = pe.p
    bvals = boundary.boundary()
    info = {"p": p, "tol": tol, "regularization_delta": delta, "h": G.h, "ht": G.ht,
            "interior_nodes": G.n_interior, "boundary_nodes": G.n_boundary}
    out = boundary.values.copy()
    if bvals.size and np.ptp(bvals) == 0.0:
        out[G.status == INTERIOR] = bvals[0]
        info.update(iterations=0, residual=0.0, energy=0.0, converged=True, stop="constant boundary data")
        return DiscreteField(G, out, info)

    ops = _operators(G)
    u = boundary.values.ravel()[ops.active].copy()
    u[ops.free] = 0.0
    Pf = sp.csr_matrix((np.ones(ops.free.size), (ops.free, np.arange(ops.free.size))),
                       shape=(ops.active.size, ops.free.size))
    A1 = (ops.X1 @ Pf).tocsr()
    A2 = (ops.X2 @ Pf).tocsr()

    if p != 2.0:
        # start from the discrete p = 2 solution
        g1, g2, _ = _energy_terms(ops, u, 2.0, 0.0)
        L = (A1.T @ A1 + A2.T @ A2).tocsr()
        rhs = -(A1.T @ g1 + A2.T @ g2)
        ml = pyamg.smoothed_aggregation_solver(L, symmetry="symmetric")
        u[ops.free] += ml.solve(rhs, tol=1e-10, accel="cg", maxiter=200)

    g1, g2, s = _energy_terms(ops, u, p, delta)
    E = ops.vol * np.sum(s ** (p / 2.0))
    energies = [float(E)]
    ml = None
    rebuild = True
    res = np.inf
    stop = None
    it = 0
    for it in range(max_iter + 1):
        w = p * s ** (p / 2.0 - 1.0)
        grad = ops.vol * (A1.T @ (w * g1) + A2.T @ (w * g2))
        res = float(np.max(np.abs(grad))) / (p * ops.vol)
        if res <= tol:
            stop = "residual below tol"
            break
        if it == max_iter:
            break
        H = _hessian(ops, A1, A2, g1, g2, s, p)
        if rebuild or ml is None:
            ml = pyamg.smoothed_aggregation_solver(H, symmetry="symmetric")
        rtol = max(min(1e-2, res) * 1e-2, 1e-12)
        count = [0]

        def tick(_):
            count[0] += 1

        dx, flag = spla.cg(H, -grad, rtol=rtol, M=ml.aspreconditioner(), maxiter=60, callback=tick)
        rebuild = count[0] > 25
        if flag != 0:
            ml = pyamg.smoothed_aggregation_solver(H, symmetry="symmetric")
            dx, flag = spla.cg(H, -grad, x0=dx, rtol=rtol, M=ml.aspreconditioner(), maxiter=200)
        slope = float(grad @ dx)
        if slope >= 0:
            dx = -grad
            slope = float(grad @ dx)
        if -slope <= STATIONARY_DECREMENT * abs(E):
            stop = "energy stationary to double precision"
            break
        du = Pf @ dx
        step = 1.0
        while True:
            trial = u + step * du
            t1, t2, ts = _energy_terms(ops, trial, p, delta)
            En = ops.vol * np.sum(ts ** (p / 2.0))
            if En <= E + 1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-10:
                raise ConvergenceError("line search failed", res, it)
        u, g1, g2, s = trial, t1, t2, ts
        assert En <= E, "energy increased"
        E = En
        energies.append(float(E))
        log.debug("newton %d residual %.3e decrement %.3e step %.3g energy %.17g", it, res, -slope, step, E)
    if stop is None:
        raise ConvergenceError("Newton iteration did not converge", res, it)
    out.ravel()[ops.active] = u
    info.update(iterations=it, residual=res, energy=float(E), converged=True, stop=stop,
                energy_history=energies)
    return DiscreteField(G, out, info)


def comparison_check(u: DiscreteField, v: DiscreteField, G: GridDomain, eps: float | None = None) -> bool:
    """True when u >= v - eps at every interior node (eps defaults to h)."""
    if not (u.grid.same_lattice(G) and v.grid.same_lattice(G)):
        raise GeometryError("fields live on different grids")
    eps = G.h if eps is None else eps
    return bool(np.all(u.interior() >= v.interior() - eps))


def max_error(u: DiscreteField, exact: Callable[[np.ndarray], np.ndarray]) -> float:
    mask = u.grid.status == INTERIOR
    ref = exact(u.grid.coordinates(mask))
    return float(np.max(np.abs(u.values[mask] - ref)))


def node_rows(u: DiscreteField):
    mask = u.grid.status > EXTERIOR
    pts = u.grid.coordinates(mask)
    kinds = np.where(u.grid.status[mask] == INTERIOR, "interior", "boundary")
    return pts, u.values[mask], kinds


def export_csv(u: DiscreteField) -> str:
    pts, vals, kinds = node_rows(u)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["x", "y", "t", "value", "kind"])
    for (x, y, t), v, k in zip(pts, vals, kinds):
        wr.writerow([repr(float(x)), repr(float(y)), repr(float(t)), repr(float(v)), k])
    return buf.getvalue()


def export_json(u: DiscreteField) -> str:
    pts, vals, kinds = node_rows(u)
    doc = {
        "domain": u.grid.spec.describe(),
        "h": u.grid.h,
        "ht": u.grid.ht,
        "info": {k: v for k, v in u.info.items() if k != "energy_history"},
        "nodes": [{"x": float(a), "y": float(b), "t": float(c), "value": float(v), "kind": k}
                  for (a, b, c), v, k in zip(pts, vals, kinds)],
    }
    return json.dumps(doc)


def solve_catalog(domain_id: str, params, pe: PExponent, h: float,
                  data: Callable[[np.ndarray], np.ndarray], **kw) -> DiscreteField:
    grid_kw = {k: kw.pop(k) for k in ("bbox", "t_ratio", "t_shift") if k in kw}
    G = build_domain(domain_id, params, h, **grid_kw)
    return solve_dirichlet(G, boundary_field(G, data), pe, **kw)

