"""Every tunable default in one place. Reports echo the effective values."""

from __future__ import annotations

DEFAULTS = {
    # name: (value, meaning)
    "seed": (0, "RNG seed for every stochastic operation (env HEIS_SEED overrides --seed)"),
    "fd_step": (1e-4, "relative finite-difference step: h = fd_step * (1 + N(g))"),
    "residual_steps": ((1e-2, 5e-3, 2.5e-3), "steps for p-Laplacian residual refinement"),
    "omega_samples": (200_000, "Monte Carlo samples for omega_p"),
    "h": (0.1, "grid spacing in x and y"),
    "t_ratio": (0.25, "t spacing as a fraction of h"),
    "tol": (1e-8, "solver tolerance on max |dE/du| / (p * cell volume)"),
    "max_iter": (200, "solver Newton iteration cap"),
    "delta": (1e-8, "gradient regularization |Xu|^2 + delta^2"),
    "lambda_bar": (0.25, "largest lambda_1 scanned for the quasi-segment gap inequality"),
    "M": (10.0, "distance-to-characteristic-set factor for decay profiles"),
    "corkscrew_M": (4.0, "corkscrew constant when A_r falls back to a search"),
    "kappa": (4.0, "non-tangential cone aperture: d(g, g0) <= kappa d(g, boundary)"),
    "anchor_depth": (0.5, "depth of A_r on the inward metric normal, in units of r"),
    "decay_count": (40, "samples per decay / comparison profile"),
    "fit_range": ((0.01, 0.5), "window of d/r used for the log-log exponent fit"),
    "sphere_mesh": ((33, 64), "unit gauge sphere direction mesh for boundary distances"),
    "charset_mesh": (0.05, "lattice spacing for characteristic point search"),
    "charset_tol": (1e-3, "threshold on |X phi| / |grad phi|"),
    "outer_samples": (20_000, "rejection samples for the outer ball test"),
}


def default(name: str):
    return DEFAULTS[name][0]


def defaults_table() -> str:
    width = max(len(k) for k in DEFAULTS)
    lines = [f"{'name'.ljust(width)}  value  meaning"]
    for k, (v, doc) in DEFAULTS.items():
        lines.append(f"{k.ljust(width)}  {v}  {doc}")
    return "\n".join(lines)
