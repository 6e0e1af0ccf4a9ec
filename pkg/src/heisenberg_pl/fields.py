"""Closed-form fields on stacked coordinates (m, 2n+1), usable as boundary data or profiles."""

from __future__ import annotations

import numpy as np

from .core import Point, gauge_distance_arr, vectorized
from .potentials import PExponent, ring_barrier_of_distance


def linear_field(omega) -> callable:
    """u(z, t) = <z, omega>: constant horizontal gradient omega."""
    w = np.asarray(omega, float)
    return vectorized(lambda a: np.atleast_2d(a)[:, :-1] @ w)


def t_field() -> callable:
    """u(z, t) = t."""
    return vectorized(lambda a: np.atleast_2d(a)[:, -1].copy())


def constant_field(c: float) -> callable:
    return vectorized(lambda a: np.full(np.atleast_2d(a).shape[0], float(c)))


def barrier_field(center: Point, r_in: float, r_out: float, pe: PExponent) -> callable:
    c = center.as_array()

    def f(a):
        a = np.atleast_2d(a)
        with np.errstate(divide="ignore"):
            return ring_barrier_of_distance(gauge_distance_arr(np.broadcast_to(c, a.shape), a), r_in, r_out, pe)

    return vectorized(f)


def scaled(f, c: float) -> callable:
    return vectorized(lambda a: c * f(a))
