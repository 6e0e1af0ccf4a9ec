import numpy as np
import pytest

from heisenberg_pl import fields as F
from heisenberg_pl.core import GeometryError, Point, gauge_distance
from heisenberg_pl.domains import make_domain
from heisenberg_pl.hyperplanes import VerticalHyperplane, vertical_projection
from heisenberg_pl.potentials import PExponent
from heisenberg_pl.serialize import from_jsonable, to_jsonable
from heisenberg_pl.verify import (ball_boundary_gap, ball_radial_gap, boundary_distance, characteristic_clearance,
                                  characteristic_points,
                                  comparison_ratio, corkscrew_point, decay_profile, outer_ball_check,
                                  unit_sphere_directions)

SLAB = make_domain("slab", [1])
TOUCH = make_domain("touching-ball")
PARA = make_domain("paraboloid", [1])


def P(x, y, t):
    return Point([x, y], t)


def test_sphere_directions_are_unit():
    from heisenberg_pl.core import gauge_norm_arr
    s = unit_sphere_directions(1, mesh=(9, 16))
    assert np.allclose(gauge_norm_arr(s), 1.0, atol=1e-14)


def test_slab_distance_matches_projection():
    omega = VerticalHyperplane(np.array([1.0, 0.0]))
    for g in (P(0.3, 0.2, 0.1), P(0.45, -0.4, 0.3)):
        d, foot = boundary_distance(g, SLAB)
        assert d == pytest.approx(vertical_projection(g, omega).distance, abs=1e-6)
        assert abs(SLAB.levelset(foot)) < 1e-6


@pytest.mark.parametrize("t", [0.01, 0.04, 0.09])
def test_touching_ball_axis_distance(t):
    assert boundary_distance(P(0, 0, t), TOUCH)[0] == pytest.approx(2 * np.sqrt(t), abs=1e-3)


def test_gauge_ball_distance_bounds():
    R = 1.0
    ball = make_domain("gauge-ball", [R])
    e = Point.identity()
    for g in (P(0.3, 0.1, 0.05), P(0.5, 0.5, 0.1), P(0.1, -0.2, 0.2)):
        d, _ = boundary_distance(g, ball)
        assert ball_boundary_gap(g, e, R) <= d + 1e-9
        assert d <= ball_radial_gap(g, e, R) + 1e-9
    # on the horizontal plane through e the radial segment is a horizontal line and both bounds agree
    g = P(0.4, 0.0, 0.0)
    assert ball_radial_gap(g, e, R) == pytest.approx(ball_boundary_gap(g, e, R), abs=1e-15)


def test_characteristic_points():
    assert characteristic_points(SLAB) == []
    para = characteristic_points(PARA)
    assert len(para) == 1 and gauge_distance(para[0], Point.identity()) < 1e-3
    touch = characteristic_points(TOUCH)
    assert len(touch) == 2
    assert min(gauge_distance(q, Point.identity()) for q in touch) < 1e-3
    assert min(gauge_distance(q, P(0, 0, 2)) for q in touch) < 1e-3


def test_outer_ball():
    for r in (0.5, 0.1, 0.01):
        assert not outer_ball_check(Point.identity(), r, PARA, samples=5000)
    assert outer_ball_check(P(0, 0.3, 0.2), 0.3, SLAB, samples=5000)
    assert outer_ball_check(P(1, -0.2, 0.0), 0.3, SLAB, samples=5000)
    assert outer_ball_check(P(1, 0, 0), 0.1, make_domain("gauge-ball", [1]), samples=5000)


def test_corkscrew():
    g0 = P(0, 0.2, 0.1)
    A = corkscrew_point(g0, 0.4, SLAB, M=2.0)
    assert A is not None
    assert 0.2 < gauge_distance(A, g0) <= 0.4
    assert boundary_distance(A, SLAB)[0] > 0.2
    A = corkscrew_point(P(1, 0, 0), 0.5, make_domain("gauge-ball", [1]), M=4.0)
    assert A is not None
    assert corkscrew_point(g0, 1e-8, SLAB) is None
    with pytest.raises(GeometryError):
        corkscrew_point(g0, 0.1, SLAB, M=0.5)


def test_slab_linear_profile_exact():
    u = F.linear_field([1.0, 0.0])
    prof = decay_profile(u, SLAB, P(0, 0, 0), 0.2, count=8, mode="normal", anchor_depth=0.2)
    assert prof.exponent == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(prof.ratio, prof.d_over_r, rtol=1e-6)
    back = from_jsonable(to_jsonable(prof))
    assert np.array_equal(back.ratio, prof.ratio) and back.base == prof.base


def test_touching_axis_profile_quadratic():
    prof = decay_profile(F.t_field(), TOUCH, Point.identity(), 0.2, count=10, mode="normal", diagnostic=True)
    assert prof.exponent == pytest.approx(2.0, abs=0.1)
    assert prof.meta["characteristic_clearance"] < 1e-3 and prof.meta["diagnostic"]


def test_scale_precondition():
    u = F.t_field()
    with pytest.raises(GeometryError, match="characteristic"):
        decay_profile(u, TOUCH, Point.identity(), 0.2, count=4, mode="normal")
    ring = make_domain("gauge-ring", [0.5, 2])
    bar = F.barrier_field(Point.identity(), 0.5, 2.0, PExponent(2.5))
    g0 = P(0.5, 0, 0)
    assert characteristic_clearance(g0, ring) == pytest.approx(np.sqrt(np.sqrt(0.25**2 + 16 / 256)), rel=1e-3)
    with pytest.raises(GeometryError):
        comparison_ratio(bar, F.scaled(bar, 2.0), ring, g0, 0.2, count=4)
    prof = decay_profile(bar, ring, g0, 0.05, count=6)
    assert prof.meta["characteristic_clearance"] > 0.5
    assert decay_profile(F.linear_field([1.0, 0.0]), SLAB, P(0, 0, 0), 0.2, count=4,
                         mode="normal").meta["characteristic_clearance"] is None


def test_scaled_comparison_is_flat():
    u = F.linear_field([1.0, 0.0])
    rep = comparison_ratio(u, F.scaled(u, 2.0), SLAB, P(0, 0, 0), 0.2, count=6, mode="normal")
    assert rep.spread == 1.0 and rep.min_ratio == 1.0
    assert from_jsonable(to_jsonable(rep)).spread == 1.0


def test_negative_field_rejected():
    with pytest.raises(GeometryError):
        decay_profile(F.constant_field(-1.0), SLAB, P(0, 0, 0), 0.2, count=4, mode="normal")


def test_paraboloid_default_outer_radius():
    from heisenberg_pl.hyperplanes import graph_tangent_lambda
    assert graph_tangent_lambda(1.0) == pytest.approx(1 / 6) and graph_tangent_lambda(0.01) == 2.0
    g0 = P(0.5, 0, -0.25)
    assert outer_ball_check(g0, None, PARA, samples=4000)
    with pytest.raises(GeometryError):
        outer_ball_check(P(0, 0, 0), None, SLAB)
