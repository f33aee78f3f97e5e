import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparsefw import bounds as b
from sparsefw import fw, geometry
from sparsefw.rng import make_rng


def test_khull_entropy_examples():
    assert b.khull_entropy_bound(2, math.log(10), 0.5) == pytest.approx(2 * (math.log(10) + math.log(12)))
    assert b.khull_entropy_bound(1, 0.0, 1.0) == pytest.approx(math.log(6))
    with pytest.raises(ValueError):
        b.khull_entropy_bound(1, 0.0, 6.0)


def test_prop31_zero_entropy_and_tolerance():
    rep = b.lower_bound_prop31(0.0, 10, 0.1)
    assert rep.value == 0.0
    assert rep.f_tol == pytest.approx(0.1 ** 2 / 4)
    assert rep.dist_tol == pytest.approx(0.05)
    assert b.lower_bound_prop31(5.0, 10, 0.1, radius=2.0).f_tol == pytest.approx(0.01)


def test_volume_ratios():
    assert b.volume_ratio("ball", 7) == pytest.approx(1.0)
    assert b.volume_ratio("cube", 2) == pytest.approx(4 / math.pi * 0.5)
    assert b.volume_ratio("l1", 2) == pytest.approx(2 / math.pi)
    # large d stays finite through lgamma
    assert math.isfinite(b.log_volume_ratio("l1", 2000))


def test_volume_bound_numerator_zero_and_vacuous():
    assert b.lower_bound_volume(0.2, 10, 100, 0.2).value == 0.0
    rep = b.lower_bound_volume(0.1, 10, 100, 0.5)
    assert rep.value == 0.0 and rep.flagged("vacuous")


def test_volume_bound_cube_example():
    d, eps, root = 50, 1e-3, 0.4
    rep = b.lower_bound_volume(root, d, 2.0 ** d, eps)
    expected = d * (math.log(1 / eps) + math.log(root)) / (3 + d * math.log(2) + math.log(1 / eps))
    assert rep.value == pytest.approx(expected)
    assert rep.value == pytest.approx(6.72, abs=0.01)


def test_infinite_bound_zero():
    assert b.lower_bound_infinite(0.0, 5.0, 0.1).value == 0.0


def test_covering_volumetric():
    assert b.covering_lower_volumetric(b.log_unit_ball_volume(4), 4, 1.0, b.log_unit_ball_volume(4)) == 0.0
    # a body measured in its own norm: (1/eps)^d
    assert b.covering_lower_volumetric(0.0, 3, 0.5, 0.0) == pytest.approx(3 * math.log(2))


def test_l1_covering_from_inscribed_ball():
    d, eps = 8, 0.05
    assert b.l1_log_covering(d, eps) == pytest.approx(d * math.log(1 / (eps * math.sqrt(d))))
    lv, _ = b.log_volume("l1", d)
    assert b.l1_log_covering(d, eps) > 0
    assert b.covering_lower_volumetric(lv, d, eps, b.log_unit_ball_volume(d)) > 0


def test_triangle_bound_is_small():
    rep = b.lower_bound_polytope([[0, 0], [1, 0], [0, 1]], 0.05)
    assert 0 <= rep.value <= 3
    assert rep.n_vertices == 3


def test_polytope_bound_degenerate():
    rep = b.lower_bound_polytope([[1.0, 2.0]], 0.1)
    assert rep.value == 0.0


def test_caratheodory_flag():
    rep = b.lower_bound_prop31(100.0, 3, 0.5, dim=2)
    assert rep.value > 3 and rep.flagged("caratheodory_capped")
    assert not b.lower_bound_cube(2, 1e-12).flagged("caratheodory_capped")


def test_l1_tolerance_bookkeeping():
    rep = b.lower_bound_l1(16, 1 / 16)
    assert rep.eps == pytest.approx(4 / 16 / 4)
    assert rep.f_tol == pytest.approx(4 * (1 / 16) ** 2 / 16)
    assert rep.inputs["stated_f_tol"] == pytest.approx(1 / 256)
    with pytest.raises(ValueError, match="tolerance mismatch"):
        b.empirical_vs_bound(5, rep, 1 / 256)


def test_comparison_zero_bound_always_consistent():
    rep = b.lower_bound_prop31(0.0, 4, 0.5)
    assert b.empirical_vs_bound(0, rep, rep.f_tol).consistent


def test_l1_cross_module_consistency():
    d, delta = 16, 1 / 16
    rep = b.lower_bound_l1(d, delta)
    rng = make_rng(0)
    dom = geometry.L1Ball(d)
    targets = [geometry.random_point(dom, rng) for _ in range(20)]
    est = fw.min_sparsity_to_tolerance(dom, targets, rep.dist_tol, "best")
    cmp = b.empirical_vs_bound(est.k, rep, est.eps ** 2)
    assert cmp.consistent, cmp.dump()


def test_nuclear_delta_preset():
    a = b.lower_bound_nuclear_delta(8, 8, 1 / 64)
    assert a.eps == pytest.approx(math.sqrt(1 / 64 / 8))
    assert a.f_tol == pytest.approx(1 / 64 / (4 * 8))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 200), st.floats(1e-6, 0.2))
def test_l1_two_paths_agree(d, delta):
    if 4 * delta / math.sqrt(d) > 1:
        return
    assert b.lower_bound_l1(d, delta).value == pytest.approx(b.lower_bound_l1_general(d, delta).value, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 300), st.floats(1e-9, 1.0))
def test_cube_two_paths_agree(d, eps):
    assert b.lower_bound_cube(d, eps).value == pytest.approx(b.lower_bound_cube_general(d, eps).value, rel=1e-9)


@pytest.mark.parametrize("t", [1, 2, 3])
def test_greedy_cover_is_a_cover(t):
    eps = 0.5
    centres = b.greedy_simplex_l1_cover(t, eps)
    assert np.allclose(centres.sum(axis=1), 1.0) and (centres >= 0).all()
    pts = make_rng(t).dirichlet(np.ones(t), size=500)
    assert np.abs(pts[:, None] - centres[None]).sum(axis=2).min(axis=1).max() <= eps


def test_unknown_formula_rejected():
    with pytest.raises(ValueError):
        b.lower_bound_prop31(1.0, 3, 0.5, formula_id="made_up")


def test_report_row_keys():
    assert set(b.lower_bound_simplex(8, 0.01).row()) == {"formula", "d", "n", "eps", "value", "flags"}
