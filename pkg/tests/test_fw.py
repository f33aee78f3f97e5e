import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparsefw import fw
from sparsefw import geometry as g
from sparsefw.rng import make_rng


def test_start_optimal_stops_at_zero():
    tr = fw.fw_vanilla(g.Simplex(2), [1.0, 0.0], 10, start=g.SignedBasis(0, 1, 2))
    assert tr.status == "optimal"
    assert tr.f_final == 0.0
    assert len(tr) == 1


def test_l1_envelope_example():
    tr = fw.fw_vanilla(g.L1Ball(2), [0.3, 0.3], 200, start=g.SignedBasis(0, 1, 2))
    assert (tr.f <= 16.0 / (tr.iters + 2)).all()


def test_two_line_search_steps_decrease():
    tr = fw.fw_vanilla(g.Simplex(3), np.full(3, 1 / 3), 2, start=g.SignedBasis(0, 1, 3))
    assert tr.sparsity[2] <= 3
    assert tr.f[2] < tr.f[1] < tr.f[0]


def test_away_single_fw_step_hits_vertex():
    tr = fw.fw_away(g.Simplex(3), [0.0, 1.0, 0.0], 5, start=g.SignedBasis(0, 1, 3))
    assert tr.step_kind[0] == "fw"
    assert tr.gamma[0] == pytest.approx(1.0)
    assert tr.f_final == 0.0
    np.testing.assert_array_equal(tr.final.point, [0.0, 1.0, 0.0])


def test_away_uses_drop_steps_and_is_monotone():
    rng = make_rng(0)
    dom = g.L1Ball(4)
    for _ in range(10):
        p = g.random_point(dom, rng) * 0.5
        tr = fw.fw_away(dom, p, 200, rng=rng)
        assert (np.diff(tr.f) <= 1e-14).all()
    kinds = set()
    for i in range(20):
        tr = fw.fw_away(g.Simplex(6), make_rng(1, i).dirichlet(np.ones(6) * 0.3), 100)
        kinds.update(tr.step_kind)
    assert {"fw", "away"} <= kinds or {"fw", "drop"} <= kinds


@pytest.mark.parametrize("d", [3, 7, 12])
def test_fully_corrective_barycenter(d):
    tr = fw.fw_fully_corrective(g.Simplex(d), np.full(d, 1.0 / d), d)
    assert tr.f_final <= 1e-8
    np.testing.assert_allclose(tr.final.weights, 1.0 / d, atol=1e-6)


def test_fully_corrective_outside_target():
    tr = fw.fw_fully_corrective(g.L1Ball(2), [2.0, 0.0], 20)
    assert tr.f_final == pytest.approx(1.0)
    np.testing.assert_allclose(tr.final.point, [1.0, 0.0])


def test_single_atom_weight_is_one():
    tr = fw.fw_fully_corrective(g.Simplex(3), [1.0, 0.0, 0.0], 3)
    assert tr.final.weights.tolist() == [1.0]


def test_project_simplex():
    np.testing.assert_allclose(fw.project_simplex(np.array([0.5, 0.5])), [0.5, 0.5])
    np.testing.assert_allclose(fw.project_simplex(np.array([2.0, 0.0])), [1.0, 0.0])
    np.testing.assert_allclose(fw.project_simplex(np.array([0.0, 0.0, 0.0])), [1 / 3] * 3)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=12))
def test_project_simplex_is_nearest(v):
    v = np.array(v)
    x = fw.project_simplex(v)
    assert x.min() >= 0 and x.sum() == pytest.approx(1.0)
    rng = make_rng(len(v))
    for y in rng.dirichlet(np.ones(len(v)), size=20):
        assert np.linalg.norm(v - x) <= np.linalg.norm(v - y) + 1e-12


def test_csv_trace_format():
    tr = fw.fw_vanilla(g.Simplex(3), [0.2, 0.3, 0.5], 4)
    text = tr.to_csv()
    lines = text.split("\r\n")
    assert lines[0] == "iter,f,gap,sparsity,gamma,step_kind"
    assert lines[-1] == ""
    assert len(lines) - 2 == len(tr)
    last = lines[-2].split(",")
    assert last[4] == "nan" and last[5] == ""


@pytest.mark.parametrize("algo", fw.ALGORITHMS)
def test_gap_certifies_suboptimality(algo):
    rng = make_rng(3)
    dom = g.CubeNormalized(5)
    for _ in range(5):
        p = 1.5 * rng.standard_normal(5)
        f_star = fw.reference_optimum(dom, p, budget=500)
        tr = fw.run_algorithm(algo, dom, p, 60, rng=rng)
        assert (tr.gap >= tr.f - f_star - 1e-9).all()


@pytest.mark.parametrize("algo", ["vanilla", "away", "fully_corrective"])
def test_line_search_variants_monotone(algo):
    rng = make_rng(4)
    for dom in [g.Simplex(8), g.L1Ball(6), g.NuclearBall(3, 3), g.EuclideanBall(4)]:
        p = 1.3 * g.random_point(dom, rng)
        tr = fw.run_algorithm(algo, dom, p, 50, rng=rng)
        assert (np.diff(tr.f) <= 1e-12).all()


def test_tolerances_stop_early():
    tr = fw.fw_vanilla(g.Simplex(5), np.full(5, 0.2), 1000, f_tol=1e-3)
    assert tr.status == "tolerance" and tr.f_final <= 1e-3
    tr = fw.fw_vanilla(g.Simplex(5), np.full(5, 0.2), 1000, gap_tol=1e-2)
    assert tr.status == "tolerance" and tr.gap[-1] <= 1e-2


def test_callback_sees_every_iterate():
    seen = []
    tr = fw.fw_vanilla(g.L1Ball(3), [0.1, 0.2, 0.3], 7, callback=lambda t, x: seen.append(t))
    assert seen == list(tr.iters)


def test_bad_arguments():
    with pytest.raises(ValueError):
        fw.fw_vanilla(g.Simplex(2), [0.5, 0.5], 0)
    with pytest.raises(ValueError):
        fw.fw_vanilla(g.Simplex(2), [0.5, 0.5], 5, step_rule="armijo")
    with pytest.raises(ValueError):
        fw.run_algorithm("newton", g.Simplex(2), [0.5, 0.5], 5)


def test_min_sparsity_examples():
    assert fw.min_sparsity_to_tolerance(g.Simplex(2), [[0.5, 0.5]], 1e-6).k == 2
    for dom in [g.Simplex(4), g.L1Ball(3), g.CubeNormalized(3)]:
        v = dom.vertices()[1]
        assert fw.min_sparsity_to_tolerance(dom, [v], 1.0).k in (0, 1)
    with pytest.raises(ValueError):
        fw.min_sparsity_to_tolerance(g.Simplex(2), [], 0.1)


def test_min_sparsity_saturation_flag():
    est = fw.min_sparsity_to_tolerance(g.Simplex(30), [np.full(30, 1 / 30)], 1e-9, max_steps=5)
    assert est.saturated and est.k == 5


def test_best_is_no_worse_than_each_algorithm():
    rng = make_rng(5)
    dom = g.L1Ball(8)
    targets = [g.random_point(dom, rng) for _ in range(5)]
    best = fw.min_sparsity_to_tolerance(dom, targets, 0.05, "best")
    for algo in ("vanilla", "away", "fully_corrective"):
        single = fw.min_sparsity_to_tolerance(dom, targets, 0.05, algo)
        assert (best.per_target <= single.per_target).all()


def test_nuclear_inexact_lmo_is_flagged():
    rng = make_rng(6)
    dom = g.NuclearBall(6, 6)
    tr = fw.fw_vanilla(dom, rng.standard_normal(36), 5, power_iters=1, power_tol=1e-16, rng=rng)
    assert tr.inexact_lmo > 0


def test_runs_are_reproducible():
    dom = g.NuclearBall(3, 4)
    p = make_rng(7).standard_normal(12)
    a = fw.fw_away(dom, p, 30, rng=make_rng(8))
    b = fw.fw_away(dom, p, 30, rng=make_rng(8))
    assert a.to_csv() == b.to_csv()


def test_sparse_iterate_check_catches_bad_weights():
    it = fw.SparseIterate((g.SignedBasis(0, 1, 2),), np.array([0.9]), np.array([0.9, 0.0]))
    with pytest.raises(AssertionError):
        it.check()
    assert math.isclose(fw.QuadraticObjective([1.0, 0.0]).value([0.0, 0.0]), 1.0)
