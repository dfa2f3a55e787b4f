"""Moment/SOS relaxation assembly, flat truncation, extraction, hierarchy."""

import numpy as np
import pytest

from momentsos import sdp
from momentsos.certify import PREORDERING, Problem, QMODULE
from momentsos.gallery import get_fixture
from momentsos.poly import Polynomial, basis
from momentsos.relax import (HierarchyOptions, MomentVector, assemble_moment_sdp,
                             assemble_sos_sdp, cone_generators,
                             default_order_range, extract_minimizers,
                             flat_truncation, localizing_map, numerical_rank,
                             run_hierarchy)


def _vars(n):
    return [Polynomial.variable(n, i) for i in range(n)]


# -- moment vectors ----------------------------------------------------------


def test_point_moments_are_monomial_values():
    y = MomentVector.from_point([2.0, -1.0], k=2)
    assert y.values[(0, 0)] == 1.0
    assert y.values[(1, 1)] == -2.0
    assert y.values[(3, 1)] == -8.0


def test_point_moment_matrix_rank_one():
    y = MomentVector.from_point([0.5, 1.5], k=2)
    M = y.moment_matrix(2)
    assert M.shape == (6, 6)
    assert numerical_rank(M) == 1
    assert np.allclose(M, M.T)


def test_mixture_moment_matrix_rank_counts_atoms():
    y = MomentVector.from_mixture([[1.0, 1.0], [-1.0, 2.0]], k=2)
    assert numerical_rank(y.moment_matrix(2)) == 2
    flat, ranks = flat_truncation(y, k=2, d=1)
    assert flat and ranks == (2, 2)


def test_localizing_matrix_of_point_scales_by_g():
    x1, x2 = _vars(2)
    g = x1 + 2 * x2 - 1
    u = [0.3, 0.8]
    k = 2
    y = MomentVector.from_point(u, k)
    L = localizing_map(g, 2, k).apply(y)
    gu = g.to_float().eval(u)
    # for a point measure: L_g(y) = g(u) * v v^T over the row basis
    side = L.shape[0]
    v = np.array([np.prod([u[i] ** a[i] for i in range(2)])
                  for a in basis(2, k - 1)])
    assert np.allclose(L, gu * np.outer(v, v), atol=1e-12)


# -- cone generators ---------------------------------------------------------


def test_cone_generators_qmodule():
    x1, x2 = _vars(2)
    prob = Problem(2, x1, g=(x1, x2))
    pairs, skipped = cone_generators(prob, 2, QMODULE)
    assert [J for J, _ in pairs] == [(), (1,), (2,)]
    assert not skipped


def test_cone_generators_preordering_skips_high_degree():
    x1, x2 = _vars(2)
    g = (x1 ** 3, x2 ** 3)  # product has half-degree 3
    prob = Problem(2, x1, g=g)
    pairs, skipped = cone_generators(prob, 2, PREORDERING)
    assert {J for J, _ in pairs} == {(), (1,), (2,)}
    assert skipped == [(1, 2)]
    pairs3, skipped3 = cone_generators(prob, 3, PREORDERING)
    assert (1, 2) in {J for J, _ in pairs3} and not skipped3


# -- assembly and weak duality ----------------------------------------------


def _solve_bound(asm):
    sol = sdp.solve(asm.problem)
    return asm.bound(sol), sol


def test_unconstrained_quartic_bound():
    x1, = _vars(1)
    prob = Problem(1, (x1 ** 2 - 1) ** 2)  # minimum 0 at x = +-1
    mom, _ = _solve_bound(assemble_moment_sdp(prob, 2))
    sos, _ = _solve_bound(assemble_sos_sdp(prob, 2))
    assert mom == pytest.approx(0.0, abs=1e-6)
    assert sos == pytest.approx(0.0, abs=1e-6)
    assert sos <= mom + 1e-6


def test_interval_constrained_minimum():
    x1, = _vars(1)
    prob = Problem(1, x1, g=(1 - x1 ** 2,))  # min x on [-1, 1]
    mom, _ = _solve_bound(assemble_moment_sdp(prob, 2))
    assert mom == pytest.approx(-1.0, abs=1e-6)


def test_equality_constrained_minimum():
    x1, x2 = _vars(2)
    prob = Problem(2, x1 + x2, h=(x1 ** 2 + x2 ** 2 - 2,))
    mom, _ = _solve_bound(assemble_moment_sdp(prob, 2))
    assert mom == pytest.approx(-2.0, abs=1e-5)


def test_decode_gives_unit_mass_moments():
    x1, = _vars(1)
    prob = Problem(1, (x1 - 1) ** 2)
    asm = assemble_moment_sdp(prob, 2)
    sol = sdp.solve(asm.problem)
    y = asm.decode(sol).normalized()
    assert y.y0 == pytest.approx(1.0)
    assert y.values[(1,)] == pytest.approx(1.0, abs=1e-4)


# -- extraction --------------------------------------------------------------


def test_extraction_recovers_mixture_atoms():
    pts = [(1.0, 1.0), (-1.0, 2.0), (0.5, -0.5)]
    y = MomentVector.from_mixture(pts, weights=[0.5, 0.3, 0.2], k=3)
    got = sorted(extract_minimizers(y, 3))
    for u, v in zip(sorted(pts), got):
        assert np.allclose(u, v, atol=1e-8)


def test_extraction_one_atom():
    y = MomentVector.from_point([0.25, -3.0], k=2)
    (u,) = extract_minimizers(y, 2)
    assert np.allclose(u, (0.25, -3.0), atol=1e-10)


# -- hierarchy driver --------------------------------------------------------


def test_default_order_range():
    x1, x2 = _vars(2)
    prob = Problem(2, x1 * x2, h=((x1 ** 2 - 1) ** 2 + (x2 ** 2 - 1) ** 2,))
    assert default_order_range(prob) == range(2, 7)


def test_run_hierarchy_stops_when_stable():
    x1, = _vars(1)
    prob = Problem(1, (x1 - 1) ** 2)
    res = run_hierarchy(prob, range(2, 7), sides=("moment",),
                        options=HierarchyOptions(rank_tol=1e-5, stall_tol=1e-5))
    assert res.stabilized
    ks = sorted(res.bounds("moment"))
    assert ks[-1] < 6  # early stop
    rec = res.record(ks[-1], "moment")
    assert rec.flat
    assert rec.points and rec.points[0][0] == pytest.approx(1.0, abs=1e-3)


def test_run_hierarchy_records_both_sides():
    x1, = _vars(1)
    prob = Problem(1, x1 ** 2 + 1)
    res = run_hierarchy(prob, [1, 2], sides=("moment", "sos"))
    assert len(res.records) == 4
    for r in res.records:
        assert r.bound == pytest.approx(1.0, abs=1e-6)


def test_run_hierarchy_parallel_matches_serial(monkeypatch):
    x1, = _vars(1)
    prob = Problem(1, (x1 ** 2 - 1) ** 2)
    serial = run_hierarchy(prob, [2, 3], sides=("moment",))
    monkeypatch.setenv("LASSERRE_THREADS", "2")
    par = run_hierarchy(prob, [2, 3], sides=("moment",))
    assert [r.k for r in par.records] == [r.k for r in serial.records]
    for a, b in zip(par.records, serial.records):
        assert a.bound == pytest.approx(b.bound, abs=1e-9)


def test_preordering_tightens_cubed_inequality():
    fx = get_fixture("cubed-inequality-slow")
    qm = run_hierarchy(fx.problem, [3], kind=QMODULE, sides=("sos",))
    pre = run_hierarchy(fx.problem, [3], kind=PREORDERING, sides=("sos",))
    assert pre.records[0].bound >= qm.records[0].bound - 1e-6
