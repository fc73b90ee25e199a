import csv
import io
import json
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from cellforest.complex_core import box_region, build_cubical_torus, build_graph, build_simplex_skeleton
from cellforest.measures import dual_complement_kernel, matroidal_kernel, subset_probability
from cellforest.sampler import (
    EmpiricalReport,
    chi_square_test,
    domination_witness,
    empirical_frequencies,
    exact_distribution,
    forest_statistics,
    make_rng,
    max_flow,
    sample_many,
    sample_once,
)


# ---------------------------------------------------------------- draws


def test_draw_is_deterministic(k4):
    m = matroidal_kernel(k4, 1, "lower")
    a = sample_once(m, 123, stream=4)
    b = sample_once(m, 123, stream=4)
    assert a.cells == b.cells
    assert a.seed == 123 and a.stream == 4 and a.measure_id == m.measure_id
    assert [d.cells for d in sample_many(m, 5, 9, start=2)] == [sample_once(m, 9, s).cells for s in range(2, 7)]


def test_streams_are_independent():
    a = make_rng(1, 0).random(4)
    b = make_rng(1, 1).random(4)
    c = make_rng(2, 0).random(4)
    assert not np.allclose(a, b) and not np.allclose(a, c)
    assert np.array_equal(a, make_rng(1, 0).random(4))


def test_zero_and_identity_kernels(torus2, k4):
    zero = matroidal_kernel(k4, 0, "lower")
    assert sample_once(zero, 1).cells == frozenset()
    full = matroidal_kernel(torus2, 2, "upper")
    assert sample_once(full, 1).cells == frozenset(range(4))


def test_single_vertex_graph():
    X = build_simplex_skeleton(1, 0)
    m = matroidal_kernel(X, 0, "upper")
    assert sample_once(m, 5).cells == frozenset({0})


@pytest.mark.parametrize("fixture,k,side", [("rp2", 1, "upper"), ("torus3", 1, "lower"), ("simplex6", 2, "lower")])
def test_draw_size_equals_rank(request, fixture, k, side):
    m = matroidal_kernel(request.getfixturevalue(fixture), k, side)
    for d in sample_many(m, 10, 0):
        assert len(d.cells) == m.rank
        # every draw lies in the support
        assert subset_probability(m, d.cells) > 0


def test_k3_tree_frequencies(k3):
    m = matroidal_kernel(k3, 1, "lower")
    n = 30000
    rep = empirical_frequencies(m, n, seed=2024)
    sigma = np.sqrt((1 / 3) * (2 / 3) / n)
    freqs = rep.subset_frequencies()
    assert len(freqs) == 3
    for T in combinations(range(3), 2):
        assert abs(freqs[frozenset(T)] - 1 / 3) < 4 * sigma


def test_torus_cell_frequencies():
    X = build_cubical_torus(2, 10)
    m = matroidal_kernel(X, 1, "lower")
    n = 2000
    rep = empirical_frequencies(m, n, seed=77)
    p = 99 / 200
    sigma = np.sqrt(p * (1 - p) / n)
    assert np.all(np.abs(rep.frequencies - p) < 4.5 * sigma)
    assert rep.subset_counts is None


def test_float_and_exact_paths_agree_in_law(torus2):
    for side in ("lower", "upper"):
        ex = matroidal_kernel(torus2, 1, side)
        fl = matroidal_kernel(torus2, 1, side, exact=False)
        rep = empirical_frequencies(fl, 4000, seed=3)
        assert chi_square_test(rep, ex)["pvalue"] > 1e-3


def test_interior_measure_draws():
    X = build_cubical_torus(2, 6)
    A = box_region(X, (1, 1), 4)
    m = matroidal_kernel(X, 1, "lower", region=A)
    for d in sample_many(m, 20, 1):
        assert len(d.cells) == m.rank
        assert d.cells <= set(A.cells[1])


def test_chi_square_on_rp2_faces(rp2):
    m = matroidal_kernel(rp2, 2, "lower")
    rep = empirical_frequencies(m, 3000, seed=8)
    res = chi_square_test(rep, m)
    assert res["off_support"] == 0 and res["pvalue"] > 1e-3


def test_empirical_requires_samples(k3):
    with pytest.raises(ValueError):
        empirical_frequencies(matroidal_kernel(k3, 1, "lower"), 0, 1)


def test_report_serialization(k3):
    rep = empirical_frequencies(matroidal_kernel(k3, 1, "lower"), 50, seed=1)
    data = json.loads(rep.to_json())
    assert data["n_samples"] == 50
    assert sum(data["subsets"].values()) == 50
    assert abs(sum(rep.subset_frequencies().values()) - 1) < 1e-12
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["cell", "count", "frequency", "stderr"]
    assert sum(int(r[1]) for r in rows[1:]) == 100


def test_report_without_subsets():
    rep = EmpiricalReport(4, (0, 1), np.array([1, 3]))
    assert rep.subset_frequencies() == {}
    assert list(rep.frequencies) == [0.25, 0.75]


def test_exact_distribution(k4):
    dist = exact_distribution(matroidal_kernel(k4, 1, "lower"))
    assert len(dist) == 16 and sum(dist.values()) == 1


# ---------------------------------------------------------------- max flow


def test_max_flow_small_network():
    F = Fraction
    arcs = [(0, 1, F(3)), (0, 2, F(2)), (1, 2, F(1)), (1, 3, F(2)), (2, 3, F(3))]
    value, flows, reach = max_flow(4, arcs, 0, 3)
    assert value == 5
    assert reach == {0}


def test_max_flow_cut_certificate():
    F = Fraction
    arcs = [(0, 1, F(1, 2)), (1, 2, None), (0, 2, F(1, 3))]
    value, _, reach = max_flow(3, arcs, 0, 2)
    assert value == F(5, 6) and reach == {0}
    value, _, reach = max_flow(3, [(0, 1, F(1)), (1, 2, F(1, 4))], 0, 2)
    assert value == F(1, 4) and reach == {0, 1}


# ---------------------------------------------------------------- domination


def test_torus_domination_coupling(torus2):
    low = matroidal_kernel(torus2, 1, "lower")
    up = matroidal_kernel(torus2, 1, "upper")
    res = domination_witness(low, up)
    assert res.feasible
    assert res.check_marginals(exact_distribution(low), exact_distribution(up))
    back = domination_witness(up, low)
    assert not back.feasible and back.coupling is None
    cert = back.certificate
    assert cert["flow_value"] < 1
    assert cert["mass_sets"] > cert["mass_supersets"]
    assert all(any(T <= U for T in cert["sets"]) for U in cert["supersets"])


def test_equal_measures_give_identity_coupling(rp2):
    # no rational homology in degree 2, so lower and upper coincide
    m = matroidal_kernel(rp2, 2, "lower")
    res = domination_witness(m, matroidal_kernel(rp2, 2, "upper"))
    assert res.feasible
    assert all(a == b for a, b in res.coupling)


def test_domination_rejects_large_or_mismatched(torus3, k4):
    m = matroidal_kernel(torus3, 1, "lower")
    with pytest.raises(ValueError):
        domination_witness(m, m)
    with pytest.raises(ValueError):
        domination_witness(matroidal_kernel(k4, 1, "lower"), matroidal_kernel(k4, 0, "upper"))


def test_cycle_complement_is_dominated():
    # on a 4-cycle the complement of a tree is a uniform edge, and every edge
    # lies in 3 of the 4 trees, so the edge law is dominated by the tree law
    m = matroidal_kernel(build_graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)]), 1, "lower")
    res = domination_witness(dual_complement_kernel(m), m)
    assert res.feasible
    assert res.check_marginals(exact_distribution(dual_complement_kernel(m)), exact_distribution(m))


def test_check_marginals_rejects_bad_couplings():
    from cellforest.sampler import CouplingResult

    a, b = frozenset({0}), frozenset({0, 1})
    good = CouplingResult(True, {(a, b): Fraction(1)})
    assert good.check_marginals({a: 1}, {b: 1})
    assert not CouplingResult(True, {(b, a): Fraction(1)}).check_marginals({b: 1}, {a: 1})
    assert not CouplingResult(False, None).check_marginals({}, {})


# ---------------------------------------------------------------- statistics


def test_spanning_tree_statistics(k4):
    m = matroidal_kernel(k4, 1, "lower")
    for d in sample_many(m, 10, 4):
        st = forest_statistics(d, k4, 1, marked=0)
        assert st.betti == 1 and st.components == 1
        # the whole complex has no boundary, so the region bound does not apply
        assert st.boundary_size == 0 and not st.bound_holds
        assert 1 <= st.marked_degree <= 3


def test_statistics_of_given_cell_set(torus3):
    st = forest_statistics([], torus3, 1)
    assert st.betti == 9 and st.components == 9
    st = forest_statistics(range(18), torus3, 2)
    # all faces present: b_1 of the full torus
    assert st.betti == 2 and st.components is None


def test_wired_forest_bound_on_small_box():
    X = build_cubical_torus(2, 6)
    region = box_region(X, (1, 1), 4)
    A = box_region(X, (1, 1), 3)
    m = matroidal_kernel(X, 1, "lower", region=region)
    for d in sample_many(m, 30, 11):
        st = forest_statistics(d, X, 1, A=A)
        assert st.betti == st.components
        assert st.bound_holds
