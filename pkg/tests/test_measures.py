from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from cellforest.complex_core import box_region, build_cubical_torus, build_graph, dual_torus_map
from cellforest.linalg import principal_minor_det
from cellforest.measures import (
    betti_gap,
    coboundary_matroid_kernel,
    dual_complement_kernel,
    inclusion_probability,
    kernel_report,
    matroidal_kernel,
    subset_probability,
)


def total_mass(m):
    return sum(subset_probability(m, T) for T in combinations(m.ground, m.rank))


def assert_dominated(Ql, Qu):
    assert not (Ql.dot(Qu) - Ql).any()
    assert all(Ql[i, i] <= Qu[i, i] for i in range(Ql.shape[0]))


# ---------------------------------------------------------------- kernels


def test_graph_lower_is_spanning_tree_kernel(k4):
    m = matroidal_kernel(k4, 1, "lower")
    assert m.rank == k4.f(0) - 1
    m.kernel.check()
    # Kirchhoff: 16 spanning trees, each of probability 1/16
    trees = [T for T in combinations(range(6), 3) if subset_probability(m, T)]
    assert len(trees) == 16
    assert {subset_probability(m, T) for T in trees} == {Fraction(1, 16)}


def test_graph_degree_zero(k4):
    low = matroidal_kernel(k4, 0, "lower")
    assert low.rank == 0 and not low.kernel.Q.any()
    assert subset_probability(low, []) == 1
    up = matroidal_kernel(k4, 0, "upper")
    # cocycles in degree 0 are the constants: one uniform vertex
    assert up.rank == 1
    assert [subset_probability(up, [v]) for v in range(4)] == [Fraction(1, 4)] * 4
    assert dual_complement_kernel(up).rank == k4.f(0) - 1


def test_torus_top_degree(torus3):
    up = matroidal_kernel(torus3, 2, "upper")
    assert up.rank == 9 and subset_probability(up, range(9)) == 1
    low = matroidal_kernel(torus3, 2, "lower")
    assert low.rank == 8


def test_degree_out_of_range(k3):
    with pytest.raises(ValueError):
        matroidal_kernel(k3, 2, "lower")
    with pytest.raises(ValueError):
        matroidal_kernel(k3, 1, "sideways")


def test_region_from_other_complex(torus3):
    other = build_cubical_torus(2, 4)
    with pytest.raises(ValueError):
        matroidal_kernel(torus3, 1, "lower", region=box_region(other, (0, 0), 2))


# ---------------------------------------------------------------- probabilities


def test_inclusion_examples(k3):
    m = matroidal_kernel(k3, 1, "lower")
    assert inclusion_probability(m, []) == 1
    assert inclusion_probability(m, [1]) == Fraction(2, 3)
    assert subset_probability(m, [0, 2]) == Fraction(1, 3)
    assert subset_probability(m, [0, 1, 2]) == 0
    with pytest.raises(IndexError):
        inclusion_probability(m, [3])


def test_large_torus_edge_probability():
    X = build_cubical_torus(2, 10)
    m = matroidal_kernel(X, 1, "lower")
    assert inclusion_probability(m, [0]) == Fraction(99, 200)
    assert set(m.kernel.diagonal()) == {Fraction(99, 200)}


def test_projective_plane_probability(simplex6, rp2_in_simplex):
    m = matroidal_kernel(simplex6, 2, "lower")
    assert m.rank == 10
    assert subset_probability(m, rp2_in_simplex) == Fraction(4, 46656)


@pytest.mark.parametrize("fixture,k,side", [
    ("k3", 1, "lower"), ("k4", 1, "lower"), ("k4", 0, "upper"),
    ("torus2", 1, "lower"), ("torus2", 1, "upper"), ("torus2", 2, "lower"),
])
def test_mass_sums_to_one(request, fixture, k, side):
    m = matroidal_kernel(request.getfixturevalue(fixture), k, side)
    assert total_mass(m) == 1


def test_float_kernel_matches_exact(torus3):
    for side in ("lower", "upper"):
        ex = matroidal_kernel(torus3, 1, side)
        fl = matroidal_kernel(torus3, 1, side, exact=False)
        assert fl.rank == ex.rank
        assert np.allclose(fl.kernel.as_float(), ex.kernel.as_float(), atol=1e-12)
        assert inclusion_probability(fl, [0, 4]) == pytest.approx(float(inclusion_probability(ex, [0, 4])))


# ---------------------------------------------------------------- homology


def test_betti_gap_examples(torus3, rp2, k4):
    assert betti_gap(torus3, 1) == 2
    assert betti_gap(rp2, 1) == 0
    assert betti_gap(k4, 0) == 1
    assert betti_gap(build_graph(5, [(0, 1), (2, 3)]), 0) == 3


@pytest.mark.parametrize("fixture", ["k4", "rp2", "torus2", "torus3", "simplex6"])
def test_domination_at_kernel_level(request, fixture):
    X = request.getfixturevalue(fixture)
    for k in range(X.top_dim + 1):
        low = matroidal_kernel(X, k, "lower").kernel.Q
        up = matroidal_kernel(X, k, "upper").kernel.Q
        assert_dominated(low, up)
        assert ((low == up).all()) == (betti_gap(X, k) == 0)
        # lower rank + betti number = upper rank
        assert np.trace(up) - np.trace(low) == betti_gap(X, k)


def test_simplex_lower_equals_upper():
    from cellforest.complex_core import build_simplex_skeleton

    X = build_simplex_skeleton(6, 2)
    assert (matroidal_kernel(X, 1, "lower").kernel.Q == matroidal_kernel(X, 1, "upper").kernel.Q).all()


# ---------------------------------------------------------------- complements


def test_dual_complement_examples(k3):
    m = dual_complement_kernel(matroidal_kernel(k3, 1, "lower"))
    assert m.rank == 1
    assert [subset_probability(m, [e]) for e in range(3)] == [Fraction(1, 3)] * 3
    full = matroidal_kernel(k3, 0, "upper")
    top = dual_complement_kernel(dual_complement_kernel(full))
    assert (top.kernel.Q == full.kernel.Q).all()


def test_identity_complement_is_zero(torus2):
    m = dual_complement_kernel(matroidal_kernel(torus2, 2, "upper"))
    assert m.rank == 0 and not m.kernel.Q.any()


def test_complement_probabilities(torus2):
    m = matroidal_kernel(torus2, 1, "lower")
    c = dual_complement_kernel(m)
    E = set(range(8))
    for T in combinations(range(8), m.rank):
        assert subset_probability(c, E - set(T)) == subset_probability(m, T)


@pytest.mark.parametrize("fixture,k", [("rp2", 1), ("torus2", 1), ("k4", 0), ("simplex6", 1)])
def test_upper_is_complement_of_coboundary_matroid(request, fixture, k):
    X = request.getfixturevalue(fixture)
    up = matroidal_kernel(X, k, "upper").kernel.Q
    co = dual_complement_kernel(coboundary_matroid_kernel(X, k)).kernel.Q
    assert (up == co).all()


@pytest.mark.parametrize("n", [2, 3])
def test_torus_duality_kernels(n):
    X = build_cubical_torus(2, n)
    phi = dual_torus_map(X)
    low = matroidal_kernel(X, 1, "lower").kernel.Q
    up = matroidal_kernel(phi.dual, 1, "upper").kernel.Q
    E = X.f(1)
    for e in range(E):
        for f in range(E):
            comp = (1 if e == f else 0) - low[e, f]
            s = phi.sign[1][e] * phi.sign[1][f]
            assert up[phi.index[1][e], phi.index[1][f]] == s * comp


# ---------------------------------------------------------------- regions


@pytest.fixture(scope="module")
def ambient():
    return build_cubical_torus(2, 8)


def test_interior_region_ground_set(ambient):
    A = box_region(ambient, (1, 1), 6)
    for side in ("lower", "upper"):
        m = matroidal_kernel(ambient, 1, side, region=A)
        assert m.ground == tuple(A.sorted_cells(1))
        assert m.ground_size == 60
        m.kernel.check()


def test_interior_measures_on_small_box(ambient):
    # the only interior vertex is the centre, so a wired lower draw is one of its edges
    A = box_region(ambient, (0, 0), 3)
    m = matroidal_kernel(ambient, 1, "lower", region=A)
    assert m.rank == 1
    centre = [e for e in m.ground if m.kernel.Q[m.positions([e])[0], m.positions([e])[0]]]
    assert len(centre) == 4
    assert {inclusion_probability(m, [e]) for e in centre} == {Fraction(1, 4)}


def test_interior_bounded_by_full(ambient):
    A = box_region(ambient, (1, 1), 5)
    for side in ("lower", "upper"):
        full = matroidal_kernel(ambient, 1, side).kernel.Q
        m = matroidal_kernel(ambient, 1, side, region=A)
        for i, e in enumerate(m.ground):
            assert m.kernel.Q[i, i] <= full[e, e]


def test_interior_monotone_in_region(ambient):
    small = box_region(ambient, (2, 2), 4)
    big = box_region(ambient, (1, 1), 6)
    for side in ("lower", "upper"):
        ms = matroidal_kernel(ambient, 1, side, region=small)
        mb = matroidal_kernel(ambient, 1, side, region=big)
        for i, e in enumerate(ms.ground):
            j = mb.positions([e])[0]
            assert ms.kernel.Q[i, i] <= mb.kernel.Q[j, j]


def test_interior_float_matches_exact(ambient):
    A = box_region(ambient, (1, 1), 4)
    for side in ("lower", "upper"):
        ex = matroidal_kernel(ambient, 1, side, region=A)
        fl = matroidal_kernel(ambient, 1, side, region=A, exact=False)
        assert fl.rank == ex.rank
        assert np.allclose(fl.kernel.as_float(), ex.kernel.as_float(), atol=1e-12)


# ---------------------------------------------------------------- counts per vertex


@pytest.mark.parametrize("d,k,n", [(2, 1, 3), (2, 1, 6), (2, 2, 4), (3, 1, 3), (3, 2, 3)])
def test_euler_count_per_vertex(d, k, n):
    from math import comb

    X = build_cubical_torus(d, n)
    m = matroidal_kernel(X, k, "lower")
    per_vertex = Fraction(m.rank, n**d)
    # the alternating sum of lower-dimensional ranks telescopes to the limit
    assert abs(per_vertex - comb(d - 1, k - 1)) <= Fraction(2**d, n**d)
    assert per_vertex < comb(d - 1, k - 1) or k == 0


def test_kernel_report(k3):
    rep = kernel_report(matroidal_kernel(k3, 1, "lower"))
    assert rep["rank"] == 2
    assert rep["diagonal"] == ["2/3"] * 3
    assert principal_minor_det(matroidal_kernel(k3, 1, "lower").kernel.Q, [0]) == Fraction(2, 3)
