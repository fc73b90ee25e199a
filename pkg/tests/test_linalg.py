from fractions import Fraction
from itertools import combinations
from math import gcd

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.matrices.normalforms import invariant_factors

from cellforest.linalg import (
    TorsionReport,
    charpoly,
    column_space_projection,
    determinant,
    format_rational,
    gram_det,
    identity,
    independent_rows,
    int_matrix,
    integer_kernel_basis,
    integer_pseudo_determinant,
    nullspace_basis,
    parse_rational,
    principal_minor_det,
    rational_rank,
    row_space_projection,
    saturation_basis,
    smith_normal_form,
    torsion_order,
    zeros,
)


def int_matrices(max_rows=6, max_cols=8, lo=-3, hi=3):
    return st.integers(1, max_rows).flatmap(
        lambda m: st.integers(1, max_cols).flatmap(
            lambda n: st.lists(
                st.lists(st.integers(lo, hi), min_size=n, max_size=n), min_size=m, max_size=m
            )
        )
    )


def as_sympy(M):
    return sp.Matrix([[int(v) for v in row] for row in M])


# ---------------------------------------------------------------- rank


def test_rank_examples(k3, rp2):
    assert rational_rank(zeros(3, 4)) == 0
    assert rational_rank(k3.boundary(1)) == 2
    assert rational_rank(rp2.boundary(2)) == 10


@settings(max_examples=60, deadline=None)
@given(int_matrices())
def test_rank_matches_sympy(rows):
    M = int_matrix(rows)
    assert rational_rank(M) == as_sympy(M).rank()


def test_rank_of_rational_matrix():
    M = np.array([[Fraction(1, 2), Fraction(1, 3)], [Fraction(3, 2), 1]], dtype=object)
    assert rational_rank(M) == 1


def test_independent_rows_pivot_order(k3):
    # the first two vertex rows of K3 already span the row space
    assert independent_rows(k3.boundary(1)) == [0, 1]


# ---------------------------------------------------------------- nullspace


def test_nullspace_examples(k3, rp2):
    assert nullspace_basis(identity(4)).shape == (4, 0)
    N = nullspace_basis(k3.boundary(1))
    assert N.shape == (3, 1)
    assert {abs(v) for v in N[:, 0]} == {1}
    assert nullspace_basis(rp2.boundary(2)).shape == (10, 0)


@settings(max_examples=60, deadline=None)
@given(int_matrices())
def test_nullspace_is_kernel(rows):
    M = int_matrix(rows)
    N = nullspace_basis(M)
    assert N.shape[1] == M.shape[1] - rational_rank(M)
    assert not M.dot(N).any()
    assert rational_rank(N) == N.shape[1]


# ---------------------------------------------------------------- projections


def test_projection_on_coordinate_rows():
    M = int_matrix([[0, 1, 0, 0], [0, 0, 0, 1]])
    Q = row_space_projection(M).Q
    assert [Q[i, i] for i in range(4)] == [0, 1, 0, 1]
    assert not (Q - np.diag([0, 1, 0, 1])).any()


def test_projection_graph_diagonals(k3, k4):
    assert row_space_projection(k3.boundary(1)).diagonal() == [Fraction(2, 3)] * 3
    assert row_space_projection(k4.boundary(1)).diagonal() == [Fraction(1, 2)] * 6


def test_rank_zero_projection_is_explicit_zero():
    K = row_space_projection(zeros(2, 3))
    assert K.rank == 0
    assert K.Q.shape == (3, 3) and not K.Q.any()


def test_column_projection_complements_left_kernel(k3):
    P = column_space_projection(k3.boundary(1))
    assert P.rank == 2
    P.check()


@settings(max_examples=40, deadline=None)
@given(int_matrices(max_rows=5, max_cols=7))
def test_projection_is_symmetric_idempotent(rows):
    K = row_space_projection(int_matrix(rows))
    K.check()
    assert K.rank == rational_rank(int_matrix(rows))


def test_projection_large_random():
    rng = np.random.default_rng(5)
    M = int_matrix(rng.integers(-2, 3, size=(12, 20)))
    K = row_space_projection(M)
    K.check()
    assert K.rank == 12


# ---------------------------------------------------------------- Smith normal form


def test_snf_examples(rp2):
    rep = smith_normal_form(rp2.boundary(2))
    assert rep.invariant_factors == (1,) * 9 + (2,)
    assert rep.torsion_order == 2 and rep.rank == 10
    z = smith_normal_form(zeros(3, 2))
    assert z.invariant_factors == () and z.torsion_order == 1
    assert smith_normal_form(int_matrix([[2, 0], [0, 3]])).invariant_factors == (1, 6)


@settings(max_examples=60, deadline=None)
@given(int_matrices(lo=-6, hi=6))
def test_snf_matches_sympy(rows):
    M = int_matrix(rows)
    rep = smith_normal_form(M)
    expected = tuple(abs(int(f)) for f in invariant_factors(as_sympy(M), domain=sp.ZZ) if f != 0)
    assert rep.invariant_factors == expected
    assert all(b % a == 0 for a, b in zip(rep.invariant_factors, rep.invariant_factors[1:]))
    assert rep.rank == rational_rank(M)


@settings(max_examples=30, deadline=None)
@given(int_matrices(lo=-5, hi=5))
def test_snf_transforms(rows):
    M = int_matrix(rows)
    rep, U, V = smith_normal_form(M, transforms=True)
    D = U.dot(M).dot(V)
    m, n = M.shape
    expect = zeros(m, n)
    for i, d in enumerate(rep.invariant_factors):
        expect[i, i] = d
    assert (D == expect).all()
    assert abs(determinant(U)) == 1 and abs(determinant(V)) == 1


def _minor_gcd(M, j):
    m, n = M.shape
    g = 0
    A = np.array(M, dtype=float)
    for R in combinations(range(m), j):
        for C in combinations(range(n), j):
            g = gcd(g, int(round(np.linalg.det(A[np.ix_(R, C)]))))
    return g


def test_snf_gcd_of_minors_ladder():
    rng = np.random.default_rng(11)
    for _ in range(4):
        M = int_matrix(rng.integers(-4, 5, size=(5, 7)))
        fs = smith_normal_form(M).invariant_factors
        prod = 1
        for j in range(1, len(fs) + 1):
            prod *= fs[j - 1]
            assert prod == _minor_gcd(M, j)


def test_torsion_report_from_factors():
    rep = TorsionReport.from_factors([1, 2, 6])
    assert rep.torsion_order == 12 and rep.rank == 3


# ---------------------------------------------------------------- lattices


def test_integer_kernel_basis(k3):
    K = integer_kernel_basis(k3.boundary(1))
    assert K.shape == (3, 1)
    assert not k3.boundary(1).dot(K).any()


def test_saturation_of_scaled_vector():
    B = int_matrix([[2], [4], [6]])
    S = saturation_basis(B)
    assert S.shape == (3, 1)
    assert sorted(abs(int(v)) for v in S[:, 0]) == [1, 2, 3]


@pytest.mark.parametrize("r", [2, 3, 4])
def test_lattice_gram_identity(r):
    # for a basis B of a full-rank sublattice of V ∩ Z^6:
    # det(B^T B) = |(V ∩ Z^6) / <B>|^2 det(B0^T B0)
    rng = np.random.default_rng(100 + r)
    for _ in range(5):
        gen = int_matrix(rng.integers(-3, 4, size=(6, r)))
        if rational_rank(gen) < r:
            continue
        B0 = saturation_basis(gen)
        U = int_matrix(rng.integers(-3, 4, size=(r, r)))
        if determinant(U) == 0:
            continue
        B = B0.dot(U)
        t = torsion_order(B)
        assert t == abs(determinant(U))
        assert gram_det(B.T) == t * t * gram_det(B0.T)


# ---------------------------------------------------------------- determinants


def test_principal_minor_examples(k3):
    Q = row_space_projection(k3.boundary(1)).Q
    assert principal_minor_det(Q, []) == 1
    assert principal_minor_det(Q, [1]) == Fraction(2, 3)
    assert principal_minor_det(Q, [0, 1, 2]) == 0
    with pytest.raises(IndexError):
        principal_minor_det(Q, [3])


def test_gram_det_examples(k3):
    assert gram_det(int_matrix([[0, 1, 0]])) == 1
    assert gram_det(k3.boundary(1)[[0, 1], :]) == 3
    assert gram_det(int_matrix([[1, 2], [2, 4]])) == 0


@settings(max_examples=40, deadline=None)
@given(int_matrices(max_rows=5, max_cols=5, lo=-4, hi=4).filter(lambda r: len(r) == len(r[0])))
def test_determinant_matches_sympy(rows):
    assert determinant(int_matrix(rows)) == as_sympy(rows).det()


def test_pseudo_determinant_examples(k3):
    assert integer_pseudo_determinant(identity(5)) == 1
    D = k3.boundary(1)
    assert integer_pseudo_determinant(D.dot(D.T)) == 9
    assert integer_pseudo_determinant(zeros(4, 4)) == 1
    with pytest.raises(ValueError):
        integer_pseudo_determinant(int_matrix([[1, 2], [0, 1]]))


def test_pseudo_determinant_against_eigenvalues():
    rng = np.random.default_rng(3)
    for r in (2, 4, 6):
        A = int_matrix(rng.integers(-3, 4, size=(6, r)))
        G = A.dot(A.T)
        lam = np.linalg.eigvalsh(np.array(G, dtype=float))
        nz = lam[np.abs(lam) > 1e-8 * max(1.0, np.abs(lam).max())]
        assert integer_pseudo_determinant(G) == pytest.approx(float(np.prod(nz)), rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(int_matrices(max_rows=5, max_cols=5).filter(lambda r: len(r) == len(r[0])))
def test_charpoly_matches_sympy(rows):
    x = sp.symbols("x")
    expected = sp.Poly(as_sympy(rows).charpoly(x).as_expr(), x).all_coeffs()
    assert charpoly(int_matrix(rows)) == [int(c) for c in expected]


def test_rational_strings():
    assert format_rational(Fraction(-3, 6)) == "-1/2"
    assert format_rational(2) == "2/1"
    assert parse_rational("99/200") == Fraction(99, 200)
