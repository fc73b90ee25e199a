"""The lower and upper matroidal measures as projection kernels.

For a complex X and degree k:

* lower, full      -- projection onto the coboundaries B^k(X), the row space of ∂_k
* upper, full      -- projection onto the cocycles Z^k(X) = B_k(X)^⊥
* lower, interior  -- projection onto B^k(int A) inside C^k(A)
* upper, interior  -- projection onto Z^k(int A) inside C^k(A)

The interior ("wired") variants are the finite approximants of the wired
measures on an infinite complex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count
from typing import Iterable, Literal

import numpy as np

from .complex_core import ChainComplex, RegionSelection, interior_and_boundary
from .linalg import (
    ProjectionKernel,
    column_space_projection,
    format_rational,
    identity,
    nullspace_basis,
    principal_minor_det,
    rational_rank,
    row_space_projection,
    zeros,
)

__all__ = [
    "ProjectionKernel",
    "MatroidalMeasure",
    "matroidal_kernel",
    "coboundary_matroid_kernel",
    "inclusion_probability",
    "subset_probability",
    "betti_gap",
    "dual_complement_kernel",
    "kernel_report",
    "float_row_projection",
]

Side = Literal["lower", "upper"]

_ids = count()

# relative eigenvalue cutoff for floating-point kernels
FLOAT_RANK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MatroidalMeasure:
    """A determinantal measure on k-cells tagged with where it came from.

    ``ground`` lists the k-cell indices of ``complex`` that index the rows
    of the kernel: all k-cells for the full region, the k-cells of ``A``
    for an interior region.
    """

    kernel: ProjectionKernel
    complex: ChainComplex
    degree: int
    side: str
    region: RegionSelection | None = None
    ground: tuple[int, ...] = ()
    complemented: bool = False
    measure_id: str = field(default_factory=lambda: f"m{next(_ids)}")

    @property
    def rank(self) -> int:
        return self.kernel.rank

    @property
    def ground_size(self) -> int:
        return self.kernel.ground_size

    def positions(self, cells: Iterable[int]) -> list[int]:
        """Map k-cell indices of the complex to kernel row positions."""
        where = self._where()
        out = []
        for c in cells:
            if c not in where:
                raise IndexError(f"cell {c} is not in the ground set")
            out.append(where[c])
        return out

    def _where(self) -> dict[int, int]:
        w = self.__dict__.get("_where_cache")
        if w is None:
            w = {c: i for i, c in enumerate(self.ground)}
            object.__setattr__(self, "_where_cache", w)
        return w

    def describe(self) -> str:
        reg = "full" if self.region is None else "interior"
        comp = "complement of " if self.complemented else ""
        return f"{comp}{self.side} k={self.degree} ({reg}) on {self.complex!r}"


def float_row_projection(M: np.ndarray, with_factor: bool = False):
    """Floating-point projection onto the row space of ``M`` and its rank.

    With ``with_factor`` also returns an orthonormal basis ``V`` of the row
    space as columns, so that ``Q = V V^T``.
    """
    M = np.asarray(M, dtype=float)
    m, n = M.shape
    if m == 0 or n == 0 or not M.any():
        Z = np.zeros((n, n))
        return (Z, 0, np.zeros((n, 0))) if with_factor else (Z, 0)
    if m <= n:
        lam, U = np.linalg.eigh(M @ M.T)
        keep = lam > FLOAT_RANK_TOL * max(lam.max(), 1.0)
        V = (M.T @ U[:, keep]) / np.sqrt(lam[keep])
    else:
        lam, W = np.linalg.eigh(M.T @ M)
        keep = lam > FLOAT_RANK_TOL * max(lam.max(), 1.0)
        V = W[:, keep]
    Q = V @ V.T
    Q = (Q + Q.T) / 2
    return (Q, int(keep.sum()), V) if with_factor else (Q, int(keep.sum()))


def _float_null_rows(M: np.ndarray) -> np.ndarray:
    """Orthonormal rows spanning ``{u : u M = 0}``."""
    if M.shape[1] == 0:
        return np.eye(M.shape[0])
    U, s, _ = np.linalg.svd(M, full_matrices=True)
    tol = FLOAT_RANK_TOL * max(s.max() if s.size else 0.0, 1.0)
    r = int((s > tol).sum())
    return U[:, r:].T


def _kernel_from_rows(M, n: int, exact: bool) -> ProjectionKernel:
    if exact:
        return row_space_projection(M) if M.shape[0] else ProjectionKernel(n, zeros(n, n, True), 0)
    Q, r, V = float_row_projection(np.asarray(M, dtype=float).reshape(-1, n), with_factor=True)
    return ProjectionKernel(n, None, r, Qf=Q, factor=V)


def _complement(K: ProjectionKernel) -> ProjectionKernel:
    n = K.ground_size
    if K.Q is not None:
        return ProjectionKernel(n, identity(n, rational=True) - K.Q, n - K.rank, factor=K.cofactor, cofactor=K.factor)
    return ProjectionKernel(n, None, n - K.rank, Qf=np.eye(n) - K.Qf, factor=K.cofactor, cofactor=K.factor)


def _check_degree(X: ChainComplex, k: int) -> None:
    if not 0 <= k <= X.top_dim:
        raise ValueError(f"degree k={k} out of range 0..{X.top_dim}")


def matroidal_kernel(
    X: ChainComplex,
    k: int,
    side: Side = "lower",
    region: RegionSelection | None = None,
    exact: bool = True,
) -> MatroidalMeasure:
    """Build the k-th lower or upper matroidal measure of ``X``.

    ``region`` selects the interior-of-A variant.  ``exact=False`` builds the
    kernel in double precision only, for complexes too large for rational
    arithmetic; probabilities then come back as floats.
    """
    _check_degree(X, k)
    if side not in ("lower", "upper"):
        raise ValueError(f"side must be 'lower' or 'upper', not {side!r}")
    if region is not None and region.complex is not X:
        if region.complex != X:
            raise ValueError("region is not a subcomplex of this complex")

    if region is None:
        n = X.f(k)
        ground = tuple(range(n))
        if side == "lower":
            if k == 0:
                K = _kernel_from_rows(zeros(0, n), n, exact)
            else:
                K = _kernel_from_rows(X.boundary(k), n, exact)
        else:
            if k == X.top_dim:
                K = _complement(_kernel_from_rows(zeros(0, n), n, exact))
            else:
                D = X.boundary(k + 1)
                if exact:
                    K = _complement(column_space_projection(D))
                else:
                    K = _complement(_kernel_from_rows(D.T, n, False))
        return MatroidalMeasure(K, X, k, side, None, ground)

    A = region
    ground = tuple(A.sorted_cells(k))
    n = len(ground)
    if side == "lower":
        if k == 0:
            K = _kernel_from_rows(zeros(0, n), n, exact)
        else:
            int_prev, _ = interior_and_boundary(A, k - 1)
            M = X.boundary(k)[np.ix_(int_prev, ground)] if int_prev and n else zeros(len(int_prev), n)
            K = _kernel_from_rows(M, n, exact)
    else:
        int_k, _ = interior_and_boundary(A, k)
        pos = {c: i for i, c in enumerate(ground)}
        above = A.sorted_cells(k + 1) if k < X.top_dim else []
        if above and int_k:
            M = X.boundary(k + 1)[np.ix_(int_k, above)]
        else:
            M = zeros(len(int_k), 0)
        if exact:
            # u on int_k with u^T M = 0, embedded in C^k(A)
            N = nullspace_basis(M.T.copy(), ncols=len(int_k)) if M.shape[1] else identity(len(int_k), True)
            rows = zeros(N.shape[1], n, rational=True)
            for i, c in enumerate(int_k):
                rows[:, pos[c]] = N[i, :]
            K = _kernel_from_rows(rows, n, True)
        else:
            Nr = _float_null_rows(np.asarray(M, dtype=float).reshape(len(int_k), -1))
            rows = np.zeros((Nr.shape[0], n))
            for i, c in enumerate(int_k):
                rows[:, pos[c]] = Nr[:, i]
            K = _kernel_from_rows(rows, n, False)
    return MatroidalMeasure(K, X, k, side, A, ground)


def coboundary_matroid_kernel(X: ChainComplex, k: int, exact: bool = True) -> MatroidalMeasure:
    """Projection onto the boundaries B_k(X): the measure whose complements are upper samples."""
    _check_degree(X, k)
    n = X.f(k)
    if k == X.top_dim:
        K = _kernel_from_rows(zeros(0, n), n, exact)
    elif exact:
        K = column_space_projection(X.boundary(k + 1))
    else:
        K = _kernel_from_rows(X.boundary(k + 1).T, n, False)
    return MatroidalMeasure(K, X, k, "boundaries", None, tuple(range(n)))


def dual_complement_kernel(m: MatroidalMeasure) -> MatroidalMeasure:
    """The measure of complements: kernel ``I - Q``."""
    return MatroidalMeasure(
        _complement(m.kernel),
        m.complex,
        m.degree,
        m.side,
        m.region,
        m.ground,
        complemented=not m.complemented,
    )


def inclusion_probability(m: MatroidalMeasure, D: Iterable[int]):
    """``P[D ⊆ T] = det Q[D, D]`` for k-cells ``D`` of the complex."""
    pos = m.positions(sorted(set(D)))
    if m.kernel.Q is not None:
        return principal_minor_det(m.kernel.Q, pos)
    if not pos:
        return 1.0
    return float(np.linalg.det(m.kernel.Qf[np.ix_(pos, pos)]))


def subset_probability(m: MatroidalMeasure, T: Iterable[int]):
    """``P[T]``: the principal minor when ``|T|`` equals the rank, else 0."""
    T = sorted(set(T))
    if len(T) != m.rank:
        m.positions(T)
        return Fraction(0) if m.kernel.Q is not None else 0.0
    return inclusion_probability(m, T)


def betti_gap(X: ChainComplex, k: int) -> int:
    """``b_k(X)``: rank of the upper kernel minus rank of the lower kernel."""
    _check_degree(X, k)
    lower = rational_rank(X.boundary(k)) if k > 0 else 0
    upper = X.f(k) - (rational_rank(X.boundary(k + 1)) if k < X.top_dim else 0)
    return upper - lower


def kernel_report(m: MatroidalMeasure) -> dict:
    """Rank and exact diagonal of a measure's kernel as rational strings."""
    out = {
        "measure": m.describe(),
        "degree": m.degree,
        "side": m.side,
        "region": "full" if m.region is None else "interior",
        "ground_size": m.ground_size,
        "rank": m.rank,
        "cells": [m.complex.label(m.degree, c) for c in m.ground],
    }
    if m.kernel.Q is not None:
        out["diagonal"] = [format_rational(v) for v in m.kernel.diagonal()]
    else:
        out["diagonal_float"] = [float(v) for v in np.diag(m.kernel.Qf)]
    return out
