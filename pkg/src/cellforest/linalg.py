"""Exact integer and rational matrix algebra.

Matrices are 2-D numpy arrays of ``dtype=object`` holding Python ``int``
(integer matrices) or :class:`fractions.Fraction` (rational matrices).  Object
arrays keep the shape of degenerate matrices (``0 x n``) and let numpy drive
the elementwise loops while Python supplies the big-number arithmetic.

Floating point appears only in the conversions that hand kernels to the
sampler.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm, prod
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "IntegerMatrix",
    "RationalMatrix",
    "TorsionReport",
    "ProjectionKernel",
    "int_matrix",
    "rat_matrix",
    "zeros",
    "identity",
    "rational_rank",
    "independent_rows",
    "independent_columns",
    "nullspace_basis",
    "row_space_projection",
    "column_space_projection",
    "smith_normal_form",
    "torsion_order",
    "integer_kernel_basis",
    "saturation_basis",
    "determinant",
    "principal_minor_det",
    "gram_det",
    "charpoly",
    "integer_pseudo_determinant",
    "format_rational",
    "parse_rational",
]

IntegerMatrix = np.ndarray
RationalMatrix = np.ndarray


def int_matrix(M, shape: tuple[int, int] | None = None) -> IntegerMatrix:
    """Coerce ``M`` to a 2-D object array of Python ints.

    ``shape`` is only consulted when ``M`` is empty and its column count
    cannot be inferred.
    """
    if isinstance(M, np.ndarray):
        if M.ndim != 2:
            if M.size == 0 and shape is not None:
                return np.empty(shape, dtype=object)
            raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
        out = np.empty(M.shape, dtype=object)
        for idx, v in np.ndenumerate(M):
            iv = int(v)
            if iv != v:
                raise ValueError(f"non-integer entry {v!r}")
            out[idx] = iv
        return out
    rows = [list(r) for r in M]
    if not rows:
        return np.empty(shape if shape is not None else (0, 0), dtype=object)
    return int_matrix(np.array(rows, dtype=object))


def rat_matrix(M, shape: tuple[int, int] | None = None) -> RationalMatrix:
    """Coerce ``M`` to a 2-D object array of Fractions (lowest terms)."""
    if isinstance(M, np.ndarray) and M.ndim == 2:
        out = np.empty(M.shape, dtype=object)
        for idx, v in np.ndenumerate(M):
            out[idx] = v if isinstance(v, Fraction) else Fraction(v)
        return out
    rows = [list(r) for r in M]
    if not rows:
        return np.empty(shape if shape is not None else (0, 0), dtype=object)
    return rat_matrix(np.array(rows, dtype=object))


def zeros(m: int, n: int, rational: bool = False) -> np.ndarray:
    out = np.empty((m, n), dtype=object)
    out.fill(Fraction(0) if rational else 0)
    return out


def identity(n: int, rational: bool = False) -> np.ndarray:
    out = zeros(n, n, rational)
    one = Fraction(1) if rational else 1
    for i in range(n):
        out[i, i] = one
    return out


def _is_rational(M: np.ndarray) -> bool:
    return any(isinstance(v, Fraction) for v in M.flat)


def _clear_row_denominators(M: np.ndarray) -> tuple[np.ndarray, list]:
    """Scale each row to integers; returns the integer matrix and the scales."""
    out = np.empty(M.shape, dtype=object)
    scales = []
    for i in range(M.shape[0]):
        row = M[i]
        den = 1
        for v in row:
            if isinstance(v, Fraction):
                den = lcm(den, v.denominator)
        scales.append(den)
        for j, v in enumerate(row):
            out[i, j] = int(v * den)
    return out, scales


def _as_exact_ints(M) -> np.ndarray:
    """Integer matrix with the same row space / rank as ``M``."""
    if not isinstance(M, np.ndarray) or M.dtype != object:
        M = np.array(M, dtype=object) if not isinstance(M, np.ndarray) else M.astype(object)
    if M.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if _is_rational(M):
        return _clear_row_denominators(M)[0]
    return int_matrix(M)


# ---------------------------------------------------------------------------
# elimination
# ---------------------------------------------------------------------------


def _bareiss_echelon(A: np.ndarray) -> tuple[np.ndarray, list[int], list[int]]:
    """Fraction-free row echelon form of an integer matrix.

    Pivots are chosen by row-major scan: the first column with a nonzero
    entry at or below the current row, and in it the first such row.
    Returns ``(E, pivot_cols, row_perm)`` where ``row_perm[i]`` is the
    original index of row ``i`` of ``E``.
    """
    A = A.copy()
    m, n = A.shape
    perm = list(range(m))
    pivots: list[int] = []
    r = 0
    prev = 1
    for c in range(n):
        if r == m:
            break
        col = A[r:, c]
        nz = [i for i, v in enumerate(col) if v != 0]
        if not nz:
            continue
        p = r + nz[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
            perm[r], perm[p] = perm[p], perm[r]
        piv = A[r, c]
        if r + 1 < m:
            below = A[r + 1 :, c:]
            f = below[:, 0].copy()
            A[r + 1 :, c:] = (piv * below - np.outer(f, A[r, c:])) // prev
        prev = piv
        pivots.append(c)
        r += 1
    return A, pivots, perm


def rational_rank(M) -> int:
    """Rank over the rationals by fraction-free elimination."""
    A = _as_exact_ints(M)
    if A.size == 0:
        return 0
    return len(_bareiss_echelon(A)[1])


def independent_columns(M) -> list[int]:
    """Indices of the lexicographically first maximal independent column set."""
    A = _as_exact_ints(M)
    if A.size == 0:
        return []
    return _bareiss_echelon(A)[1]


def independent_rows(M) -> list[int]:
    """Indices of the lexicographically first maximal independent row set."""
    A = _as_exact_ints(M)
    if A.size == 0:
        return []
    return _bareiss_echelon(A.T.copy())[1]


def _rref(M: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over the rationals."""
    A = rat_matrix(M)
    m, n = A.shape
    pivots = []
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = [i for i in range(r, m) if A[i, c] != 0]
        if not nz:
            continue
        p = nz[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        A[r] = A[r] / A[r, c]
        f = A[:, c].copy()
        f[r] = 0
        if any(v != 0 for v in f):
            A -= np.outer(f, A[r])
        pivots.append(c)
        r += 1
    return A[:r], pivots


def nullspace_basis(M, ncols: int | None = None) -> RationalMatrix:
    """Columns spanning ker M over the rationals (one per free variable)."""
    if isinstance(M, np.ndarray) and M.ndim == 2:
        n = M.shape[1]
    else:
        M = rat_matrix(M, shape=(0, ncols or 0))
        n = M.shape[1]
    if M.shape[0] == 0:
        return identity(n, rational=True)
    R, pivots = _rref(M)
    free = [c for c in range(n) if c not in set(pivots)]
    N = zeros(n, len(free), rational=True)
    for j, fc in enumerate(free):
        N[fc, j] = Fraction(1)
        for i, pc in enumerate(pivots):
            N[pc, j] = -R[i, fc]
    return N


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProjectionKernel:
    """Orthogonal projection matrix ``Q`` on ``ground_size`` coordinates."""

    ground_size: int
    Q: RationalMatrix | None
    rank: int
    Qf: np.ndarray | None = field(default=None, repr=False)
    # orthonormal columns spanning the range of Q, if already known
    factor: np.ndarray | None = field(default=None, repr=False)
    # the same for the range of I - Q
    cofactor: np.ndarray | None = field(default=None, repr=False)

    @property
    def exact(self) -> bool:
        return self.Q is not None

    def diagonal(self) -> list[Fraction]:
        if self.Q is None:
            raise ValueError("kernel was built in floating point only")
        return [self.Q[i, i] for i in range(self.ground_size)]

    def as_float(self) -> np.ndarray:
        if self.Qf is not None:
            return self.Qf
        return np.array([[float(v) for v in row] for row in self.Q], dtype=float).reshape(
            self.ground_size, self.ground_size
        )

    def float_factor(self) -> np.ndarray:
        """``V`` with orthonormal columns and ``V V^T = Q`` (double precision)."""
        if self.factor is not None:
            return self.factor
        if self.rank == 0:
            V = np.zeros((self.ground_size, 0))
        elif self.rank == self.ground_size:
            V = np.eye(self.ground_size)
        else:
            lam, U = np.linalg.eigh(self.as_float())
            V = U[:, np.argsort(lam)[::-1][: self.rank]]
        object.__setattr__(self, "factor", V)
        return V

    def check(self) -> None:
        """Assert symmetry, idempotence and trace = rank exactly."""
        Q = self.Q
        assert Q is not None
        assert (Q == Q.T).all(), "kernel not symmetric"
        assert (Q.dot(Q) == Q).all() if Q.size else True, "kernel not idempotent"
        assert sum(self.diagonal(), Fraction(0)) == self.rank, "trace != rank"


def _nonzeros_by_column(A: np.ndarray) -> list[list[tuple[int, int]]]:
    cols: list[list[tuple[int, int]]] = [[] for _ in range(A.shape[1])]
    for (i, j), v in np.ndenumerate(A):
        if v != 0:
            cols[j].append((i, v))
    return cols


def _gauss_jordan_solve(G: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, int]:
    """Fraction-free Gauss-Jordan: returns ``(Y, d)`` with ``G @ Y = d * B``.

    ``G`` must be square and nonsingular; ``d = det(G)`` up to sign.
    """
    m = G.shape[0]
    A = np.concatenate([G, B], axis=1)
    prev = 1
    for k in range(m):
        if A[k, k] == 0:
            nz = [i for i in range(k + 1, m) if A[i, k] != 0]
            if not nz:
                raise ZeroDivisionError("singular system")
            p = nz[0]
            A[[k, p]] = A[[p, k]]
        piv = A[k, k]
        sub = A[:, k:]
        f = sub[:, 0].copy()
        f[k] = 0
        rowk = sub[k].copy()
        new = (piv * sub - np.outer(f, rowk)) // prev
        new[k] = rowk
        A[:, k:] = new
        prev = piv
    d = prev
    return A[:, m:], d


def _sparse_gram(A: np.ndarray, cols: list[list[tuple[int, int]]]) -> np.ndarray:
    m = A.shape[0]
    G = zeros(m, m)
    for nz in cols:
        for i, a in nz:
            for j, b in nz:
                G[i, j] += a * b
    return G


def row_space_projection(M) -> ProjectionKernel:
    """Orthogonal projection onto the row space of ``M``.

    Uses ``A^T (A A^T)^{-1} A`` with ``A`` the lexicographically first
    independent row subset of ``M``.  Rank 0 gives the explicit zero matrix.
    """
    A_all = _as_exact_ints(M)
    n = A_all.shape[1]
    rows = independent_rows(A_all)
    r = len(rows)
    if r == 0:
        return ProjectionKernel(n, zeros(n, n, rational=True), 0)
    A = A_all[rows]
    # divide each row by its content; row space unchanged, numbers smaller
    for i in range(r):
        g = 0
        for v in A[i]:
            g = gcd(g, v)
        if g > 1:
            A[i] = A[i] // g
    cols = _nonzeros_by_column(A)
    density = sum(len(c) for c in cols) / max(1, r * n)
    if density > 0.25:
        G = A.dot(A.T)
    else:
        G = _sparse_gram(A, cols)
    if n <= r:
        Y, d = _gauss_jordan_solve(G, A)
        num = A.T.dot(Y)
    else:
        # d * G^{-1}, then A^T (.) A exploiting the column sparsity of A
        Y, d = _gauss_jordan_solve(G, identity(r))
        left = zeros(n, r)
        for e, nz in enumerate(cols):
            acc = None
            for i, a in nz:
                term = a * Y[i]
                acc = term if acc is None else acc + term
            if acc is not None:
                left[e] = acc
        num = zeros(n, n)
        for f, nz in enumerate(cols):
            acc = None
            for j, b in nz:
                term = left[:, j] * b
                acc = term if acc is None else acc + term
            if acc is not None:
                num[:, f] = acc
    Q = np.empty((n, n), dtype=object)
    for idx, v in np.ndenumerate(num):
        Q[idx] = Fraction(v, d)
    return ProjectionKernel(n, Q, r)


def column_space_projection(M) -> ProjectionKernel:
    """Orthogonal projection onto the column space of ``M``."""
    A = M if isinstance(M, np.ndarray) else np.array(M, dtype=object)
    return row_space_projection(A.T.copy())


# ---------------------------------------------------------------------------
# Smith normal form and lattices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TorsionReport:
    """Nonzero invariant factors ``d_1 | d_2 | ... | d_r`` of an integer matrix."""

    invariant_factors: tuple[int, ...]
    rank: int
    torsion_order: int

    @classmethod
    def from_factors(cls, factors: Iterable[int]) -> "TorsionReport":
        fs = tuple(int(f) for f in factors)
        return cls(fs, len(fs), prod(fs))


def _to_lists(M) -> tuple[list[list[int]], int, int]:
    A = _as_exact_ints(M) if not isinstance(M, list) else int_matrix(M)
    m, n = A.shape
    return [[int(v) for v in A[i]] for i in range(m)], m, n


def smith_normal_form(M, transforms: bool = False):
    """Smith normal form by gcd-driven row and column reduction.

    The smallest nonzero entry of the active block is used as pivot.
    Returns a :class:`TorsionReport`; with ``transforms=True`` returns
    ``(report, U, V)`` such that ``U @ M @ V`` is the diagonal SNF.
    """
    A, m, n = _to_lists(M)
    U = [[int(i == j) for j in range(m)] for i in range(m)] if transforms else None
    V = [[int(i == j) for j in range(n)] for i in range(n)] if transforms else None

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        if U is not None:
            U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in A:
            row[i], row[j] = row[j], row[i]
        if V is not None:
            for row in V:
                row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):  # row_dst += q * row_src
        rd, rs = A[dst], A[src]
        for k in range(n):
            if rs[k]:
                rd[k] += q * rs[k]
        if U is not None:
            ud, us = U[dst], U[src]
            for k in range(m):
                if us[k]:
                    ud[k] += q * us[k]

    def add_col(dst, src, q):  # col_dst += q * col_src
        for row in A:
            if row[src]:
                row[dst] += q * row[src]
        if V is not None:
            for row in V:
                if row[src]:
                    row[dst] += q * row[src]

    factors = []
    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            row = A[i]
            for j in range(t, n):
                v = row[j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        if i != t:
            swap_rows(i, t)
        if j != t:
            swap_cols(j, t)
        while True:
            p = A[t][t]
            clean = True
            for i in range(t + 1, m):
                if A[i][t]:
                    add_row(i, t, -(A[i][t] // p))
                    if A[i][t]:
                        clean = False
            for j in range(t + 1, n):
                if A[t][j]:
                    add_col(j, t, -(A[t][j] // p))
                    if A[t][j]:
                        clean = False
            if not clean:
                # move the smallest remainder in row/column t to the pivot
                cand = [(abs(A[i][t]), i, t) for i in range(t + 1, m) if A[i][t]]
                cand += [(abs(A[t][j]), t, j) for j in range(t + 1, n) if A[t][j]]
                _, i, j = min(cand)
                if i != t:
                    swap_rows(i, t)
                if j != t:
                    swap_cols(j, t)
                continue
            bad = None
            for i in range(t + 1, m):
                row = A[i]
                for j in range(t + 1, n):
                    if row[j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(t, bad, 1)
        if A[t][t] < 0:
            A[t] = [-v for v in A[t]]
            if U is not None:
                U[t] = [-v for v in U[t]]
        factors.append(A[t][t])
        t += 1

    report = TorsionReport.from_factors(factors)
    if not transforms:
        return report
    return report, int_matrix(U, shape=(m, m)), int_matrix(V, shape=(n, n))


def torsion_order(M) -> int:
    """Order of the torsion subgroup of the cokernel of ``M``."""
    return smith_normal_form(M).torsion_order


def integer_kernel_basis(M, ncols: int | None = None) -> IntegerMatrix:
    """Columns forming a basis of the lattice ``{x in Z^n : M x = 0}``."""
    A = _as_exact_ints(M) if isinstance(M, np.ndarray) else int_matrix(M, shape=(0, ncols or 0))
    m, n = A.shape
    if m == 0:
        return identity(n)
    report, _, V = smith_normal_form(A, transforms=True)
    return V[:, report.rank :].copy()


def saturation_basis(B, nrows: int | None = None) -> IntegerMatrix:
    """Basis (as columns) of ``Z^n ∩ span_Q(columns of B)``."""
    B = _as_exact_ints(B) if isinstance(B, np.ndarray) else int_matrix(B)
    n = B.shape[0]
    if B.shape[1] == 0 or rational_rank(B) == 0:
        return zeros(n, 0)
    left = integer_kernel_basis(B.T.copy())  # n x (n - r)
    if left.shape[1] == 0:
        return identity(n)
    return integer_kernel_basis(left.T.copy())


# ---------------------------------------------------------------------------
# determinants
# ---------------------------------------------------------------------------


def _int_det(A: np.ndarray) -> int:
    n = A.shape[0]
    if n == 0:
        return 1
    E, pivots, perm = _bareiss_echelon(A)
    if len(pivots) < n:
        return 0
    # sign of the row permutation
    sign = 1
    seen = [False] * n
    for i in range(n):
        if not seen[i]:
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            if length % 2 == 0:
                sign = -sign
    return sign * E[n - 1, n - 1]


def determinant(M):
    """Exact determinant of a square integer or rational matrix."""
    A = M if isinstance(M, np.ndarray) else np.array(M, dtype=object)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        if A.size == 0:
            return 1
        raise ValueError("determinant of a non-square matrix")
    A = A.astype(object)
    if _is_rational(A):
        Ai, scales = _clear_row_denominators(A)
        return Fraction(_int_det(Ai), prod(scales))
    return _int_det(int_matrix(A))


def principal_minor_det(Q, D: Sequence[int]) -> Fraction:
    """``det Q[D, D]``; the empty minor is 1."""
    D = list(D)
    if not D:
        return Fraction(1)
    n = Q.shape[0]
    if any(i < 0 or i >= n for i in D):
        raise IndexError("index set out of range")
    return Fraction(determinant(Q[np.ix_(D, D)]))


def gram_det(M) -> Fraction:
    """``det(M M^T)`` exactly."""
    A = M if isinstance(M, np.ndarray) else np.array(M, dtype=object)
    A = A.astype(object)
    if A.shape[0] == 0:
        return Fraction(1)
    return Fraction(determinant(A.dot(A.T)))


def charpoly(M) -> list:
    """Coefficients of ``det(x I - M)``, highest degree first (Berkowitz).

    Division-free, so integer input gives integer coefficients.
    """
    A = M if isinstance(M, np.ndarray) else np.array(M, dtype=object)
    n = A.shape[0]
    rows = [list(A[i]) for i in range(n)]
    p = [1]
    for r in range(n):
        a = rows[r][r]
        R = rows[r][:r]
        v = [rows[i][r] for i in range(r)]
        vec = [1, -a]
        for _ in range(r):
            vec.append(-sum(x * y for x, y in zip(R, v)))
            v = [sum(rows[i][j] * v[j] for j in range(r)) for i in range(r)]
        p = [
            sum(vec[i - j] * p[j] for j in range(0, min(i, r) + 1))
            for i in range(r + 2)
        ]
    return p


def integer_pseudo_determinant(M) -> int:
    """Product of the nonzero eigenvalues of a symmetric integer matrix.

    Read off the lowest-degree nonzero coefficient of the characteristic
    polynomial; the empty product (zero matrix) is 1.
    """
    A = int_matrix(M) if not (isinstance(M, np.ndarray) and M.size == 0) else M
    n = A.shape[0]
    if A.shape != (n, n) or not (A == A.T).all():
        raise ValueError("integer_pseudo_determinant needs a symmetric matrix")
    coeffs = charpoly(A)
    j = max(i for i, c in enumerate(coeffs) if c != 0)
    return (-1) ** j * coeffs[j]


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------


def format_rational(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(s: str) -> Fraction:
    return Fraction(s.strip())
