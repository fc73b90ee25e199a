"""Exhaustive enumeration of k-bases and k-cobases with torsion weights.

This is the ground-truth side of the package: every identity between
determinants, torsion orders and kernel minors is checked here by brute
force over all bases of a small complex.

Conventions used throughout:

* a k-base is a column basis of ∂_k; its weight is ``t_{k-1}(T)^2`` where
  ``t_{k-1}(T)`` is the torsion order of ``coker ∂_k[:, T]``;
* a k-cobase is a column basis of δ_k = ∂_{k+1}^T, i.e. a set of rows of
  ∂_{k+1} forming a row basis.  Complements of cobases carry the upper
  measure, weighted by ``|H_k(X, X_T; Z)|^2``.
"""

from __future__ import annotations

import csv
import io
import json
import os
from collections import Counter, deque
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import comb, gcd
from typing import Iterator, Literal

import numpy as np

from .complex_core import ChainComplex
from .linalg import (
    TorsionReport,
    _as_exact_ints,
    determinant,
    format_rational,
    gram_det,
    integer_kernel_basis,
    integer_pseudo_determinant,
    nullspace_basis,
    rational_rank,
    saturation_basis,
    smith_normal_form,
    torsion_order,
    zeros,
)
from .measures import matroidal_kernel, subset_probability

__all__ = [
    "BudgetExceeded",
    "PreconditionError",
    "InfiniteQuotientError",
    "BaseRecord",
    "EnumerationSummary",
    "VerificationReport",
    "default_budget",
    "matroid_matrix",
    "enumerate_bases",
    "torsion_weight",
    "upper_torsion_alternative",
    "weighted_sum_h",
    "lattice_quotient_order",
    "quotient_order_by_cosets",
    "hermite_normal_form",
    "verify_key_lemma",
    "verify_count_corollary",
    "oracle_measure_check",
    "check_exchange_property",
    "verify_dual_matroid",
    "verify_kalai",
    "verify_torus_duality",
]

Side = Literal["base", "cobase"]
DEFAULT_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    pass


class PreconditionError(ValueError):
    pass


class InfiniteQuotientError(ValueError):
    def __init__(self, deficit: int):
        super().__init__(f"quotient is infinite: generators miss {deficit} rank(s) of Z_k")
        self.deficit = deficit


def default_budget() -> int:
    raw = os.environ.get("CELLFOREST_BUDGET")
    return int(raw) if raw else DEFAULT_BUDGET


@dataclass(frozen=True)
class BaseRecord:
    cells: frozenset
    torsion: int

    @property
    def weight(self) -> int:
        return self.torsion**2

    def sorted(self) -> list[int]:
        return sorted(self.cells)


@dataclass
class EnumerationSummary:
    k: int
    side: str
    base_count: int
    h: int
    histogram: dict[int, int]

    def to_json(self) -> str:
        d = asdict(self)
        d["h"] = str(self.h)
        d["histogram"] = {str(t): c for t, c in sorted(self.histogram.items())}
        return json.dumps(d, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["torsion", "count"])
        for t, c in sorted(self.histogram.items()):
            w.writerow([t, c])
        return buf.getvalue()


@dataclass
class VerificationReport:
    name: str
    ok: bool
    checked: int
    details: dict = field(default_factory=dict)
    instances: list[dict] = field(default_factory=list)
    counterexample: dict | None = None

    def to_json(self) -> str:
        return json.dumps(_jsonable(asdict(self)), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.instances:
            keys = list(self.instances[0])
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(keys)
            for row in self.instances:
                w.writerow([_jsonable(row[k]) for k in keys])
        return buf.getvalue()


def _jsonable(x):
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = sorted(x) if isinstance(x, (set, frozenset)) else x
        return [_jsonable(v) for v in items]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, int) and abs(x) > 2**53:
        return str(x)
    return x


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------


def matroid_matrix(X: ChainComplex, k: int, side: Side) -> np.ndarray:
    """Integer matrix whose column matroid has the k-(co)bases as bases."""
    if not 0 <= k <= X.top_dim:
        raise ValueError(f"degree k={k} out of range 0..{X.top_dim}")
    n = X.f(k)
    if side == "base":
        return X.boundary(k) if k > 0 else zeros(0, n)
    if side == "cobase":
        return X.boundary(k + 1).T.copy() if k < X.top_dim else zeros(0, n)
    raise ValueError(f"side must be 'base' or 'cobase', not {side!r}")


class _Echelon:
    """Incremental integer echelon basis used to test column independence."""

    def __init__(self):
        self.rows: list[tuple[int, list[int]]] = []

    def reduce(self, v: list[int]) -> list[int]:
        for p, b in self.rows:
            if v[p]:
                a, c = b[p], v[p]
                g = gcd(a, c)
                a, c = a // g, c // g
                v = [a * x - c * y for x, y in zip(v, b)]
        return v

    def push(self, v: list[int]) -> bool:
        v = self.reduce(v)
        p = next((i for i, x in enumerate(v) if x), None)
        if p is None:
            return False
        g = 0
        for x in v:
            g = gcd(g, x)
        self.rows.append((p, [x // g for x in v]))
        return True

    def pop(self) -> None:
        self.rows.pop()


def _bases_of(M: np.ndarray, budget: int) -> Iterator[tuple[int, ...]]:
    """Column bases of ``M`` in lexicographic order, by pruned depth-first search."""
    M = _as_exact_ints(M) if M.size else M
    m, n = M.shape
    r = rational_rank(M) if m and n else 0
    if comb(n, r) > budget:
        raise BudgetExceeded(f"C({n}, {r}) = {comb(n, r)} subsets exceeds budget {budget}")
    cols = [[int(M[i, j]) for i in range(m)] for j in range(n)]
    ech = _Echelon()
    chosen: list[int] = []

    def dfs(start: int):
        if len(chosen) == r:
            yield tuple(chosen)
            return
        need = r - len(chosen)
        for j in range(start, n - need + 1):
            if ech.push(cols[j]):
                chosen.append(j)
                yield from dfs(j + 1)
                chosen.pop()
                ech.pop()

    yield from dfs(0)


def _lower_torsion(X: ChainComplex, k: int, T) -> int:
    if k == 0:
        return 1
    return torsion_order(X.boundary(k)[:, sorted(T)])


def _upper_torsion(X: ChainComplex, k: int, S) -> int:
    """``|H_k(X, X_T)|`` for ``T`` the complement of the cobase ``S``."""
    if k == X.top_dim or not S:
        return 1
    return torsion_order(X.boundary(k + 1)[sorted(S), :])


def enumerate_bases(
    X: ChainComplex,
    k: int,
    side: Side = "base",
    budget: int | None = None,
) -> Iterator[BaseRecord]:
    """Yield every k-base (or k-cobase) with its torsion.

    For cobases the torsion attached is that of the complement,
    ``|H_k(X, X_{∁S}; Z)|``, which is what weights the upper measure.
    """
    M = matroid_matrix(X, k, side)
    budget = default_budget() if budget is None else budget
    for B in _bases_of(M, budget):
        t = _lower_torsion(X, k, B) if side == "base" else _upper_torsion(X, k, B)
        yield BaseRecord(frozenset(B), t)


def _is_base(X: ChainComplex, k: int, T, side: Side) -> bool:
    M = matroid_matrix(X, k, side)
    T = sorted(T)
    r = rational_rank(M) if M.size else 0
    if len(T) != r:
        return False
    return r == 0 or rational_rank(M[:, T]) == r


def torsion_weight(X: ChainComplex, k: int, T, side: Literal["lower", "upper"] = "lower") -> TorsionReport:
    """Torsion report weighting ``T`` in the lower or upper measure.

    lower: ``T`` must be a k-base; the report is the SNF of ``∂_k[:, T]``.
    upper: ``T`` must be the complement of a k-cobase ``S``; the report is
    the SNF of ``∂_{k+1}[S, :]``, presenting ``H_k(X, X_T; Z)``.
    """
    T = set(T)
    if any(not 0 <= c < X.f(k) for c in T):
        raise IndexError("cell index out of range")
    if side == "lower":
        if not _is_base(X, k, T, "base"):
            raise PreconditionError(f"cells are not a {k}-base")
        if k == 0:
            return TorsionReport((), 0, 1)
        return smith_normal_form(X.boundary(k)[:, sorted(T)])
    if side == "upper":
        S = set(range(X.f(k))) - T
        if not _is_base(X, k, S, "cobase"):
            raise PreconditionError(f"cells are not the complement of a {k}-cobase")
        if k == X.top_dim or not S:
            return TorsionReport((), 0, 1)
        return smith_normal_form(X.boundary(k + 1)[sorted(S), :])
    raise ValueError(f"side must be 'lower' or 'upper', not {side!r}")


def upper_torsion_alternative(X: ChainComplex, k: int, T) -> int:
    """``|H_k(X, X_T)|`` as the torsion of ``C_k / (C_k(X_T) + B_k)``.

    Second presentation: the columns of ``∂_{k+1}`` together with the unit
    vectors of ``T``.  Used to cross-check :func:`torsion_weight`.
    """
    n = X.f(k)
    T = sorted(T)
    E = zeros(n, len(T))
    for j, c in enumerate(T):
        E[c, j] = 1
    if k == X.top_dim:
        G = E
    else:
        G = np.concatenate([X.boundary(k + 1), E], axis=1)
    return torsion_order(G) if G.shape[1] else 1


def weighted_sum_h(X: ChainComplex, k: int, budget: int | None = None) -> EnumerationSummary:
    """``h_{k-1}(X) = Σ t_{k-1}(T)^2`` over k-bases, with a torsion histogram."""
    hist: Counter = Counter()
    for rec in enumerate_bases(X, k, "base", budget):
        hist[rec.torsion] += 1
    h = sum(t * t * c for t, c in hist.items())
    return EnumerationSummary(k, "base", sum(hist.values()), h, dict(hist))


def verify_kalai(n: int, k: int, budget: int | None = None) -> VerificationReport:
    """``h_{k-1}`` of the k-skeleton of the (n-1)-simplex against ``n^C(n-2, k)``."""
    from .complex_core import build_simplex_skeleton

    X = build_simplex_skeleton(n, k)
    s = weighted_sum_h(X, k, budget)
    expected = n ** comb(n - 2, k)
    return VerificationReport(
        "kalai",
        s.h == expected,
        s.base_count,
        {"n": n, "k": k, "h": s.h, "expected": expected, "histogram": s.histogram},
    )


# ---------------------------------------------------------------------------
# the lattice quotient Q_k(S)
# ---------------------------------------------------------------------------


def _quotient_generators(X: ChainComplex, k: int, S) -> tuple[np.ndarray, int]:
    """Generators of ``(Z_k ∩ B_k(Q)) + Z_k(X_{∁S})`` as columns, and rank Z_k."""
    n = X.f(k)
    S = set(S)
    if any(not 0 <= c < n for c in S):
        raise IndexError("cell index out of range")
    comp = [c for c in range(n) if c not in S]
    rank_Z = n - (rational_rank(X.boundary(k)) if k > 0 else 0)
    sat = saturation_basis(X.boundary(k + 1)) if k < X.top_dim else zeros(n, 0)
    if comp:
        sub = integer_kernel_basis(X.boundary(k)[:, comp]) if k > 0 else np.identity(len(comp), dtype=object)
        emb = zeros(n, sub.shape[1])
        for i, c in enumerate(comp):
            emb[c, :] = sub[i, :]
    else:
        emb = zeros(n, 0)
    return np.concatenate([sat, emb], axis=1), rank_Z


def lattice_quotient_order(X: ChainComplex, k: int, S) -> int:
    """``t'_k(S)``: the order of ``Z_k / ((Z_k ∩ B_k(Q)) + Z_k(X_{∁S}))``.

    ``Z_k`` is saturated in ``Z^{f_k}``, so when the generators have full
    rank in ``Z_k`` the quotient is the torsion of their cokernel.
    """
    G, rank_Z = _quotient_generators(X, k, S)
    r = rational_rank(G) if G.shape[1] else 0
    if r < rank_Z:
        raise InfiniteQuotientError(rank_Z - r)
    return torsion_order(G) if G.shape[1] else 1


def hermite_normal_form(rows: list[list[int]]) -> list[list[int]]:
    """Row-style HNF: nonzero rows, upper echelon, positive pivots, reduced above."""
    A = [list(r) for r in rows if any(r)]
    if not A:
        return []
    n = len(A[0])
    H: list[list[int]] = []
    r = 0
    for c in range(n):
        # Euclid on column c among rows r..end
        while True:
            nz = [i for i in range(r, len(A)) if A[i][c]]
            if not nz:
                break
            p = min(nz, key=lambda i: abs(A[i][c]))
            A[r], A[p] = A[p], A[r]
            done = True
            for i in range(r + 1, len(A)):
                if A[i][c]:
                    q = A[i][c] // A[r][c]
                    A[i] = [x - q * y for x, y in zip(A[i], A[r])]
                    if A[i][c]:
                        done = False
            if done:
                break
        if r < len(A) and A[r][c]:
            if A[r][c] < 0:
                A[r] = [-x for x in A[r]]
            for i in range(r):
                q = A[i][c] // A[r][c]
                if q:
                    A[i] = [x - q * y for x, y in zip(A[i], A[r])]
            r += 1
        if r == len(A):
            break
    H = [row for row in A[:r]]
    return H


def quotient_order_by_cosets(X: ChainComplex, k: int, S, cap: int = 64) -> int | None:
    """Order of ``Q_k(S)`` by listing coset representatives directly.

    Works in coordinates of an integer basis of ``Z_k``; cosets are reduced
    against the HNF of the generator lattice and explored breadth-first by
    adding unit vectors.  Returns ``None`` if more than ``cap`` cosets exist.
    """
    n = X.f(k)
    K = integer_kernel_basis(X.boundary(k)) if k > 0 else np.identity(n, dtype=object)
    z = K.shape[1]
    if z == 0:
        return 1
    G, _ = _quotient_generators(X, k, S)
    # coordinates of each generator in the basis K (exact solve)
    coords = []
    Kq = np.array([[Fraction(int(v)) for v in row] for row in K], dtype=object)
    from .linalg import _rref

    for j in range(G.shape[1]):
        aug = np.concatenate([Kq, np.array([[Fraction(int(G[i, j]))] for i in range(n)], dtype=object)], axis=1)
        R, piv = _rref(aug)
        if z in piv:
            raise AssertionError("generator outside Z_k")
        c = [R[i, z] for i in range(z)]
        if any(x.denominator != 1 for x in c):
            raise AssertionError("non-integral coordinates in a lattice basis")
        coords.append([int(x) for x in c])
    H = hermite_normal_form(coords)
    if len(H) < z:
        raise InfiniteQuotientError(z - len(H))
    pivots = [next(i for i, x in enumerate(row) if x) for row in H]

    def canon(v):
        v = list(v)
        for row, p in zip(H, pivots):
            q = v[p] // row[p]
            if q:
                v = [a - q * b for a, b in zip(v, row)]
        return tuple(v)

    start = canon([0] * z)
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for i in range(z):
            for s in (1, -1):
                w = list(v)
                w[i] += s
                w = canon(w)
                if w not in seen:
                    seen.add(w)
                    if len(seen) > cap:
                        return None
                    queue.append(w)
    return len(seen)


# ---------------------------------------------------------------------------
# the determinant identities for top-dimensional bases
# ---------------------------------------------------------------------------


def _top_dim_setup(X: ChainComplex, budget: int | None):
    d = X.top_dim
    if d < 2:
        raise PreconditionError("the identities need a complex of dimension d > 1")
    bases = list(enumerate_bases(X, d, "base", budget))
    cobases = [rec.cells for rec in enumerate_bases(X, d - 1, "cobase", budget)]
    t_X = torsion_order(X.boundary(d - 1))
    return d, bases, cobases, t_X


def _cobase_factors(X: ChainComplex, d: int, S) -> tuple[int, int]:
    """``(t_{d-2}(∁S), t'_{d-1}(S))``."""
    comp = [c for c in range(X.f(d - 1)) if c not in S]
    t_comp = torsion_order(X.boundary(d - 1)[:, comp]) if comp else 1
    return t_comp, lattice_quotient_order(X, d - 1, S)


def verify_key_lemma(X: ChainComplex, budget: int | None = None) -> VerificationReport:
    """``|det ∂_{S,T}| t_{d-2}(X) = t_{d-1}(T) t_{d-2}(∁S) t'_{d-1}(S)`` for all pairs."""
    d, bases, cobases, t_X = _top_dim_setup(X, budget)
    D = X.boundary(d)
    factors = {S: _cobase_factors(X, d, S) for S in cobases}
    checked = 0
    instances = []
    for T in bases:
        cols = T.sorted()
        for S in cobases:
            det = determinant(D[np.ix_(sorted(S), cols)])
            t_comp, t_prime = factors[S]
            lhs = abs(det) * t_X
            rhs = T.torsion * t_comp * t_prime
            checked += 1
            row = {
                "S": sorted(S),
                "T": cols,
                "det": int(det),
                "t_T": T.torsion,
                "t_compS": t_comp,
                "t_prime_S": t_prime,
                "t_X": t_X,
            }
            if det == 0:
                return VerificationReport("key", False, checked, {"d": d}, instances, dict(row, reason="singular"))
            if lhs != rhs:
                return VerificationReport("key", False, checked, {"d": d}, instances, row)
            if len(instances) < 200:
                instances.append(row)
    return VerificationReport(
        "key",
        True,
        checked,
        {"d": d, "bases": len(bases), "cobases": len(cobases), "t_X": t_X},
        instances,
    )


def verify_count_corollary(X: ChainComplex, budget: int | None = None) -> VerificationReport:
    """Both counting identities for top-dimensional bases.

    (a) ``h_{d-1} t_{d-2}(∁S)^2 t'_{d-1}(S)^2 = t_{d-2}(X)^2 det(∂_{S,·} ∂_{S,·}^T)``
        for every (d-1)-cobase ``S``;
    (b) ``pdet(∂_d ∂_d^T) t_{d-2}(X)^2 = h_{d-1} h'_{d-2}`` with
        ``h'_{d-2} = Σ_S t_{d-2}(∁S)^2 t'_{d-1}(S)^2`` over (d-1)-cobases.
    """
    d, bases, cobases, t_X = _top_dim_setup(X, budget)
    D = X.boundary(d)
    h = sum(T.weight for T in bases)
    h_prime = 0
    instances = []
    for S in cobases:
        t_comp, t_prime = _cobase_factors(X, d, S)
        g = gram_det(D[sorted(S), :])
        lhs = h * t_comp**2 * t_prime**2
        rhs = t_X**2 * g
        row = {"S": sorted(S), "t_compS": t_comp, "t_prime_S": t_prime, "gram": g, "h": h}
        if lhs != rhs:
            return VerificationReport("count", False, len(instances), {"d": d, "h": h}, instances, dict(row, part="a"))
        instances.append(row)
        h_prime += t_comp**2 * t_prime**2
    pdet = integer_pseudo_determinant(D.dot(D.T))
    ok_b = pdet * t_X**2 == h * h_prime
    details = {"d": d, "h": h, "h_prime": h_prime, "pdet": pdet, "t_X": t_X, "bases": len(bases), "cobases": len(cobases)}
    return VerificationReport(
        "count",
        ok_b,
        len(instances) + 1,
        details,
        instances,
        None if ok_b else {"part": "b", "pdet": pdet, "h": h, "h_prime": h_prime},
    )


# ---------------------------------------------------------------------------
# three-route probability oracle
# ---------------------------------------------------------------------------


def _rowform_matrix(X: ChainComplex, k: int, side: str) -> np.ndarray:
    """Rows forming a basis of the space defining the measure."""
    n = X.f(k)
    if side == "lower":
        if k == 0:
            return zeros(0, n)
        M = X.boundary(k)
        from .linalg import independent_rows

        return M[independent_rows(M), :]
    # upper: a basis of Z^k = ker ∂_{k+1}^T, as rows
    if k == X.top_dim:
        return np.identity(n, dtype=object)
    N = nullspace_basis(X.boundary(k + 1).T.copy())
    return N.T.copy()


def oracle_measure_check(
    X: ChainComplex,
    k: int,
    side: Literal["lower", "upper"] = "lower",
    budget: int | None = None,
) -> VerificationReport:
    """Every base probability three ways: row form, kernel minor, torsion weight.

    Row form: ``det(M[:, T])^2 / det(M M^T)`` for a row basis ``M`` of the
    space.  Kernel minor: ``det Q[T, T]``.  Torsion: ``t(T)^2 / h``.
    """
    m = matroidal_kernel(X, k, side)
    n = X.f(k)
    if side == "lower":
        recs = [(r.cells, r.torsion) for r in enumerate_bases(X, k, "base", budget)]
    else:
        recs = [(frozenset(range(n)) - r.cells, r.torsion) for r in enumerate_bases(X, k, "cobase", budget)]
    M = _rowform_matrix(X, k, side)
    denom = gram_det(M)
    h = sum(t * t for _, t in recs)
    total = Fraction(0)
    instances = []
    for T, t in recs:
        cols = sorted(T)
        p_row = Fraction(determinant(M[:, cols]) ** 2) / denom if cols else Fraction(1)
        p_q = subset_probability(m, cols)
        p_t = Fraction(t * t, h)
        row = {"T": cols, "torsion": t, "rowform": p_row, "qform": p_q, "torsion_route": p_t}
        if not p_row == p_q == p_t:
            return VerificationReport("oracle", False, len(instances), {"k": k, "side": side}, instances, row)
        total += p_q
        instances.append(row)
    ok = total == 1 and len(recs) > 0
    return VerificationReport(
        "oracle",
        ok,
        len(instances),
        {"k": k, "side": side, "h": h, "total": total, "rank": m.rank},
        instances,
        None if ok else {"total": total},
    )


# ---------------------------------------------------------------------------
# matroid sanity checks
# ---------------------------------------------------------------------------


def check_exchange_property(bases: list[frozenset], M: np.ndarray) -> bool:
    """Base exchange: for B1, B2 and x in B1 \\ B2 some y in B2 \\ B1 makes B1 - x + y a base."""
    fam = set(bases)
    for B1 in bases:
        for B2 in bases:
            for x in B1 - B2:
                if not any((B1 - {x}) | {y} in fam for y in B2 - B1):
                    return False
    return True


def verify_dual_matroid(X: ChainComplex, k: int, budget: int | None = None) -> bool:
    """Cobases are exactly the complements of bases of a representation of the dual matroid."""
    n = X.f(k)
    M = matroid_matrix(X, k, "cobase")
    cob = {r.cells for r in enumerate_bases(X, k, "cobase", budget)}
    N = nullspace_basis(M) if M.shape[0] else np.identity(n, dtype=object)
    dual = N.T.copy()
    dual_bases = {frozenset(B) for B in _bases_of(dual, budget or default_budget())}
    full = frozenset(range(n))
    return cob == {full - B for B in dual_bases}


# ---------------------------------------------------------------------------
# planar duality on the square torus
# ---------------------------------------------------------------------------


def verify_torus_duality(n: int, coupling: bool = True, budget: int | None = None) -> VerificationReport:
    """Upper k=1 kernel of the dual torus against the complement of the lower kernel.

    Checks ``Q^1(X*)[φe, φf] = σ_e σ_f (I - Q_1(X))[e, f]`` entrywise, and
    with ``coupling`` that every spanning tree ``T`` and the dual set
    ``φ_1(Ξ_1 X \\ T)`` receive the same probability.
    """
    from .complex_core import build_cubical_torus, check_dual_identity, dual_torus_map

    X = build_cubical_torus(2, n)
    phi = dual_torus_map(X)
    maps_ok = check_dual_identity(phi, 1) and check_dual_identity(phi, 2)
    low = matroidal_kernel(X, 1, "lower")
    up = matroidal_kernel(phi.dual, 1, "upper")
    Q, Qd = low.kernel.Q, up.kernel.Q
    idx, sg = phi.index[1], phi.sign[1]
    m = X.f(1)
    bad = None
    for e in range(m):
        for f in range(m):
            comp = (1 if e == f else 0) - Q[e, f]
            if Qd[idx[e], idx[f]] != sg[e] * sg[f] * comp:
                bad = {"e": e, "f": f}
                break
        if bad:
            break
    checked = m * m
    details = {"n": n, "edges": m, "maps_ok": maps_ok, "rank_lower": low.rank, "rank_dual_upper": up.rank}
    if bad is None and coupling:
        full = frozenset(range(m))
        trees = 0
        for rec in enumerate_bases(X, 1, "base", budget):
            dual_set = [idx[e] for e in full - rec.cells]
            p, q = subset_probability(low, rec.cells), subset_probability(up, dual_set)
            trees += 1
            if p != q:
                bad = {"T": rec.sorted(), "p_lower": p, "p_dual_upper": q}
                break
        checked += trees
        details["trees"] = trees
    ok = maps_ok and bad is None
    return VerificationReport("duality", ok, checked, details, [], bad)
