"""Sampling projection-kernel determinantal measures.

Draws are produced by sequential conditioning: pick a cell with probability
proportional to the residual diagonal of the kernel, then condition on it
with the Schur complement ``Q <- Q - Q[:, e] Q[e, :] / Q[e, e]``.  After
``rank`` steps the residual kernel vanishes and the draw is complete.

The residual kernel is carried as ``V V^T`` with ``V`` having orthonormal
columns.  Conditioning on ``e`` is then a Householder reflection sending
``V[e]`` to the last coordinate followed by dropping that column, which is
the same Schur complement at ``O(N r)`` cost per step instead of ``O(N^2)``.

Every draw is keyed by ``(seed, stream)`` through a Philox counter-based
generator, so draw ``i`` of a run never depends on how many draws came
before it.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

import numpy as np

from .complex_core import ChainComplex, RegionSelection, interior_and_boundary
from .linalg import rational_rank
from .measures import MatroidalMeasure, subset_probability

__all__ = [
    "SampleDraw",
    "EmpiricalReport",
    "CouplingResult",
    "PIVOT_TOL",
    "make_rng",
    "sample_once",
    "sample_many",
    "empirical_frequencies",
    "chi_square_test",
    "exact_distribution",
    "domination_witness",
    "forest_statistics",
    "ForestStats",
    "max_flow",
]

PIVOT_TOL = 1e-9
MAX_COUPLING_GROUND = 16


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by the 64-bit seed and the stream index."""
    key = (int(seed) & (2**64 - 1)) | ((int(stream) & (2**64 - 1)) << 64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SampleDraw:
    cells: frozenset
    seed: int
    stream: int
    measure_id: str
    fallbacks: int = 0

    def sorted(self) -> list[int]:
        return sorted(self.cells)


def _exact_conditional(Q: np.ndarray, chosen: list[int], active: np.ndarray) -> np.ndarray:
    """Exact ``Q - Q[:, S] Q[S, S]^{-1} Q[S, :]`` on ``active``, as floats."""
    S = list(chosen)
    if not S:
        sub = Q[np.ix_(active, active)]
    else:
        from .linalg import _rref

        QSS = Q[np.ix_(S, S)]
        QSA = Q[np.ix_(S, active)]
        # solve QSS Y = QSA exactly
        aug = np.concatenate([QSS, QSA], axis=1)
        R, _ = _rref(aug)
        Y = R[:, len(S) :]
        sub = Q[np.ix_(active, active)] - Q[np.ix_(active, S)].dot(Y)
    return np.array([[float(v) for v in row] for row in sub], dtype=float).reshape(len(active), len(active))


def _float_conditional(Q: np.ndarray, chosen: list[int], active: np.ndarray) -> np.ndarray:
    if not chosen:
        return Q[np.ix_(active, active)].copy()
    S = list(chosen)
    QSS = Q[np.ix_(S, S)]
    QSA = Q[np.ix_(S, active)]
    Y = np.linalg.lstsq(QSS, QSA, rcond=None)[0]
    return Q[np.ix_(active, active)] - Q[np.ix_(active, S)] @ Y


def _top_factor(Q: np.ndarray, r: int) -> np.ndarray:
    if r == 0:
        return np.zeros((Q.shape[0], 0))
    lam, U = np.linalg.eigh(Q)
    return U[:, np.argsort(lam)[::-1][:r]]


def _draw_positions(V0: np.ndarray, rng: np.random.Generator, residual) -> tuple[list[int], int]:
    """Row positions of one draw from the kernel ``V0 V0^T``.

    ``residual(chosen, active)`` recomputes the conditional kernel on the
    rows ``active`` from scratch; it is only called when a pivot falls below
    :data:`PIVOT_TOL`.  Returns the positions and the number of such refreshes.
    """
    n, rank = V0.shape
    if rank == 0:
        return [], 0
    if rank == n:
        return list(range(n)), 0
    active = np.arange(n)
    V = np.ascontiguousarray(V0)
    U = np.zeros((rank, V.shape[1]))  # chosen directions, orthonormal rows
    t = 0
    diag = np.einsum("ij,ij->i", V, V)
    chosen: list[int] = []
    fallbacks = 0
    while len(chosen) < rank:
        np.clip(diag, 0.0, None, out=diag)
        cdf = np.cumsum(diag)
        u = rng.random() * cdf[-1]
        j = min(int(np.searchsorted(cdf, u, side="right")), len(active) - 1)
        while diag[j] == 0.0 and j > 0:
            j -= 1
        v = V[j].copy()
        for _ in range(2):
            v -= U[:t].T @ (U[:t] @ v)
        p = v @ v
        if not p > PIVOT_TOL:
            # accumulated rounding: rebuild the conditional kernel from scratch
            fallbacks += 1
            if fallbacks > 4 * rank:
                raise FloatingPointError("sampler could not find a usable pivot")
            V = np.ascontiguousarray(_top_factor(residual(chosen, active), rank - len(chosen)))
            U = np.zeros((V.shape[1], V.shape[1]))
            t = 0
            diag = np.einsum("ij,ij->i", V, V)
            continue
        chosen.append(int(active[j]))
        U[t] = v / math.sqrt(p)
        c = V @ U[t]
        t += 1
        diag -= c * c
        diag[j] = 0.0
        # drop rows that can no longer be picked once they are a minority
        if len(chosen) < rank:
            alive = diag > PIVOT_TOL * 1e-3
            if alive.sum() < 0.6 * len(active):
                keep = np.nonzero(alive)[0]
                active = active[keep]
                V = np.ascontiguousarray(V[keep])
                diag = diag[keep]
    return chosen, fallbacks


def _plan(m: MatroidalMeasure):
    """``(V, complemented, residual)`` for drawing from ``m``.

    A float kernel that only knows the factor of ``I - Q`` is sampled
    through its complement measure.
    """
    K = m.kernel
    if K.factor is None and K.cofactor is not None and not K.exact:
        cache = {}

        def residual_c(chosen, active):
            if "Q" not in cache:
                cache["Q"] = np.eye(K.ground_size) - K.Qf
            return _float_conditional(cache["Q"], chosen, active)

        return K.cofactor, True, residual_c

    def residual(chosen, active):
        if K.Q is not None:
            return _exact_conditional(K.Q, chosen, active)
        return _float_conditional(K.Qf, chosen, active)

    return K.float_factor(), False, residual


def _draw(m: MatroidalMeasure, plan, seed: int, stream: int) -> SampleDraw:
    V, comp, residual = plan
    pos, fb = _draw_positions(V, make_rng(seed, stream), residual)
    if comp:
        taken = set(pos)
        pos = [i for i in range(m.ground_size) if i not in taken]
    cells = frozenset(m.ground[i] for i in pos)
    if len(cells) != m.rank:
        raise AssertionError(f"draw has {len(cells)} cells, kernel rank is {m.rank}")
    return SampleDraw(cells, int(seed), int(stream), m.measure_id, fb)


def sample_once(m: MatroidalMeasure, seed: int, stream: int = 0) -> SampleDraw:
    """One exact-size draw from ``m``; deterministic given ``(seed, stream)``."""
    return _draw(m, _plan(m), seed, stream)


def sample_many(m: MatroidalMeasure, n: int, seed: int, start: int = 0) -> list[SampleDraw]:
    plan = _plan(m)
    return [_draw(m, plan, seed, s) for s in range(start, start + n)]


@dataclass
class EmpiricalReport:
    n_samples: int
    ground: tuple[int, ...]
    cell_counts: np.ndarray
    subset_counts: Counter | None = None
    extra: dict = field(default_factory=dict)

    @property
    def frequencies(self) -> np.ndarray:
        return self.cell_counts / self.n_samples

    @property
    def stderr(self) -> np.ndarray:
        p = self.frequencies
        return np.sqrt(p * (1 - p) / self.n_samples)

    def subset_frequencies(self) -> dict[frozenset, float]:
        if self.subset_counts is None:
            return {}
        return {s: c / self.n_samples for s, c in self.subset_counts.items()}

    def to_json(self) -> str:
        out = {
            "n_samples": self.n_samples,
            "cells": list(self.ground),
            "frequency": [float(v) for v in self.frequencies],
            "stderr": [float(v) for v in self.stderr],
        }
        if self.subset_counts is not None:
            out["subsets"] = {
                " ".join(map(str, sorted(s))): c for s, c in sorted(self.subset_counts.items(), key=lambda t: sorted(t[0]))
            }
        out.update(self.extra)
        return json.dumps(out, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cell", "count", "frequency", "stderr"])
        for c, k, f, s in zip(self.ground, self.cell_counts, self.frequencies, self.stderr):
            w.writerow([c, int(k), f"{f:.6f}", f"{s:.6f}"])
        return buf.getvalue()


def empirical_frequencies(
    m: MatroidalMeasure,
    n: int,
    seed: int,
    track_subsets: bool | None = None,
) -> EmpiricalReport:
    """Per-cell (and for small ground sets, per-subset) frequencies over ``n`` draws."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if track_subsets is None:
        track_subsets = m.ground_size <= MAX_COUPLING_GROUND
    where = {c: i for i, c in enumerate(m.ground)}
    counts = np.zeros(m.ground_size, dtype=np.int64)
    subsets: Counter | None = Counter() if track_subsets else None
    plan = _plan(m)
    for s in range(n):
        d = _draw(m, plan, seed, s)
        counts[[where[c] for c in d.cells]] += 1
        if subsets is not None:
            subsets[d.cells] += 1
    return EmpiricalReport(n, m.ground, counts, subsets)


def exact_distribution(m: MatroidalMeasure) -> dict[frozenset, Fraction]:
    """All subsets of size rank with positive probability (small ground sets)."""
    if m.kernel.Q is None:
        raise ValueError("exact distribution needs an exact kernel")
    out = {}
    for T in combinations(m.ground, m.rank):
        p = subset_probability(m, T)
        if p:
            out[frozenset(T)] = p
    return out


def chi_square_test(report: EmpiricalReport, m: MatroidalMeasure) -> dict:
    """Pearson chi-square of subset counts against the exact distribution."""
    from scipy.stats import chi2

    exact = exact_distribution(m)
    n = report.n_samples
    stat = 0.0
    for T, p in exact.items():
        e = float(p) * n
        o = report.subset_counts.get(T, 0)
        stat += (o - e) ** 2 / e
    off_support = sum(c for T, c in report.subset_counts.items() if T not in exact)
    dof = len(exact) - 1
    pvalue = float(chi2.sf(stat, dof)) if dof > 0 else 1.0
    return {"statistic": stat, "dof": dof, "pvalue": pvalue, "off_support": off_support}


# ---------------------------------------------------------------------------
# monotone coupling via exact max-flow
# ---------------------------------------------------------------------------


def max_flow(n_nodes: int, arcs: list[tuple[int, int, object]], source: int, sink: int):
    """Edmonds-Karp on exact capacities (``None`` = unbounded).

    Returns ``(value, flow_per_arc, reachable)`` where ``reachable`` is the
    source side of a minimum cut in the final residual graph.
    """
    graph: list[list[int]] = [[] for _ in range(n_nodes)]
    to, cap = [], []
    for u, v, c in arcs:
        graph[u].append(len(to))
        to.append(v)
        cap.append(c)
        graph[v].append(len(to))
        to.append(u)
        cap.append(Fraction(0))
    flow = [Fraction(0)] * len(to)

    def residual(e):
        return None if cap[e] is None else cap[e] - flow[e]

    value = Fraction(0)
    while True:
        parent = [-1] * n_nodes
        parent[source] = -2
        q = deque([source])
        while q and parent[sink] == -1:
            u = q.popleft()
            for e in graph[u]:
                r = residual(e)
                if parent[to[e]] == -1 and (r is None or r > 0):
                    parent[to[e]] = e
                    q.append(to[e])
        if parent[sink] == -1:
            break
        path, v = [], sink
        while v != source:
            e = parent[v]
            path.append(e)
            v = to[e ^ 1]
        bottleneck = min((residual(e) for e in path if residual(e) is not None), default=None)
        if bottleneck is None:
            raise ValueError("unbounded flow")
        for e in path:
            flow[e] += bottleneck
            flow[e ^ 1] -= bottleneck
        value += bottleneck
    reachable = {i for i, p in enumerate(parent) if p != -1}
    return value, [flow[2 * i] for i in range(len(arcs))], reachable


@dataclass
class CouplingResult:
    feasible: bool
    coupling: dict[tuple[frozenset, frozenset], Fraction] | None
    # infeasibility certificate: a family U of small sets whose mass exceeds
    # that of every large set containing one of them
    certificate: dict | None = None

    def check_marginals(self, p1: dict, p2: dict) -> bool:
        if self.coupling is None:
            return False
        m1: dict = {}
        m2: dict = {}
        for (a, b), w in self.coupling.items():
            if not a <= b or w <= 0:
                return False
            m1[a] = m1.get(a, 0) + w
            m2[b] = m2.get(b, 0) + w
        return m1 == p1 and m2 == p2


def domination_witness(m1: MatroidalMeasure, m2: MatroidalMeasure) -> CouplingResult:
    """Decide exactly whether ``m2`` stochastically dominates ``m1``.

    Solves the transportation problem from the law of ``m1`` to the law of
    ``m2`` with arcs only for ``T1 ⊆ T2``.  Feasible iff the max flow is 1.
    """
    if tuple(m1.ground) != tuple(m2.ground):
        raise ValueError("measures live on different ground sets")
    if m1.ground_size > MAX_COUPLING_GROUND:
        raise ValueError(f"ground set too large for exact coupling (> {MAX_COUPLING_GROUND})")
    p1 = exact_distribution(m1)
    p2 = exact_distribution(m2)
    if m1.kernel.Q is not None and m2.kernel.Q is not None and (m1.kernel.Q == m2.kernel.Q).all():
        return CouplingResult(True, {(T, T): p for T, p in p1.items()})
    small = sorted(p1, key=sorted)
    large = sorted(p2, key=sorted)
    src, sink = 0, 1 + len(small) + len(large)
    arcs = []
    for i, T in enumerate(small):
        arcs.append((src, 1 + i, p1[T]))
    pair_arcs = []
    for i, T in enumerate(small):
        for j, U in enumerate(large):
            if T <= U:
                pair_arcs.append((len(arcs), T, U))
                arcs.append((1 + i, 1 + len(small) + j, None))
    for j, U in enumerate(large):
        arcs.append((1 + len(small) + j, sink, p2[U]))
    value, flows, reachable = max_flow(sink + 1, arcs, src, sink)
    if value == 1:
        coupling = {(T, U): flows[a] for a, T, U in pair_arcs if flows[a] > 0}
        return CouplingResult(True, coupling)
    U_small = [T for i, T in enumerate(small) if 1 + i in reachable]
    N_large = [U for U in large if any(T <= U for T in U_small)]
    cert = {
        "flow_value": value,
        "sets": U_small,
        "supersets": N_large,
        "mass_sets": sum((p1[T] for T in U_small), Fraction(0)),
        "mass_supersets": sum((p2[U] for U in N_large), Fraction(0)),
    }
    return CouplingResult(False, None, cert)


# ---------------------------------------------------------------------------
# statistics of the random subcomplex
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForestStats:
    betti: int  # b_{k-1}(X_T ∩ A)
    boundary_size: int  # |bnd_{k-1}(A)|
    components: int | None  # k = 1 only
    marked_degree: int | None

    @property
    def bound_holds(self) -> bool:
        return self.betti <= self.boundary_size


def _components(n_vertices: int, vertices: list[int], edges: list[tuple[int, int]]) -> int:
    parent = {v: v for v in vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    comps = len(vertices)
    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            comps -= 1
    return comps


def forest_statistics(
    draw: SampleDraw | Iterable[int],
    X: ChainComplex,
    k: int,
    A: RegionSelection | None = None,
    marked: int | None = None,
) -> ForestStats:
    """Betti number of ``X_T ∩ A`` in degree k-1, boundary size, marked degree."""
    T = set(draw.cells if isinstance(draw, SampleDraw) else draw)
    if A is None:
        A = RegionSelection.whole(X)
    cells_k = [c for c in A.sorted_cells(k) if c in T]
    lower = A.sorted_cells(k - 1)
    D = X.boundary(k)
    r_k = rational_rank(D[np.ix_(lower, cells_k)]) if lower and cells_k else 0
    if k >= 2:
        lower2 = A.sorted_cells(k - 2)
        r_prev = rational_rank(X.boundary(k - 1)[np.ix_(lower2, lower)]) if lower2 and lower else 0
    else:
        r_prev = 0
    betti = len(lower) - r_prev - r_k
    _, bnd = interior_and_boundary(A, k - 1)
    comps = None
    if k == 1:
        edges = []
        for c in cells_k:
            col = X.columns(1)[c]
            ends = [f for f, _ in col]
            if len(ends) == 2:
                edges.append((ends[0], ends[1]))
        comps = _components(X.f(0), lower, edges)
    deg = None
    if marked is not None:
        deg = sum(1 for c in T if any(f == marked for f, _ in X.columns(k)[c]))
    return ForestStats(betti, len(bnd), comps, deg)
