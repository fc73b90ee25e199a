"""Finite CW-complexes stored as integer chain complexes.

A :class:`ChainComplex` keeps, for every ``k >= 1``, the boundary map
``∂_k`` as a list of sparse columns: column ``j`` is a tuple of
``(face_index, coefficient)`` pairs with nonzero coefficients, faces sorted.
Cells are identified with their index inside their dimension.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from itertools import combinations, product
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .linalg import zeros

__all__ = [
    "CellRef",
    "ChainComplex",
    "RegionSelection",
    "ComplexFormatError",
    "ComplexValidationError",
    "DualTorusMap",
    "build_simplex_skeleton",
    "build_cubical_torus",
    "build_graph",
    "load_complex",
    "loads_complex",
    "save_complex",
    "dumps_complex",
    "bundled_complex",
    "bundled_path",
    "restrict_to_cells",
    "induced_region",
    "box_region",
    "interior_and_boundary",
    "dual_torus_map",
    "check_dual_identity",
    "resolve_complex",
]

FORMAT_HEADER = "cellforest-complex v1"

Column = tuple[tuple[int, int], ...]


class ComplexFormatError(ValueError):
    """The complex file could not be parsed."""


class ComplexValidationError(ValueError):
    """The data do not define a chain complex.

    ``k`` and ``column`` locate the first offending column of ``∂_k``.
    """

    def __init__(self, message: str, k: int | None = None, column: int | None = None):
        super().__init__(message)
        self.k = k
        self.column = column


@dataclass(frozen=True)
class CellRef:
    dim: int
    index: int


class ChainComplex:
    """Immutable finite chain complex with integer boundary matrices."""

    def __init__(
        self,
        cell_counts: Sequence[int],
        boundaries: Sequence[Sequence[Iterable[tuple[int, int]]]],
        cell_labels: Sequence[Sequence[str] | None] | None = None,
        keys: Sequence[Sequence] | None = None,
        meta: dict | None = None,
        validate: bool = True,
    ):
        counts = tuple(int(c) for c in cell_counts)
        if not counts:
            raise ComplexValidationError("complex has no dimensions")
        if any(c < 0 for c in counts):
            raise ComplexValidationError("negative cell count")
        if len(boundaries) != len(counts) - 1:
            raise ComplexValidationError(
                f"expected {len(counts) - 1} boundary maps, got {len(boundaries)}"
            )
        bds: list[tuple[Column, ...]] = []
        for k, cols in enumerate(boundaries, start=1):
            cols = list(cols)
            if len(cols) != counts[k]:
                raise ComplexValidationError(
                    f"∂_{k} has {len(cols)} columns but f_{k} = {counts[k]}", k=k
                )
            norm = []
            for j, col in enumerate(cols):
                acc: dict[int, int] = {}
                for face, coef in col:
                    face, coef = int(face), int(coef)
                    if not 0 <= face < counts[k - 1]:
                        raise ComplexValidationError(
                            f"∂_{k} column {j} references face {face} out of range", k=k, column=j
                        )
                    acc[face] = acc.get(face, 0) + coef
                norm.append(tuple(sorted((f, c) for f, c in acc.items() if c != 0)))
            bds.append(tuple(norm))
        self._counts = counts
        self._bd = tuple(bds)
        if cell_labels is None:
            cell_labels = [None] * len(counts)
        labels = []
        for k, lab in enumerate(cell_labels):
            if lab is not None:
                lab = tuple(str(s) for s in lab)
                if len(lab) != counts[k]:
                    raise ComplexValidationError(f"label count mismatch in dimension {k}")
            labels.append(lab)
        self._labels = tuple(labels)
        self._keys = tuple(tuple(k) for k in keys) if keys is not None else None
        self._meta = dict(meta or {})
        self._cache: dict = {}
        if validate:
            self.validate()

    # -- basic accessors ---------------------------------------------------

    @property
    def top_dim(self) -> int:
        return len(self._counts) - 1

    @property
    def cell_counts(self) -> tuple[int, ...]:
        return self._counts

    @property
    def cell_labels(self) -> tuple:
        return self._labels

    @property
    def keys(self):
        return self._keys

    @property
    def meta(self) -> dict:
        return dict(self._meta)

    def f(self, k: int) -> int:
        return self._counts[k] if 0 <= k <= self.top_dim else 0

    def cell(self, k: int, i: int) -> CellRef:
        if not 0 <= k <= self.top_dim or not 0 <= i < self.f(k):
            raise IndexError(f"no cell {i} in dimension {k}")
        return CellRef(k, i)

    def columns(self, k: int) -> tuple[Column, ...]:
        """Sparse columns of ``∂_k`` (empty for k = 0 or k > top_dim)."""
        if 1 <= k <= self.top_dim:
            return self._bd[k - 1]
        return tuple(() for _ in range(self.f(k)))

    def boundary(self, k: int) -> np.ndarray:
        """Dense integer matrix of ``∂_k``, shape ``f_{k-1} x f_k``."""
        key = ("dense", k)
        if key not in self._cache:
            M = zeros(self.f(k - 1), self.f(k))
            for j, col in enumerate(self.columns(k)):
                for i, c in col:
                    M[i, j] = c
            M.setflags(write=False)
            self._cache[key] = M
        return self._cache[key]

    def boundary_float(self, k: int) -> np.ndarray:
        M = np.zeros((self.f(k - 1), self.f(k)))
        for j, col in enumerate(self.columns(k)):
            for i, c in col:
                M[i, j] = c
        return M

    def coboundary_index(self, k: int) -> list[list[tuple[int, int]]]:
        """For each k-cell, the ``(k+1)``-cells incident to it with coefficient."""
        key = ("cob", k)
        if key not in self._cache:
            out: list[list[tuple[int, int]]] = [[] for _ in range(self.f(k))]
            for j, col in enumerate(self.columns(k + 1)):
                for i, c in col:
                    out[i].append((j, c))
            self._cache[key] = out
        return self._cache[key]

    def label(self, k: int, i: int) -> str:
        lab = self._labels[k]
        return lab[i] if lab is not None else f"{k}:{i}"

    def validate(self) -> None:
        """Check ``∂_k ∂_{k+1} = 0`` exactly; raise on the first bad column."""
        if self._counts[0] == 0:
            raise ComplexValidationError("empty complex (no 0-cells)")
        for k in range(1, self.top_dim):
            lower = self._bd[k - 1]
            for j, col in enumerate(self._bd[k]):
                acc: dict[int, int] = {}
                for face, c in col:
                    for g, d in lower[face]:
                        acc[g] = acc.get(g, 0) + c * d
                if any(v != 0 for v in acc.values()):
                    raise ComplexValidationError(
                        f"∂_{k}∂_{k + 1} ≠ 0: column {j} of ∂_{k + 1} has nonzero boundary",
                        k=k + 1,
                        column=j,
                    )

    def skeleton(self, k: int) -> "ChainComplex":
        k = min(k, self.top_dim)
        return ChainComplex(
            self._counts[: k + 1],
            [self._bd[j - 1] for j in range(1, k + 1)],
            self._labels[: k + 1],
            keys=self._keys[: k + 1] if self._keys is not None else None,
            meta=self._meta,
            validate=False,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChainComplex):
            return NotImplemented
        return self._counts == other._counts and self._bd == other._bd

    def __hash__(self) -> int:
        return hash((self._counts, self._bd))

    def __repr__(self) -> str:
        kind = self._meta.get("kind", "complex")
        return f"ChainComplex({kind}, f={self._counts})"


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _simplicial_columns(faces: list[tuple[int, ...]], cells: list[tuple[int, ...]]):
    index = {s: i for i, s in enumerate(faces)}
    cols = []
    for s in cells:
        col = []
        for i in range(len(s)):
            col.append((index[s[:i] + s[i + 1 :]], (-1) ** i))
        cols.append(col)
    return cols


def build_simplex_skeleton(n: int, k_max: int) -> ChainComplex:
    """The ``k_max``-skeleton of the ``(n-1)``-simplex on vertices ``0..n-1``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if k_max < 0 or k_max >= n:
        raise ValueError(f"k_max must satisfy 0 <= k_max <= n-1 = {n - 1}")
    cells = [list(combinations(range(n), j + 1)) for j in range(k_max + 1)]
    bds = [_simplicial_columns(cells[j - 1], cells[j]) for j in range(1, k_max + 1)]
    labels = [["".join(map(str, s)) if n <= 10 else "-".join(map(str, s)) for s in cs] for cs in cells]
    return ChainComplex(
        [len(c) for c in cells],
        bds,
        labels,
        keys=cells,
        meta={"kind": "simplex", "n": n, "k_max": k_max},
    )


def build_graph(n_vertices: int, edges: Sequence[tuple[int, int]]) -> ChainComplex:
    """1-complex of a graph; edge ``(a, b)`` has boundary ``b - a``."""
    cols = []
    for a, b in edges:
        if a == b:
            cols.append([])
        else:
            cols.append([(a, -1), (b, 1)])
    return ChainComplex(
        [n_vertices, len(edges)],
        [cols],
        keys=[[(v,) for v in range(n_vertices)], [tuple(e) for e in edges]],
        meta={"kind": "graph"},
    )


def build_cubical_torus(d: int, n: int) -> ChainComplex:
    """The cube complex of ``(Z/n)^d``: the n-periodic quotient of the unit tiling.

    A k-cell is ``(x, I)`` with base point ``x`` and sorted direction tuple
    ``I``; cells are ordered lexicographically by ``(x, I)``.  Its boundary is
    ``sum_j (-1)^j [(x + e_{I_j}, I - I_j) - (x, I - I_j)]``.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if n < 2:
        raise ValueError("n must be >= 2")
    points = list(product(range(n), repeat=d))
    cells = []
    for k in range(d + 1):
        dirs = list(combinations(range(d), k))
        cells.append(sorted((x, I) for x in points for I in dirs))
    index = [{c: i for i, c in enumerate(cs)} for cs in cells]
    bds = []
    for k in range(1, d + 1):
        cols = []
        for x, I in cells[k]:
            col = []
            for j, i in enumerate(I):
                rest = I[:j] + I[j + 1 :]
                shifted = tuple((x[t] + (1 if t == i else 0)) % n for t in range(d))
                s = (-1) ** j
                col.append((index[k - 1][(shifted, rest)], s))
                col.append((index[k - 1][(x, rest)], -s))
            cols.append(col)
        bds.append(cols)
    labels = [
        [",".join(map(str, x)) + "|" + "".join(map(str, I)) for x, I in cs] for cs in cells
    ]
    return ChainComplex(
        [len(c) for c in cells],
        bds,
        labels,
        keys=cells,
        meta={"kind": "torus", "d": d, "n": n},
    )


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------


def dumps_complex(X: ChainComplex) -> str:
    out = io.StringIO()
    out.write(FORMAT_HEADER + "\n")
    out.write(f"top_dim {X.top_dim}\n")
    out.write("counts " + " ".join(map(str, X.cell_counts)) + "\n")
    for k, lab in enumerate(X.cell_labels):
        if lab is not None:
            out.write(f"labels {k}" + "".join(" " + s for s in lab) + "\n")
    for k in range(1, X.top_dim + 1):
        out.write(f"boundary {k}\n")
        for col in X.columns(k):
            out.write(" ".join(f"{i}:{c}" for i, c in col) if col else "-")
            out.write("\n")
    return out.getvalue()


def save_complex(X: ChainComplex, path) -> None:
    text = dumps_complex(X)
    if hasattr(path, "write"):
        path.write(text)
    else:
        Path(path).write_text(text)


def loads_complex(text: str) -> ChainComplex:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != FORMAT_HEADER:
        raise ComplexFormatError(f"missing header {FORMAT_HEADER!r}")
    pos = 1

    def expect(prefix: str) -> list[str]:
        nonlocal pos
        if pos >= len(lines) or not lines[pos].startswith(prefix):
            got = lines[pos] if pos < len(lines) else "end of file"
            raise ComplexFormatError(f"expected {prefix!r}, got {got!r}")
        parts = lines[pos].split()
        pos += 1
        return parts[1:]

    try:
        top = int(expect("top_dim")[0])
        counts = [int(v) for v in expect("counts")]
    except (IndexError, ValueError) as exc:
        if isinstance(exc, ComplexFormatError):
            raise
        raise ComplexFormatError(f"bad header values: {exc}") from None
    if len(counts) != top + 1:
        raise ComplexFormatError("counts do not match top_dim")
    if counts[0] == 0:
        raise ComplexValidationError("empty complex (no 0-cells)")
    labels: list = [None] * (top + 1)
    while pos < len(lines) and lines[pos].startswith("labels"):
        parts = lines[pos].split()
        pos += 1
        try:
            k = int(parts[1])
        except (IndexError, ValueError):
            raise ComplexFormatError("bad labels line") from None
        if not 0 <= k <= top:
            raise ComplexFormatError(f"labels for missing dimension {k}")
        labels[k] = parts[2:]
    bds = []
    for k in range(1, top + 1):
        head = expect("boundary")
        if head != [str(k)]:
            raise ComplexFormatError(f"expected 'boundary {k}'")
        cols = []
        for j in range(counts[k]):
            if pos >= len(lines):
                raise ComplexFormatError(f"∂_{k} truncated at column {j}")
            line = lines[pos]
            pos += 1
            if line == "-":
                cols.append([])
                continue
            col = []
            for tok in line.split():
                try:
                    a, b = tok.split(":")
                    col.append((int(a), int(b)))
                except ValueError:
                    raise ComplexFormatError(f"bad entry {tok!r} in ∂_{k} column {j}") from None
            cols.append(col)
        bds.append(cols)
    if pos != len(lines):
        raise ComplexFormatError(f"trailing content: {lines[pos]!r}")
    return ChainComplex(counts, bds, labels, meta={"kind": "file"})


def load_complex(file) -> ChainComplex:
    if hasattr(file, "read"):
        return loads_complex(file.read())
    return loads_complex(Path(file).read_text())


def bundled_path(name: str) -> Path:
    return Path(__file__).parent / "data" / name


def bundled_complex(name: str) -> ChainComplex:
    """Load ``rp2.complex`` or ``k4.complex`` shipped with the package."""
    if not name.endswith(".complex"):
        name += ".complex"
    return load_complex(bundled_path(name))


def resolve_complex(spec: str | os.PathLike) -> ChainComplex:
    """Path to a complex file, falling back to the bundled data directory."""
    p = Path(spec)
    if p.exists():
        return load_complex(p)
    if bundled_path(p.name).exists():
        return load_complex(bundled_path(p.name))
    raise FileNotFoundError(spec)


# ---------------------------------------------------------------------------
# subcomplexes
# ---------------------------------------------------------------------------


def restrict_to_cells(X: ChainComplex, k: int, T: Iterable[int]) -> ChainComplex:
    """``X_T``: the full (k-1)-skeleton of X plus the k-cells in ``T``."""
    if not 1 <= k <= X.top_dim:
        raise ValueError(f"k must satisfy 1 <= k <= {X.top_dim}")
    T = sorted(set(int(t) for t in T))
    if T and (T[0] < 0 or T[-1] >= X.f(k)):
        raise IndexError(f"k-cell index out of range 0..{X.f(k) - 1}")
    counts = list(X.cell_counts[:k]) + [len(T)]
    bds = [X.columns(j) for j in range(1, k)] + [[X.columns(k)[t] for t in T]]
    labels = list(X.cell_labels[:k])
    lab_k = X.cell_labels[k]
    labels.append([lab_k[t] for t in T] if lab_k is not None else None)
    keys = None
    if X.keys is not None:
        keys = list(X.keys[:k]) + [[X.keys[k][t] for t in T]]
    meta = X.meta
    meta["restricted_from"] = k
    return ChainComplex(counts, bds, labels, keys=keys, meta=meta, validate=False)


@dataclass(frozen=True)
class RegionSelection:
    """A subcomplex ``A`` of ``complex`` given by cell indices per dimension."""

    complex: ChainComplex
    cells: tuple[frozenset, ...]

    def __post_init__(self):
        X = self.complex
        cells = tuple(frozenset(int(i) for i in c) for c in self.cells)
        cells = cells + tuple(frozenset() for _ in range(X.top_dim + 1 - len(cells)))
        object.__setattr__(self, "cells", cells)
        for k, cs in enumerate(cells):
            if any(not 0 <= i < X.f(k) for i in cs):
                raise ValueError(f"region cell out of range in dimension {k}")
            for i in cs:
                for face, _ in X.columns(k)[i]:
                    if face not in cells[k - 1]:
                        raise ValueError(
                            f"not a subcomplex: face {face} of {k}-cell {i} is not selected"
                        )

    def sorted_cells(self, k: int) -> list[int]:
        return sorted(self.cells[k]) if k < len(self.cells) else []

    @classmethod
    def whole(cls, X: ChainComplex) -> "RegionSelection":
        return cls(X, tuple(frozenset(range(X.f(k))) for k in range(X.top_dim + 1)))


def _vertex_sets(X: ChainComplex) -> list[list[frozenset]]:
    out = [[frozenset([i]) for i in range(X.f(0))]]
    for k in range(1, X.top_dim + 1):
        prev = out[-1]
        out.append([frozenset().union(*(prev[f] for f, _ in col)) for col in X.columns(k)])
    return out


def induced_region(X: ChainComplex, vertices: Iterable[int]) -> RegionSelection:
    """All cells whose vertices lie in ``vertices``."""
    V = frozenset(vertices)
    vs = _vertex_sets(X)
    cells = tuple(frozenset(i for i, s in enumerate(vs[k]) if s <= V) for k in range(X.top_dim + 1))
    return RegionSelection(X, cells)


def box_region(X: ChainComplex, origin: Sequence[int], size: int | Sequence[int]) -> RegionSelection:
    """Induced subcomplex on a box of vertices of a cubical torus."""
    if X.meta.get("kind") != "torus":
        raise ValueError("box_region needs a cubical torus")
    d, n = X.meta["d"], X.meta["n"]
    sizes = [size] * d if isinstance(size, int) else list(size)
    pts = set()
    for off in product(*(range(s) for s in sizes)):
        pts.add(tuple((origin[t] + off[t]) % n for t in range(d)))
    verts = [i for i, (x, _) in enumerate(X.keys[0]) if x in pts]
    return induced_region(X, verts)


def interior_and_boundary(A: RegionSelection, k: int) -> tuple[list[int], list[int]]:
    """Split the k-cells of ``A`` into combinatorial interior and k-th boundary.

    A k-cell is interior when every (k+1)-cell of the ambient complex
    incident to it belongs to ``A``.
    """
    X = A.complex
    cob = X.coboundary_index(k)
    above = A.cells[k + 1] if k + 1 < len(A.cells) else frozenset()
    interior, bnd = [], []
    for i in A.sorted_cells(k):
        if all(j in above for j, _ in cob[i]):
            interior.append(i)
        else:
            bnd.append(i)
    return interior, bnd


# ---------------------------------------------------------------------------
# dual cell structure of the 2-torus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualTorusMap:
    """Oriented bijections ``phi_k`` from k-cells of X to (2-k)-cells of X*.

    ``index[k][i]`` is the dual cell of cell ``i``; ``sign[k][i]`` is the
    orientation sign relating the two.  With ``P_k`` the signed permutation
    matrix, ``δ_{2-k,X*} = global_sign[k] * P_{k-1} ∂_{k,X} P_k^T``.
    """

    primal: ChainComplex
    dual: ChainComplex
    index: tuple[tuple[int, ...], ...]
    sign: tuple[tuple[int, ...], ...]
    global_sign: tuple[int, ...] = field(default=(0, -1, 1))


def dual_torus_map(X: ChainComplex) -> DualTorusMap:
    """Dual cell structure of the square torus.

    The dual vertex of square ``x`` is vertex ``x`` of X*; the dual face of
    vertex ``x`` is square ``x - (1,1)``; edge ``(x, 0)`` crosses ``(x - e1, 1)``
    and edge ``(x, 1)`` crosses ``(x - e0, 0)`` with reversed orientation.
    """
    if X.meta.get("kind") != "torus" or X.meta.get("d") != 2:
        raise ValueError("dual_torus_map needs a 2-dimensional cubical torus")
    n = X.meta["n"]
    Xd = build_cubical_torus(2, n)
    idx = [{c: i for i, c in enumerate(cs)} for cs in Xd.keys]

    def sh(x, a, b):
        return ((x[0] + a) % n, (x[1] + b) % n)

    phi0, s0 = [], []
    for x, _ in X.keys[0]:
        phi0.append(idx[2][(sh(x, -1, -1), (0, 1))])
        s0.append(1)
    phi1, s1 = [], []
    for x, I in X.keys[1]:
        if I == (0,):
            phi1.append(idx[1][(sh(x, 0, -1), (1,))])
            s1.append(1)
        else:
            phi1.append(idx[1][(sh(x, -1, 0), (0,))])
            s1.append(-1)
    phi2, s2 = [], []
    for x, _ in X.keys[2]:
        phi2.append(idx[0][(x, ())])
        s2.append(1)
    return DualTorusMap(
        X, Xd, (tuple(phi0), tuple(phi1), tuple(phi2)), (tuple(s0), tuple(s1), tuple(s2))
    )


def check_dual_identity(m: DualTorusMap, k: int) -> bool:
    """Entrywise ``∂_{k,X}[s, e] = g σ(s) σ(e) δ_{2-k,X*}[φ(s), φ(e)]``."""
    X, Xd = m.primal, m.dual
    D = X.boundary(k)
    # δ_{2-k,X*} = ∂_{3-k,X*}^T
    Dd = Xd.boundary(3 - k)
    g = m.global_sign[k]
    for s in range(X.f(k - 1)):
        for e in range(X.f(k)):
            lhs = D[s, e]
            rhs = g * m.sign[k - 1][s] * m.sign[k][e] * Dd[m.index[k][e], m.index[k - 1][s]]
            if lhs != rhs:
                return False
    return True
