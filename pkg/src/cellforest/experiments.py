"""Lattice experiments on cubical tori, returning plain row dictionaries."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .complex_core import build_cubical_torus, dual_torus_map
from .linalg import format_rational
from .measures import matroidal_kernel
from .sampler import sample_many, sample_once

__all__ = [
    "cycle_edges",
    "cellprob_table",
    "degree_experiment",
    "cycle_scaling",
    "torus_duality_figure",
]


def cycle_edges(n_vertices: int, edges: list[tuple[int, int, int]]) -> set[int]:
    """Ids of the edges lying on some cycle (the non-bridges).

    ``edges`` holds ``(id, u, v)``; parallel edges and loops are allowed.
    """
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_vertices)]
    for eid, u, v in edges:
        adj[u].append((v, eid))
        adj[v].append((u, eid))
    disc = [-1] * n_vertices
    low = [0] * n_vertices
    bridges = set()
    clock = 0
    for root in range(n_vertices):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = clock
        clock += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            u, via, it = stack[-1]
            advanced = False
            for w, eid in it:
                if eid == via:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = clock
                    clock += 1
                    stack.append((w, eid, iter(adj[w])))
                    advanced = True
                    break
                low[u] = min(low[u], disc[w])
            if advanced:
                continue
            stack.pop()
            if stack:
                p = stack[-1][0]
                low[p] = min(low[p], low[u])
                if low[u] > disc[p]:
                    bridges.add(via)
    return {eid for eid, _, _ in edges} - bridges


def _edge_list(X, cells) -> list[tuple[int, int, int]]:
    out = []
    for e in cells:
        ends = [f for f, _ in X.columns(1)[e]]
        u, v = (ends[0], ends[1]) if len(ends) == 2 else (ends[0], ends[0])
        out.append((e, u, v))
    return out


def cellprob_table(d: int, k: int, ns: list[int]) -> list[dict]:
    """Exact lower-kernel diagonal on the d-torus against the limit ``k/d``."""
    rows = []
    limit = Fraction(k, d)
    for n in ns:
        X = build_cubical_torus(d, n)
        diag = matroidal_kernel(X, k, "lower").kernel.diagonal()
        value = diag[0]
        rows.append(
            {
                "d": d,
                "k": k,
                "n": n,
                "value": value,
                "all_equal": all(v == value for v in diag),
                "limit": limit,
                "gap": abs(value - limit),
            }
        )
    return rows


def degree_experiment(n: int, samples: int, seed: int, marked: int = 0) -> dict:
    """Degree of a marked vertex in lower k=1 draws on the n x n torus."""
    X = build_cubical_torus(2, n)
    m = matroidal_kernel(X, 1, "lower")
    incident = [e for e, col in enumerate(X.columns(1)) if any(f == marked for f, _ in col)]
    diag = m.kernel.diagonal()
    exact = sum((diag[e] for e in incident), Fraction(0))
    degs = np.array([len(d.cells.intersection(incident)) for d in sample_many(m, samples, seed)], dtype=float)
    mean = float(degs.mean())
    se = float(degs.std(ddof=1) / math.sqrt(samples)) if samples > 1 else float("nan")
    formula = Fraction(2 * (n * n - 1), n * n)
    return {
        "n": n,
        "samples": samples,
        "seed": seed,
        "exact": exact,
        "formula": formula,
        "mean": mean,
        "stderr": se,
        "z": (mean - float(exact)) / se if se and se == se and se > 0 else 0.0,
        "limit": 2,
    }


def cycle_scaling(ns: list[int], samples: int, seed: int, exact_limit: int = 8) -> list[dict]:
    """Mean number of cycle edges in upper k=1 draws on n x n tori."""
    rows = []
    for n in ns:
        X = build_cubical_torus(2, n)
        m = matroidal_kernel(X, 1, "upper", exact=n <= exact_limit)
        counts = []
        for d in sample_many(m, samples, seed):
            counts.append(len(cycle_edges(X.f(0), _edge_list(X, sorted(d.cells)))))
        c = np.array(counts, dtype=float)
        mean = float(c.mean())
        rows.append(
            {
                "n": n,
                "samples": samples,
                "mean_cycle_edges": mean,
                "stderr": float(c.std(ddof=1) / math.sqrt(samples)) if samples > 1 else float("nan"),
                "ratio_n_5_4": mean / n**1.25,
            }
        )
    return rows


def torus_duality_figure(n: int, seed: int, scale: float = 10.0, exact_limit: int = 8) -> tuple[str, dict]:
    """SVG of a lower k=1 draw (gray) and the cycle edges of its dual complement (black).

    The complement of the draw, carried to the dual torus, is an upper k=1
    draw there; only its edges lying on cycles are drawn.
    """
    X = build_cubical_torus(2, n)
    phi = dual_torus_map(X)
    Xd = phi.dual
    m = matroidal_kernel(X, 1, "lower", exact=n <= exact_limit)
    draw = sample_once(m, seed)
    dual_cells = sorted(phi.index[1][e] for e in range(X.f(1)) if e not in draw.cells)
    loops = cycle_edges(Xd.f(0), _edge_list(Xd, dual_cells))

    size = n * scale
    pad = scale
    lines = []

    def seg(x0, y0, x1, y1, color, width):
        # draw the segment and its periodic copies; the clip path trims them
        for dx in (-n, 0, n):
            for dy in (-n, 0, n):
                a, b = (x0 + dx) * scale + pad, size - (y0 + dy) * scale + pad
                c, e = (x1 + dx) * scale + pad, size - (y1 + dy) * scale + pad
                lo_x, hi_x = min(a, c), max(a, c)
                lo_y, hi_y = min(b, e), max(b, e)
                if hi_x < pad or lo_x > size + pad or hi_y < pad or lo_y > size + pad:
                    continue
                lines.append(
                    f'<line x1="{a:.2f}" y1="{b:.2f}" x2="{c:.2f}" y2="{e:.2f}" '
                    f'stroke="{color}" stroke-width="{width}"/>'
                )

    for e in sorted(draw.cells):
        x, I = X.keys[1][e]
        dx, dy = (1, 0) if I == (0,) else (0, 1)
        seg(x[0], x[1], x[0] + dx, x[1] + dy, "#a0a0a0", 0.25 * scale)
    for e in sorted(loops):
        y, I = Xd.keys[1][e]
        dx, dy = (1, 0) if I == (0,) else (0, 1)
        seg(y[0] + 0.5, y[1] + 0.5, y[0] + 0.5 + dx, y[1] + 0.5 + dy, "#000000", 0.12 * scale)

    total = size + 2 * pad
    svg = "\n".join(
        [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{total:.0f}" height="{total:.0f}" '
            f'viewBox="0 0 {total:.0f} {total:.0f}">',
            f'<defs><clipPath id="torus"><rect x="{pad:.2f}" y="{pad:.2f}" width="{size:.2f}" '
            f'height="{size:.2f}"/></clipPath></defs>',
            '<rect width="100%" height="100%" fill="white"/>',
            '<g clip-path="url(#torus)" stroke-linecap="round">',
            *lines,
            "</g>",
            "</svg>",
            "",
        ]
    )
    info = {
        "n": n,
        "seed": seed,
        "tree_edges": len(draw.cells),
        "dual_edges": len(dual_cells),
        "dual_cycle_edges": len(loops),
    }
    return svg, info


def format_row(row: dict) -> dict:
    return {k: (format_rational(v) if isinstance(v, Fraction) else v) for k, v in row.items()}
