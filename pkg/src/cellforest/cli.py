"""Command-line interface.

Exit codes: 0 success, 1 identity violation, 2 usage error, 3 budget exceeded.

Complexes are given as a file path, a bundled name (``rp2``, ``k4``), or a
generator spec ``torus:D:N`` / ``simplex:N:K``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .complex_core import (
    ComplexFormatError,
    ComplexValidationError,
    box_region,
    build_cubical_torus,
    build_simplex_skeleton,
    bundled_path,
    dumps_complex,
    load_complex,
)
from .enumeration import (
    BudgetExceeded,
    PreconditionError,
    enumerate_bases,
    oracle_measure_check,
    verify_count_corollary,
    verify_kalai,
    verify_key_lemma,
    verify_torus_duality,
)
from .experiments import cellprob_table, cycle_scaling, degree_experiment, format_row, torus_duality_figure
from .linalg import format_rational
from .measures import kernel_report, matroidal_kernel
from .sampler import empirical_frequencies, sample_once

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def parse_complex(spec: str):
    """Resolve ``--complex``: generator spec, existing path, or bundled name."""
    if spec.startswith("torus:"):
        _, d, n = spec.split(":")
        return build_cubical_torus(int(d), int(n))
    if spec.startswith("simplex:"):
        _, n, k = spec.split(":")
        return build_simplex_skeleton(int(n), int(k))
    p = Path(spec)
    if p.exists():
        return load_complex(p)
    name = spec if spec.endswith(".complex") else spec + ".complex"
    if bundled_path(name).exists():
        return load_complex(bundled_path(name))
    raise UsageError(f"no such complex: {spec}")


def _int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}")


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _jsonable(x):
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        return [_jsonable(v) for v in (sorted(x) if isinstance(x, (set, frozenset)) else x)]
    if isinstance(x, int) and not isinstance(x, bool) and abs(x) > 2**53:
        return str(x)
    return x


def table(rows: list[dict]) -> str:
    """Aligned plain-text table of homogeneous row dictionaries."""
    if not rows:
        return ""
    keys = list(rows[0])
    cells = [[str(_jsonable(r.get(k, ""))) for k in keys] for r in rows]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
    out = ["  ".join(k.ljust(w) for k, w in zip(keys, widths))]
    out.append("  ".join("-" * w for w in widths))
    out += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(out)


def csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _jsonable(v) for k, v in r.items()})
    return buf.getvalue()


def emit(args, payload: dict, rows: list[dict] | None = None) -> None:
    """Print the report in the chosen format and optionally write it to ``--output``."""
    if args.format == "json":
        text = json.dumps(_jsonable(payload), indent=2)
    elif args.format == "csv":
        text = csv_text(rows if rows is not None else [payload]).rstrip("\n")
    else:
        head = {k: v for k, v in payload.items() if not isinstance(v, (list, dict))}
        parts = [table([head])] if head else []
        if rows:
            parts.append(table(rows))
        text = "\n\n".join(parts)
    if args.output:
        Path(args.output).write_text(text + "\n")
    print(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _region(X, args):
    if getattr(args, "box", None) is None:
        return None
    vals = args.box
    d = X.meta.get("d")
    if d is None:
        raise UsageError("--box needs a cubical torus complex")
    if len(vals) != d + 1:
        raise UsageError(f"--box takes {d} origin coordinates and a size")
    return box_region(X, vals[:d], vals[d])


def cmd_build(args) -> int:
    if args.kind == "simplex":
        X = build_simplex_skeleton(args.n, args.k)
    else:
        X = build_cubical_torus(args.d, args.n)
    text = dumps_complex(X)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_kernel(args) -> int:
    X = parse_complex(args.complex)
    m = matroidal_kernel(X, args.k, args.side, region=_region(X, args))
    rep = kernel_report(m)
    rows = [{"cell": c, "diagonal": q} for c, q in zip(rep["cells"], rep.get("diagonal", []))]
    emit(args, rep, rows)
    return EXIT_OK


def cmd_sample(args) -> int:
    X = parse_complex(args.complex)
    m = matroidal_kernel(X, args.k, args.side, region=_region(X, args), exact=not args.float)
    if args.samples == 1:
        d = sample_once(m, args.seed, args.stream)
        payload = {
            "seed": d.seed,
            "stream": d.stream,
            "rank": m.rank,
            "cells": d.sorted(),
            "labels": [X.label(args.k, c) for c in d.sorted()],
        }
        emit(args, payload, [{"cell": c, "label": X.label(args.k, c)} for c in d.sorted()])
        return EXIT_OK
    rep = empirical_frequencies(m, args.samples, args.seed)
    if args.format == "csv":
        text = rep.to_csv()
        if args.output:
            Path(args.output).write_text(text)
        print(text, end="")
        return EXIT_OK
    payload = json.loads(rep.to_json())
    rows = [
        {"cell": c, "frequency": f"{f:.6f}", "stderr": f"{s:.6f}"}
        for c, f, s in zip(rep.ground, rep.frequencies, rep.stderr)
    ]
    emit(args, payload, rows)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    X = parse_complex(args.complex)
    recs = list(enumerate_bases(X, args.k, args.side, args.budget))
    hist: dict[int, int] = {}
    for r in recs:
        hist[r.torsion] = hist.get(r.torsion, 0) + 1
    rows = [{"cells": " ".join(map(str, r.sorted())), "torsion": r.torsion, "weight": r.weight} for r in recs]
    payload = {
        "k": args.k,
        "side": args.side,
        "count": len(recs),
        "h": sum(r.weight for r in recs),
        "histogram": dict(sorted(hist.items())),
    }
    if args.list:
        payload["bases"] = [r.sorted() for r in recs]
    emit(args, payload, rows if args.list or args.format == "csv" else [{"torsion": t, "count": c} for t, c in sorted(hist.items())])
    return EXIT_OK


def cmd_verify(args) -> int:
    suite = args.suite
    if suite == "kalai":
        rep = verify_kalai(args.n, args.k, args.budget)
    elif suite == "key":
        rep = verify_key_lemma(parse_complex(args.complex), args.budget)
    elif suite == "count":
        rep = verify_count_corollary(parse_complex(args.complex), args.budget)
    elif suite == "oracle":
        rep = oracle_measure_check(parse_complex(args.complex), args.k, args.side, args.budget)
    else:
        rep = verify_torus_duality(args.n, coupling=not args.no_coupling, budget=args.budget)
    payload = {"suite": suite, "ok": rep.ok, "checked": rep.checked, **rep.details}
    if rep.counterexample is not None:
        payload["counterexample"] = rep.counterexample
    if args.format == "json":
        payload["instances"] = rep.instances
    emit(args, payload, rep.instances if args.format == "csv" else None)
    return EXIT_OK if rep.ok else EXIT_VIOLATION


def cmd_experiment(args) -> int:
    name = args.name
    if name == "torus-duality":
        svg, info = torus_duality_figure(args.n, args.seed)
        out = Path(args.figure or f"torus-duality-n{args.n}-s{args.seed}.svg")
        out.write_text(svg)
        info["figure"] = str(out)
        emit(args, info)
    elif name == "cellprob":
        rows = [format_row(r) for r in cellprob_table(args.d, args.k, args.n_list)]
        emit(args, {"experiment": name, "rows": rows}, rows)
    elif name == "degree":
        row = format_row(degree_experiment(args.n, args.samples, args.seed))
        emit(args, {"experiment": name, **row}, [row] if args.format == "csv" else None)
    else:
        rows = cycle_scaling(args.n_list, args.samples, args.seed)
        emit(args, {"experiment": name, "rows": rows}, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["table", "json", "csv"], default="table")
    p.add_argument("-o", "--output", help="also write the report to this file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cellforest", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="write a generated complex in the cellforest-complex v1 format")
    p.add_argument("kind", choices=["simplex", "torus"])
    p.add_argument("--n", type=_positive, required=True, help="simplex vertices or torus side length")
    p.add_argument("--k", type=int, default=2, help="simplex skeleton dimension")
    p.add_argument("--d", type=_positive, default=2, help="torus dimension")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_build)

    def measure_args(p):
        p.add_argument("--complex", required=True, help="path, bundled name, torus:D:N or simplex:N:K")
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--side", choices=["lower", "upper"], default="lower")
        p.add_argument("--box", type=int, nargs="+", metavar="INT", help="interior region: origin coords then size")

    p = sub.add_parser("kernel", help="rank and exact diagonal of a measure (CSV columns: cell,diagonal)")
    measure_args(p)
    _common(p)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("sample", help="draw from a measure (CSV columns: cell,count,frequency,stderr)")
    measure_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--samples", type=_positive, default=1)
    p.add_argument("--float", action="store_true", help="build the kernel in double precision")
    _common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("enumerate", help="list k-bases or k-cobases (CSV columns: cells,torsion,weight)")
    p.add_argument("--complex", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--side", choices=["base", "cobase"], default="base")
    p.add_argument("--budget", type=_positive, default=None)
    p.add_argument("--list", action="store_true", help="include every record")
    _common(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("verify", help="exact identity suites; exit 1 on any violation")
    vs = p.add_subparsers(dest="suite", required=True)
    q = vs.add_parser("kalai", help="weighted base count of a simplex skeleton")
    q.add_argument("--n", type=_positive, required=True)
    q.add_argument("--k", type=_positive, default=2)
    for name in ("key", "count"):
        q = vs.add_parser(name, help=f"top-dimensional {name} identity over all pairs")
        q.add_argument("--complex", required=True)
    q = vs.add_parser("oracle", help="base probabilities by three routes")
    q.add_argument("--complex", required=True)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--side", choices=["lower", "upper"], default="lower")
    q = vs.add_parser("duality", help="square torus against its dual")
    q.add_argument("--n", type=_positive, required=True)
    q.add_argument("--no-coupling", action="store_true", help="skip the per-tree probability check")
    for q in vs.choices.values():
        q.add_argument("--budget", type=_positive, default=None)
        _common(q)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="lattice experiments (CSV columns follow the table headers)")
    es = p.add_subparsers(dest="name", required=True)
    q = es.add_parser("torus-duality", help="SVG of a lower k=1 draw and its dual cycle edges")
    q.add_argument("--n", type=_positive, default=50)
    q.add_argument("--seed", type=int, default=7)
    q.add_argument("--figure", help="SVG output path")
    q = es.add_parser("cellprob", help="exact cell probabilities against k/d")
    q.add_argument("--d", type=_positive, default=2)
    q.add_argument("--k", type=_positive, default=1)
    q.add_argument("--n", dest="n_list", type=_int_list, default=[4, 8, 16])
    q = es.add_parser("degree", help="marked-vertex degree of lower k=1 draws")
    q.add_argument("--n", type=_positive, default=12)
    q.add_argument("--samples", type=_positive, default=5000)
    q.add_argument("--seed", type=int, default=1)
    q = es.add_parser("cycle-scaling", help="cycle edges of upper k=1 draws across n")
    q.add_argument("--n", dest="n_list", type=_int_list, default=[4, 8, 16])
    q.add_argument("--samples", type=_positive, default=200)
    q.add_argument("--seed", type=int, default=1)
    for q in es.choices.values():
        _common(q)
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, ComplexFormatError, ComplexValidationError, PreconditionError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, IndexError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
