"""Command-line front end.

Exit codes: 0 success, 1 a check failed, 2 bad usage or parameters outside a
formula's domain.  Reports are JSON (default) or CSV, UTF-8 with LF endings,
written to ``--out`` or standard output.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import contraction, lemmas, trees
from .decay import run_decay
from .errors import BethemixError, CapExceeded, Unsatisfiable, ZeroDenominator
from .messages import Message, update

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_int_list(text: str) -> list[int]:
    """``"4,5,6"``, ``"3..10"`` or a mix such as ``"2,4..6"``."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return out


def _int_list(text):
    try:
        return parse_int_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# -- output ----------------------------------------------------------------------

def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _dump_csv(header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _csv_cell(r.get(k)) for k in header})
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _emit(args, text: str) -> None:
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _finite(x):
    return x if x is None or math.isfinite(x) else None


# -- oracle-check -------------------------------------------------------------------

def corrupted_update(children, q=None):
    """A deliberately wrong update: the correct result rotated by one color."""
    m = update(children, q)
    return Message(m.entries[1:] + m.entries[:1])


def _compare_instance(tree, boundary, q, exact, cap, update_fn) -> dict:
    """Compare the recursion with enumeration on one instance."""
    try:
        truth = trees.brute_force_message(tree, boundary, q, cap=cap)
    except Unsatisfiable:
        truth = None
    try:
        got = trees.propagate(tree, boundary, q, exact=exact, update_fn=update_fn)
    except ZeroDenominator:
        got = None
    if truth is None and got is None:
        return {"status": "unsatisfiable"}
    if truth is None or got is None:
        return {"status": "mismatch", "expected": truth and truth.to_json()["entries"],
                "got": got and got.to_json()["entries"]}
    if exact:
        same = got.entries == truth.entries
    else:
        same = all(abs(float(x) - float(y)) <= 1e-12 for x, y in zip(got, truth))
    if not same:
        return {"status": "mismatch", "expected": truth.to_json()["entries"],
                "got": got.to_json()["entries"]}
    return {"status": "match"}


def cmd_oracle_check(args) -> int:
    exact = args.mode == "rational"
    update_fn = corrupted_update if args.corrupt_update else update
    b = args.b[0]
    cases = []
    if args.tree:
        text = Path(args.tree).read_text(encoding="utf-8")
        tree, boundary, q = trees.loads_instance(text)
        cases.append((str(args.tree), tree, boundary, q))
    else:
        save = Path(args.save_instances) if args.save_instances else None
        if save:
            save.mkdir(parents=True, exist_ok=True)
        for q in args.q:
            for i in range(args.instances):
                rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(q, b, i)))
                depth = int(rng.integers(1, args.depth + 1)) if args.random_depth else args.depth
                tree, boundary = trees.random_level_instance(q, b, depth, rng, cap=args.cap)
                name = f"q{q}_b{b}_{i:04d}"
                if save:
                    (save / f"{name}.json").write_text(
                        trees.dumps_instance(tree, boundary, q), encoding="utf-8", newline="\n")
                cases.append((name, tree, boundary, q))

    counts = {"match": 0, "mismatch": 0, "unsatisfiable": 0, "cap_exceeded": 0}
    mismatches = []
    for name, tree, boundary, q in cases:
        try:
            res = _compare_instance(tree, boundary, q, exact, args.cap, update_fn)
        except CapExceeded:
            res = {"status": "cap_exceeded"}
        counts[res["status"]] += 1
        if res["status"] == "mismatch":
            mismatches.append({"instance": name, **{k: v for k, v in res.items() if k != "status"}})
    passed = counts["mismatch"] == 0 and counts["cap_exceeded"] == 0
    report = {"command": "oracle-check", "q": args.q, "b": b, "depth": args.depth,
              "seed": args.seed, "mode": args.mode, "instances": len(cases), **counts,
              "mismatches": mismatches, "passed": passed}
    if args.format == "csv":
        _emit(args, _dump_csv(["instances", "match", "mismatch", "unsatisfiable",
                               "cap_exceeded", "passed"], [report]))
    else:
        _emit(args, _dump_json(report))
    return EXIT_OK if passed else EXIT_FAIL


# -- verify ------------------------------------------------------------------------

VERIFY_COLUMNS = ["lemma_id", "q", "b", "samples", "violations", "worst_margin",
                  "exact_rechecks", "passed"]


def cmd_verify(args) -> int:
    if args.all == bool(args.lemma):
        raise UsageError("give exactly one of --all or --lemma")
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    selected = list(lemmas.LEMMAS) if args.all else []
    for spec in args.lemma or []:
        for name in spec.split(","):
            if name.strip():
                selected.append(lemmas.resolve_lemma(name).id)
    reports, skipped = [], []
    for lemma_id in selected:
        for q in args.q:
            for b in args.b:
                if not lemmas.LEMMAS[lemma_id].regime(q, b):
                    if args.all:
                        skipped.append({"lemma_id": lemma_id, "q": q, "b": b})
                        continue
                    lemmas.check_regime(lemma_id, q, b)
                r = lemmas.verify_lemma(lemma_id, q, b, args.samples, args.seed,
                                        p_edge=args.p_edge, mode=args.mode)
                d = r.to_json()
                d["worst_margin"] = _finite(d["worst_margin"])
                reports.append(d)
    passed = all(r["passed"] for r in reports)
    if args.format == "csv":
        _emit(args, _dump_csv(VERIFY_COLUMNS, reports))
    else:
        _emit(args, _dump_json({"command": "verify", "seed": args.seed, "samples": args.samples,
                                "p_edge": args.p_edge, "mode": args.mode, "reports": reports,
                                "skipped": skipped, "passed": passed}))
    return EXIT_OK if passed else EXIT_FAIL


# -- tables ------------------------------------------------------------------------

TABLE_COLUMNS = ["q", "b", "kappa", "threshold_q", "contracts"]


def _b_values(args) -> list[int]:
    if args.b_range:
        lo, hi = args.b_range
        values = list(range(lo, hi + 1))
    else:
        values = args.b
    if not values or min(values) < 2 or max(values) > 10_000:
        raise UsageError("b values must lie in 2..10000")
    return values


def cmd_contraction_table(args) -> int:
    rows = contraction.contraction_table(_b_values(args))
    if args.format == "csv":
        _emit(args, _dump_csv(TABLE_COLUMNS, rows))
    else:
        _emit(args, _dump_json({"command": "contraction-table", "c": contraction.solve_c(1e-12),
                                "rows": rows}))
    return EXIT_OK


def cmd_threshold(args) -> int:
    rows = []
    for b in _b_values(args):
        t = contraction.threshold_q(b)
        rows.append({"b": b, "threshold_q": t, "kappa_at_threshold": contraction.kappa(t, b),
                     "min_contracting_q": contraction.min_contracting_q(b), "g": contraction.g(b)})
    if args.format == "csv":
        _emit(args, _dump_csv(["b", "threshold_q", "kappa_at_threshold", "min_contracting_q", "g"], rows))
    else:
        _emit(args, _dump_json({"command": "threshold", "c": contraction.solve_c(1e-12), "rows": rows}))
    return EXIT_OK


def cmd_solve_c(args) -> int:
    c = contraction.solve_c(args.tolerance)
    row = {"c": c, "tolerance": args.tolerance, "residual": c - math.exp(1 / c)}
    if args.format == "csv":
        _emit(args, _dump_csv(["c", "tolerance", "residual"], [row]))
    else:
        _emit(args, _dump_json({"command": "solve-c", **row}))
    return EXIT_OK


# -- decay -------------------------------------------------------------------------

DECAY_COLUMNS = ["d", "trials", "max_message_l1", "mean_message_l1", "max_marginal_l1",
                 "envelope", "within_envelope", "marginal_to_message"]


def cmd_decay(args) -> int:
    q, b = args.q[0], args.b[0]
    depth = args.depth if args.depth is not None else (12 if b == 2 else 8)
    distances = args.distances if args.distances else list(range(min(3, depth), depth + 1))
    report = run_decay(q, b, depth, distances, trials=args.trials, seed=args.seed,
                       mode=args.mode, delta_size=args.delta_size, fit_tolerance=args.fit_tolerance)
    if args.format == "csv":
        _emit(args, _dump_csv(DECAY_COLUMNS, report.records))
    else:
        _emit(args, _dump_json({"command": "decay", **report.to_json()}))
    return EXIT_OK if report.passed else EXIT_FAIL


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="bethemix", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    o = sub.add_parser("oracle-check", parents=[common],
                       help="compare the message recursion with exhaustive counting")
    o.add_argument("--q", type=_int_list, default=[4])
    o.add_argument("--b", type=_int_list, default=[2])
    o.add_argument("--depth", type=int, default=2)
    o.add_argument("--random-depth", action="store_true",
                   help="draw each instance's depth from 1..--depth")
    o.add_argument("--instances", "--samples", dest="instances", type=int, default=100)
    o.add_argument("--cap", type=int, default=trees.DEFAULT_ENUM_CAP,
                   help="largest number of free vertices to enumerate")
    o.add_argument("--mode", choices=("rational", "float"), default="rational")
    o.add_argument("--tree", help="check one instance file instead of random ones")
    o.add_argument("--save-instances", metavar="DIR", help="also write each instance as JSON")
    o.add_argument("--corrupt-update", action="store_true", help=argparse.SUPPRESS)
    o.set_defaults(func=cmd_oracle_check)

    v = sub.add_parser("verify", parents=[common], help="randomized lemma verification")
    v.add_argument("--lemma", action="append", help="lemma id or alias (repeatable, comma lists ok)")
    v.add_argument("--all", action="store_true", help="every lemma, skipping out-of-regime points")
    v.add_argument("--q", type=_int_list, default=[4, 5, 6, 8])
    v.add_argument("--b", type=_int_list, default=[2])
    v.add_argument("--samples", type=int, default=100_000)
    v.add_argument("--p-edge", type=float, default=lemmas.P_EDGE)
    v.add_argument("--mode", choices=("float", "rational"), default="float")
    v.set_defaults(func=cmd_verify)

    for name, func, text in (("contraction-table", cmd_contraction_table, "kappa around threshold_q(b)"),
                             ("threshold", cmd_threshold, "threshold_q(b) and the smallest contracting q")):
        t = sub.add_parser(name, parents=[common], help=text)
        t.add_argument("--b", type=_int_list, default=list(range(2, 11)))
        t.add_argument("--b-range", type=int, nargs=2, metavar=("LO", "HI"))
        t.set_defaults(func=func)

    d = sub.add_parser("decay", parents=[common], help="spatial-mixing decay experiment")
    d.add_argument("--q", type=_int_list, default=[5])
    d.add_argument("--b", type=_int_list, default=[2])
    d.add_argument("--depth", type=int)
    d.add_argument("--distances", type=_int_list, help="e.g. 3..10 (default 3..depth)")
    d.add_argument("--trials", type=int, default=50)
    d.add_argument("--mode", choices=("float", "rational"), default="float")
    d.add_argument("--delta-size", type=int, default=1, help="boundary nodes that differ (0: none)")
    d.add_argument("--fit-tolerance", type=float, default=0.1)
    d.set_defaults(func=cmd_decay)

    s = sub.add_parser("solve-c", parents=[common], help="root of c = exp(1/c)")
    s.add_argument("--tolerance", type=float, default=1e-12)
    s.set_defaults(func=cmd_solve_c)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, BethemixError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"bethemix {args.command}: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
