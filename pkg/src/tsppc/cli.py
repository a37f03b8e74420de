"""``tsppc`` command line.

Exit codes: 0 ok, 1 infeasible tour or failed validation, 2 usage error,
3 I/O or parse error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import bench as benchmod
from .exact import DEFAULT_NODE_LIMIT, InstanceTooLarge, exact_oracle
from .formats import ParseError, load_instance, load_tour, read_tsplib, save_instance, write_tour
from .generator import PAIRINGS, Direction, GeneratorConfig, generate
from .heuristics import ARC_RULES, achci, nearest_neighbor
from .milp import ExportError, build_model
from .model import DEFAULT_METRIC, METRICS, InstanceError, Tour, TourStructureError, validate_tour

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _fail(code: int, message: str) -> int:
    print(f"tsppc: {message}", file=sys.stderr)
    return code


def _write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _with_suffix(path: str, label: str) -> str:
    p = Path(path)
    return str(p.with_name(f"{p.stem}.{label}{p.suffix}"))


def cmd_gen(args) -> int:
    cloud = read_tsplib(args.tsplib)
    config = GeneratorConfig(Direction.parse(args.direction), metric=args.metric, pairing=args.pairing)
    instance = generate(cloud, config, name=args.name)
    save_instance(instance, args.output)
    print(f"{instance.name}: {instance.n_locations + 1} nodes, {len(instance.commodities)} commodities "
          f"-> {args.output}")
    return EXIT_OK


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    tours: list[Tour] = []
    if args.method in ("nn", "both"):
        tours.append(nearest_neighbor(instance))
    if args.method in ("achci", "both"):
        tours.append(achci(instance, arc_rule=args.arc_rule))
    for tour in tours:
        print(f"{tour.heuristic}: cost {tour.cost:.10g} ({instance.metric})")
        if args.tour_out:
            path = args.tour_out if len(tours) == 1 else _with_suffix(args.tour_out, tour.heuristic)
            _write_text(path, write_tour(tour, instance))
    if len(tours) == 2:
        nn, ac = tours
        print(f"delta: {100.0 * (ac.cost - nn.cost) / nn.cost:+.2f}%")
    return EXIT_OK


def cmd_exact(args) -> int:
    instance = load_instance(args.instance)
    try:
        result = exact_oracle(instance, node_limit=args.limit)
    except InstanceTooLarge as exc:
        raise UsageError(f"{exc}; raise --limit to try anyway") from exc
    print(f"exact: cost {result.tour.cost:.10g} ({instance.metric}), {result.states} states")
    print(" ".join(map(str, result.tour.order)))
    if args.tour_out:
        _write_text(args.tour_out, write_tour(result.tour, instance))
    return EXIT_OK


def cmd_export_milp(args) -> int:
    instance = load_instance(args.instance)
    warm = None
    if args.warm_start:
        doc = load_tour(args.warm_start)
        report = validate_tour(instance, doc.order)
        if not report.feasible:
            return _fail(EXIT_INFEASIBLE, f"warm start rejected: {report.describe()}")
        warm = Tour.build(instance, doc.order, "warm-start")
    try:
        model = build_model(instance, warm, subtour="mtz" if args.mtz else "dfj",
                            sparse_lambda=args.sparse_lambda)
    except ExportError as exc:
        raise UsageError(str(exc)) from exc
    with open(args.output, "w", encoding="utf-8") as fh:
        for chunk in model.iter_lp():
            fh.write(chunk)
    print(f"model: {len(model.variables)} variables, {len(model.constraints)} rows -> {args.output}")
    if warm is not None:
        mst = args.start_out or str(Path(args.output).with_suffix(".mst"))
        _write_text(mst, model.start_to_mst())
        print(f"warm start -> {mst}")
    return EXIT_OK


def cmd_validate(args) -> int:
    instance = load_instance(args.instance)
    doc = load_tour(args.tour)
    report = validate_tour(instance, doc.order)
    print(report.describe())
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def _directions(value: str) -> list[Direction]:
    if value == "both":
        return [Direction.CHILDREN_CENTRAL, Direction.PARENTS_CENTRAL]
    return [Direction.parse(value)]


def cmd_bench(args) -> int:
    files = benchmod.corpus_files(args.tsplib_dir)
    try:
        workers = benchmod.worker_count()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    records = benchmod.bench_corpus(
        files, _directions(args.directions), metric=args.metric, pairing=args.pairing,
        arc_rule=args.arc_rule, repeats=args.repeats, workers=workers, tour_dir=args.tour_dir,
    )
    benchmod.write_bench_csv(args.out, records, scientific=args.scientific)
    timing_out = args.timing_out or _with_suffix(args.out, "timing")
    benchmod.write_timing_csv(timing_out, records)
    for r in records:
        print(f"{r.instance:>16} {r.direction:<16} n={r.nodes:<5} nn {r.nn_cost:.4g}  "
              f"achci {r.achci_cost:.4g}  {r.delta_percent:+.1f}%")
    print(f"{len(records)} records -> {args.out}; timings -> {timing_out}")
    return EXIT_OK


def cmd_timing(args) -> int:
    sizes = args.sizes
    if len(set(sizes)) < 2:
        raise UsageError("need at least two distinct sizes")
    points, fit = benchmod.timing_study(sizes, seed=args.seed, repeats=args.repeats,
                                        arc_rule=args.arc_rule, metric=args.metric)
    for p in points:
        print(f"n={p.nodes:<5} nn {p.nn_time:.4f}s  achci {p.achci_time:.4f}s")
    print(fit.describe())
    if args.out:
        benchmod.write_timing_study_csv(args.out, points)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsppc", description="TSP with precedence constraints toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def metric_opt(p, default=DEFAULT_METRIC):
        p.add_argument("--metric", choices=METRICS, default=default)

    def arc_opt(p):
        p.add_argument("--arc-rule", choices=ARC_RULES, default="added-cost",
                       help="how ACHCI picks each node's insertion arc")

    p = sub.add_parser("gen", help="generate an instance from a TSPLIB point cloud")
    p.add_argument("--tsplib", required=True)
    p.add_argument("--direction", required=True, choices=["children", "parents"])
    metric_opt(p)
    p.add_argument("--pairing", choices=PAIRINGS, default="halves")
    p.add_argument("--name")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="build tours with NN and/or ACHCI")
    p.add_argument("--instance", required=True)
    p.add_argument("--method", choices=["achci", "nn", "both"], default="both")
    arc_opt(p)
    p.add_argument("--tour-out", help="tour file; with --method both, .nn/.achci is inserted before the suffix")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("exact", help="optimal tour by dynamic programming")
    p.add_argument("--instance", required=True)
    p.add_argument("--limit", type=int, default=DEFAULT_NODE_LIMIT, help="maximum number of locations")
    p.add_argument("--tour-out")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("export-milp", help="write the MILP in LP format")
    p.add_argument("--instance", required=True)
    p.add_argument("--warm-start", help="tour file used as MIP start")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--start-out", help="MIP start file (default: output with .mst suffix)")
    p.add_argument("--mtz", action="store_true", help="order variables instead of subset cuts")
    p.add_argument("--sparse-lambda", action="store_true",
                   help="omit product variables on arcs that are fixed to zero or leave the depot")
    p.set_defaults(func=cmd_export_milp)

    p = sub.add_parser("validate", help="check a tour by simulating payloads")
    p.add_argument("--instance", required=True)
    p.add_argument("--tour", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="NN vs ACHCI over a directory of TSPLIB files")
    p.add_argument("--tsplib-dir", required=True)
    p.add_argument("--directions", choices=["children", "parents", "both"], default="both")
    p.add_argument("--out", required=True)
    p.add_argument("--timing-out", help="timing CSV (default: <out>.timing.csv)")
    p.add_argument("--tour-dir", help="also write every tour here")
    p.add_argument("--scientific", action="store_true",
                   help="costs as 3 significant digits in scientific notation")
    p.add_argument("--repeats", type=int, default=benchmod.DEFAULT_REPEATS)
    metric_opt(p)
    p.add_argument("--pairing", choices=PAIRINGS, default="halves")
    arc_opt(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("timing", help="ACHCI wall time against n^3 on random clouds")
    p.add_argument("--sizes", type=int, nargs="+", default=list(benchmod.DEFAULT_TIMING_SIZES))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=benchmod.DEFAULT_REPEATS)
    p.add_argument("--out")
    metric_opt(p)
    arc_opt(p)
    p.set_defaults(func=cmd_timing)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except (OSError, ParseError, InstanceError, TourStructureError) as exc:
        return _fail(EXIT_IO, str(exc))


if __name__ == "__main__":
    sys.exit(main())
