"""Command-line entry point: ``plan``, ``cruise``, ``compare``, ``sweep``
and ``render``.

Exit codes: 0 success, 1 map parse error, 2 unreachable goal, 3 bad flags
or invalid experiment spec.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path as FilePath

import numpy as np

from .bayes import CruiseSettings, FactorWeights, run_cruises
from .colony import AcoConfig, Topology, optimize, run_colony
from .field import snapshot_csv
from .grid import GridMap, MapParseError, UnreachableGoalError, check_reachable, load_map
from .harness import (
    ExperimentSpec,
    SpecError,
    load_spec,
    resolve_map,
    run_experiment,
    spec_from_values,
    sweep,
)
from .render import OVERLAYS, RenderStyle, render_heatmap, render_map

EXIT_PARSE, EXIT_UNREACHABLE, EXIT_USAGE = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _weights(text: str) -> FactorWeights:
    try:
        return FactorWeights.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add_common(p: argparse.ArgumentParser, *, spec_defaults: bool = False) -> None:
    p.add_argument("--map", help="ASCII .grid file (or the name of a bundled map)")
    algos = ["baseline", "improved", "both"] if spec_defaults else ["baseline", "improved"]
    p.add_argument("--algo", choices=algos, default=None if spec_defaults else "baseline")
    p.add_argument("--seed", type=int)
    p.add_argument("--ants", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--evaporation", type=float)
    p.add_argument("--rounds", type=int)
    p.add_argument("--weights", type=_weights, metavar="L1,L2,L3,L4")
    p.add_argument("--out", default=".", help="output directory (default: current)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bayes-aco", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", help="plan a start-to-goal path")
    _add_common(p)

    p = sub.add_parser("cruise", help="multi-round irrigation cruise")
    _add_common(p)
    p.set_defaults(algo="improved")

    for name, helptext in (("compare", "baseline vs improved experiment"),
                           ("sweep", "parameter sweep over an experiment")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("spec", nargs="?", help="experiment spec file (key = value)")
        p.add_argument("--spec", dest="spec_flag", help="experiment spec file")
        _add_common(p, spec_defaults=True)
        p.add_argument("--replicates", type=int)
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        if name == "sweep":
            p.add_argument("--param", required=True)
            p.add_argument("--values", required=True, help="comma-separated values")

    p = sub.add_parser("render", help="render a map or an overlay as a P3 image")
    _add_common(p)
    p.add_argument("--overlay", choices=("none", *OVERLAYS), default="none")
    p.add_argument("--intensities", help="CSV grid of intensities to draw instead of running a planner")
    p.add_argument("--cell-size", type=int, default=8)
    return parser


def _grid(path) -> GridMap:
    if path is None:
        raise UsageError("--map is required")
    try:
        resolved = resolve_map(path)
    except SpecError as exc:
        raise UsageError(str(exc)) from exc
    return load_map(resolved)


def _config(args) -> AcoConfig:
    values = {
        k: getattr(args, k)
        for k in ("ants", "generations", "alpha", "beta", "q", "evaporation", "seed")
        if getattr(args, k) is not None
    }
    return AcoConfig(**values)


def _path_csv(path) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "x", "y"])
    for i, (r, c) in enumerate(path.cells):
        w.writerow([i, c, r])
    return buf.getvalue()


def _outdir(args) -> FilePath:
    out = FilePath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cruise(args, grid):
    settings = CruiseSettings(weights=args.weights or FactorWeights())
    return run_cruises(
        grid, args.rounds or 1, settings.weights, _config(args), None, settings, args.algo
    )


def cmd_plan(args) -> int:
    grid = _grid(args.map)
    out = _outdir(args)
    rounds = args.rounds or 1
    if rounds < 1:
        raise UsageError("--rounds must be >= 1")
    if rounds == 1 and args.algo == "baseline":
        path, conv = optimize(grid, _config(args))
        (out / "path.csv").write_text(_path_csv(path))
        (out / "convergence.csv").write_text(conv.to_csv())
        print(f"length {path.length:.6f}")
        return 0
    check_reachable(grid)
    report = _cruise(args, grid)
    for rec in report.rounds:
        name = "path.csv" if rounds == 1 else f"path_round{rec.round}.csv"
        (out / name).write_text(_path_csv(rec.path))
        print(f"round {rec.round} length {rec.path.length:.6f}")
    return 0


def cmd_cruise(args) -> int:
    grid = _grid(args.map)
    out = _outdir(args)
    if args.rounds is not None and args.rounds < 1:
        raise UsageError("--rounds must be >= 1")
    check_reachable(grid)
    report = _cruise(args, grid)
    (out / "cruise_report.csv").write_text(report.to_csv())
    (out / "irrigation_grid.csv").write_text(report.irrigation_grid_csv())
    (out / "state.csv").write_text(snapshot_csv(report.state, grid))
    for rec in report.rounds:
        (out / f"path_round{rec.round}.csv").write_text(_path_csv(rec.path))
        print(f"round {rec.round} length {rec.path.length:.6f} coverage {rec.coverage:.6f}")
    return 0


def _spec(args) -> ExperimentSpec:
    source = args.spec_flag or args.spec
    overrides = {}
    for flag, key in (("ants", "ants"), ("generations", "generations"), ("alpha", "alpha"),
                      ("beta", "beta"), ("q", "q"), ("evaporation", "evaporation"),
                      ("rounds", "rounds"), ("weights", "weights"), ("seed", "seed_base"),
                      ("replicates", "replicates"), ("algo", "algorithm")):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = value
    if args.map is not None:
        overrides["map"] = args.map
    try:
        if source is None:
            if "map" not in overrides:
                raise UsageError("give a spec file or --map")
            return spec_from_values(overrides)
        spec = load_spec(source)
        return spec.with_overrides(**overrides) if overrides else spec
    except SpecError as exc:
        raise UsageError(str(exc)) from exc


def cmd_compare(args) -> int:
    spec = _spec(args)
    out = _outdir(args)
    report = run_experiment(spec, out, jobs=args.jobs)
    for name, arm in report.arms.items():
        print(
            f"{name}: best length {arm.best_length.mean():.6f} ± {arm.best_length.std():.6f}, "
            f"info/length {arm.info_per_length:.6f}, final coverage {arm.coverage[:, -1].mean():.6f}"
        )
    if len(report.arms) == 2:
        print(f"info gain {report.info_gain():.6f}, length ratio {report.length_inflation():.6f}")
    return 0


def _sweep_value(param: str, text: str):
    if param in ("M", "K", "rounds"):
        return int(text)
    return float(text)


def cmd_sweep(args) -> int:
    spec = _spec(args)
    out = _outdir(args)
    try:
        values = [_sweep_value(args.param, v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --values: {exc}") from exc
    try:
        results = sweep(spec, args.param, values, out, jobs=args.jobs)
    except SpecError as exc:
        raise UsageError(str(exc)) from exc
    for value, report in results:
        parts = [f"{n} {a.best_length.mean():.6f}" for n, a in report.arms.items()]
        print(f"{args.param}={value}: " + ", ".join(parts))
    return 0


def _read_grid_csv(path) -> np.ndarray:
    try:
        rows = list(csv.reader(FilePath(path).read_text().splitlines()))
        return np.array([[float(v) for v in row] for row in rows if row], dtype=float)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read intensities from {path}: {exc}") from exc


def cmd_render(args) -> int:
    grid = _grid(args.map)
    out = _outdir(args)
    overlay = "irrigation" if args.overlay == "none" else args.overlay
    try:
        style = RenderStyle(cell_size=args.cell_size, overlay=overlay)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    (out / "map.ppm").write_text(render_map(grid, style))
    written = ["map.ppm"]
    if args.intensities:
        values = _read_grid_csv(args.intensities)
        (out / "heatmap.ppm").write_text(render_heatmap(grid, values, style))
        written.append("heatmap.ppm")
    elif args.overlay != "none":
        check_reachable(grid)
        if args.overlay == "path":
            if args.algo == "baseline":
                path, _ = optimize(grid, _config(args))
            else:
                path = _cruise(args, grid).rounds[-1].path
            doc = render_map(grid, style, path=path)
        elif args.overlay == "pheromone":
            tau = run_colony(grid, _config(args), Topology(grid)).field.tau
            doc = render_heatmap(grid, tau.sum(axis=1).reshape(grid.cells.shape), style)
        else:
            report = _cruise(args, grid)
            values = report.irrigation_count if args.overlay == "irrigation" else report.state.drought
            doc = render_heatmap(grid, values, style)
        (out / f"{args.overlay}.ppm").write_text(doc)
        written.append(f"{args.overlay}.ppm")
    print("wrote " + ", ".join(written))
    return 0


COMMANDS = {
    "plan": cmd_plan, "cruise": cmd_cruise, "compare": cmd_compare,
    "sweep": cmd_sweep, "render": cmd_render,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help or a flag error
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except MapParseError as exc:
        print(f"map parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UnreachableGoalError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_UNREACHABLE
    except (UsageError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
