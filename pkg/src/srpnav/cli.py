"""Command-line entry point: ``srpnav run | bench | vision-selftest``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .scenario import ParseError, ValidationError, load_scenario
from .sim import PLANNERS, run_episode, trajectory_csv
from .svg import render_svg

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_target(text: str):
    """'1'..'N' selects a configured target (0-based index returned); 'x,y[,theta]' is explicit."""
    if "," in text:
        try:
            vals = [float(v) for v in text.split(",")]
        except ValueError:
            raise UsageError(f"bad target {text!r}") from None
        if len(vals) not in (2, 3):
            raise UsageError(f"target needs x,y or x,y,theta, got {text!r}")
        return vals
    try:
        k = int(text)
    except ValueError:
        raise UsageError(f"bad target {text!r}") from None
    if k < 1:
        raise UsageError("target numbers start at 1")
    return k - 1


def _load(path):
    try:
        return load_scenario(path)
    except OSError as exc:
        raise OSError(f"cannot read scenario: {exc}") from exc
    except (ParseError, ValidationError) as exc:
        raise UsageError(f"invalid scenario: {exc}") from exc


def _select(scenario, target):
    if isinstance(target, int) and target >= len(scenario.targets):
        raise UsageError(f"scenario has {len(scenario.targets)} targets")
    try:
        return scenario.with_target(target)
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write-test"
    probe.write_text("")
    probe.unlink()
    return out


def _label(target) -> str:
    if isinstance(target, int):
        return f"target{target + 1}"
    return "target_" + "_".join(f"{v:g}" for v in target)


# --- run ---------------------------------------------------------------------


def cmd_run(args) -> int:
    scenario = _select(_load(args.scenario), _parse_target(args.target))
    out = _out_dir(args.out)
    traj, m = run_episode(scenario, args.planner, max_steps=args.max_steps)
    stem = f"{args.planner}_{_label(_parse_target(args.target))}"
    (out / f"{stem}.csv").write_text(trajectory_csv(traj))
    (out / f"{stem}.svg").write_text(render_svg(scenario, [traj], [args.planner]))
    print(
        f"{args.planner}: {m.termination.value} path_length={m.path_length:.4f} m min_h={m.min_barrier:.4f} "
        f"max_domega={m.max_domega:.4f} steps={m.steps} planning_time={m.wall_time:.4f} s"
    )
    if traj.message:
        print(f"  {traj.message}")
    return EXIT_OK if m.success else EXIT_FAILURE


# --- bench -------------------------------------------------------------------


def _bench_cell(scenario, target_index: int, planner: str, repeats: int):
    sc = scenario.with_target(target_index)
    records, first = [], None
    try:
        for _ in range(repeats):
            traj, m = run_episode(sc, planner)
            first = first or traj
            records.append(m)
    except Exception as exc:  # one broken cell must not sink the whole benchmark
        return {"error": f"{type(exc).__name__}: {exc}"}, None
    return records, first


def _summarize(target_index, planner, records):
    row = {"target": target_index + 1, "planner": planner}
    if isinstance(records, dict):
        row.update(status="Error", failed=True, message=records["error"])
        return row
    m0 = records[0]
    row.update(
        status=m0.termination.value,
        failed=not m0.success,
        successes=sum(m.success for m in records),
        repeats=len(records),
        path_length=m0.path_length,
        min_h=m0.min_barrier,
        max_domega=m0.max_domega,
        steps=m0.steps,
        omega_sign_changes=m0.omega_sign_changes,
        mean_wall_time=float(np.mean([m.wall_time for m in records])),
        wall_times=[m.wall_time for m in records],
    )
    return row


def _table(rows) -> str:
    head = f"{'target':>6}  {'planner':<8} {'status':<13} {'ok':>5} {'length[m]':>10} {'min_h':>9} {'max|dw|':>8} {'steps':>6} {'wall[ms]':>9}"
    lines = [head, "-" * len(head)]
    for r in rows:
        if r["status"] == "Error":
            lines.append(f"{r['target']:>6}  {r['planner']:<8} {'Error':<13} {r['message']}")
            continue
        lines.append(
            f"{r['target']:>6}  {r['planner']:<8} {r['status']:<13} {r['successes']:>2}/{r['repeats']:<2} "
            f"{r['path_length']:>10.4f} {r['min_h']:>9.4f} {r['max_domega']:>8.4f} {r['steps']:>6} "
            f"{1e3 * r['mean_wall_time']:>9.2f}"
        )
    return "\n".join(lines) + "\n"


def cmd_bench(args) -> int:
    if args.repeats < 1:
        raise UsageError("--repeats must be at least 1")
    planners = [p.strip() for p in args.planners.split(",") if p.strip()]
    unknown = sorted(set(planners) - set(PLANNERS))
    if unknown or not planners:
        raise UsageError(f"unknown planner(s) {unknown}; choose from {', '.join(PLANNERS)}")
    scenario = _load(args.scenario)
    scenario = dataclasses.replace(scenario, sim=dataclasses.replace(scenario.sim, seed=args.seed))
    if args.target is None:
        targets = list(range(len(scenario.targets)))
    else:
        t = _parse_target(args.target)
        if not isinstance(t, int):
            scenario = _select(scenario, t)
            t = 0
        targets = [t]
    for t in targets:
        _select(scenario, t)
    out = _out_dir(args.out)

    cells = [(t, p) for t in targets for p in planners]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            futures = [pool.submit(_bench_cell, scenario, t, p, args.repeats) for t, p in cells]
            results = [f.result() for f in futures]
    else:
        results = [_bench_cell(scenario, t, p, args.repeats) for t, p in cells]

    rows = []
    by_target = {}
    for (t, p), (records, traj) in zip(cells, results):
        rows.append(_summarize(t, p, records))
        if traj is not None:
            (out / f"{p}_target{t + 1}.csv").write_text(trajectory_csv(traj))
            by_target.setdefault(t, []).append((p, traj))
    for t, items in by_target.items():
        svg = render_svg(scenario.with_target(t), [tr for _, tr in items], [p for p, _ in items])
        (out / f"bench_target{t + 1}.svg").write_text(svg)

    table = _table(rows)
    (out / "bench.txt").write_text(table)
    report = {"seed": args.seed, "repeats": args.repeats, "rows": rows}
    (out / "bench.json").write_text(json.dumps(report, indent=2) + "\n")
    sys.stdout.write(table)
    return EXIT_OK


# --- vision ------------------------------------------------------------------


def cmd_vision_selftest(args) -> int:
    from .vision.selftest import format_report, run_selftest

    if args.noise < 0:
        raise UsageError("--noise must be non-negative")
    results = run_selftest(args.seed, args.noise)
    report = format_report(results)
    if args.out:
        out = _out_dir(args.out)
        (out / "vision_selftest.txt").write_text(report)
    sys.stdout.write(report)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="srpnav", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one episode and write CSV + SVG")
    run.add_argument("--scenario", default=None, help="scenario YAML (default: bundled room)")
    run.add_argument("--planner", choices=PLANNERS, default="clf-cbf")
    run.add_argument("--target", default="3", help="target number (1-based) or x,y[,theta]")
    run.add_argument("--max-steps", type=int, default=None)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default=".")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="run every (target, planner) cell and tabulate")
    bench.add_argument("--scenario", default=None)
    bench.add_argument("--planners", "--planner", dest="planners", default=",".join(PLANNERS))
    bench.add_argument("--target", default=None, help="restrict to one target")
    bench.add_argument("--repeats", type=int, default=10)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--out", default="bench")
    bench.set_defaults(func=cmd_bench)

    vis = sub.add_parser("vision-selftest", help="run the synthetic vision checks")
    vis.add_argument("--seed", type=int, default=0)
    vis.add_argument("--noise", type=float, default=0.5, help="pixel noise sigma for the RANSAC scene")
    vis.add_argument("--out", default=None)
    vis.set_defaults(func=cmd_vision_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"srpnav: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"srpnav: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
