"""Command-line pipeline: gen, verify, run, score, consensus, solve.

Stages communicate only through files, so any stage can be re-run (or
re-scored offline) from what the previous stages wrote. Exit codes:
0 success, 1 verification/score failure, 2 usage, 3 transport.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__, benchgen, client, plots, scoring, solvers
from .errors import (CapacityError, ConfigError, FormulaParseError,
                     InputError, TransportError, UsageError)
from .graphs import SignedCoherenceGraph, convergence_curve, median_consensus
from .propositions import REGIMES, render_formula, verify_model

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_TRANSPORT = 3


def _load_json(path, what: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"{what} not found: {path}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} is not valid JSON ({path}): {exc}")


def cmd_gen(args) -> int:
    data = _load_json(args.config, "config") if args.config else {}
    try:
        config = benchgen.GenConfig.from_json_dict(data)
    except (TypeError, InputError) as exc:
        raise UsageError(f"bad generation config: {exc}")
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    out = Path(args.out)
    if out.exists() and any(out.iterdir()):
        if not args.force:
            raise UsageError(f"output directory {out} is not empty "
                             f"(use --force to overwrite)")
        for stale in out.glob("*.json"):
            stale.unlink()
    problems = benchgen.generate_benchmark(config)
    benchgen.write_benchmark(problems, out, config)
    sparse = sum(1 for p in problems if p.meta["sparsity"] == "sparse")
    print(f"wrote {len(problems)} problems ({sparse} sparse, "
          f"{len(problems) - sparse} dense) to {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    bench = Path(args.bench_dir)
    manifest_path = bench / "manifest.json"
    if not manifest_path.exists():
        raise UsageError(f"no manifest.json under {bench}")
    manifest = _load_json(manifest_path, "manifest")
    bad = checked = 0
    for entry in manifest["problems"]:
        data = _load_json(bench / entry["file"], "problem")
        try:
            problem = benchgen.BenchmarkProblem.from_json_dict(data)
        except (InputError, FormulaParseError, KeyError) as exc:
            bad += 1
            print(f"FAIL {entry['id']}: problem does not load: {exc}")
            continue
        for regime in sorted(problem.variants):
            checked += 1
            ps = problem.variants[regime]
            stored = data["variants"][regime]["rendered"]
            for vertex, clauses in sorted(ps.formulas.items()):
                if render_formula(clauses) != stored.get(vertex):
                    bad += 1
                    print(f"FAIL {problem.id}/{regime}: rendered text for "
                          f"{vertex!r} does not match its formula")
            report = verify_model(problem.graph, ps)
            if not report.ok:
                bad += 1
                for pair, expected, got in report.mismatches:
                    print(f"FAIL {problem.id}/{regime}: pair {pair} expected "
                          f"{expected} got {got}")
    if bad:
        print(f"{bad} failure(s) across {checked} variants")
        return EXIT_FAILURE
    print(f"verified {len(manifest['problems'])} problems, "
          f"{checked} variants: all ok")
    return EXIT_OK


def _select_regimes(arg) -> list[str]:
    if not arg:
        return list(REGIMES)
    requested = [r.strip() for r in arg.split(",") if r.strip()]
    for r in requested:
        if r not in REGIMES:
            raise UsageError(f"unknown regime {r!r} (choose from {REGIMES})")
    return requested


def cmd_run(args) -> int:
    problems = benchgen.load_benchmark(args.bench_dir)
    regimes = _select_regimes(args.regime)
    tasks = []
    for problem in problems:
        for regime in regimes:
            bundle = client.build_benchmark_prompt(problem, regime)
            for attempt in range(args.attempts):
                tasks.append(client.RunTask(bundle, attempt))
    if args.dry_run:
        for task in tasks:
            print(f"--- {task.bundle.problem_id} {task.bundle.regime} "
                  f"attempt {task.attempt}")
            print(task.bundle.text)
        return EXIT_OK
    if not args.endpoint:
        raise UsageError("--endpoint is required unless --dry-run")
    config = client.EndpointConfig.from_file(args.endpoint)
    store = client.ResponseStore(args.out)
    completed, skipped, failures = client.run_bundles(
        tasks, config, store, resume=not args.force)
    print(f"completed {completed}, skipped {skipped} existing, "
          f"{len(failures)} failed")
    if failures:
        for task, exc in failures[:10]:
            print(f"  {task.bundle.problem_id}/{task.bundle.regime}"
                  f"#{task.attempt}: {exc}", file=sys.stderr)
        raise TransportError(f"{len(failures)} attempts failed",
                             attempts=[repr(e) for _, e in failures])
    return EXIT_OK


def cmd_score(args) -> int:
    problems = {p.id: p for p in benchgen.load_benchmark(args.bench_dir)}
    store = client.ResponseStore(args.run_dir)
    reports = []
    for record in store.iter_records():
        problem = problems.get(record["problem_id"])
        if problem is None:
            raise UsageError(f"run references unknown problem "
                             f"{record['problem_id']!r}")
        reports.append(scoring.score_attempt(
            problem.graph, record["raw_text"], record["problem_id"],
            record.get("model", "unknown"), record.get("regime", "base"),
            problem.meta.get("sparsity", "")))
    if not reports:
        raise UsageError(f"no responses under {args.run_dir}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scoring.write_reports_csv(reports, out / "reports.csv")
    rows = scoring.aggregate(reports)
    scoring.write_summary_csv(rows, out / "summary.csv")
    plots.render_summary_figure(rows, out / "summary.png")
    excluded = sum(1 for r in reports if r.excluded)
    print(f"scored {len(reports)} attempts ({excluded} excluded as "
          f"hallucinated); wrote reports.csv, summary.csv, summary.png")
    return EXIT_OK


def cmd_consensus(args) -> int:
    problem = benchgen.load_problem(args.bench_dir, args.problem)
    store = client.ResponseStore(args.run_dir)
    records = store.attempts_for(args.problem, args.regime)
    if not records:
        raise UsageError(f"no responses for {args.problem}/{args.regime} "
                         f"under {args.run_dir}")
    graphs = []
    for record in records:
        raw, _failed = scoring.parse_edge_list(record["raw_text"])
        graph, _flags = scoring.postprocess(raw, problem.graph.vertices)
        graphs.append(graph)
    consensus = median_consensus(graphs)
    sizes = [int(s) for s in args.subsample.split(",")] if args.subsample \
        else [len(graphs)]
    for n in sizes:
        if n > len(graphs):
            raise UsageError(f"subsample size {n} exceeds the "
                             f"{len(graphs)} stored responses")
    curve = convergence_curve(graphs, sizes, args.trials, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "consensus.json").write_text(
        json.dumps(consensus.to_json_dict(), indent=2, sort_keys=True) + "\n")
    with open(out / "convergence.csv", "w") as fh:
        fh.write("n,trial,distance\n")
        for n, dists in curve:
            for t, d in enumerate(dists):
                fh.write(f"{n},{t},{d:.6f}\n")
    plots.render_convergence_figure(curve, out / "convergence.png")
    print(f"consensus over {len(graphs)} responses; wrote consensus.json, "
          f"convergence.csv, convergence.png")
    return EXIT_OK


def cmd_solve(args) -> int:
    data = _load_json(args.graph, "graph file")
    graph = SignedCoherenceGraph.from_json_dict(data)
    schedule = None
    if args.method == "anneal" and args.steps:
        schedule = solvers.AnnealSchedule(args.t0, args.t_end, args.steps)
    cut = solvers.solve(graph, args.method, seed=args.seed,
                        restarts=args.restarts, schedule=schedule)
    payload = json.dumps(cut.to_json_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(payload)
        print(f"wrote {args.out}")
    else:
        print(payload, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cohbench",
        description="Generate, solve, and benchmark signed coherence graphs.")
    parser.add_argument("--version", action="version",
                        version=f"cohbench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a benchmark directory")
    p.add_argument("--config", help="generation config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--force", action="store_true",
                   help="overwrite a non-empty output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="check every problem variant models "
                                      "its graph")
    p.add_argument("bench_dir")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="send prompts to a chat endpoint")
    p.add_argument("bench_dir")
    p.add_argument("--endpoint", help="endpoint config JSON")
    p.add_argument("--out", required=True, help="response store directory")
    p.add_argument("--attempts", type=int, default=1)
    p.add_argument("--regime", help="comma-separated regimes "
                                    "(default: all five)")
    p.add_argument("--dry-run", action="store_true",
                   help="print prompts without any I/O")
    p.add_argument("--force", action="store_true",
                   help="redo attempts that already exist in the store")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="score stored responses into CSV "
                                     "reports and figures")
    p.add_argument("bench_dir")
    p.add_argument("run_dir")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("consensus", help="median consensus and convergence "
                                         "curve for one problem")
    p.add_argument("bench_dir")
    p.add_argument("run_dir")
    p.add_argument("--problem", required=True)
    p.add_argument("--regime", default="base")
    p.add_argument("--subsample", help="comma-separated subsample sizes")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_consensus)

    p = sub.add_parser("solve", help="compute a coherence-maximizing cut")
    p.add_argument("graph", help="graph JSON file")
    p.add_argument("--method", choices=list(solvers.SOLVER_METHODS),
                   default="exact")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--steps", type=int, help="anneal schedule steps")
    p.add_argument("--t0", type=float, default=10.0)
    p.add_argument("--t-end", dest="t_end", type=float, default=1e-3)
    p.add_argument("--out", help="write the cut JSON here instead of stdout")
    p.set_defaults(func=cmd_solve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, InputError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
