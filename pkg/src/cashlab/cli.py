"""Command-line interface.

Subcommands: ``space check``, ``tune``, ``worstcase``, ``bench``, and
``compare``. Exit codes: 0 on success, 1 on usage errors, 2 on runtime
failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import worstcase as wc
from .chart import render_rank_chart
from .configspace import SpaceError, load_space, model_probabilities, space_volumes
from .engine import EngineError, write_run_records
from .harness import HarnessError, MethodSpec, run_method
from .stats import LossMatrix, StatsError, compare_pipeline
from .suites import _parse_fraction, load_methods, load_suite
from .worker import WorkerClient, WorkerError


class UsageError(Exception):
    """Bad command-line arguments."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="cashlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_space = sub.add_parser("space", help="space definition utilities")
    space_sub = p_space.add_subparsers(dest="space_command", required=True)
    p_check = space_sub.add_parser("check", help="validate a space definition file")
    p_check.add_argument("file")

    p_tune = sub.add_parser("tune", help="run one tuning method")
    p_tune.add_argument("--space", required=True)
    p_tune.add_argument("--method", required=True, choices=["rs", "sh", "hyperband"])
    p_tune.add_argument(
        "--sampling",
        default="uniform",
        choices=["uniform", "weighted", "theta", "custom"],
    )
    p_tune.add_argument("--budget", required=True, type=int)
    p_tune.add_argument("--eta", default="3", help="scaling factor (number or a/b)")
    p_tune.add_argument("--rmin", default="1", help="minimum resource (number or a/b)")
    p_tune.add_argument("--seed", default=0, type=int)
    p_tune.add_argument(
        "--evaluator",
        required=True,
        help="synthetic:<seed>[:<noise>] or exec:<worker command>",
    )
    p_tune.add_argument("--weights", help="comma-separated custom sampling weights")
    p_tune.add_argument("--timeout", default=60.0, type=float)
    p_tune.add_argument("--out", required=True)

    p_wc = sub.add_parser("worstcase", help="closed-form and Monte Carlo failure probabilities")
    p_wc.add_argument("--spec", required=True)
    p_wc.add_argument("--mc-samples", type=int, default=0)
    p_wc.add_argument("--seed", type=int, default=0)
    p_wc.add_argument("--out", required=True)

    p_bench = sub.add_parser("bench", help="run a benchmark suite")
    p_bench.add_argument("--suite", required=True)
    p_bench.add_argument("--methods", required=True)
    p_bench.add_argument("--reps", type=int, help="override the suite's repetition count")
    p_bench.add_argument("--worker-limit", type=int, default=1)
    p_bench.add_argument("--seed", type=int, help="override the suite's seed")
    p_bench.add_argument("--out", required=True, help="output directory")

    p_cmp = sub.add_parser("compare", help="statistical comparison of a loss matrix")
    p_cmp.add_argument("--matrix", required=True)
    p_cmp.add_argument("--alpha", type=float, default=0.05)
    p_cmp.add_argument("--correction", default="finner", choices=["finner", "bonferroni"])
    p_cmp.add_argument("--force", action="store_true", help="run pairwise tests even if the omnibus fails")
    p_cmp.add_argument("--out", required=True, help="adjusted p-value matrix CSV")
    p_cmp.add_argument("--svg", help="rank chart output path")
    return parser


def _cmd_space_check(args) -> int:
    space = load_space(args.file)
    counts = space.hp_counts()
    print(f"ok: {space.n_models} models, hyperparameter counts {counts}")
    return 0


def _make_evaluator(args, space):
    spec = args.evaluator
    if spec.startswith("synthetic:"):
        from .harness import generate_problem

        parts = spec.split(":")
        if len(parts) not in (2, 3):
            raise UsageError(f"bad synthetic evaluator spec {spec!r}")
        try:
            seed = int(parts[1])
            noise = float(parts[2]) if len(parts) == 3 else 0.1
        except ValueError as exc:
            raise UsageError(f"bad synthetic evaluator spec {spec!r}") from exc
        problem = generate_problem(space, landscape_seed=seed, noise_scale=noise)
        return problem.evaluator(), None
    if spec.startswith("exec:"):
        client = WorkerClient(spec[len("exec:"):], timeout=args.timeout)
        return client.evaluator(space), client
    raise UsageError(f"evaluator must start with synthetic: or exec:, got {spec!r}")


def _cmd_tune(args) -> int:
    space = load_space(args.space)
    weights = None
    if args.weights:
        weights = tuple(float(w) for w in args.weights.split(","))
    if args.sampling == "custom" and weights is None:
        raise UsageError("--sampling custom requires --weights")
    method = MethodSpec(
        name=args.method,
        algorithm=args.method,
        sampling=args.sampling,
        budget=args.budget,
        eta=_parse_fraction(args.eta, "eta"),
        rmin=_parse_fraction(args.rmin, "rmin"),
        weights=weights,
    )
    if args.sampling == "theta":
        dist = model_probabilities(space, "volume_weighted", weights=space_volumes(space))
    elif args.sampling == "weighted":
        dist = model_probabilities(space, "hp_count_weighted")
    elif args.sampling == "custom":
        dist = model_probabilities(space, "custom", weights=weights)
    else:
        dist = model_probabilities(space, "uniform")
    evaluator, client = _make_evaluator(args, space)
    try:
        result = run_method(space, dist, method, evaluator, args.seed)
    finally:
        if client is not None:
            client.close()
    write_run_records(result, args.out)
    print(
        f"winner: model {result.winner.model_index}, loss {result.winner_loss!r}, "
        f"budget {result.budget_spent!r}, trials {len(result.trials)}"
    )
    return 0


def _cmd_worstcase(args) -> int:
    specs = wc.parse_spec_document(Path(args.spec).read_text(encoding="utf-8"))
    mc = args.mc_samples or None
    if len(specs) == 1:
        report = wc.build_report(specs[0], mc_samples=mc, seed=args.seed)
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
        print(report.to_json())
    else:
        wc.write_sweep_csv(specs, args.out, mc_samples=mc, seed=args.seed)
        print(f"wrote sweep of {len(specs)} specs to {args.out}")
    return 0


def _cmd_bench(args) -> int:
    from .harness import export_loss_matrix, run_suite

    suite, suite_seed = load_suite(args.suite)
    if args.reps:
        suite.reps = args.reps
    if args.seed is not None:
        suite_seed = args.seed
    methods = load_methods(args.methods)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    store = run_suite(suite, methods, worker_limit=args.worker_limit, seed=suite_seed)
    store.save(out_dir / "results.jsonl")
    for split in ("validation", "generalization"):
        matrix = export_loss_matrix(store, split)
        (out_dir / f"loss_matrix_{split}.csv").write_text(
            matrix.to_csv(), encoding="utf-8"
        )
    print(f"ran {len(store.records)} runs; results in {out_dir}")
    return 0


def _cmd_compare(args) -> int:
    matrix = LossMatrix.from_csv(Path(args.matrix).read_text(encoding="utf-8"))
    result = compare_pipeline(
        matrix, alpha=args.alpha, correction=args.correction, force=args.force
    )
    om = result.omnibus
    print(
        f"omnibus: chi2={om.chi2_stat!r} F={om.imandavenport_stat!r} "
        f"dof={om.dof} p={om.p_value!r} rejected={om.rejected}"
    )
    if result.halted:
        print("omnibus not rejected; pairwise testing halted (rerun with --force)")
        Path(args.out).write_text("", encoding="utf-8")
    else:
        Path(args.out).write_text(result.pvalues.to_csv(), encoding="utf-8")
        for i, a in enumerate(matrix.method_names):
            for j in range(i + 1, matrix.n_methods):
                b = matrix.method_names[j]
                print(f"  {a} vs {b}: adjusted p = {float(result.pvalues.adjusted[i, j])!r}")
    if args.svg:
        svg = render_rank_chart(result.ranks, result.pvalues, alpha=args.alpha)
        Path(args.svg).write_text(svg, encoding="utf-8")
    return 0


_COMMANDS = {
    "tune": _cmd_tune,
    "worstcase": _cmd_worstcase,
    "bench": _cmd_bench,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "space":
            return _cmd_space_check(args)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (SpaceError, EngineError, HarnessError, StatsError, WorkerError, wc.WorstCaseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
