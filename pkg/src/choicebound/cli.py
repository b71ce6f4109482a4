"""``choicebound`` command line: run, transform, diff, bench, generate.

Exit status: 0 success, 1 input/parse error, 2 evaluation error,
3 bound violation.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .core import BoundSpec, Program, wrap64
from .engine import EvaluationError, StratificationError, evaluate
from .factsio import FactsError, load_output_dir, read_facts_dir, write_facts_dir, write_outputs
from .metrics import SchemaMismatchError, UnknownRelationError, check_bound, diff_databases
from .naive import evaluate_naive
from .parser import ParseError, format_program, parse_bounds, parse_program
from .transform import TransformError, apply_choice_bound, validate_specs

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_EVAL = 2
EXIT_VIOLATION = 3


class CliError(Exception):
    def __init__(self, status: int, message: str) -> None:
        super().__init__(message)
        self.status = status


def _read_text(path: str | Path, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(EXIT_INPUT, f"cannot read {what} {path}: {e.strerror or e}") from None


def load_program_file(path: str | Path) -> Program:
    return parse_program(_read_text(path, "program"), str(path))


def load_bounds_file(path: str | Path | None) -> list[BoundSpec]:
    if path is None:
        return []
    return parse_bounds(_read_text(path, "bounds file"), str(path))


def seeded(specs: Sequence[BoundSpec], seed: int) -> list[BoundSpec]:
    """Offset every spec's hasher seed by the run seed (64-bit wrapping)."""
    return [replace(s, seed=wrap64(s.seed + seed)) if seed else s for s in specs]


@dataclass
class RunConfig:
    program: str
    facts: str | None = None
    out: str = "out"
    bounds: str | None = None
    seed: int = 0
    mode: str = "seminaive"
    threads: int = 1
    metrics: str | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("seminaive", "naive"):
            raise ValueError(f"mode must be seminaive or naive, got {self.mode!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.mode == "naive":
            self.threads = 1


def cmd_run(config: RunConfig) -> int:
    program = load_program_file(config.program)
    specs = seeded(load_bounds_file(config.bounds), config.seed)
    for w in validate_specs(program, specs):
        print(w, file=sys.stderr)
    evaluated = apply_choice_bound(program, specs)
    inputs = read_facts_dir(evaluated, config.facts)
    if config.mode == "naive":
        db = evaluate_naive(evaluated, inputs)
    else:
        db = evaluate(evaluated, inputs, threads=config.threads)
    write_outputs(db, config.out)
    metrics = db.metrics.to_json()
    metrics["seed"] = config.seed
    metrics["threads"] = config.threads
    metrics["bounds"] = [s.describe() for s in specs]
    metrics_path = Path(config.metrics) if config.metrics else Path(config.out) / "metrics.json"
    metrics_path.parent.mkdir(parents=True, exist_ok=True)
    metrics_path.write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_transform(program: str, bounds: str | None, out: str | None) -> int:
    prog = load_program_file(program)
    specs = load_bounds_file(bounds)
    for w in validate_specs(prog, specs):
        print(w, file=sys.stderr)
    text = format_program(apply_choice_bound(prog, specs))
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_diff(out_a: str, out_b: str, bounds: str | None, report: str | None) -> int:
    specs = load_bounds_file(bounds)
    a, b = load_output_dir(out_a), load_output_dir(out_b)
    times = []
    for d in (out_a, out_b):
        m = Path(d) / "metrics.json"
        times.append(json.loads(m.read_text(encoding="utf-8")).get("wall_time") if m.exists() else None)
    rep = diff_databases(a, b, specs, time_a=times[0], time_b=times[1])
    sys.stdout.write(rep.to_table())
    if report:
        Path(report).write_text(json.dumps(rep.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if rep.has_violations:
        for bd in rep.bounds:
            for side, flag, vs in (("A", bd.bounded_a, bd.violations_a), ("B", bd.bounded_b, bd.violations_b)):
                if flag:
                    for v in vs:
                        print(f"violation in {side}: {bd.spec} key={tuple(v['key'])} count={v['count']}",
                              file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def bench_spec(depth: int, limit: int, hasher: str = "mix", seed: int = 0) -> BoundSpec:
    if depth == 0:
        return BoundSpec("VarPointsTo", ("var",), limit, ("obj",), hasher=hasher, seed=seed)
    return BoundSpec("VarPointsTo", ("var", "ctx"), limit, ("hobj", "hctx"), hasher=hasher, seed=seed)


@dataclass
class BenchResult:
    unbounded_time: float
    bounded_time: float
    unbounded_tuples: int
    bounded_tuples: int
    violations: int

    @property
    def speedup(self) -> float:
        return self.unbounded_time / self.bounded_time if self.bounded_time else float("inf")


def run_bench(params, spec: BoundSpec) -> BenchResult:
    from .corpus import ctxsensitive_program, fieldsensitive_program
    from .corpus.generator import generate_blowup

    facts = generate_blowup(params)
    program = fieldsensitive_program() if params.context_depth == 0 else ctxsensitive_program()
    t0 = time.perf_counter()
    unbounded = evaluate(program, facts)
    t1 = time.perf_counter()
    bounded = evaluate(apply_choice_bound(program, [spec]), facts)
    t2 = time.perf_counter()
    return BenchResult(t1 - t0, t2 - t1, len(unbounded[spec.relation]), len(bounded[spec.relation]),
                       len(check_bound(bounded, spec)))


def cmd_bench(params, spec: BoundSpec) -> int:
    r = run_bench(params, spec)
    print(f"params     vars={params.num_vars} objs={params.num_objs} density={params.assign_density} "
          f"fields={params.field_count} depth={params.context_depth} seed={params.seed}")
    print(f"spec       {spec.describe()} hasher={spec.hasher}")
    print(f"unbounded  {r.unbounded_time:10.3f}s  {r.unbounded_tuples:>12} {spec.relation} tuples")
    print(f"bounded    {r.bounded_time:10.3f}s  {r.bounded_tuples:>12} {spec.relation} tuples")
    print(f"speedup    {r.speedup:10.2f}x")
    if r.violations:
        print(f"bound violated for {r.violations} keys", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_generate(params, out: str) -> int:
    from .corpus.generator import generate_blowup

    write_facts_dir(generate_blowup(params), out)
    return EXIT_OK


def _blowup_params(ns: argparse.Namespace):
    from .corpus.generator import BlowupParams

    try:
        return BlowupParams(ns.vars, ns.objs, ns.density, ns.fields, ns.depth, ns.seed)
    except ValueError as e:
        raise CliError(EXIT_INPUT, str(e)) from None


def _add_blowup_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--vars", type=int, required=True)
    p.add_argument("--objs", type=int, required=True)
    p.add_argument("--density", type=float, default=0.0)
    p.add_argument("--fields", type=int, default=0)
    p.add_argument("--depth", type=int, choices=(0, 2), default=0)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="choicebound", description="Datalog with choice-bounded relations.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate a program and write sorted outputs")
    run.add_argument("program")
    run.add_argument("--facts", metavar="DIR")
    run.add_argument("--out", metavar="DIR", default="out")
    run.add_argument("--bounds", metavar="FILE")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--mode", choices=("seminaive", "naive"), default="seminaive")
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--metrics", metavar="FILE")

    tr = sub.add_parser("transform", help="print the program rewritten under a bounds file")
    tr.add_argument("program")
    tr.add_argument("--bounds", metavar="FILE")
    tr.add_argument("--out", metavar="FILE")

    df = sub.add_parser("diff", help="compare two output directories")
    df.add_argument("out_a")
    df.add_argument("out_b")
    df.add_argument("--bounds", metavar="FILE")
    df.add_argument("--report", metavar="FILE")

    bn = sub.add_parser("bench", help="generate a blowup and time unbounded vs bounded evaluation")
    _add_blowup_flags(bn)
    bn.add_argument("--limit", type=int, required=True)
    bn.add_argument("--hasher", choices=("ordprod", "mix"), default="mix")

    gen = sub.add_parser("generate", help="write blowup facts to a directory")
    _add_blowup_flags(gen)
    gen.add_argument("--out", metavar="DIR", required=True)
    return ap


def _dispatch(ns: argparse.Namespace) -> int:
    if ns.command == "run":
        try:
            config = RunConfig(ns.program, ns.facts, ns.out, ns.bounds, ns.seed, ns.mode, ns.threads, ns.metrics)
        except ValueError as e:
            raise CliError(EXIT_INPUT, str(e)) from None
        return cmd_run(config)
    if ns.command == "transform":
        return cmd_transform(ns.program, ns.bounds, ns.out)
    if ns.command == "diff":
        return cmd_diff(ns.out_a, ns.out_b, ns.bounds, ns.report)
    if ns.command == "bench":
        params = _blowup_params(ns)
        try:
            spec = bench_spec(params.context_depth, ns.limit, ns.hasher, ns.seed)
        except ValueError as e:
            raise CliError(EXIT_INPUT, str(e)) from None
        return cmd_bench(params, spec)
    return cmd_generate(_blowup_params(ns), ns.out)


def main(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return _dispatch(ns)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.status
    except (ParseError, StratificationError, FactsError, TransformError,
            SchemaMismatchError, UnknownRelationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"error: {e.filename or ''}: {e.strerror or e}", file=sys.stderr)
        return EXIT_INPUT
    except EvaluationError as e:
        print(f"error: evaluation failed: {e}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
