"""Command-line entry point: synth, eval, gen-localizer-data, report, simulate, classifier-server."""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor

from .assembler import DEFAULT_PREAMBLE
from .benchmark import make_benchmark, run_benchmark
from .dataset import LoadOptions, load_problem_set
from .judge import CompilerConfig, CompilerJudge, judge_program
from .localize import DEFAULT_BETA, generate_localizer_training_data, make_localizer, serve
from .metrics import (DEFAULT_BUDGETS, DEFAULT_RANK_CUTOFFS, RunDigest, RunSummary, digest_from_trace,
                      format_curves, line_level_accuracy, oracle_stats, success_curve, trial_delta_report)
from .mock import MockSpec
from .search import SearchConfig, SearchTrace, best_first_search

log = logging.getLogger("linesynth")

LOCALIZERS = ("none", "reported", "prefix", "classifier")


def _int_list(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x.strip()]


def _add_compiler_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("compiler")
    g.add_argument("--cxx", help="compiler executable (env LINESYNTH_CXX, default g++)")
    g.add_argument("--cxxflags", help="compiler flags as one shell string (env LINESYNTH_CXXFLAGS)")
    g.add_argument("--compile-timeout", type=float)
    g.add_argument("--run-timeout", type=float, help="per-test time limit in seconds")
    g.add_argument("--preamble-file", help="file whose text replaces the default header block")


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("problems", help="problem set directory (pseudocode.tsv, candidates.jsonl, tests/)")
    p.add_argument("--problem", action="append", help="only these problem ids (repeatable)")
    p.add_argument("--beam-size", type=int, default=100)
    p.add_argument("--gold-backfill", action="store_true")
    p.add_argument("--dedup", action="store_true", help="drop candidates with duplicate code text")


def _judge(args, cache: bool = False) -> CompilerJudge:
    flags = tuple(shlex.split(args.cxxflags)) if args.cxxflags else None
    cfg = CompilerConfig.from_env(compiler=args.cxx, flags=flags, compile_timeout=args.compile_timeout,
                                  run_timeout=args.run_timeout, cache=cache)
    return CompilerJudge(cfg)


def _preamble(args) -> str:
    if getattr(args, "preamble_file", None):
        with open(args.preamble_file) as f:
            return f.read().rstrip("\n")
    return DEFAULT_PREAMBLE


def _load(args, budget: int = 100):
    opts = LoadOptions(budget=budget, beam_size=args.beam_size, gold_backfill=args.gold_backfill, dedup=args.dedup)
    problems = load_problem_set(args.problems, opts)
    if args.problem:
        wanted = set(args.problem)
        problems = [p for p in problems if p.id in wanted]
    if not problems:
        raise SystemExit("no problems loaded")
    return problems


def cmd_synth(args) -> int:
    preamble = _preamble(args)
    classifier_cmd = shlex.split(args.classifier_cmd) if args.classifier_cmd else None
    if args.mockspec:
        from .mock import MockJudge
        specs = [MockSpec.load(p) for p in args.mockspec]
        jobs = [(s.instance, lambda s=s: MockJudge(s)) for s in specs]
        preamble = ""
    else:
        judge = _judge(args)
        if not judge.available():
            raise SystemExit(f"compiler {judge.config.compiler!r} not found")
        jobs = [(p, lambda: judge) for p in _load(args, args.budget)]

    def run(job):
        inst, make_judge = job
        loc = make_localizer(args.localizer, args.beta, classifier_cmd)
        try:
            result = best_first_search(inst, make_judge(), loc,
                                       SearchConfig(args.budget, args.alpha, preamble), args.localizer)
        finally:
            close = getattr(getattr(loc, "client", None), "close", None)
            if close is not None:
                close()
        return inst, result

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        results = list(pool.map(run, jobs))

    summary = RunSummary(args.localizer)
    trace_f = open(args.trace, "w") if args.trace else None
    try:
        for inst, result in results:
            summary.add(RunDigest.from_result(inst.id, args.localizer, result))
            if trace_f:
                result.trace.write_jsonl(trace_f)
            hidden = ""
            if result.accepted and inst.hidden_tests and not args.mockspec:
                ok = judge_program(judge, result.program, inst.tests, all_tests=True).accepted
                hidden = " hidden=pass" if ok else " hidden=FAIL"
            print(f"{inst.id}\t{result.status.value}\ttrials={result.trials_used}{hidden}")
            if args.out_dir and result.program is not None:
                os.makedirs(args.out_dir, exist_ok=True)
                with open(os.path.join(args.out_dir, f"{inst.id}.cpp"), "w") as f:
                    f.write(result.program.text)
    finally:
        if trace_f:
            trace_f.close()
    if args.summary:
        with open(args.summary, "w") as f:
            summary.write_jsonl(f)
    return 0


def cmd_eval(args) -> int:
    judge = _judge(args, cache=True)
    if not judge.available():
        raise SystemExit(f"compiler {judge.config.compiler!r} not found")
    cutoffs = _int_list(args.ranks)
    accs = []
    try:
        for inst in _load(args):
            accs.append(line_level_accuracy(inst, judge, max(cutoffs), _preamble(args)))
    finally:
        judge.close()
    n_lines = sum(sum(1 for fx in a.fixed if not fx) for a in accs)
    print("rank\tline-level accuracy (%)")
    for k in cutoffs:
        hits = sum(a.accuracy_at(k) * sum(1 for fx in a.fixed if not fx) for a in accs)
        print(f"{k}\t{100 * hits / max(n_lines, 1):.1f}")
    stats = oracle_stats(accs)
    print("lines with incorrect top candidate:", stats.top_wrong_histogram)
    print("lines with no correct candidate:", stats.none_right_histogram)
    print(f"oracle success rate: {100 * stats.oracle_success:.1f}%")
    if args.json:
        with open(args.json, "w") as f:
            json.dump({"accuracy": {a.problem_id: a.matrix for a in accs},
                       "top_wrong": stats.top_wrong, "none_right": stats.none_right,
                       "oracle_success": stats.oracle_success}, f, indent=1)
    return 0


def cmd_gen(args) -> int:
    judge = _judge(args)
    out = open(args.output, "w") if args.output else sys.stdout
    try:
        n = 0
        for rec in generate_localizer_training_data(_load(args), judge, _preamble(args)):
            out.write(json.dumps(rec.to_dict()) + "\n")
            n += 1
    finally:
        if args.output:
            out.close()
    log.info("wrote %d records", n)
    return 0


def _read_summaries(args) -> dict[str, RunSummary]:
    summaries: dict[str, RunSummary] = {}
    for path in args.summaries or ():
        with open(path) as f:
            for method, s in RunSummary.read_jsonl(f).items():
                for d in s:
                    summaries.setdefault(method, RunSummary(method)).add(d)
    for path in args.traces or ():
        with open(path) as f:
            for (method, _), trace in SearchTrace.read_jsonl(f).items():
                summaries.setdefault(method, RunSummary(method)).add(digest_from_trace(trace))
    return summaries


def _print_report(summaries: dict[str, RunSummary], budgets, baseline: str, curve_tsv=None) -> None:
    curves = {m: success_curve(s, budgets) for m, s in summaries.items()}
    print(format_curves(curves))
    if curve_tsv:
        max_b = min(d.budget for s in summaries.values() for d in s)
        methods = list(summaries)
        with open(curve_tsv, "w") as f:
            f.write("budget\t" + "\t".join(methods) + "\n")
            pts = {m: dict(success_curve(summaries[m], range(1, max_b + 1))) for m in methods}
            for b in range(1, max_b + 1):
                f.write(f"{b}\t" + "\t".join(f"{100 * pts[m][b]:.2f}" for m in methods) + "\n")
    if baseline in summaries:
        for m, s in summaries.items():
            if m != baseline:
                print()
                print(trial_delta_report(summaries[baseline], s).format(m))


def cmd_report(args) -> int:
    summaries = _read_summaries(args)
    if not summaries:
        raise SystemExit("nothing to report; pass --summaries or --traces")
    _print_report(summaries, _int_list(args.budgets), args.baseline, args.curve_tsv)
    return 0


def cmd_simulate(args) -> int:
    if args.mockspec:
        problems = [MockSpec.load(p) for p in args.mockspec]
    else:
        problems = make_benchmark(args.seed, args.num_problems, args.hard_fraction)
    methods = args.methods.split(",")
    trace_f = open(args.trace, "w") if args.trace else None
    try:
        summaries = run_benchmark(problems, methods, args.budget, args.alpha, args.beta,
                                  on_result=(lambda r: r.trace.write_jsonl(trace_f)) if trace_f else None)
    finally:
        if trace_f:
            trace_f.close()
    if args.summary:
        with open(args.summary, "w") as f:
            for s in summaries.values():
                s.write_jsonl(f)
    budgets = [b for b in _int_list(args.budgets) if b <= args.budget]
    _print_report(summaries, budgets, methods[0])
    return 0


def cmd_classifier_server(args) -> int:
    serve(sys.stdin, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="linesynth", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="search for a program per problem")
    p.add_argument("problems", nargs="?", help="problem set directory")
    p.add_argument("--mockspec", nargs="+", help="run on MockSpec files with the mock judge instead")
    p.add_argument("--problem", action="append")
    p.add_argument("--beam-size", type=int, default=100)
    p.add_argument("--gold-backfill", action="store_true")
    p.add_argument("--dedup", action="store_true")
    p.add_argument("--budget", "-B", type=int, default=100)
    p.add_argument("--localizer", choices=LOCALIZERS, default="none")
    p.add_argument("--alpha", type=float, default=0.1, help="down-weight factor, 0 < alpha < 1")
    p.add_argument("--beta", type=float, default=DEFAULT_BETA, help="classifier confidence threshold")
    p.add_argument("--classifier-cmd", help="command speaking the classifier protocol (default: built-in heuristic)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trace", help="write search traces (JSONL) here")
    p.add_argument("--summary", help="write run digests (JSONL) here")
    p.add_argument("--out-dir", help="write each final program here")
    _add_compiler_args(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="line-level functional accuracy and oracle statistics")
    _add_problem_args(p)
    p.add_argument("--ranks", default=",".join(map(str, DEFAULT_RANK_CUTOFFS)))
    p.add_argument("--json", help="write the correctness matrices and stats here")
    _add_compiler_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen-localizer-data", help="single-line substitution records for classifier training")
    _add_problem_args(p)
    p.add_argument("--output", "-o")
    _add_compiler_args(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("report", help="success curves and trial-delta tables")
    p.add_argument("--summaries", nargs="+")
    p.add_argument("--traces", nargs="+")
    p.add_argument("--budgets", default=",".join(map(str, DEFAULT_BUDGETS)))
    p.add_argument("--baseline", default="none")
    p.add_argument("--curve-tsv", help="write success rate (%%) for every budget 1..B")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", help="mock-judge benchmarks")
    p.add_argument("--mockspec", nargs="+", help="MockSpec files; default is a generated benchmark")
    p.add_argument("--num-problems", type=int, default=50)
    p.add_argument("--hard-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--methods", default="none,prefix", help="comma list; the first is the baseline")
    p.add_argument("--budget", "-B", type=int, default=3000)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=DEFAULT_BETA)
    p.add_argument("--budgets", default=",".join(map(str, DEFAULT_BUDGETS)))
    p.add_argument("--trace")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classifier-server", help="serve the built-in heuristic classifier on stdin/stdout")
    p.set_defaults(func=cmd_classifier_server)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "synth" and not args.problems and not args.mockspec:
        raise SystemExit("synth needs a problem directory or --mockspec")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
