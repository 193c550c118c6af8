"""Command-line surface: record, check, oracle, retime, bench, gen-template.

Exit codes: 0 success (check/oracle: trace accepted); 1 trace rejected;
2 usage or validation error; 3 resource or internal error.
"""

from __future__ import annotations

import argparse
import csv
import resource
import sys
import time
from typing import Optional, Sequence

from .linearizer import (
    Accepted,
    CheckOptions,
    CheckResourceError,
    check,
    export_graph,
)
from .models import SpecificationError, get_model
from .oracle import DEFAULT_BOUND, OracleBoundExceeded, oracle_check
from .trace import (
    TraceParseError,
    TraceValidationError,
    read_trace,
    shrink_timeboxes,
    write_trace,
)
from .workload import RecordRunError, WorkloadConfig, emit_fuzzer_template, record_run

EXIT_ACCEPTED = 0
EXIT_REJECTED = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def _parse_jitter(text: str):
    try:
        prob_s, delay_s = text.split(",")
        return float(prob_s), int(delay_s)
    except ValueError:
        raise argparse.ArgumentTypeError(
            "jitter must be 'probability,max_delay_ns', e.g. '0.05,20000'"
        ) from None


def _parse_sweep(text: str) -> list[int]:
    """Either a single int or 'lo..hi', swept by doubling from lo up to hi."""
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        lo, hi = int(lo_s), int(hi_s)
        if lo < 1 or hi < lo:
            raise argparse.ArgumentTypeError(f"bad sweep range {text!r}")
        points = []
        n = lo
        while n < hi:
            points.append(n)
            n *= 2
        points.append(hi)
        return points
    return [int(text)]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracelin",
        description="record, check, and explore timeboxed concurrency traces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_record = sub.add_parser("record", help="fuzz a reference structure and record a trace")
    p_record.add_argument("--model", required=True)
    p_record.add_argument("--threads", type=int, required=True)
    p_record.add_argument("--ops", type=int, required=True, help="operations per thread")
    p_record.add_argument("--seed", type=int, required=True)
    p_record.add_argument("--bug", default=None)
    p_record.add_argument("--jitter", type=_parse_jitter, default=None,
                          metavar="P,MAXNS")
    p_record.add_argument("--universe", type=int, default=16,
                          help="distinct keys/values drawn by the fuzzer")
    p_record.add_argument("-o", "--output", required=True)

    p_check = sub.add_parser("check", help="check a trace against a model")
    p_check.add_argument("trace")
    p_check.add_argument("--model", default=None,
                         help="model name (default: trace header)")
    p_check.add_argument("--export", default=None,
                         help="write the explored state graph (SGX1) here")
    p_check.add_argument("--max-ce", type=int, default=10)
    p_check.add_argument("--parallelism", type=int, default=1)
    p_check.add_argument("--mem-cap", type=int, default=None, metavar="MB")

    p_oracle = sub.add_parser("oracle", help="brute-force check a small trace")
    p_oracle.add_argument("trace")
    p_oracle.add_argument("--model", default=None)
    p_oracle.add_argument("--bound", type=int, default=DEFAULT_BOUND)

    p_retime = sub.add_parser("retime", help="shrink boxes to their refined timestamps")
    p_retime.add_argument("trace")
    p_retime.add_argument("-o", "--output", required=True)

    p_bench = sub.add_parser("bench", help="record+check sweep, CSV to stdout or file")
    p_bench.add_argument("--model", required=True)
    p_bench.add_argument("--threads", type=_parse_sweep, default=[5],
                         help="thread count, or 'lo..hi' doubling sweep")
    p_bench.add_argument("--ops", type=_parse_sweep, required=True,
                         help="TOTAL ops, or 'lo..hi' doubling sweep of total ops; "
                              "with a threads sweep this is ops PER thread")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--jitter", type=_parse_jitter, default=None,
                         metavar="P,MAXNS")
    p_bench.add_argument("--retime", action="store_true",
                         help="shrink boxes to refined commit points before checking")
    p_bench.add_argument("-o", "--output", default=None)

    p_gen = sub.add_parser("gen-template", help="emit a fuzzer harness skeleton")
    p_gen.add_argument("--model", required=True)
    p_gen.add_argument("-o", "--output", required=True)
    return parser


def _resolve_model(name: Optional[str], tr) -> str:
    if name:
        return name
    if tr.meta.model:
        return tr.meta.model
    raise SpecificationError("no --model given and trace header names none")


def _cmd_record(args) -> int:
    cfg = WorkloadConfig(
        model=args.model,
        threads=args.threads,
        ops_per_thread=args.ops,
        seed=args.seed,
        value_universe_size=args.universe,
        bug=args.bug,
        jitter=args.jitter,
    )
    tr = record_run(cfg)
    write_trace(tr, args.output)
    print(f"recorded {tr.total_actions} actions on {tr.thread_count} threads -> {args.output}")
    return EXIT_ACCEPTED


def _format_ref(tr, ref) -> str:
    act = tr.threads[ref.thread][ref.index]
    args = ", ".join(repr(a) for a in act.args)
    return f"t{ref.thread}#{ref.index} {act.op}({args})"


def _cmd_check(args) -> int:
    tr = read_trace(args.trace)
    spec = get_model(_resolve_model(args.model, tr))
    opts = CheckOptions(
        max_counterexamples=args.max_ce,
        parallelism=args.parallelism,
        mem_cap_mb=args.mem_cap,
        collect_graph=args.export is not None,
    )
    verdict = check(tr, spec, opts)
    stats = verdict.stats
    if isinstance(verdict, Accepted):
        print(
            f"ACCEPTED model={spec.name} actions={tr.total_actions} "
            f"nodes={stats.nodes_explored} wall_ms={stats.wall_ms:.1f}"
        )
    else:
        print(
            f"REJECTED model={spec.name} actions={tr.total_actions} "
            f"max_depth={verdict.max_depth} counterexamples={len(verdict.counterexamples)} "
            f"nodes={stats.nodes_explored} wall_ms={stats.wall_ms:.1f}"
        )
        for i, path in enumerate(verdict.counterexamples[:3]):
            tail = path[-5:]
            steps = "; ".join(_format_ref(tr, ref) for ref, _ in tail)
            print(f"  ce[{i}] depth={len(path)} tail: {steps}")
    if args.export is not None:
        export_graph(verdict.graph, tr, verdict, args.export)
        print(f"state graph exported -> {args.export}")
    return EXIT_ACCEPTED if verdict.accepted else EXIT_REJECTED


def _cmd_oracle(args) -> int:
    tr = read_trace(args.trace)
    spec = get_model(_resolve_model(args.model, tr))
    ok = oracle_check(tr, spec, bound=args.bound)
    print(f"{'ACCEPTED' if ok else 'REJECTED'} (oracle) model={spec.name} "
          f"actions={tr.total_actions}")
    return EXIT_ACCEPTED if ok else EXIT_REJECTED


def _cmd_retime(args) -> int:
    tr = read_trace(args.trace)
    shrunk = shrink_timeboxes(tr)
    write_trace(shrunk, args.output)
    refined = sum(1 for a in tr.actions() if a.refined_ns is not None)
    print(f"retimed {refined}/{tr.total_actions} actions -> {args.output}")
    return EXIT_ACCEPTED


def _cmd_bench(args) -> int:
    rows = []
    sweep_threads = len(args.threads) > 1
    points = []
    for threads in args.threads:
        for ops in args.ops:
            points.append((threads, ops))
    for i, (threads, ops) in enumerate(points):
        per_thread = ops if sweep_threads else max(1, ops // threads)
        cfg = WorkloadConfig(
            model=args.model,
            threads=threads,
            ops_per_thread=per_thread,
            seed=args.seed + i,
            jitter=args.jitter,
        )
        tr = record_run(cfg)
        if args.retime:
            tr = shrink_timeboxes(tr)
        spec = get_model(args.model)
        t0 = time.perf_counter()
        verdict = check(tr, spec)
        wall_ms = (time.perf_counter() - t0) * 1000.0
        peak_mb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0
        rows.append(
            {
                "ops": tr.total_actions,
                "threads": threads,
                "seed": cfg.seed,
                "verdict": "accepted" if verdict.accepted else "rejected",
                "wall_ms": f"{wall_ms:.2f}",
                "peak_nodes": verdict.stats.nodes_explored,
                "peak_mem_estimate_mb": f"{peak_mb:.1f}",
            }
        )
        print(
            f"bench: threads={threads} ops={tr.total_actions} "
            f"verdict={rows[-1]['verdict']} wall_ms={wall_ms:.1f}",
            file=sys.stderr,
        )
    fieldnames = ["ops", "threads", "seed", "verdict", "wall_ms", "peak_nodes",
                  "peak_mem_estimate_mb"]
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.output:
            out.close()
    return EXIT_ACCEPTED


def _cmd_gen_template(args) -> int:
    spec = get_model(args.model)
    source = emit_fuzzer_template(spec)
    with open(args.output, "w", encoding="utf-8") as f:
        f.write(source)
    print(f"template for {spec.name!r} -> {args.output}")
    return EXIT_ACCEPTED


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "record": _cmd_record,
        "check": _cmd_check,
        "oracle": _cmd_oracle,
        "retime": _cmd_retime,
        "bench": _cmd_bench,
        "gen-template": _cmd_gen_template,
    }
    try:
        return handlers[args.command](args)
    except (
        TraceParseError,
        TraceValidationError,
        SpecificationError,
        RecordRunError,
        OracleBoundExceeded,
        FileNotFoundError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except CheckResourceError as e:
        print(f"resource error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (MemoryError, OSError) as e:
        print(f"internal error: {e!r}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
