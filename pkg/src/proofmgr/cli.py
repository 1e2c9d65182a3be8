"""Command-line front end: parse, check, filter, prove, report.

    proofmgr check FILE [FILE ...] [options]

Exit codes: 0 the theorem is PROVED (or CHECKED in a structure-only run),
1 INCOMPLETE, 2 FAILED (some leaf not proved), 3 MEANINGLESS or a parse
error, 4 internal error.  With several files the worst exit code wins.

Leaves are proved independently and may be dispatched to a worker pool
(--jobs); report assembly preserves derivation order regardless of
completion order, so output is byte-identical for a fixed configuration.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from time import perf_counter
from typing import Optional

from .engine import check_theorem
from .meta import MetaError
from .parser import ParseError, parse_theorem
from .prover import Budget, Malformed, Proved, Unknown, prove, sequent_from_obligation
from .report import build_report, prepared_obligation, write_embeddings, write_report

EXIT_BY_STATUS = {
    "PROVED": 0,
    "CHECKED": 0,
    "INCOMPLETE": 1,
    "FAILED": 2,
    "MEANINGLESS": 3,
}


@dataclass
class RunConfig:
    paths: list[str]
    prove_leaves: bool = False
    list_obligations: bool = False
    emit_embeddings: Optional[str] = None
    emit_traces: Optional[str] = None
    fmt: str = "text"
    out: Optional[str] = None
    timeout_ms: int = 5000
    depth: int = 12
    gamma_reuse: int = 4
    jobs: int = 1
    local_defs_usable: bool = True
    only: Optional[str] = None
    expand_filtered: bool = True
    timings: bool = False

    def budget(self) -> Budget:
        return Budget(self.depth, self.timeout_ms, self.gamma_reuse)


def _prove_leaf(args):
    sequent, budget, want_trace = args
    start = perf_counter()
    outcome = prove(sequent, budget)
    millis = (perf_counter() - start) * 1000.0
    match outcome:
        case Proved(trace):
            return "proved", millis, trace if want_trace else None
        case Unknown(reason, _):
            return "unknown", millis, None
        case Malformed(reason):
            return "malformed", millis, None
    raise AssertionError


def _selected(path: str, only: Optional[str]) -> bool:
    if only is None:
        return True
    return path == only or path.startswith(only + ".") or path.startswith(only + "<")


def check_file(path: str, config: RunConfig, sink) -> int:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        print(f"{path}: {err}", file=sys.stderr)
        return 4
    try:
        theorem = parse_theorem(text)
        checked = check_theorem(theorem, local_defs_usable=config.local_defs_usable)
    except ParseError as err:
        print(f"{path}: parse error: {err}", file=sys.stderr)
        return 3
    except MetaError as err:
        print(f"{path}: ill-formed theorem: {err}", file=sys.stderr)
        return 3

    for warning in checked.warnings:
        print(f"{path}: warning: {warning}", file=sys.stderr)

    outcomes: Optional[dict[int, tuple[str, Optional[float]]]] = None
    traces: dict[int, str] = {}
    if config.prove_leaves and checked.meaningful:
        tasks = []
        for idx, record in enumerate(checked.records):
            if record.omitted or not _selected(".".join(record.path), config.only):
                continue
            sequent = sequent_from_obligation(
                prepared_obligation(record, expand=True)
            )
            tasks.append((idx, (sequent, config.budget(), config.emit_traces is not None)))
        outcomes = {}
        if config.jobs > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                results = list(pool.map(_prove_leaf, (t for _, t in tasks)))
        else:
            results = [_prove_leaf(t) for _, t in tasks]
        for (idx, _), (outcome, millis, trace) in zip(tasks, results):
            outcomes[idx] = (outcome, millis if config.timings else None)
            if trace is not None:
                traces[idx] = trace
    elif config.prove_leaves:
        outcomes = {}

    report = build_report(
        theorem.name, checked, outcomes, expand_filtered=config.expand_filtered
    )

    if config.emit_traces:
        trace_dir = Path(config.emit_traces)
        trace_dir.mkdir(parents=True, exist_ok=True)
        for idx, trace in traces.items():
            (trace_dir / f"leaf-{idx}.trace").write_text(trace, encoding="utf-8")
    if config.emit_embeddings:
        obligations = [prepared_obligation(r) for r in checked.records]
        Path(config.emit_embeddings).write_text(
            write_embeddings(obligations), encoding="utf-8"
        )

    if config.list_obligations:
        for leaf in report.leaves:
            flag = " (omitted)" if leaf.omitted else ""
            sink(f"[{leaf.id}] {leaf.path or '(root)'} {leaf.kind}{flag}")
            sink(f"    {leaf.filtered}")
    else:
        sink(write_report(report, config.fmt).rstrip("\n"))
    return EXIT_BY_STATUS[report.status]


def run(config: RunConfig) -> int:
    chunks: list[str] = []
    code = 0
    for path in config.paths:
        code = max(code, check_file(path, config, chunks.append))
    document = "\n".join(chunks) + "\n" if chunks else ""
    if config.out:
        Path(config.out).write_text(document, encoding="utf-8")
    else:
        sys.stdout.write(document)
    return code


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proofmgr",
        description="Check hierarchical proofs and discharge their obligations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    check = sub.add_parser("check", help="check proof files")
    check.add_argument("paths", nargs="+", metavar="FILE")
    check.add_argument("--prove", action="store_true", help="run the prover on every leaf")
    check.add_argument(
        "--list-obligations", action="store_true", help="list leaf obligations and stop"
    )
    check.add_argument("--emit-embeddings", metavar="PATH", help="write one embedding per leaf")
    check.add_argument("--emit-traces", metavar="DIR", help="write prover traces (with --prove)")
    check.add_argument("--format", choices=("text", "json"), default="text")
    check.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    check.add_argument("--timeout-ms", type=int, default=5000)
    check.add_argument("--depth", type=int, default=12)
    check.add_argument("--gamma-reuse", type=int, default=4)
    check.add_argument("--jobs", type=int, default=1)
    check.add_argument(
        "--local-defs-hidden",
        action="store_true",
        help="keep proof-local definitions hidden instead of usable",
    )
    check.add_argument("--only", metavar="PATH-PREFIX", help="prove only leaves under this step path")
    check.add_argument(
        "--raw-filtered",
        action="store_true",
        help="show filtered obligations without expanding usable definitions",
    )
    check.add_argument("--timings", action="store_true", help="include per-leaf timings")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)
    config = RunConfig(
        paths=args.paths,
        prove_leaves=args.prove,
        list_obligations=args.list_obligations,
        emit_embeddings=args.emit_embeddings,
        emit_traces=args.emit_traces,
        fmt=args.format,
        out=args.out,
        timeout_ms=args.timeout_ms,
        depth=args.depth,
        gamma_reuse=args.gamma_reuse,
        jobs=args.jobs,
        local_defs_usable=not args.local_defs_hidden,
        only=args.only,
        expand_filtered=not args.raw_filtered,
        timings=args.timings,
    )
    try:
        return run(config)
    except Exception as err:  # noqa: BLE001 - the contract maps crashes to exit 4
        print(f"internal error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
