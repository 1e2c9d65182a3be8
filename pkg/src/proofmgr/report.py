"""Serialization of check/prove results for humans and machines.

The JSON document has stable field names: ``theorem``, ``status``,
``leaves``, and ``errors``; each leaf carries ``id``, ``path``, ``kind``,
``omitted``, ``obligation`` (raw), ``filtered`` (after filtration and, by
default, usable-definition expansion), ``embedding``, ``outcome`` and
``millis``.  Timing is null unless explicitly requested, keeping output
byte-identical across runs.

Status values: PROVED (complete, meaningful, every leaf proved), INCOMPLETE
(omitted leaves exist, all others proved; also used when a path selection
skipped leaves), FAILED (some attempted leaf not proved), MEANINGLESS (a step
did not match any rule), and CHECKED (structure-only run, nothing attempted).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional

from .engine import CheckedTheorem, LeafObligationRecord
from .meta import Obligation, embed, expand_all_usable, filter_obligation, render_obligation

STATUSES = ("PROVED", "INCOMPLETE", "FAILED", "MEANINGLESS", "CHECKED")


@dataclass(frozen=True)
class LeafEntry:
    id: int
    path: str
    kind: str
    omitted: bool
    obligation: str
    filtered: str
    embedding: str
    outcome: Optional[str]  # proved | unknown | malformed | None (not attempted)
    millis: Optional[float]


@dataclass(frozen=True)
class ErrorEntry:
    path: str
    message: str


@dataclass(frozen=True)
class ObligationReport:
    theorem: Optional[str]
    status: str
    leaves: tuple[LeafEntry, ...]
    errors: tuple[ErrorEntry, ...] = ()


def prepared_obligation(record: LeafObligationRecord, expand: bool = True) -> Obligation:
    """The prover-facing form of a leaf: filtered, optionally expanded."""
    filtered = filter_obligation(record.obligation)
    return expand_all_usable(filtered) if expand else filtered


def build_report(
    name: Optional[str],
    checked: CheckedTheorem,
    outcomes: Optional[dict[int, tuple[str, Optional[float]]]],
    expand_filtered: bool = True,
) -> ObligationReport:
    """Assemble the report; outcomes maps leaf index to (outcome, millis),
    None meaning a structure-only run."""
    leaves = []
    for idx, record in enumerate(checked.records):
        prepared = prepared_obligation(record, expand_filtered)
        outcome, millis = (None, None)
        if outcomes is not None and idx in outcomes:
            outcome, millis = outcomes[idx]
        leaves.append(
            LeafEntry(
                id=idx,
                path=".".join(record.path),
                kind=record.kind,
                omitted=record.omitted,
                obligation=render_obligation(record.obligation),
                filtered=render_obligation(prepared),
                embedding=embed(prepared),
                outcome=outcome,
                millis=millis,
            )
        )
    errors = tuple(
        ErrorEntry(".".join(e.path), e.message) for e in checked.errors
    )
    status = compute_status(leaves, bool(errors), attempted=outcomes is not None)
    return ObligationReport(name, status, tuple(leaves), errors)


def compute_status(
    leaves: list[LeafEntry], has_errors: bool, attempted: bool
) -> str:
    if has_errors:
        return "MEANINGLESS"
    omitted = any(l.omitted for l in leaves)
    if not attempted:
        return "INCOMPLETE" if omitted else "CHECKED"
    live = [l for l in leaves if not l.omitted]
    if any(l.outcome not in ("proved", None) for l in live):
        return "FAILED"
    skipped = any(l.outcome is None for l in live)
    if omitted or skipped:
        return "INCOMPLETE"
    return "PROVED"


def write_report(report: ObligationReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(asdict(report), indent=2) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [f"theorem {report.theorem or '(unnamed)'}: {report.status}"]
    for leaf in sorted(report.leaves, key=lambda l: _path_key(l.path)):
        mark = "omitted" if leaf.omitted else (leaf.outcome or "-")
        timing = f" {leaf.millis:.0f}ms" if leaf.millis is not None else ""
        lines.append(f"  [{leaf.id}] {leaf.path or '(root)'} {leaf.kind}: {mark}{timing}")
        lines.append(f"      {leaf.filtered}")
    for err in report.errors:
        lines.append(f"  error at {err.path}: {err.message}")
    return "\n".join(lines) + "\n"


def _path_key(path: str):
    key = []
    for part in path.split(".") if path else []:
        level, _, label = part.lstrip("<").partition(">")
        key.append((int(level), label))
    return key


def read_report(text: str) -> ObligationReport:
    raw = json.loads(text)
    leaves = tuple(LeafEntry(**leaf) for leaf in raw["leaves"])
    errors = tuple(ErrorEntry(**err) for err in raw.get("errors", []))
    return ObligationReport(raw["theorem"], raw["status"], leaves, errors)


def write_embeddings(obligations: list[Obligation]) -> str:
    """One embedding per line, in the order given."""
    return "".join(embed(o) + "\n" for o in obligations)
