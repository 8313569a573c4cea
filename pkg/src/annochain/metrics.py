"""Intrinsic annotation metrics: units, time, speed, duplication, quality J,
and efficiency E."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

from .errors import MissingReference, SessionNotFinalized, ZeroTime
from .matching import DuplicationMatcher, duplication_rate
from .semantic import SemanticUnitTree, build_tree, tree_units, unit_count

if TYPE_CHECKING:
    from .chain import AnnotationSession

ENTROPY_BITS_PER_WORD = 11.82


@dataclass(frozen=True)
class IntrinsicReport:
    unit_count: int
    total_time_s: float
    speed_units_per_s: float | None  # absent when total time is zero
    duplication_pct: float | None    # absent with fewer than two rounds


@dataclass
class QualityObjective:
    """Weights and pluggable pieces of the combined quality score J.

    J = coverage - beta * entropy_penalty - gamma * comprehensibility_penalty.
    The comprehensibility penalty has no computable default and is a hook
    returning 0 unless replaced.
    """

    beta: float = 0.0
    gamma: float = 0.0
    comprehensibility_scorer: Callable[[str], float] = field(default=lambda caption: 0.0)


@dataclass(frozen=True)
class QualityBreakdown:
    coverage: float         # matched reference units
    entropy_bits: float     # caption length penalty in bits
    comprehensibility: float
    combined: float


def entropy_proxy(text: str) -> float:
    """Caption entropy in bits: whitespace word count times the per-word rate."""
    return len(text.split()) * ENTROPY_BITS_PER_WORD


def quality(merged: SemanticUnitTree, reference: SemanticUnitTree | None,
            caption: str, objective: QualityObjective | None = None,
            matcher: DuplicationMatcher | None = None) -> QualityBreakdown:
    """Score a merged annotation against a ground-truth tree."""
    if reference is None:
        raise MissingReference("quality needs a ground-truth reference tree")
    objective = objective or QualityObjective()
    matcher = matcher or DuplicationMatcher(mode="exact")
    coverage = float(len(matcher.match(tree_units(reference), tree_units(merged))))
    entropy = entropy_proxy(caption)
    comprehensibility = objective.comprehensibility_scorer(caption)
    combined = coverage - objective.beta * entropy - objective.gamma * comprehensibility
    return QualityBreakdown(coverage, entropy, comprehensibility, combined)


def efficiency(j: float, total_time_s: float) -> float:
    """Quality per second; undefined at zero time."""
    if total_time_s <= 0:
        raise ZeroTime("efficiency needs total_time_s > 0")
    return j / total_time_s


def intrinsic_report(session: "AnnotationSession",
                     matcher: DuplicationMatcher | None = None) -> IntrinsicReport:
    """Units, time, speed, and mean consecutive-round duplication for a
    finalized session."""
    if session.status != "finalized":
        raise SessionNotFinalized(f"session is {session.status}")
    matcher = matcher or DuplicationMatcher(mode="exact")
    units = unit_count(session.merged_tree)
    total_time = session.total_time()
    if total_time > 0:
        speed = units / total_time
    elif units == 0:
        speed = 0.0
    else:
        speed = None
    rates = []
    for record in session.rounds:
        if record.round_index < 2:
            continue
        if session.mode.kind == "chain":
            earlier = session.merged_history[record.round_index - 2]
        else:
            earlier = build_tree(
                u for r in session.rounds if r.round_index < record.round_index
                for u in r.extracted_units)
        later = build_tree(record.extracted_units)
        rates.append(duplication_rate(earlier, later, matcher))
    duplication = sum(rates) / len(rates) if rates else None
    return IntrinsicReport(units, total_time, speed, duplication)


METRICS_CSV_COLUMNS = (
    "session_id", "mode", "unit_count", "total_time_s",
    "speed_units_per_s", "duplication_pct", "J", "E",
)


def metrics_csv(rows: list[dict]) -> str:
    """Render metric rows to CSV with the canonical column set."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=METRICS_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({col: row.get(col, "") for col in METRICS_CSV_COLUMNS})
    return buffer.getvalue()
