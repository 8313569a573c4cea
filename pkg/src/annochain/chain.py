"""Annotation-session state machine: single, parallel, and chain modes.

A session accumulates rounds, drives the gateway pipeline (denoise, merge,
extract), and keeps an append-only timing ledger from which the per-mode
total-time formulas are reconstructed.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field, replace
from typing import Sequence

from .errors import (
    AnnochainError,
    GatewayFailure,
    IncompleteParallelSession,
    InvalidMode,
    LedgerIncomplete,
    NothingToRead,
    OutOfOrderRound,
    SessionClosed,
    SessionStateError,
)
from .gateway import Gateway
from .semantic import SemanticUnit, SemanticUnitTree, build_tree, unit_count

DEFAULT_MAX_ROUNDS = 6

EVENT_KINDS = (
    "observe_start", "observe_end",
    "read_start", "read_end",
    "output_start", "output_end",
)
# required within-round ordering (read pair optional)
_EVENT_RANK = {kind: i for i, kind in enumerate(EVENT_KINDS)}


@dataclass(frozen=True)
class Mode:
    """Session mode: "single", "parallel" (n annotators), or "chain"."""

    kind: str
    annotators: int | None = None
    max_rounds: int = DEFAULT_MAX_ROUNDS

    def __post_init__(self):
        if self.kind not in ("single", "parallel", "chain"):
            raise InvalidMode(f"unknown mode kind: {self.kind!r}")
        if self.kind == "parallel" and (self.annotators is None or self.annotators < 2):
            raise InvalidMode("parallel mode needs at least 2 annotators")
        if self.kind == "chain" and self.max_rounds < 1:
            raise InvalidMode("chain mode needs max_rounds >= 1")

    @classmethod
    def single(cls) -> "Mode":
        return cls("single")

    @classmethod
    def parallel(cls, annotators: int) -> "Mode":
        return cls("parallel", annotators=annotators)

    @classmethod
    def chain(cls, max_rounds: int = DEFAULT_MAX_ROUNDS) -> "Mode":
        return cls("chain", max_rounds=max_rounds)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "annotators": self.annotators, "max_rounds": self.max_rounds}

    @classmethod
    def from_dict(cls, data: dict) -> "Mode":
        return cls(data["kind"], data.get("annotators"),
                   data.get("max_rounds", DEFAULT_MAX_ROUNDS))


@dataclass(frozen=True)
class TimingEvent:
    round_index: int
    kind: str
    t: float


@dataclass
class TimingLedger:
    """Append-only per-session timing events."""

    events: list[TimingEvent] = field(default_factory=list)

    def append(self, event: TimingEvent) -> None:
        if event.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind: {event.kind!r}")
        self.events.append(event)

    def extend(self, events: Sequence[TimingEvent]) -> None:
        for event in events:
            self.append(event)

    def round_events(self, round_index: int) -> list[TimingEvent]:
        return [e for e in self.events if e.round_index == round_index]

    def round_durations(self, round_index: int) -> dict[str, float]:
        """Matched start/end durations for one round.

        Raises LedgerIncomplete when a required pair is missing or unmatched.
        """
        stamps = {e.kind: e.t for e in self.round_events(round_index)}
        out: dict[str, float] = {}
        for phase in ("observe", "read", "output"):
            start, end = stamps.get(f"{phase}_start"), stamps.get(f"{phase}_end")
            if start is None and end is None:
                if phase == "read":
                    out["read"] = 0.0
                    continue
                raise LedgerIncomplete(f"round {round_index}: missing {phase} events")
            if start is None or end is None:
                raise LedgerIncomplete(f"round {round_index}: unmatched {phase} event")
            out[phase] = end - start
        return out


def validate_round_events(events: Sequence[TimingEvent], round_index: int,
                          allow_read: bool) -> None:
    """Enforce well-nesting and strictly increasing timestamps for one round."""
    if any(e.round_index != round_index for e in events):
        raise ValueError("event round_index mismatch")
    kinds = [e.kind for e in events]
    if len(set(kinds)) != len(kinds):
        raise ValueError("duplicate timing event kinds in round")
    required = ["observe_start", "observe_end", "output_start", "output_end"]
    for kind in required:
        if kind not in kinds:
            raise ValueError(f"missing timing event: {kind}")
    if not allow_read and any(k.startswith("read") for k in kinds):
        raise ValueError("read events are not allowed for this round")
    if ("read_start" in kinds) != ("read_end" in kinds):
        raise ValueError("unmatched read event pair")
    stamps = {e.kind: e.t for e in events}
    # strict within a start/end pair, non-strict at phase boundaries
    for phase in ("observe", "read", "output"):
        start, end = stamps.get(f"{phase}_start"), stamps.get(f"{phase}_end")
        if start is not None and end is not None and end <= start:
            raise ValueError(f"{phase} interval must have positive duration")
    boundary = [stamps["observe_end"]]
    if "read_start" in stamps:
        boundary += [stamps["read_start"], stamps["read_end"]]
    boundary.append(stamps["output_start"])
    if any(b < a for a, b in zip(boundary, boundary[1:])):
        raise ValueError("timing phases out of order")


@dataclass
class AnnotationRecord:
    """One annotator's round: payload, timings, and extracted units."""

    round_index: int
    annotator_id: str
    payload_kind: str  # speech_transcript | typed_text
    raw_text: str
    denoised_text: str = ""
    observe_image_s: float = 0.0
    read_previous_s: float = 0.0
    output_s: float = 0.0
    extracted_units: list[SemanticUnit] = field(default_factory=list)


@dataclass
class RoundResult:
    """Gateway outputs for one submitted round; replayable without a gateway."""

    record: AnnotationRecord
    events: list[TimingEvent]
    merged_caption: str | None  # None while a parallel merge is deferred
    merged_units: list[SemanticUnit] | None
    merge_pending: bool = False


class AnnotationSession:
    """Mutable chain/parallel/single session with event-sourced application.

    All gateway work happens in ``compute_round``; ``apply_round`` is pure so
    persisted results replay bit-exactly.
    """

    def __init__(self, image_ref: str, mode: Mode, gateway: Gateway,
                 session_id: str | None = None):
        self.session_id = session_id or uuid.uuid4().hex
        self.image_ref = image_ref
        self.mode = mode
        self.gateway = gateway
        self.rounds: list[AnnotationRecord] = []
        self.merged_caption: str | None = None
        self.merged_tree: SemanticUnitTree = build_tree([])
        self.merged_history: list[SemanticUnitTree] = []
        self.status = "open"
        self.ledger = TimingLedger()
        self.finalized_by: str | None = None
        self._pending_read: tuple[str, float] | None = None

    # ------------------------------------------------------------------
    # reads
    # ------------------------------------------------------------------

    def serve_prior_annotation(self, annotator_id: str, t: float) -> str:
        """Hand the current merged caption to the next annotator.

        Records read_start; the following submit supplies read_end.
        """
        if self.mode.kind != "chain":
            raise SessionStateError("prior annotations exist only in chain mode")
        if self.status != "open":
            raise SessionClosed(f"session is {self.status}")
        if not self.rounds or self.merged_caption is None:
            raise NothingToRead("no merged round to read yet")
        self._pending_read = (annotator_id, t)
        return self.merged_caption

    # ------------------------------------------------------------------
    # round submission
    # ------------------------------------------------------------------

    def submit_round(self, annotator_id: str, payload_kind: str, raw_text: str,
                     events: Sequence[TimingEvent]) -> RoundResult:
        """Validate, run the gateway pipeline, and apply the result."""
        result = self.compute_round(annotator_id, payload_kind, raw_text, events)
        self.apply_round(result)
        if result.merge_pending:
            raise GatewayFailure("round stored; merge failed and is retriable")
        return result

    def compute_round(self, annotator_id: str, payload_kind: str, raw_text: str,
                      events: Sequence[TimingEvent]) -> RoundResult:
        if self.status == "finalized":
            raise SessionClosed("session already finalized")
        if self.status == "awaiting_merge":
            raise SessionClosed("merge pending; retry it before submitting more rounds")
        round_index = len(self.rounds) + 1
        if events and any(e.round_index != round_index for e in events):
            raise OutOfOrderRound(
                f"expected round {round_index}, got events for round "
                f"{sorted({e.round_index for e in events})}")
        if self.mode.kind == "single" and round_index > 1:
            raise OutOfOrderRound("single mode takes exactly one round")
        if self.mode.kind == "parallel" and round_index > self.mode.annotators:
            raise OutOfOrderRound("all parallel rounds already submitted")
        if self.mode.kind == "chain" and round_index > self.mode.max_rounds:
            raise SessionClosed(f"chain capped at {self.mode.max_rounds} rounds")
        if payload_kind not in ("speech_transcript", "typed_text"):
            raise ValueError(f"unknown payload kind: {payload_kind!r}")
        if not raw_text.strip():
            raise ValueError("raw_text must be non-empty")

        reads_prior = self.mode.kind == "chain" and round_index > 1
        all_events = list(events)
        if reads_prior:
            if self._pending_read is None:
                raise SessionStateError("chain round must fetch the prior annotation first")
            _, read_start_t = self._pending_read
            if not any(e.kind == "read_start" for e in all_events):
                all_events.append(TimingEvent(round_index, "read_start", read_start_t))
            if not any(e.kind == "read_end" for e in all_events):
                output_start = next((e for e in all_events if e.kind == "output_start"), None)
                if output_start is None:
                    raise ValueError("missing timing event: output_start")
                # reading stops at the first output action
                all_events.append(TimingEvent(round_index, "read_end", output_start.t))
        try:
            validate_round_events(all_events, round_index, allow_read=reads_prior)
        except ValueError as exc:
            raise ValueError(f"invalid timing events: {exc}") from exc

        durations = _durations_from(all_events)
        record = AnnotationRecord(
            round_index=round_index,
            annotator_id=annotator_id,
            payload_kind=payload_kind,
            raw_text=raw_text,
            observe_image_s=durations["observe"],
            read_previous_s=durations["read"],
            output_s=durations["output"],
        )

        merged_caption: str | None = None
        merged_units: list[SemanticUnit] | None = None
        merge_pending = False
        try:
            record.denoised_text = self.gateway.denoise(raw_text)
            record.extracted_units = [
                replace(u, source_round=round_index)
                for u in self.gateway.extract_units(record.denoised_text)
            ]
            if self.mode.kind == "parallel":
                if round_index == self.mode.annotators:
                    captions = [r.denoised_text for r in self.rounds] + [record.denoised_text]
                    merged_caption = self.gateway.merge_captions("parallel", captions)
                    merged_units = self.gateway.extract_units(merged_caption)
            else:
                if round_index == 1:
                    merged_caption = record.denoised_text
                else:
                    merged_caption = self.gateway.merge_captions(
                        "sequential", [self.merged_caption, record.denoised_text])
                merged_units = self.gateway.extract_units(merged_caption)
        except (AnnochainError, OSError):
            merge_pending = True
            merged_caption = None
            merged_units = None
        return RoundResult(record, all_events, merged_caption, merged_units, merge_pending)

    def apply_round(self, result: RoundResult) -> None:
        """Pure state transition; shared by live submission and log replay."""
        self.rounds.append(result.record)
        self.ledger.extend(sorted(result.events, key=lambda e: e.t))
        self._pending_read = None
        if result.merge_pending:
            self.status = "awaiting_merge"
            return
        if result.merged_caption is not None:
            self.merged_caption = result.merged_caption
            self.merged_tree = build_tree(result.merged_units or [])
            self.merged_history.append(self.merged_tree)
        if self.mode.kind == "single":
            self.status = "finalized"
            self.finalized_by = result.record.annotator_id

    def retry_merge(self) -> RoundResult:
        """Re-run the failed pipeline for the last stored round."""
        if self.status != "awaiting_merge":
            raise SessionStateError("no pending merge to retry")
        record = self.rounds[-1]
        result = self._recompute_merge(record)
        self.apply_merge(result)
        return result

    def _recompute_merge(self, record: AnnotationRecord) -> RoundResult:
        record.denoised_text = self.gateway.denoise(record.raw_text)
        record.extracted_units = [
            replace(u, source_round=record.round_index)
            for u in self.gateway.extract_units(record.denoised_text)
        ]
        if self.mode.kind == "parallel":
            if record.round_index == self.mode.annotators:
                captions = [r.denoised_text for r in self.rounds]
                merged_caption = self.gateway.merge_captions("parallel", captions)
            else:
                return RoundResult(record, [], None, None, merge_pending=False)
        elif record.round_index == 1:
            merged_caption = record.denoised_text
        else:
            merged_caption = self.gateway.merge_captions(
                "sequential", [self.merged_caption, record.denoised_text])
        merged_units = self.gateway.extract_units(merged_caption)
        return RoundResult(record, [], merged_caption, merged_units)

    def apply_merge(self, result: RoundResult) -> None:
        self.status = "open"
        if result.merged_caption is not None:
            self.merged_caption = result.merged_caption
            self.merged_tree = build_tree(result.merged_units or [])
            self.merged_history.append(self.merged_tree)
        if self.mode.kind == "single":
            self.status = "finalized"
            self.finalized_by = result.record.annotator_id

    # ------------------------------------------------------------------
    # finalization and timing
    # ------------------------------------------------------------------

    def finalize(self, declared_complete_by: str) -> None:
        if self.status == "finalized":
            raise SessionClosed("session already finalized")
        if self.status == "awaiting_merge":
            raise SessionStateError("merge pending; retry before finalizing")
        if not self.rounds:
            raise SessionStateError("cannot finalize an empty session")
        if self.mode.kind == "parallel":
            if len(self.rounds) < self.mode.annotators or self.merged_caption is None:
                raise IncompleteParallelSession(
                    f"need {self.mode.annotators} merged rounds, have {len(self.rounds)}")
        self.status = "finalized"
        self.finalized_by = declared_complete_by

    def total_time(self) -> float:
        """Reconstruct the per-mode total-time formula from the ledger.

        single: observe + output.
        parallel: sum of observes plus sum of outputs.
        chain: sum of observes plus, per round, read + output (round 1 reads
        nothing).
        """
        if not self.rounds:
            raise LedgerIncomplete("no rounds recorded")
        total = 0.0
        for record in self.rounds:
            durations = self.ledger.round_durations(record.round_index)
            total += durations["observe"] + durations["output"]
            if self.mode.kind == "chain" and record.round_index > 1:
                total += durations["read"]
        return total


def _durations_from(events: Sequence[TimingEvent]) -> dict[str, float]:
    stamps = {e.kind: e.t for e in events}
    out = {}
    for phase in ("observe", "read", "output"):
        start, end = stamps.get(f"{phase}_start"), stamps.get(f"{phase}_end")
        out[phase] = (end - start) if start is not None and end is not None else 0.0
    return out


def create_session(image_ref: str, mode: Mode, gateway: Gateway,
                   session_id: str | None = None) -> AnnotationSession:
    return AnnotationSession(image_ref, mode, gateway, session_id=session_id)


def merged_unit_counts(session: AnnotationSession) -> list[int]:
    """Merged-tree unit count after each completed merge, in round order."""
    return [unit_count(tree) for tree in session.merged_history]
