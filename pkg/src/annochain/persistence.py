"""Append-only session event log with snapshots and bit-exact replay."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Iterator

from .chain import (
    AnnotationRecord,
    AnnotationSession,
    Mode,
    RoundResult,
    TimingEvent,
)
from .errors import CorruptLog, GatewayFailure
from .gateway import Gateway
from .semantic import AttributeKind, SemanticUnit, unit_count

LOG_FILENAME = "events.jsonl"
SNAPSHOT_FILENAME = "snapshot.json"


# --------------------------------------------------------------------------
# value (de)serialization
# --------------------------------------------------------------------------

def _unit_to_list(u: SemanticUnit) -> list:
    return [u.object_name, u.kind.value, u.value, u.source_round]


def _unit_from_list(data: list) -> SemanticUnit:
    return SemanticUnit(data[0], AttributeKind(data[1]), data[2], data[3])


def _record_to_dict(r: AnnotationRecord) -> dict:
    return {
        "round_index": r.round_index,
        "annotator_id": r.annotator_id,
        "payload_kind": r.payload_kind,
        "raw_text": r.raw_text,
        "denoised_text": r.denoised_text,
        "observe_image_s": r.observe_image_s,
        "read_previous_s": r.read_previous_s,
        "output_s": r.output_s,
        "extracted_units": [_unit_to_list(u) for u in r.extracted_units],
    }


def _record_from_dict(data: dict) -> AnnotationRecord:
    return AnnotationRecord(
        round_index=data["round_index"],
        annotator_id=data["annotator_id"],
        payload_kind=data["payload_kind"],
        raw_text=data["raw_text"],
        denoised_text=data["denoised_text"],
        observe_image_s=data["observe_image_s"],
        read_previous_s=data["read_previous_s"],
        output_s=data["output_s"],
        extracted_units=[_unit_from_list(u) for u in data["extracted_units"]],
    )


def _events_to_list(events: list[TimingEvent]) -> list:
    return [[e.round_index, e.kind, e.t] for e in events]


def _events_from_list(data: list) -> list[TimingEvent]:
    return [TimingEvent(round_index, kind, t) for round_index, kind, t in data]


def session_to_dict(session: AnnotationSession) -> dict:
    """Full canonical state; replaying the log reproduces this exactly."""
    from .semantic import tree_to_json

    return {
        "session_id": session.session_id,
        "image_ref": session.image_ref,
        "mode": session.mode.to_dict(),
        "status": session.status,
        "merged_caption": session.merged_caption,
        "merged_tree": tree_to_json(session.merged_tree),
        "merged_history": [tree_to_json(t) for t in session.merged_history],
        "rounds": [_record_to_dict(r) for r in session.rounds],
        "ledger": _events_to_list(session.ledger.events),
        "finalized_by": session.finalized_by,
        "pending_read": list(session._pending_read) if session._pending_read else None,
    }


def session_from_dict(data: dict, gateway: Gateway) -> AnnotationSession:
    from .semantic import tree_from_json

    session = AnnotationSession(data["image_ref"], Mode.from_dict(data["mode"]),
                                gateway, session_id=data["session_id"])
    session.status = data["status"]
    session.merged_caption = data["merged_caption"]
    session.merged_tree = tree_from_json(data["merged_tree"])
    session.merged_history = [tree_from_json(t) for t in data["merged_history"]]
    session.rounds = [_record_from_dict(r) for r in data["rounds"]]
    session.ledger.extend(_events_from_list(data["ledger"]))
    session.finalized_by = data["finalized_by"]
    pending = data.get("pending_read")
    session._pending_read = tuple(pending) if pending else None
    return session


def state_hash(sessions: dict[str, AnnotationSession]) -> str:
    """Order-independent digest of every session's canonical serialization."""
    doc = {sid: session_to_dict(s) for sid, s in sorted(sessions.items())}
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# --------------------------------------------------------------------------
# store
# --------------------------------------------------------------------------

class SessionStore:
    """File-backed store: every mutation is logged before it is applied, so a
    crash at any point replays to the same externally visible state."""

    def __init__(self, data_dir: str | os.PathLike, gateway: Gateway):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.gateway = gateway
        self.sessions: dict[str, AnnotationSession] = {}
        self._applied_events = 0

    @property
    def log_path(self) -> Path:
        return self.data_dir / LOG_FILENAME

    @property
    def snapshot_path(self) -> Path:
        return self.data_dir / SNAPSHOT_FILENAME

    # -- logging ------------------------------------------------------------

    def _append(self, event: dict) -> None:
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True, separators=(",", ":")) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._applied_events += 1

    # -- mutations ----------------------------------------------------------

    def create_session(self, image_ref: str, mode: Mode,
                       session_id: str | None = None) -> AnnotationSession:
        session = AnnotationSession(image_ref, mode, self.gateway, session_id=session_id)
        self._append({"kind": "session_created", "session_id": session.session_id,
                      "image_ref": image_ref, "mode": mode.to_dict()})
        self.sessions[session.session_id] = session
        return session

    def serve_prior(self, session_id: str, annotator_id: str, t: float) -> str:
        session = self.sessions[session_id]
        caption = session.serve_prior_annotation(annotator_id, t)
        self._append({"kind": "prior_served", "session_id": session_id,
                      "annotator_id": annotator_id, "t": t})
        return caption

    def submit_round(self, session_id: str, annotator_id: str, payload_kind: str,
                     raw_text: str, events: list[TimingEvent]) -> RoundResult:
        session = self.sessions[session_id]
        result = session.compute_round(annotator_id, payload_kind, raw_text, events)
        self._append({
            "kind": "round_submitted",
            "session_id": session_id,
            "record": _record_to_dict(result.record),
            "events": _events_to_list(result.events),
            "merged_caption": result.merged_caption,
            "merged_units": ([_unit_to_list(u) for u in result.merged_units]
                             if result.merged_units is not None else None),
            "merge_pending": result.merge_pending,
        })
        session.apply_round(result)
        if result.merge_pending:
            raise GatewayFailure("round stored; merge failed and is retriable")
        return result

    def retry_merge(self, session_id: str) -> RoundResult:
        session = self.sessions[session_id]
        record = session.rounds[-1]
        result = session._recompute_merge(record)
        self._append({
            "kind": "merge_completed",
            "session_id": session_id,
            "record": _record_to_dict(result.record),
            "merged_caption": result.merged_caption,
            "merged_units": ([_unit_to_list(u) for u in result.merged_units]
                             if result.merged_units is not None else None),
        })
        session.apply_merge(result)
        return result

    def finalize(self, session_id: str, annotator_id: str) -> AnnotationSession:
        session = self.sessions[session_id]
        session.finalize(annotator_id)
        self._append({"kind": "session_finalized", "session_id": session_id,
                      "annotator_id": annotator_id})
        return session

    # -- replay -------------------------------------------------------------

    def _apply_logged(self, event: dict) -> None:
        kind = event["kind"]
        if kind == "session_created":
            session = AnnotationSession(event["image_ref"], Mode.from_dict(event["mode"]),
                                        self.gateway, session_id=event["session_id"])
            self.sessions[session.session_id] = session
            return
        session = self.sessions[event["session_id"]]
        if kind == "prior_served":
            session._pending_read = (event["annotator_id"], event["t"])
        elif kind == "round_submitted":
            result = RoundResult(
                record=_record_from_dict(event["record"]),
                events=_events_from_list(event["events"]),
                merged_caption=event["merged_caption"],
                merged_units=([_unit_from_list(u) for u in event["merged_units"]]
                              if event["merged_units"] is not None else None),
                merge_pending=event["merge_pending"],
            )
            session.apply_round(result)
        elif kind == "merge_completed":
            result = RoundResult(
                record=_record_from_dict(event["record"]),
                events=[],
                merged_caption=event["merged_caption"],
                merged_units=([_unit_from_list(u) for u in event["merged_units"]]
                              if event["merged_units"] is not None else None),
            )
            session.rounds[-1] = result.record
            session.apply_merge(result)
        elif kind == "session_finalized":
            session.status = "finalized"
            session.finalized_by = event["annotator_id"]
        else:
            raise ValueError(f"unknown log event kind: {kind!r}")

    def load(self) -> None:
        """Rebuild state from snapshot (if any) plus the event log tail.

        Raises CorruptLog at the first undecodable line; state built from
        the preceding lines stays intact.
        """
        self.sessions = {}
        self._applied_events = 0
        skip = 0
        if self.snapshot_path.exists():
            snapshot = json.loads(self.snapshot_path.read_text(encoding="utf-8"))
            skip = snapshot["event_count"]
            self.sessions = {
                sid: session_from_dict(doc, self.gateway)
                for sid, doc in snapshot["sessions"].items()
            }
            self._applied_events = skip
        if not self.log_path.exists():
            return
        with open(self.log_path, encoding="utf-8") as fh:
            for line_number, line in enumerate(fh, start=1):
                if line_number <= skip:
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorruptLog(line_number) from exc
                self._apply_logged(event)
                self._applied_events += 1

    def write_snapshot(self) -> None:
        doc = {
            "event_count": self._applied_events,
            "sessions": {sid: session_to_dict(s) for sid, s in sorted(self.sessions.items())},
        }
        tmp = self.snapshot_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")),
                       encoding="utf-8")
        tmp.replace(self.snapshot_path)

    def hash(self) -> str:
        return state_hash(self.sessions)

    # -- export -------------------------------------------------------------

    def export_records(self, mode: str | None = None) -> Iterator[dict]:
        """One record per finalized session, ordered by session_id."""
        for sid in sorted(self.sessions):
            session = self.sessions[sid]
            if session.status != "finalized":
                continue
            if mode is not None and session.mode.kind != mode:
                continue
            yield {
                "image_ref": session.image_ref,
                "merged_caption": session.merged_caption,
                "unit_count": unit_count(session.merged_tree),
                "mode": session.mode.kind,
                "total_time_s": session.total_time(),
            }

    def export_jsonl(self, mode: str | None = None) -> Iterator[str]:
        for record in self.export_records(mode):
            yield json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n"
