import numpy as np
import pytest

from annochain.chain import (
    AnnotationSession,
    Mode,
    TimingEvent,
    merged_unit_counts,
    validate_round_events,
)
from annochain.errors import (
    GatewayFailure,
    IncompleteParallelSession,
    InvalidMode,
    LedgerIncomplete,
    NothingToRead,
    OutOfOrderRound,
    SessionClosed,
    SessionStateError,
)
from annochain.semantic import unit_count

from .conftest import round_events


class TestMode:
    def test_parallel_needs_two(self):
        with pytest.raises(InvalidMode):
            Mode.parallel(1)
        assert Mode.parallel(3).annotators == 3

    def test_unknown_kind(self):
        with pytest.raises(InvalidMode):
            Mode("triangular")

    def test_round_trip(self):
        mode = Mode.chain(max_rounds=4)
        assert Mode.from_dict(mode.to_dict()) == mode


class TestEventValidation:
    def test_accepts_touching_phase_boundaries(self):
        events = round_events(1, observe=5, output=5)
        validate_round_events(events, 1, allow_read=False)

    def test_rejects_zero_length_phase(self):
        events = [TimingEvent(1, "observe_start", 0), TimingEvent(1, "observe_end", 0),
                  TimingEvent(1, "output_start", 0), TimingEvent(1, "output_end", 1)]
        with pytest.raises(ValueError):
            validate_round_events(events, 1, allow_read=False)

    def test_rejects_out_of_order_phases(self):
        events = [TimingEvent(1, "observe_start", 5), TimingEvent(1, "observe_end", 9),
                  TimingEvent(1, "output_start", 1), TimingEvent(1, "output_end", 2)]
        with pytest.raises(ValueError):
            validate_round_events(events, 1, allow_read=False)

    def test_rejects_read_when_not_allowed(self):
        events = round_events(1, read=3.0)
        with pytest.raises(ValueError):
            validate_round_events(events, 1, allow_read=False)

    def test_rejects_missing_required_pair(self):
        events = [TimingEvent(1, "observe_start", 0), TimingEvent(1, "observe_end", 1)]
        with pytest.raises(ValueError):
            validate_round_events(events, 1, allow_read=False)

    def test_rejects_duplicates(self):
        events = round_events(1) + [TimingEvent(1, "observe_start", 99)]
        with pytest.raises(ValueError):
            validate_round_events(events, 1, allow_read=False)


class TestSingleMode:
    def test_one_round_finalizes_automatically(self, gateway):
        s = AnnotationSession("img", Mode.single(), gateway)
        s.submit_round("a1", "typed_text", "a red car.", round_events(1))
        assert s.status == "finalized"
        assert s.finalized_by == "a1"
        assert unit_count(s.merged_tree) == 1

    def test_second_round_rejected(self, gateway):
        s = AnnotationSession("img", Mode.single(), gateway)
        s.submit_round("a1", "typed_text", "a red car.", round_events(1))
        with pytest.raises(SessionClosed):
            s.submit_round("a2", "typed_text", "two trees.", round_events(2))

    def test_total_time_is_observe_plus_output(self, gateway):
        s = AnnotationSession("img", Mode.single(), gateway)
        s.submit_round("a1", "typed_text", "a red car.",
                       round_events(1, observe=20, output=12.5))
        assert s.total_time() == pytest.approx(32.5)


class TestChainMode:
    def run_round(self, s, idx, text, read=None, start=None):
        start = start if start is not None else (idx - 1) * 100.0
        gap = 0.0
        if idx > 1:
            s.serve_prior_annotation(f"a{idx}", start + 20.0)
            if read is None:
                gap = 10.0  # leaves room for the auto-recorded read interval
        events = round_events(idx, start=start, read=read, gap=gap)
        s.submit_round(f"a{idx}", "speech_transcript", text, events)

    def test_prior_annotation_required_before_round_two(self, gateway):
        s = AnnotationSession("img", Mode.chain(), gateway)
        self.run_round(s, 1, "a red car.")
        with pytest.raises(SessionStateError):
            s.submit_round("a2", "typed_text", "two trees.",
                           round_events(2, start=100.0))

    def test_nothing_to_read_on_round_one(self, gateway):
        s = AnnotationSession("img", Mode.chain(), gateway)
        with pytest.raises(NothingToRead):
            s.serve_prior_annotation("a1", 0.0)

    def test_read_events_auto_appended(self, gateway):
        s = AnnotationSession("img", Mode.chain(), gateway)
        self.run_round(s, 1, "a red car.")
        self.run_round(s, 2, "two trees.")
        kinds = {e.kind for e in s.ledger.round_events(2)}
        assert {"read_start", "read_end"} <= kinds
        durations = s.ledger.round_durations(2)
        # read spans serving the prior caption up to first output action
        assert durations["read"] == pytest.approx(10.0)

    def test_monotone_accumulation(self, gateway):
        s = AnnotationSession("img", Mode.chain(), gateway)
        self.run_round(s, 1, "a red car.")
        self.run_round(s, 2, "two trees.")
        self.run_round(s, 3, "a wide road.")
        counts = merged_unit_counts(s)
        assert counts == [1, 2, 3]
        assert all(b >= a for a, b in zip(counts, counts[1:]))

    def test_override_keeps_count_non_decreasing(self, gateway):
        s = AnnotationSession("img", Mode.chain(), gateway)
        self.run_round(s, 1, "the car is black.")
        self.run_round(s, 2, "the car is white.")
        assert "white" in s.merged_caption
        assert merged_unit_counts(s) == [1, 1]

    def test_max_rounds_enforced(self, gateway):
        s = AnnotationSession("img", Mode.chain(max_rounds=1), gateway)
        self.run_round(s, 1, "a red car.")
        with pytest.raises(SessionClosed):
            s.compute_round("a2", "typed_text", "two trees.", round_events(2))

    def test_total_time_includes_reads_after_round_one(self, gateway):
        s = AnnotationSession("img", Mode.chain(), gateway)
        self.run_round(s, 1, "a red car.")
        self.run_round(s, 2, "two trees.", read=7.0)
        # 20 + 10 for each round, plus the 7 s read in round 2
        assert s.total_time() == pytest.approx(67.0)
        s.finalize("a2")
        assert s.status == "finalized"


class TestParallelMode:
    def submit(self, s, idx, text):
        s.submit_round(f"a{idx}", "typed_text", text,
                       round_events(idx, start=(idx - 1) * 100.0))

    def test_merge_deferred_until_last_round(self, gateway):
        s = AnnotationSession("img", Mode.parallel(3), gateway)
        self.submit(s, 1, "a red car.")
        self.submit(s, 2, "two trees.")
        assert s.merged_caption is None
        self.submit(s, 3, "a wide road.")
        assert s.merged_caption is not None
        assert unit_count(s.merged_tree) == 3

    def test_finalize_requires_all_rounds(self, gateway):
        s = AnnotationSession("img", Mode.parallel(2), gateway)
        self.submit(s, 1, "a red car.")
        with pytest.raises(IncompleteParallelSession):
            s.finalize("a1")

    def test_extra_round_rejected(self, gateway):
        s = AnnotationSession("img", Mode.parallel(2), gateway)
        self.submit(s, 1, "a red car.")
        self.submit(s, 2, "two trees.")
        with pytest.raises(OutOfOrderRound):
            s.compute_round("a3", "typed_text", "a road.", round_events(3))

    def test_no_read_events_allowed(self, gateway):
        s = AnnotationSession("img", Mode.parallel(2), gateway)
        with pytest.raises(ValueError):
            s.submit_round("a1", "typed_text", "a car.",
                           round_events(1, read=5.0))

    def test_total_time_sums_observe_and_output(self, gateway):
        s = AnnotationSession("img", Mode.parallel(2), gateway)
        self.submit(s, 1, "a red car.")
        self.submit(s, 2, "two trees.")
        s.finalize("a2")
        assert s.total_time() == pytest.approx(2 * 30.0)


class TestOrderingAndValidation:
    def test_events_for_wrong_round_rejected(self, gateway):
        s = AnnotationSession("img", Mode.chain(), gateway)
        with pytest.raises(OutOfOrderRound):
            s.compute_round("a1", "typed_text", "a car.", round_events(2))

    def test_unknown_payload_kind(self, gateway):
        s = AnnotationSession("img", Mode.chain(), gateway)
        with pytest.raises(ValueError):
            s.compute_round("a1", "telepathy", "a car.", round_events(1))

    def test_empty_text_rejected(self, gateway):
        s = AnnotationSession("img", Mode.chain(), gateway)
        with pytest.raises(ValueError):
            s.compute_round("a1", "typed_text", "   ", round_events(1))

    def test_finalize_empty_session(self, gateway):
        s = AnnotationSession("img", Mode.chain(), gateway)
        with pytest.raises(SessionStateError):
            s.finalize("a1")

    def test_total_time_without_rounds(self, gateway):
        s = AnnotationSession("img", Mode.chain(), gateway)
        with pytest.raises(LedgerIncomplete):
            s.total_time()


class _FailingGateway:
    """Denoise works; merging fails until told otherwise."""

    def __init__(self, inner):
        self.inner = inner
        self.fail = True

    def denoise(self, caption):
        return self.inner.denoise(caption)

    def extract_units(self, caption):
        return self.inner.extract_units(caption)

    def merge_captions(self, mode, captions):
        if self.fail:
            raise OSError("gateway unreachable")
        return self.inner.merge_captions(mode, captions)

    def transcribe(self, audio, format_tag):
        return self.inner.transcribe(audio, format_tag)

    def generate_questions(self, caption):
        return self.inner.generate_questions(caption)


class TestMergeFailureRecovery:
    def test_round_stored_merge_retriable(self, gateway):
        flaky = _FailingGateway(gateway)
        s = AnnotationSession("img", Mode.chain(), flaky)
        s.submit_round("a1", "typed_text", "a red car.", round_events(1))
        s.serve_prior_annotation("a2", 120.0)
        with pytest.raises(GatewayFailure):
            s.submit_round("a2", "typed_text", "two trees.",
                           round_events(2, start=100.0, gap=5.0))
        assert s.status == "awaiting_merge"
        assert len(s.rounds) == 2
        with pytest.raises(SessionClosed):
            s.compute_round("a3", "typed_text", "a road.", round_events(3))
        with pytest.raises(SessionStateError):
            s.finalize("a2")
        flaky.fail = False
        s.retry_merge()
        assert s.status == "open"
        assert unit_count(s.merged_tree) == 2
        s.finalize("a2")

    def test_retry_without_pending_merge(self, gateway):
        s = AnnotationSession("img", Mode.chain(), gateway)
        with pytest.raises(SessionStateError):
            s.retry_merge()


def test_time_formula_fidelity_randomized(gateway):
    """Ledger-reconstructed totals match the closed-form mode formulas."""
    rng = np.random.default_rng(3)
    for _ in range(100):
        kind = ["single", "parallel", "chain"][rng.integers(3)]
        rounds = 1 if kind == "single" else int(rng.integers(2, 5))
        mode = {"single": Mode.single(), "parallel": Mode.parallel(max(rounds, 2)),
                "chain": Mode.chain()}[kind]
        s = AnnotationSession("img", mode, gateway)
        expected = 0.0
        for k in range(1, rounds + 1):
            observe = float(rng.uniform(1, 30))
            output = float(rng.uniform(1, 30))
            read = float(rng.uniform(1, 10)) if kind == "chain" and k > 1 else None
            if kind == "chain" and k > 1:
                s.serve_prior_annotation(f"a{k}", (k - 1) * 1000.0 + observe)
            s.submit_round(f"a{k}", "typed_text", f"a thing{k}.",
                           round_events(k, start=(k - 1) * 1000.0,
                                        observe=observe, read=read, output=output))
            expected += observe + output + (read or 0.0)
        assert s.total_time() == pytest.approx(expected, abs=1e-6)
