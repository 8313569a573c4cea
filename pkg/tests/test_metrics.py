import pytest

from annochain.chain import AnnotationSession, Mode
from annochain.errors import MissingReference, SessionNotFinalized, ZeroTime
from annochain.matching import DuplicationMatcher
from annochain.metrics import (
    ENTROPY_BITS_PER_WORD,
    QualityObjective,
    efficiency,
    entropy_proxy,
    intrinsic_report,
    metrics_csv,
    quality,
)
from annochain.semantic import SemanticUnit, build_tree

from .conftest import round_events


def u(name, kind, value):
    return SemanticUnit.make(name, kind, value)


class TestEntropyProxy:
    def test_hundred_words(self):
        assert entropy_proxy(" ".join(["word"] * 100)) == 1182.0

    def test_three_words(self):
        assert entropy_proxy("a red car") == pytest.approx(3 * ENTROPY_BITS_PER_WORD)

    def test_empty(self):
        assert entropy_proxy("") == 0.0


class TestQuality:
    def reference(self):
        return build_tree([u("car", "colour", "red"), u("tree", "amount", "two"),
                           u("road", "size", "wide")])

    def test_requires_reference(self):
        with pytest.raises(MissingReference):
            quality(build_tree([]), None, "caption")

    def test_coverage_counts_matched_reference_units(self):
        merged = build_tree([u("car", "colour", "red"), u("tree", "amount", "two")])
        breakdown = quality(merged, self.reference(), "a red car and two trees")
        assert breakdown.coverage == 2.0
        assert breakdown.combined == 2.0  # default weights are zero

    def test_entropy_and_comprehensibility_weights(self):
        merged = build_tree([u("car", "colour", "red")])
        objective = QualityObjective(beta=0.01, gamma=2.0,
                                     comprehensibility_scorer=lambda text: 0.5)
        breakdown = quality(merged, self.reference(), "a red car", objective)
        assert breakdown.entropy_bits == pytest.approx(3 * ENTROPY_BITS_PER_WORD)
        assert breakdown.combined == pytest.approx(1.0 - 0.01 * breakdown.entropy_bits - 1.0)


class TestEfficiency:
    def test_ratio(self):
        assert efficiency(30.0, 150.0) == pytest.approx(0.2)

    def test_zero_time(self):
        with pytest.raises(ZeroTime):
            efficiency(1.0, 0.0)


class TestIntrinsicReport:
    def chain_session(self, gateway):
        s = AnnotationSession("img", Mode.chain(), gateway)
        s.submit_round("a1", "typed_text", "a red car.", round_events(1))
        s.serve_prior_annotation("a2", 120.0)
        s.submit_round("a2", "typed_text", "two trees.",
                       round_events(2, start=100.0, gap=10.0))
        s.finalize("a2")
        return s

    def test_requires_finalized(self, gateway):
        s = AnnotationSession("img", Mode.chain(), gateway)
        s.submit_round("a1", "typed_text", "a red car.", round_events(1))
        with pytest.raises(SessionNotFinalized):
            intrinsic_report(s)

    def test_chain_report(self, gateway):
        report = intrinsic_report(self.chain_session(gateway))
        assert report.unit_count == 2
        assert report.total_time_s == pytest.approx(70.0)
        assert report.speed_units_per_s == pytest.approx(2 / 70.0)
        assert report.duplication_pct == 0.0

    def test_single_round_has_no_duplication_stat(self, gateway):
        s = AnnotationSession("img", Mode.single(), gateway)
        s.submit_round("a1", "typed_text", "a red car.", round_events(1))
        report = intrinsic_report(s)
        assert report.duplication_pct is None

    def test_parallel_duplication_against_earlier_union(self, gateway):
        s = AnnotationSession("img", Mode.parallel(2), gateway)
        s.submit_round("a1", "typed_text", "a red car. two trees.", round_events(1))
        s.submit_round("a2", "typed_text", "a red car. a wide road.",
                       round_events(2, start=100.0))
        s.finalize("a2")
        report = intrinsic_report(s, DuplicationMatcher(mode="exact"))
        assert report.duplication_pct == pytest.approx(50.0)


def test_metrics_csv_schema():
    rows = [{"session_id": "s1", "mode": "chain", "unit_count": 3,
             "total_time_s": 70.0, "speed_units_per_s": 3 / 70.0,
             "duplication_pct": 0.0, "J": 3.0, "E": 3 / 70.0}]
    text = metrics_csv(rows)
    header, line = text.strip().split("\n")
    assert header == "session_id,mode,unit_count,total_time_s,speed_units_per_s,duplication_pct,J,E"
    assert line.startswith("s1,chain,3,70.0,")
