"""Annotation-chain engine: semantic-unit trees, session orchestration,
dedup metrics, strategy simulation, and an HTTP annotation service."""

from .chain import (
    AnnotationRecord,
    AnnotationSession,
    Mode,
    RoundResult,
    TimingEvent,
    TimingLedger,
    create_session,
    merged_unit_counts,
)
from .config import ApiConfig, load_config
from .embedding import EmbeddingProvider, HashEmbeddingProvider
from .gateway import Gateway, HttpGateway, MockGateway, token_count
from .matching import DuplicationMatcher, duplication_rate
from .metrics import (
    ENTROPY_BITS_PER_WORD,
    IntrinsicReport,
    QualityBreakdown,
    QualityObjective,
    efficiency,
    entropy_proxy,
    intrinsic_report,
    quality,
)
from .persistence import SessionStore, state_hash
from .semantic import (
    AttributeKind,
    SemanticUnit,
    SemanticUnitTree,
    build_tree,
    canonical_tree_json,
    residual,
    tree_from_json,
    tree_to_json,
    tree_units,
    unit_count,
)
from .simulate import (
    SimOutcome,
    SimScenario,
    Strategy,
    delta_t,
    expected_covered,
    expected_duplication_pct,
    pareto_sweep,
    simulate_strategy,
    strategy_time,
    words_per_unit_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationRecord", "AnnotationSession", "Mode", "RoundResult",
    "TimingEvent", "TimingLedger", "create_session", "merged_unit_counts",
    "ApiConfig", "load_config",
    "EmbeddingProvider", "HashEmbeddingProvider",
    "Gateway", "HttpGateway", "MockGateway", "token_count",
    "DuplicationMatcher", "duplication_rate",
    "ENTROPY_BITS_PER_WORD", "IntrinsicReport", "QualityBreakdown",
    "QualityObjective", "efficiency", "entropy_proxy", "intrinsic_report",
    "quality",
    "SessionStore", "state_hash",
    "AttributeKind", "SemanticUnit", "SemanticUnitTree", "build_tree",
    "canonical_tree_json", "residual", "tree_from_json", "tree_to_json",
    "tree_units", "unit_count",
    "SimOutcome", "SimScenario", "Strategy", "delta_t", "expected_covered",
    "expected_duplication_pct", "pareto_sweep", "simulate_strategy",
    "strategy_time", "words_per_unit_sweep",
]
