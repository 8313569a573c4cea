"""Monte-Carlo and closed-form study of annotation strategies.

Models a latent space of ``n_units`` semantic units. A chain of annotators
samples from the residual space with diminishing per-round capacity, while
parallel annotators sample independently from the full space. Times follow
the read/talk/type word rates; quality is realized as covered-unit count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidScenario, PremiseViolation

# word rates in words per minute
V_TALK_WPM = 161.2
V_TYPE_WPM = 53.46
V_READ_WPM = 236.0

_MODALITIES = ("talk", "type")


@dataclass(frozen=True)
class Strategy:
    kind: str          # single | parallel | chain
    rounds: int = 1

    def __post_init__(self):
        if self.kind not in ("single", "parallel", "chain"):
            raise InvalidScenario(f"unknown strategy kind: {self.kind!r}")
        if self.rounds < 1:
            raise InvalidScenario("strategy needs rounds >= 1")
        if self.kind == "single" and self.rounds != 1:
            raise InvalidScenario("single strategy is one round")

    @classmethod
    def parse(cls, spec: str) -> "Strategy":
        """Parse "single", "parallel:3", or "chain:2"."""
        if ":" in spec:
            kind, _, count = spec.partition(":")
            return cls(kind, int(count))
        return cls(spec, 1)

    def label(self) -> str:
        return self.kind if self.kind == "single" else f"{self.kind}:{self.rounds}"


@dataclass(frozen=True)
class SimScenario:
    """Latent-space size, ability schedule, word rates, and modality choices."""

    n_units: int = 60
    capacities: tuple[int, ...] = (30, 15)
    diminish_factor: float = 0.5
    words_per_unit: float = 4.0
    v_talk_wpm: float = V_TALK_WPM
    v_type_wpm: float = V_TYPE_WPM
    v_read_wpm: float = V_READ_WPM
    t_observe_s: float = 20.0
    parallel_cover_prob: float | None = None  # None: draw capacity units exactly
    single_output: str = "talk"
    parallel_output: str = "talk"
    chain_output: str = "talk"
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_units < 1:
            raise InvalidScenario("n_units must be >= 1")
        if not self.capacities or any(c < 1 for c in self.capacities):
            raise InvalidScenario("capacities must be positive")
        if min(self.v_talk_wpm, self.v_type_wpm, self.v_read_wpm) <= 0:
            raise InvalidScenario("word rates must be positive")
        if self.words_per_unit <= 0:
            raise InvalidScenario("words_per_unit must be positive")
        if self.t_observe_s < 0:
            raise InvalidScenario("t_observe_s must be >= 0")
        for modality in (self.single_output, self.parallel_output, self.chain_output):
            if modality not in _MODALITIES:
                raise InvalidScenario(f"unknown output modality: {modality!r}")

    @classmethod
    def calibrated(cls, **overrides) -> "SimScenario":
        """Default comparison setup: a typing single annotator (the
        conventional interface), talking parallel annotators, and a
        reading-plus-talking chain."""
        base = dict(single_output="type")
        base.update(overrides)
        return cls(**base)

    def capacity(self, round_index: int) -> int:
        """Ability of the annotator in `round_index` (1-based); the schedule
        extends geometrically past the configured list."""
        if round_index <= len(self.capacities):
            return self.capacities[round_index - 1]
        tail = self.capacities[-1]
        extra = round_index - len(self.capacities)
        return max(1, int(round(tail * self.diminish_factor ** extra)))

    def output_rate(self, strategy_kind: str) -> float:
        """Words per second for the strategy's output modality."""
        modality = {
            "single": self.single_output,
            "parallel": self.parallel_output,
            "chain": self.chain_output,
        }[strategy_kind]
        wpm = self.v_talk_wpm if modality == "talk" else self.v_type_wpm
        return wpm / 60.0

    @property
    def read_rate(self) -> float:
        return self.v_read_wpm / 60.0


@dataclass(frozen=True)
class SimOutcome:
    strategy: str
    covered_units: int
    total_time_s: float
    duplication_pct: float
    j: float
    e: float
    info_gain_trace: tuple[int, ...]
    coverage_error: tuple[int, ...] = ()  # per-round count of latent units missed


def _check(scenario: SimScenario, strategy: Strategy) -> None:
    if scenario.capacity(1) > scenario.n_units:
        raise InvalidScenario("round-1 capacity exceeds the latent space")


def simulate_strategy(scenario: SimScenario, strategy: Strategy,
                      rng: np.random.Generator | None = None) -> SimOutcome:
    """One sampled run of a strategy; identical seeds give identical outcomes."""
    _check(scenario, strategy)
    rng = rng or np.random.default_rng(scenario.rng_seed)
    wpu = scenario.words_per_unit
    out_rate = scenario.output_rate(strategy.kind)

    if strategy.kind in ("single", "chain"):
        rounds = 1 if strategy.kind == "single" else strategy.rounds
        covered: set[int] = set()
        trace: list[int] = []
        total_time = 0.0
        for k in range(1, rounds + 1):
            residual = np.setdiff1d(np.arange(scenario.n_units), sorted(covered),
                                    assume_unique=True)
            take = min(scenario.capacity(k), residual.size)
            picked = rng.choice(residual, size=take, replace=False) if take else []
            before = len(covered)
            covered.update(int(i) for i in picked)
            trace.append(len(covered) - before)
            total_time += scenario.t_observe_s
            if strategy.kind == "chain" and k > 1:
                total_time += (before * wpu) / scenario.read_rate
            total_time += (take * wpu) / out_rate
        duplication = 0.0  # residual sampling never re-covers a unit
    else:
        m = strategy.rounds
        c = scenario.capacity(1)
        covered = set()
        trace = []
        dup_rates = []
        total_time = 0.0
        for k in range(m):
            if scenario.parallel_cover_prob is not None:
                mask = rng.random(scenario.n_units) < scenario.parallel_cover_prob
                picked = np.flatnonzero(mask)
            else:
                picked = rng.choice(scenario.n_units, size=c, replace=False)
            before = len(covered)
            overlap = sum(1 for i in picked if int(i) in covered)
            covered.update(int(i) for i in picked)
            trace.append(len(covered) - before)
            if k > 0 and len(picked):
                dup_rates.append(100.0 * overlap / len(picked))
            total_time += scenario.t_observe_s + (len(picked) * wpu) / out_rate
        duplication = sum(dup_rates) / len(dup_rates) if dup_rates else 0.0

    j = float(len(covered))
    e = j / total_time if total_time > 0 else math.inf
    errors = tuple(scenario.n_units - c for c in np.cumsum(trace))
    return SimOutcome(strategy.label(), len(covered), total_time, duplication,
                      j, e, tuple(trace), errors)


def info_gain_trace(scenario: SimScenario, strategy: Strategy,
                    rng: np.random.Generator | None = None) -> tuple[int, ...]:
    """Per-round increments of covered units for one sampled run."""
    return simulate_strategy(scenario, strategy, rng).info_gain_trace


# --------------------------------------------------------------------------
# closed-form expectations (no sampling)
# --------------------------------------------------------------------------

def expected_covered(scenario: SimScenario, strategy: Strategy) -> float:
    """Exact expected coverage; inclusion-exclusion for parallel overlap."""
    _check(scenario, strategy)
    n = scenario.n_units
    if strategy.kind in ("single", "chain"):
        rounds = 1 if strategy.kind == "single" else strategy.rounds
        covered = 0
        for k in range(1, rounds + 1):
            covered = min(n, covered + scenario.capacity(k))
        return float(covered)
    miss = 1.0 - scenario.capacity(1) / n
    return n * (1.0 - miss ** strategy.rounds)


def expected_duplication_pct(scenario: SimScenario, strategy: Strategy) -> float:
    """Expected mean per-round overlap percentage."""
    if strategy.kind != "parallel" or strategy.rounds < 2:
        return 0.0
    n = scenario.n_units
    miss = 1.0 - scenario.capacity(1) / n
    rates = [100.0 * (1.0 - miss ** k) for k in range(1, strategy.rounds)]
    return sum(rates) / len(rates)


def strategy_time(scenario: SimScenario, strategy: Strategy) -> float:
    """Deterministic total time; outputs depend on capacities, not samples."""
    _check(scenario, strategy)
    wpu = scenario.words_per_unit
    out_rate = scenario.output_rate(strategy.kind)
    if strategy.kind == "parallel":
        c = scenario.capacity(1)
        return strategy.rounds * (scenario.t_observe_s + c * wpu / out_rate)
    rounds = 1 if strategy.kind == "single" else strategy.rounds
    total = 0.0
    covered = 0
    for k in range(1, rounds + 1):
        take = min(scenario.capacity(k), scenario.n_units - covered)
        total += scenario.t_observe_s
        if strategy.kind == "chain" and k > 1:
            total += covered * wpu / scenario.read_rate
        total += take * wpu / out_rate
        covered += take
    return total


def delta_t(scenario: SimScenario, n: int = 2, m: int = 3,
            enforce_premises: bool = True) -> float:
    """Closed-form T_parallel(m) - T_chain(n) under the equal-ability premise.

    Premises: m > n >= 2, strictly diminishing chain capacities, and reading
    faster than the output modality. ``enforce_premises=False`` allows
    boundary evaluation (used to confirm the zero-difference edge case).
    """
    if enforce_premises:
        problems = []
        if not m > n >= 2:
            problems.append(f"need m > n >= 2, got m={m}, n={n}")
        caps = [scenario.capacity(k) for k in range(1, n + 1)]
        if any(b >= a for a, b in zip(caps, caps[1:])):
            problems.append(f"capacities not strictly diminishing: {caps}")
        if scenario.v_read_wpm <= scenario.v_talk_wpm:
            problems.append("reading must be faster than talking")
        if problems:
            raise PremiseViolation("; ".join(problems))
    wpu = scenario.words_per_unit
    talk = scenario.v_talk_wpm / 60.0
    read = scenario.v_read_wpm / 60.0
    c1 = scenario.capacity(1)
    t_par = m * scenario.t_observe_s + m * c1 * wpu / talk
    t_chain = n * scenario.t_observe_s
    covered = 0
    for k in range(1, n + 1):
        if k > 1:
            t_chain += covered * wpu / read
        t_chain += scenario.capacity(k) * wpu / talk
        covered += scenario.capacity(k)
    return t_par - t_chain


@dataclass(frozen=True)
class SweepRow:
    scenario: SimScenario
    strategy: str
    j: float
    total_time_s: float
    e: float
    duplication_pct: float
    dominated: bool = False


def pareto_sweep(scenarios: Iterable[SimScenario],
                 strategies: Sequence[Strategy]) -> list[SweepRow]:
    """Expected quality/time/efficiency per strategy per scenario.

    Flags chain rows dominated by another strategy (at least the same J in
    strictly less time, or more J in at most the same time).
    """
    rows: list[SweepRow] = []
    for scenario in scenarios:
        cell: list[SweepRow] = []
        for strategy in strategies:
            j = expected_covered(scenario, strategy)
            t = strategy_time(scenario, strategy)
            cell.append(SweepRow(
                scenario, strategy.label(), j, t,
                j / t if t > 0 else math.inf,
                expected_duplication_pct(scenario, strategy)))
        flagged = []
        for row in cell:
            dominated = any(
                other is not row and (
                    (other.j >= row.j and other.total_time_s < row.total_time_s)
                    or (other.j > row.j and other.total_time_s <= row.total_time_s))
                for other in cell)
            flagged.append(replace(row, dominated=dominated) if row.strategy.startswith("chain")
                           else row)
        rows.extend(flagged)
    return rows


def words_per_unit_sweep(values: Sequence[float] = (2, 3, 4, 5, 6, 7, 8),
                         base: SimScenario | None = None) -> list[SweepRow]:
    """Sensitivity sweep over the words-per-unit ratio on the calibrated setup."""
    base = base or SimScenario.calibrated()
    scenarios = [replace(base, words_per_unit=float(w)) for w in values]
    strategies = (Strategy("single"), Strategy("parallel", 3), Strategy("chain", 2))
    return pareto_sweep(scenarios, strategies)
