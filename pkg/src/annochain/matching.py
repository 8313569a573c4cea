"""Optimal one-to-one matching of semantic units between annotation rounds."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .embedding import EmbeddingProvider, RetryingProvider, cosine_matrix
from .semantic import SemanticUnit, SemanticUnitTree, tree_units, unit_count

# Cardinality must dominate any achievable similarity total (each sim <= 1).
_CARDINALITY_BONUS = 1e4
_TOL = 1e-6


def _solve_total(profits: np.ndarray, admissible: np.ndarray) -> float:
    """Best achievable profit total using only admissible cells."""
    if profits.size == 0 or not admissible.any():
        return 0.0
    masked = np.where(admissible, profits, 0.0)
    rows, cols = linear_sum_assignment(masked, maximize=True)
    return float(sum(masked[i, j] for i, j in zip(rows, cols) if admissible[i, j]))


@dataclass
class DuplicationMatcher:
    """Admissibility rule + optimal assignment between two unit lists.

    exact mode: units match only on identical (name, kind, value) triples.
    embedding mode: rendered phrases match when cosine similarity reaches
    the threshold; identical triples always match.
    """

    mode: str = "exact"
    similarity_threshold: float = 0.85
    embedding_provider: EmbeddingProvider | None = None
    provider_retries: int = 3
    _retrying: EmbeddingProvider | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode not in ("exact", "embedding"):
            raise ValueError(f"unknown matcher mode: {self.mode!r}")
        if self.mode == "embedding":
            if self.embedding_provider is None:
                raise ValueError("embedding mode requires a provider")
            self._retrying = RetryingProvider(self.embedding_provider, self.provider_retries)

    def similarity(self, a: Sequence[SemanticUnit], b: Sequence[SemanticUnit]) -> np.ndarray:
        """Pairwise similarity; NaN marks inadmissible pairs."""
        if not a or not b:
            return np.full((len(a), len(b)), np.nan)
        if self.mode == "exact":
            sims = np.full((len(a), len(b)), np.nan)
            for i, ua in enumerate(a):
                for j, ub in enumerate(b):
                    if ua.identity == ub.identity:
                        sims[i, j] = 1.0
            return sims
        vec_a = self._retrying.embed([u.rendered() for u in a])
        vec_b = self._retrying.embed([u.rendered() for u in b])
        sims = cosine_matrix(vec_a, vec_b)
        for i, ua in enumerate(a):
            for j, ub in enumerate(b):
                if ua.identity == ub.identity:
                    sims[i, j] = 1.0
        sims[sims < self.similarity_threshold] = np.nan
        return sims

    def match(self, a: Sequence[SemanticUnit], b: Sequence[SemanticUnit]) -> list[tuple[int, int]]:
        """Maximum-cardinality matching; among those, maximum total similarity.

        Ties break deterministically toward lexicographically smaller pairs.
        """
        if not a or not b:
            return []
        sims = self.similarity(a, b)
        admissible = ~np.isnan(sims)
        if not admissible.any():
            return []
        profits = np.where(admissible, _CARDINALITY_BONUS + np.nan_to_num(sims), 0.0)
        best = _solve_total(profits, admissible)
        # fix pairs greedily in lexicographic order, keeping only choices that
        # provably preserve the optimal (cardinality, similarity) value
        pairs: list[tuple[int, int]] = []
        free_rows = np.ones(len(a), dtype=bool)
        free_cols = np.ones(len(b), dtype=bool)
        fixed = 0.0
        for i in range(len(a)):
            if not free_rows[i]:
                continue
            for j in range(len(b)):
                if not free_cols[j] or not admissible[i, j]:
                    continue
                free_rows[i] = free_cols[j] = False
                rest = _solve_total(profits[np.ix_(free_rows, free_cols)],
                                    admissible[np.ix_(free_rows, free_cols)])
                if fixed + profits[i, j] + rest >= best - _TOL:
                    fixed += profits[i, j]
                    pairs.append((i, j))
                    break
                free_rows[i] = free_cols[j] = True
        return pairs


def match_units(a: Sequence[SemanticUnit], b: Sequence[SemanticUnit],
                matcher: DuplicationMatcher) -> list[tuple[int, int]]:
    return matcher.match(a, b)


def duplication_rate(earlier: SemanticUnitTree, later: SemanticUnitTree,
                     matcher: DuplicationMatcher) -> float:
    """Percent of `later` units that re-state something already in `earlier`."""
    later_count = unit_count(later)
    if later_count == 0:
        return 0.0
    matched = matcher.match(tree_units(earlier), tree_units(later))
    return 100.0 * len(matched) / later_count
