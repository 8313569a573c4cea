import itertools

import numpy as np
import pytest

from annochain.embedding import HashEmbeddingProvider, RetryingProvider, cosine_matrix
from annochain.errors import ProviderUnavailable
from annochain.matching import DuplicationMatcher, duplication_rate, match_units
from annochain.semantic import AttributeKind, SemanticUnit, build_tree


def u(name, kind, value):
    return SemanticUnit.make(name, kind, value)


def brute_force_best(sims):
    """Exhaustive optimum: maximum cardinality, then maximum similarity sum."""
    n_a, n_b = sims.shape
    best = (0, 0.0)
    k = min(n_a, n_b)
    for size in range(k, 0, -1):
        found = False
        for rows in itertools.combinations(range(n_a), size):
            for cols in itertools.permutations(range(n_b), size):
                total = 0.0
                ok = True
                for i, j in zip(rows, cols):
                    if np.isnan(sims[i, j]):
                        ok = False
                        break
                    total += sims[i, j]
                if ok:
                    found = True
                    best = max(best, (size, total))
        if found:
            break
    return best


def random_units(rng, size):
    names = ["car", "tree", "road", "sign", "house"]
    kinds = [AttributeKind.COLOUR, AttributeKind.AMOUNT, AttributeKind.SIZE]
    values = ["red", "blue", "two", "three", "big", "small"]
    return [
        SemanticUnit(names[rng.integers(len(names))],
                     kinds[rng.integers(len(kinds))],
                     values[rng.integers(len(values))])
        for _ in range(size)
    ]


class TestExactMode:
    def test_identical_lists_fully_match(self):
        matcher = DuplicationMatcher(mode="exact")
        units = [u("car", "colour", "red"), u("tree", "amount", "two")]
        assert matcher.match(units, units) == [(0, 0), (1, 1)]

    def test_disjoint_lists_do_not_match(self):
        matcher = DuplicationMatcher(mode="exact")
        a = [u("car", "colour", "red")]
        b = [u("tree", "amount", "two")]
        assert matcher.match(a, b) == []

    def test_empty_inputs(self):
        matcher = DuplicationMatcher(mode="exact")
        assert matcher.match([], [u("car", "colour", "red")]) == []
        assert matcher.match([u("car", "colour", "red")], []) == []

    def test_duplicates_match_one_to_one(self):
        matcher = DuplicationMatcher(mode="exact")
        a = [u("car", "colour", "red")] * 2
        b = [u("car", "colour", "red")] * 3
        pairs = matcher.match(a, b)
        assert len(pairs) == 2
        assert len({i for i, _ in pairs}) == 2
        assert len({j for _, j in pairs}) == 2

    def test_oracle_equivalence_200_instances(self):
        rng = np.random.default_rng(11)
        matcher = DuplicationMatcher(mode="exact")
        for _ in range(200):
            a = random_units(rng, int(rng.integers(0, 7)))
            b = random_units(rng, int(rng.integers(0, 7)))
            pairs = matcher.match(a, b)
            sims = matcher.similarity(a, b) if a and b else np.zeros((0, 0))
            for i, j in pairs:
                assert a[i].identity == b[j].identity
            if a and b:
                card, total = brute_force_best(sims)
                assert len(pairs) == card
                got = sum(sims[i, j] for i, j in pairs)
                assert got == pytest.approx(total, abs=1e-9)


class TestEmbeddingMode:
    def make(self, threshold=0.85):
        return DuplicationMatcher(mode="embedding", similarity_threshold=threshold,
                                  embedding_provider=HashEmbeddingProvider())

    def test_identical_triples_always_admissible(self):
        matcher = self.make(threshold=1.0)
        units = [u("car", "colour", "red")]
        assert matcher.match(units, units) == [(0, 0)]

    def test_near_duplicates_match_below_exact(self):
        matcher = self.make(threshold=0.5)
        a = [u("car", "colour", "red")]
        b = [u("car", "colour", "dark red")]
        assert matcher.match(a, b) == [(0, 0)]

    def test_unrelated_pairs_stay_unmatched(self):
        matcher = self.make()
        a = [u("sky", "colour", "blue")]
        b = [u("pavement", "material", "concrete")]
        assert matcher.match(a, b) == []

    def test_oracle_equivalence_embedding(self):
        rng = np.random.default_rng(5)
        matcher = self.make(threshold=0.6)
        for _ in range(60):
            a = random_units(rng, int(rng.integers(1, 6)))
            b = random_units(rng, int(rng.integers(1, 6)))
            sims = matcher.similarity(a, b)
            card, total = brute_force_best(sims)
            pairs = matcher.match(a, b)
            assert len(pairs) == card
            got = sum(sims[i, j] for i, j in pairs)
            assert got == pytest.approx(total, abs=1e-6)

    def test_determinism_under_ties(self):
        matcher = self.make()
        a = [u("car", "colour", "red")] * 2
        b = [u("car", "colour", "red")] * 2
        assert matcher.match(a, b) == [(0, 0), (1, 1)]


class TestDuplicationRate:
    def test_identical_trees_100(self):
        matcher = DuplicationMatcher(mode="exact")
        tree = build_tree([u("car", "colour", "red"), u("tree", "amount", "two")])
        assert duplication_rate(tree, tree, matcher) == 100.0

    def test_disjoint_trees_0(self):
        matcher = DuplicationMatcher(mode="exact")
        a = build_tree([u("car", "colour", "red")])
        b = build_tree([u("tree", "amount", "two")])
        assert duplication_rate(a, b, matcher) == 0.0

    def test_empty_later_tree_0(self):
        matcher = DuplicationMatcher(mode="exact")
        a = build_tree([u("car", "colour", "red")])
        assert duplication_rate(a, build_tree([]), matcher) == 0.0

    def test_partial_overlap(self):
        matcher = DuplicationMatcher(mode="exact")
        a = build_tree([u("car", "colour", "red"), u("tree", "amount", "two")])
        b = build_tree([u("car", "colour", "red"), u("road", "size", "wide")])
        assert duplication_rate(a, b, matcher) == 50.0


class TestProviders:
    def test_retrying_provider_gives_up(self):
        class Flaky:
            def embed(self, texts):
                raise RuntimeError("down")

        wrapped = RetryingProvider(Flaky(), retries=2)
        with pytest.raises(ProviderUnavailable):
            wrapped.embed(["x"])

    def test_retrying_provider_recovers(self):
        class Once:
            calls = 0

            def embed(self, texts):
                Once.calls += 1
                if Once.calls == 1:
                    raise RuntimeError("blip")
                return np.ones((len(texts), 4))

        assert RetryingProvider(Once(), retries=3).embed(["x"]).shape == (1, 4)

    def test_cosine_zero_vectors(self):
        sims = cosine_matrix(np.zeros((1, 4)), np.ones((1, 4)))
        assert sims[0, 0] == 0.0

    def test_hash_embedding_deterministic(self):
        p = HashEmbeddingProvider()
        assert np.array_equal(p.embed(["red car"]), p.embed(["red car"]))

    def test_match_units_helper(self):
        matcher = DuplicationMatcher(mode="exact")
        a = [u("car", "colour", "red")]
        assert match_units(a, a, matcher) == [(0, 0)]
