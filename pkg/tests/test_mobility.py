"""Preference-weighted place selection.

The ordered-pair probabilities used below come from the sequential
renormalized-draw definition: P(i then j) = w_i/S * w_j/(S - w_i) with
S = sum of weights. They were computed by hand for small weight vectors and
frozen; the sampler must reproduce them regardless of how it is implemented
internally.
"""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from throwbox.mobility import MobilityParams, sample_distinct_places, selection_probabilities


class TestSelectionProbabilities:
    def test_pure_preferential(self):
        probs = selection_probabilities(np.array([3.0, 1.0, 1.0]), MobilityParams())
        assert probs == pytest.approx([0.6, 0.2, 0.2])

    def test_clustering_exponent(self):
        # d = (4, 1), alpha = 1.5 -> weights (8, 1)
        probs = selection_probabilities(np.array([4.0, 1.0]), MobilityParams(0.0, 1.5))
        assert probs == pytest.approx([8.0 / 9.0, 1.0 / 9.0])

    def test_alpha_zero_is_uniform(self):
        probs = selection_probabilities(np.array([100.0, 1.0, 5.0]), MobilityParams(0.0, 0.0))
        assert probs == pytest.approx([1.0 / 3.0] * 3)

    def test_large_randomness_washes_out_preference(self):
        probs = selection_probabilities(np.array([9.0, 1.0]), MobilityParams(1e6, 1.0))
        assert probs == pytest.approx([0.5, 0.5], abs=1e-5)

    def test_randomness_shifts_toward_uniform_monotonically(self):
        counts = np.array([9.0, 1.0])
        spreads = [
            selection_probabilities(counts, MobilityParams(d, 1.0))[0] for d in (0, 1, 4, 16)
        ]
        assert all(a > b for a, b in zip(spreads, spreads[1:]))
        assert all(s > 0.5 for s in spreads)

    def test_validation(self):
        with pytest.raises(ValueError):
            selection_probabilities(np.array([]), MobilityParams())
        with pytest.raises(ValueError):
            selection_probabilities(np.array([-1.0, 2.0]), MobilityParams())
        with pytest.raises(ValueError):
            selection_probabilities(np.array([0.0, 0.0]), MobilityParams())
        with pytest.raises(ValueError):
            MobilityParams(randomness=-0.5)

    @given(
        counts=st.lists(st.integers(min_value=1, max_value=50), min_size=1, max_size=8),
        scale=st.integers(min_value=1, max_value=9),
    )
    @settings(max_examples=50, deadline=None)
    def test_scale_invariance_without_offset(self, counts, scale):
        base = np.asarray(counts, dtype=float)
        p1 = selection_probabilities(base, MobilityParams())
        p2 = selection_probabilities(base * scale, MobilityParams())
        assert p1 == pytest.approx(p2)
        assert p1.sum() == pytest.approx(1.0)


def _sequential_pair_prob(weights, i, j):
    s = weights.sum()
    return (weights[i] / s) * (weights[j] / (s - weights[i]))


class TestSampleDistinctPlaces:
    def test_errors(self):
        rng = np.random.default_rng(0)
        counts = np.array([1.0, 1.0, 1.0])
        with pytest.raises(ValueError):
            sample_distinct_places(counts, MobilityParams(), 0, rng)
        with pytest.raises(ValueError):
            sample_distinct_places(counts, MobilityParams(), 4, rng)
        with pytest.raises(ValueError):
            sample_distinct_places(np.array([1.0, 0.0]), MobilityParams(0.0, 1.0), 2, rng)

    def test_distinct_and_in_range(self):
        rng = np.random.default_rng(1)
        counts = np.linspace(1, 10, 10)
        for _ in range(200):
            picks = sample_distinct_places(counts, MobilityParams(), 4, rng)
            assert len(set(picks.tolist())) == 4
            assert picks.min() >= 0 and picks.max() < 10

    def test_k_equals_n_is_permutation(self):
        rng = np.random.default_rng(2)
        picks = sample_distinct_places(np.arange(1.0, 6.0), MobilityParams(), 5, rng)
        assert sorted(picks.tolist()) == [0, 1, 2, 3, 4]

    def test_deterministic_under_seed(self):
        counts = np.arange(1.0, 9.0)
        a = sample_distinct_places(counts, MobilityParams(), 3, np.random.default_rng(33))
        b = sample_distinct_places(counts, MobilityParams(), 3, np.random.default_rng(33))
        assert a.tolist() == b.tolist()

    def test_ordered_pair_frequencies(self):
        # w = (3, 1, 1): P(0,1)=P(0,2)=0.3, P(1,0)=P(2,0)=0.15, P(1,2)=P(2,1)=0.05
        counts = np.array([3.0, 1.0, 1.0])
        expected = {
            (0, 1): 0.3,
            (0, 2): 0.3,
            (1, 0): 0.15,
            (1, 2): 0.05,
            (2, 0): 0.15,
            (2, 1): 0.05,
        }
        rng = np.random.default_rng(97)
        n = 40_000
        seen = {pair: 0 for pair in expected}
        for _ in range(n):
            picks = sample_distinct_places(counts, MobilityParams(), 2, rng)
            seen[(int(picks[0]), int(picks[1]))] += 1
        for pair, p in expected.items():
            tol = 4.0 * np.sqrt(p * (1 - p) / n)
            assert abs(seen[pair] / n - p) < tol, pair

    def test_inclusion_probabilities_against_enumeration(self):
        # Exhaustive oracle: sum the sequential product over all ordered
        # k-tuples that contain the place.
        counts = np.array([10.0, 1.0, 1.0, 1.0, 1.0, 1.0])
        k = 3
        n = len(counts)
        inclusion = np.zeros(n)
        for tup in itertools.permutations(range(n), k):
            remaining = counts.sum()
            prob = 1.0
            for idx in tup:
                prob *= counts[idx] / remaining
                remaining -= counts[idx]
            for idx in tup:
                inclusion[idx] += prob
        rng = np.random.default_rng(1234)
        draws = 100_000
        hits = np.zeros(n)
        for _ in range(draws):
            picks = sample_distinct_places(counts, MobilityParams(), k, rng)
            hits[picks] += 1
        freq = hits / draws
        for i in range(n):
            # Bonferroni-ish width over 6 simultaneous checks
            tol = 4.5 * np.sqrt(inclusion[i] * (1 - inclusion[i]) / draws)
            assert abs(freq[i] - inclusion[i]) < tol, i

    def test_huge_offset_gives_near_uniform_pairs(self):
        counts = np.array([1000.0, 1.0])
        rng = np.random.default_rng(5)
        first = [
            int(sample_distinct_places(counts, MobilityParams(1e9, 1.0), 1, rng)[0])
            for _ in range(4000)
        ]
        share = np.mean(np.array(first) == 0)
        assert abs(share - 0.5) < 4.0 * np.sqrt(0.25 / 4000)
