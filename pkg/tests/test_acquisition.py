import numpy as np
import pytest

from ndsal.acquisition import (
    AcquisitionScore,
    MixingState,
    draw,
    score_min_margin,
    score_nds,
    score_nds_plus,
    score_random,
    score_var_ratio,
)
from ndsal.numerics import FeatureMatrix
from ndsal.spectral import ClusterAssignment, spectral_cluster


def toy_layout(points_per_blob=30, sigma=0.4, seed=0):
    """Three well-separated 2-D blobs plus stragglers toward the other blobs.

    Each straggler sits 30% of the way from its own blob toward another one:
    clearly boundary-like, but still nearest to its home blob.
    """
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [20.0, 0.0], [0.0, 20.0]])
    rows = [c + rng.normal(0, sigma, size=(points_per_blob, 2)) for c in centers]
    between = []
    for i in range(3):
        for j in range(3):
            if i != j:
                spot = centers[i] + 0.3 * (centers[j] - centers[i])
                between.append(spot + rng.normal(0, sigma, size=(1, 2)))
    rows = np.vstack(rows + between)
    n_blob = 3 * points_per_blob
    ids = tuple(range(len(rows)))
    return FeatureMatrix(rows, ids), centers, n_blob


class TestScoreRandom:
    def test_uniform_over_five(self):
        s = score_random(tuple("abcde"))
        assert np.allclose(s.weights, 0.2)

    def test_single_sample_pool(self):
        s = score_random(("only",))
        assert s.weights.tolist() == [1.0]

    def test_empty_pool_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            score_random(())

    def test_draw_frequencies_within_three_sigma(self):
        s = score_random((0, 1, 2, 3))
        counts = np.zeros(4)
        for i in range(10_000):
            (picked,) = draw(s, 1, seed=i)
            counts[picked] += 1
        freqs = counts / 10_000
        sigma = np.sqrt(0.25 * 0.75 / 10_000)
        assert np.abs(freqs - 0.25).max() < 3 * sigma


class TestScoreMinMargin:
    def test_direct_formula(self):
        s = score_min_margin(np.array([[0.6, 0.3, 0.1]]), ("x",))
        assert s.weights[0] == pytest.approx(0.7)

    def test_tie_is_maximally_uncertain(self):
        s = score_min_margin(np.array([[0.5, 0.5]]), ("x",))
        assert s.weights[0] == pytest.approx(1.0)

    def test_one_hot_is_certain(self):
        s = score_min_margin(np.array([[0.0, 1.0, 0.0], [0.2, 0.4, 0.4]]), ("x", "y"))
        assert s.weights[0] == pytest.approx(0.0, abs=1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="two classes"):
            score_min_margin(np.ones((3, 1)), ("a", "b", "c"))

    def test_class_permutation_invariance(self):
        rng = np.random.default_rng(0)
        probs = rng.dirichlet(np.ones(4), size=10)
        ids = tuple(range(10))
        base = score_min_margin(probs, ids)
        perm = rng.permutation(4)
        shuffled = score_min_margin(probs[:, perm], ids)
        assert np.allclose(base.weights, shuffled.weights)


class TestScoreVarRatio:
    def test_direct_formula(self):
        s = score_var_ratio(np.array([[0.6, 0.4]]), ("x",))
        assert s.weights[0] == pytest.approx(0.4)

    def test_uniform_attains_maximum(self):
        s = score_var_ratio(np.full((1, 4), 0.25), ("x",))
        assert s.weights[0] == pytest.approx(0.75)

    def test_one_hot_scores_zero_weight_elsewhere_positive(self):
        s = score_var_ratio(np.array([[1.0, 0.0], [0.5, 0.5]]), ("x", "y"))
        assert s.weights[0] == pytest.approx(0.0, abs=1e-12)

    def test_bounds(self):
        rng = np.random.default_rng(1)
        K = 5
        probs = rng.dirichlet(np.ones(K), size=200)
        s = score_var_ratio(probs, tuple(range(200)))
        assert s.weights.min() >= 0.0
        assert s.weights.max() <= 1.0 - 1.0 / K + 1e-12

    def test_class_permutation_invariance(self):
        rng = np.random.default_rng(2)
        probs = rng.dirichlet(np.ones(3), size=8)
        ids = tuple(range(8))
        base = score_var_ratio(probs, ids)
        shuffled = score_var_ratio(probs[:, [2, 0, 1]], ids)
        assert np.allclose(base.weights, shuffled.weights)


class TestScoreNds:
    def test_between_blob_points_weighted_boundary(self):
        X, centers, n_blob = toy_layout()
        assignment = spectral_cluster(X, 3, seed=1)
        s = score_nds(X, assignment, m=6)
        between_ids = list(range(n_blob, X.n_samples))
        for sample_id in between_ids:
            assert s.weights[sample_id] == 1.0, f"between point {sample_id}"
        # weight 0 (dominant) must be blob interior: never a between point,
        # and closer to its own blob centre than the blob's points on average
        dominant = [i for i in range(X.n_samples) if s.weights[i] == 0.0]
        assert dominant, "expected a non-empty dominant side"
        assert not set(dominant) & set(between_ids)
        own_center = lambda i: centers[min(i // (n_blob // 3), 2)]
        dom_dist = np.mean([np.linalg.norm(X.data[i] - own_center(i)) for i in dominant])
        blob_dist = np.mean([np.linalg.norm(X.data[i] - own_center(i)) for i in range(n_blob)])
        assert dom_dist < blob_dist

    def test_exhausted_cluster_uniform_weights(self):
        rng = np.random.default_rng(3)
        rows = np.vstack(
            [rng.normal(0, 0.3, size=(3, 2)), rng.normal(0, 0.3, size=(20, 2)) + 15.0]
        )
        X = FeatureMatrix(rows, tuple(range(23)))
        assignment = ClusterAssignment(
            num_clusters=2,
            labels=np.array([0] * 3 + [1] * 20),
            member_ids=(tuple(range(3)), tuple(range(3, 23))),
        )
        s = score_nds(X, assignment, m=10)  # required 5 > cluster of 3
        assert all(s.weights[i] == 1.0 for i in range(3))
        assert s.metadata["shortfalls"][0] == 2

    def test_singleton_cluster_weighted_one(self):
        rows = np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [30.0, 30.0]])
        X = FeatureMatrix(rows, (0, 1, 2, 3))
        assignment = ClusterAssignment(
            num_clusters=2, labels=np.array([0, 0, 0, 1]), member_ids=((0, 1, 2), (3,))
        )
        s = score_nds(X, assignment, m=2)
        assert s.weights[3] == 1.0

    def test_metadata_reports_multipliers(self):
        X, _, _ = toy_layout(seed=5)
        assignment = spectral_cluster(X, 3, seed=5)
        s = score_nds(X, assignment, m=6)
        assert set(s.metadata["cutoff_multipliers"]) == {0, 1, 2}
        assert all(mult >= 1.0 for mult in s.metadata["cutoff_multipliers"].values())


class TestScoreNdsPlus:
    def _pair(self):
        nds = AcquisitionScore(ids=("a", "b"), weights=np.array([1.0, 0.0]), strategy="nds")
        unc = AcquisitionScore(
            ids=("a", "b"), weights=np.array([0.5, 0.5]), strategy="minmargin"
        )
        return nds, unc

    def test_alpha_one_is_pure_nds(self):
        nds, unc = self._pair()
        s = score_nds_plus(nds, unc, MixingState(alpha=1.0))
        assert np.allclose(s.weights, [1.0, 0.0])

    def test_alpha_zero_is_pure_uncertainty(self):
        nds, unc = self._pair()
        s = score_nds_plus(nds, unc, MixingState(alpha=0.0))
        assert np.allclose(s.weights, [0.5, 0.5])

    def test_hand_computed_mix(self):
        nds, unc = self._pair()
        s = score_nds_plus(nds, unc, MixingState(alpha=0.9))
        assert np.allclose(s.weights, [0.95, 0.05])

    def test_support_at_alpha_one_equals_nds_support(self):
        rng = np.random.default_rng(4)
        ids = tuple(range(30))
        nds_w = (rng.random(30) > 0.5).astype(float)
        nds_w[0] = 1.0
        nds = AcquisitionScore(ids=ids, weights=nds_w, strategy="nds")
        unc = AcquisitionScore(ids=ids, weights=rng.random(30), strategy="minmargin")
        s = score_nds_plus(nds, unc, MixingState(alpha=1.0))
        assert np.array_equal(s.weights > 0, nds_w > 0)

    def test_id_mismatch_rejected(self):
        nds, _ = self._pair()
        other = AcquisitionScore(ids=("a", "c"), weights=np.array([0.5, 0.5]), strategy="minmargin")
        with pytest.raises(ValueError, match="different pools"):
            score_nds_plus(nds, other, MixingState(alpha=0.5))


class TestMixingState:
    def test_additive_schedule(self):
        assert MixingState.for_cycle(0).alpha == 1.0
        assert MixingState.for_cycle(1).alpha == pytest.approx(0.98)
        assert MixingState.for_cycle(2).alpha == pytest.approx(0.96)
        assert MixingState.for_cycle(60).alpha == 0.0

    def test_multiplicative_schedule(self):
        assert MixingState.for_cycle(2, mode="multiplicative").alpha == pytest.approx(0.9604)

    def test_invalid_alpha_rejected(self):
        with pytest.raises(ValueError, match="alpha"):
            MixingState(alpha=1.5)


class TestDraw:
    def test_stratified_five_per_cluster(self):
        pools = {k: tuple(range(100 * k, 100 * k + 10)) for k in range(4)}
        ids = tuple(s for p in pools.values() for s in p)
        weights = np.ones(len(ids))
        s = AcquisitionScore(ids=ids, weights=weights, strategy="nds", metadata={"pools": pools})
        selected = draw(s, 20, seed=0)
        assert len(selected) == 20
        assert len(set(selected)) == 20
        for k in range(4):
            assert sum(1 for x in selected if x in pools[k]) == 5

    def test_remainder_round_robin(self):
        pools = {k: tuple(range(100 * k, 100 * k + 10)) for k in range(3)}
        ids = tuple(s for p in pools.values() for s in p)
        s = AcquisitionScore(
            ids=ids, weights=np.ones(len(ids)), strategy="nds", metadata={"pools": pools}
        )
        selected = draw(s, 8, seed=1)
        per_cluster = [sum(1 for x in selected if x in pools[k]) for k in range(3)]
        assert per_cluster == [3, 3, 2]

    def test_entire_pool_when_m_matches(self):
        s = AcquisitionScore(ids=(1, 2, 3), weights=np.array([0.0, 1.0, 0.0]), strategy="random")
        assert set(draw(s, 3, seed=0)) == {1, 2, 3}

    def test_degenerate_weights_deterministic(self):
        s = AcquisitionScore(ids=("a", "b", "c"), weights=np.array([1.0, 0.0, 0.0]), strategy="minmargin")
        for seed in range(5):
            assert draw(s, 1, seed=seed) == ("a",)

    def test_shortfall_filled_with_warning(self):
        s = AcquisitionScore(
            ids=tuple(range(10)),
            weights=np.array([1.0, 1.0] + [0.0] * 8),
            strategy="minmargin",
        )
        with pytest.warns(UserWarning, match="filling"):
            selected = draw(s, 5, seed=3)
        assert len(selected) == 5
        assert {0, 1} <= set(selected)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(6)
        s = AcquisitionScore(ids=tuple(range(50)), weights=rng.random(50), strategy="varratio")
        assert draw(s, 10, seed=77) == draw(s, 10, seed=77)

    def test_no_duplicates(self):
        rng = np.random.default_rng(7)
        s = AcquisitionScore(ids=tuple(range(40)), weights=rng.random(40), strategy="varratio")
        for seed in range(10):
            picked = draw(s, 15, seed=seed)
            assert len(picked) == len(set(picked)) == 15
