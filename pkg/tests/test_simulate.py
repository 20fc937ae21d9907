import numpy as np
import pytest

from gsbm.exceptions import ConfigError
from gsbm.simulate import (
    GroundTruth,
    OutlierConfig,
    SbmConfig,
    build_ground_truth,
    full_observation,
    sample_adjacency,
    sample_mask,
    split_rng,
    split_seeds,
)


def test_single_community_no_outliers():
    truth = build_ground_truth(
        SbmConfig(n_inliers=6, k_communities=1, p_in=0.5, p_out=0.5, seed=1),
        OutlierConfig(kind="hub", s=0),
    )
    off = ~np.eye(6, dtype=bool)
    assert np.all(truth.P[off] == 0.5)
    assert np.all(truth.P[np.eye(6, dtype=bool)] == 0.0)
    assert not truth.S_star.any()
    assert truth.outliers.size == 0


def test_three_community_block_structure():
    truth = build_ground_truth(
        SbmConfig(n_inliers=200, k_communities=3, p_in=0.5, p_out=0.2, seed=3),
        OutlierConfig(kind="hub", s=0),
    )
    block = truth.L_star[:200, :200]
    assert set(np.unique(block)) == {0.2, 0.5}
    assert np.linalg.matrix_rank(block, tol=1e-8) == 3
    # balanced communities: sizes differ by at most one
    counts = np.bincount(truth.communities)
    assert counts.max() - counts.min() <= 1


def test_hub_degenerate_uniform_bound():
    truth = build_ground_truth(
        SbmConfig(n_inliers=5, k_communities=1, p_in=0.3, p_out=0.3, seed=0),
        OutlierConfig(kind="hub", s=1, pi_hub=1.0),
    )
    col = truth.S_star[:5, 5]
    assert np.all(col == 1.0)


def test_hub_column_mean_within_band():
    pi_hub = 0.4
    truth = build_ground_truth(
        SbmConfig(n_inliers=400, k_communities=2, p_in=0.5, p_out=0.1, seed=8),
        OutlierConfig(kind="hub", s=1, pi_hub=pi_hub),
    )
    col = truth.S_star[:400, 400]
    mean, expected = col.mean(), (pi_hub + 1.0) / 2.0
    sigma = (1.0 - pi_hub) / np.sqrt(12.0) / np.sqrt(400)
    assert abs(mean - expected) < 3.0 * sigma


def test_mixed_outlier_entries():
    sbm = SbmConfig(n_inliers=30, k_communities=3, p_in=0.5, p_out=0.2, seed=5)
    truth = build_ground_truth(sbm, OutlierConfig(kind="mixed", s=2, pi_mix=0.7))
    for j in truth.outliers:
        col = truth.S_star[:30, j]
        assert set(np.unique(col)) == {0.2, 0.7}
        chosen = {int(c) for c in truth.communities[col == 0.7]}
        assert len(chosen) == 2  # two distinct communities
        # every member of the chosen pair is connected at pi_mix
        member = np.isin(truth.communities, list(chosen))
        assert np.all(col[member] == 0.7)


def test_mixed_needs_two_communities():
    sbm = SbmConfig(n_inliers=10, k_communities=1, p_in=0.5, p_out=0.2, seed=5)
    with pytest.raises(ConfigError):
        build_ground_truth(sbm, OutlierConfig(kind="mixed", s=1))


def test_ground_truth_invariants():
    for kind in ("hub", "mixed"):
        truth = build_ground_truth(
            SbmConfig(n_inliers=50, k_communities=3, p_in=0.6, p_out=0.1, seed=17),
            OutlierConfig(kind=kind, s=4, pi_hub=0.3, pi_mix=0.8),
        )
        n, n_in = truth.n, truth.n_inliers
        assert np.all((truth.P >= 0.0) & (truth.P <= 1.0))
        assert np.abs(truth.P - truth.P.T).max() == 0.0
        assert not np.diag(truth.P).any()
        # inlier columns of S* are zero, outlier rows/cols of L* are zero
        assert not truth.S_star[:, :n_in].any()
        assert not np.diag(truth.S_star).any()
        assert not truth.L_star[n_in:, :].any()
        assert not truth.L_star[:, n_in:].any()
        recon = truth.L_star - np.diag(np.diag(truth.L_star)) + truth.S_star + truth.S_star.T
        assert np.abs(truth.P - recon).max() == 0.0


def test_outlier_pair_upper_triangle_storage():
    truth = build_ground_truth(
        SbmConfig(n_inliers=10, k_communities=2, p_in=0.5, p_out=0.2, seed=2),
        OutlierConfig(kind="hub", s=3, pi_hub=0.5),
    )
    sub = truth.S_star[10:, 10:]
    assert not np.tril(sub).any()
    assert np.all(sub[np.triu_indices_from(sub, 1)] >= 0.5)


def test_generation_deterministic():
    sbm = SbmConfig(n_inliers=40, k_communities=3, p_in=0.5, p_out=0.2, seed=99)
    out = OutlierConfig(kind="mixed", s=3, pi_mix=0.6)
    t1 = build_ground_truth(sbm, out)
    t2 = build_ground_truth(sbm, out)
    assert np.array_equal(t1.P, t2.P)
    assert np.array_equal(t1.S_star, t2.S_star)
    assert np.array_equal(t1.communities, t2.communities)
    a1 = sample_adjacency(t1, 123)
    a2 = sample_adjacency(t2, 123)
    assert np.array_equal(a1, a2)
    m1 = sample_mask(t1.n, 0.7, 5)
    m2 = sample_mask(t1.n, 0.7, 5)
    assert np.array_equal(m1, m2)


# ------------------------------------------------------------ sampling

def test_sample_adjacency_extremes():
    truth_zero = GroundTruth(
        P=np.zeros((5, 5)), L_star=np.zeros((5, 5)), S_star=np.zeros((5, 5)),
        communities=np.zeros(5, dtype=np.int64), outliers=np.zeros(0, dtype=np.int64),
    )
    assert not sample_adjacency(truth_zero, 3).any()
    P = np.ones((5, 5)) - np.eye(5)
    truth_one = GroundTruth(
        P=P, L_star=P.copy(), S_star=np.zeros((5, 5)),
        communities=np.zeros(5, dtype=np.int64), outliers=np.zeros(0, dtype=np.int64),
    )
    assert np.array_equal(sample_adjacency(truth_one, 3), P)


def test_sample_adjacency_density_within_binomial_band():
    n = 200
    P = 0.5 * (np.ones((n, n)) - np.eye(n))
    truth = GroundTruth(
        P=P, L_star=P.copy(), S_star=np.zeros((n, n)),
        communities=np.zeros(n, dtype=np.int64), outliers=np.zeros(0, dtype=np.int64),
    )
    A = sample_adjacency(truth, 42)
    assert np.array_equal(A, A.T)
    assert not np.diag(A).any()
    m = n * (n - 1) / 2
    density = A.sum() / 2.0 / m
    assert abs(density - 0.5) < 3.0 * np.sqrt(0.25 / m)


def test_sample_mask_extremes_and_band():
    assert np.array_equal(sample_mask(4, 1.0, 0), full_observation(4))
    assert not sample_mask(4, 0.0, 0).any()
    n, p = 200, 0.8
    omega = sample_mask(n, p, 7)
    assert np.array_equal(omega, omega.T)
    assert not np.diag(omega).any()
    m = n * (n - 1) / 2
    frac = omega.sum() / 2.0 / m
    assert abs(frac - p) < 3.0 * np.sqrt(p * (1 - p) / m)
    with pytest.raises(ConfigError):
        sample_mask(4, 1.2, 0)


# ------------------------------------------------------------ seeds

def test_split_rng_streams_differ_and_reproduce():
    a1 = split_rng(42, 0).random(4)
    a2 = split_rng(42, 0).random(4)
    b = split_rng(42, 1).random(4)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)
    s1 = split_seeds(42, 3, 4)
    s2 = split_seeds(42, 3, 4)
    assert s1 == s2 and len(s1) == 4


def test_config_validation():
    with pytest.raises(ConfigError):
        SbmConfig(n_inliers=10, k_communities=2, p_in=0.2, p_out=0.5, seed=0)
    with pytest.raises(ConfigError):
        SbmConfig(n_inliers=10, k_communities=0, p_in=0.5, p_out=0.2, seed=0)
    with pytest.raises(ConfigError):
        SbmConfig(n_inliers=10, k_communities=2, p_in=0.5, p_out=0.2, seed=-1)
    with pytest.raises(ConfigError):
        OutlierConfig(kind="star", s=1)
    with pytest.raises(ConfigError):
        OutlierConfig(kind="hub", s=-1)
    with pytest.raises(ConfigError):
        OutlierConfig(kind="hub", s=1, pi_hub=1.5)
