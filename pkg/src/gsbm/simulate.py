"""Synthetic ground truth generator: block-model inliers plus hub or
mixed-membership outliers, with Bernoulli edge sampling and uniform masks.

All randomness flows through numpy's PCG64 generator seeded explicitly, so a
given (config, seed) pair reproduces every matrix byte for byte. Replication
streams are derived with split_rng(base_seed, index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError

HUB = "hub"
MIXED = "mixed"

_SEED_MAX = 2**64


def _check_seed(seed):
    if not 0 <= int(seed) < _SEED_MAX:
        raise ConfigError(f"seed must be a 64-bit nonnegative integer, got {seed}")
    return int(seed)


def split_rng(base_seed, index):
    """Independent generator for the index-th replication of a base seed.

    Stream derivation: PCG64 seeded with SeedSequence([base_seed, index]).
    """
    _check_seed(base_seed)
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), int(index)]))


def split_seeds(base_seed, index, count):
    """Deterministic child seeds for sub-streams of one replication."""
    ss = np.random.SeedSequence([int(base_seed), int(index)])
    return [int(x) for x in ss.generate_state(count, dtype=np.uint64)]


@dataclass(frozen=True)
class SbmConfig:
    n_inliers: int
    k_communities: int
    p_in: float
    p_out: float
    seed: int

    def __post_init__(self):
        if self.n_inliers < 1:
            raise ConfigError(f"n_inliers must be positive, got {self.n_inliers}")
        if self.k_communities < 1:
            raise ConfigError(f"k_communities must be at least 1, got {self.k_communities}")
        if not 0.0 <= self.p_out <= self.p_in <= 1.0:
            raise ConfigError(
                f"need 0 <= p_out <= p_in <= 1, got p_in={self.p_in}, p_out={self.p_out}"
            )
        _check_seed(self.seed)


@dataclass(frozen=True)
class OutlierConfig:
    kind: str = HUB
    s: int = 0
    pi_hub: float = 0.5
    pi_mix: float = 0.6

    def __post_init__(self):
        if self.kind not in (HUB, MIXED):
            raise ConfigError(f"outlier kind must be '{HUB}' or '{MIXED}', got {self.kind!r}")
        if self.s < 0:
            raise ConfigError(f"s must be nonnegative, got {self.s}")
        if not 0.0 <= self.pi_hub <= 1.0:
            raise ConfigError(f"pi_hub must be in [0, 1], got {self.pi_hub}")
        if not 0.0 <= self.pi_mix <= 1.0:
            raise ConfigError(f"pi_mix must be in [0, 1], got {self.pi_mix}")


@dataclass(frozen=True)
class GroundTruth:
    """Expected adjacency P (zero diagonal) and its two structured parts.

    The inlier block of L_star is block constant; columns of S_star indexed by
    inliers are zero; outlier-outlier probabilities sit in the upper triangle
    of S_star only, so P = L_star - diag(L_star) + S_star + S_star^T stays in
    [0, 1] entrywise.
    """

    P: np.ndarray
    L_star: np.ndarray
    S_star: np.ndarray
    communities: np.ndarray
    outliers: np.ndarray

    @property
    def n(self):
        return self.P.shape[0]

    @property
    def n_inliers(self):
        return self.communities.shape[0]


def _balanced_labels(n, k, rng):
    sizes = [n // k + (1 if c < n % k else 0) for c in range(k)]
    labels = np.concatenate([np.full(size, c, dtype=np.int64) for c, size in enumerate(sizes)])
    rng.shuffle(labels)
    return labels


def build_ground_truth(sbm, out):
    """Assemble P, L_star and S_star for one configuration.

    Hub outlier columns carry one uniform draw from [pi_hub, 1] per dyad;
    mixed-membership outliers connect at rate pi_mix to two communities drawn
    without replacement and at p_out elsewhere.
    """
    n_in = sbm.n_inliers
    s = out.s
    n = n_in + s
    rng = np.random.default_rng(sbm.seed)

    labels = _balanced_labels(n_in, sbm.k_communities, rng)
    L_star = np.zeros((n, n))
    same = labels[:, None] == labels[None, :]
    L_star[:n_in, :n_in] = np.where(same, sbm.p_in, sbm.p_out)

    if out.kind == MIXED and s > 0 and sbm.k_communities < 2:
        raise ConfigError("mixed-membership outliers need at least 2 communities")

    S_star = np.zeros((n, n))
    outliers = np.arange(n_in, n, dtype=np.int64)
    for j in outliers:
        if out.kind == HUB:
            S_star[:n_in, j] = rng.uniform(out.pi_hub, 1.0, size=n_in)
        else:
            pair = rng.choice(sbm.k_communities, size=2, replace=False)
            S_star[:n_in, j] = np.where(np.isin(labels, pair), out.pi_mix, sbm.p_out)
    for a_pos, a in enumerate(outliers):
        for b in outliers[a_pos + 1:]:
            S_star[a, b] = rng.uniform(out.pi_hub, 1.0) if out.kind == HUB else sbm.p_out

    P = L_star - np.diag(np.diag(L_star)) + S_star + S_star.T
    return GroundTruth(P=P, L_star=L_star, S_star=S_star, communities=labels, outliers=outliers)


def _sample_symmetric(prob, n, seed):
    """Symmetric 0/1 matrix with zero diagonal; upper-triangle entries are
    independent Bernoulli draws with the given (matrix or scalar) probability."""
    rng = np.random.default_rng(_check_seed(seed))
    draw = rng.random((n, n))
    iu = np.triu_indices(n, k=1)
    out = np.zeros((n, n))
    p = prob[iu] if isinstance(prob, np.ndarray) else prob
    out[iu] = (draw[iu] < p).astype(np.float64)
    return out + out.T


def sample_adjacency(truth, seed):
    """Bernoulli adjacency draw from the expected matrix P."""
    return _sample_symmetric(truth.P, truth.n, seed)


def sample_mask(n, p_observe, seed):
    """Uniform observation mask: each off-diagonal dyad examined with p_observe."""
    if not 0.0 <= p_observe <= 1.0:
        raise ConfigError(f"p_observe must be in [0, 1], got {p_observe}")
    return _sample_symmetric(float(p_observe), n, seed)


def full_observation(n):
    """Mask with every off-diagonal dyad examined."""
    return np.ones((n, n)) - np.eye(n)
