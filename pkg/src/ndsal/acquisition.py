"""Selection strategies producing per-sample weights over the unlabeled pool.

Five strategies: uniform random, minimum margin, variation ratio on averaged
dropout passes, non-dominant-set selection (nds), and the blended nds+ whose
mixing weight alpha starts at 1 and decays per cycle. Scoring is pure;
drawing consumes an explicit seed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .classifier import validate_prob_matrix
from .dominantset import nds_pools
from .numerics import DistanceMatrix, FeatureMatrix
from .spectral import ClusterAssignment

STRATEGIES = ("random", "minmargin", "varratio", "nds", "ndsplus")


@dataclass(frozen=True)
class AcquisitionScore:
    """Non-negative sampling weights over the current pool ids."""

    ids: tuple
    weights: np.ndarray
    strategy: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "weights", weights)
        if len(self.ids) == 0:
            raise ValueError("acquisition over an empty pool")
        if weights.shape != (len(self.ids),):
            raise ValueError("weights length does not match pool ids")
        if not np.isfinite(weights).all() or weights.min() < 0.0:
            raise ValueError("weights must be finite and non-negative")
        if weights.max() <= 0.0:
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class MixingState:
    """Blend coefficient for nds+ at a given cycle."""

    alpha: float
    decay_per_cycle: float = 0.02
    cycle: int = 0

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")

    @classmethod
    def for_cycle(cls, cycle: int, decay_per_cycle: float = 0.02, mode: str = "additive"):
        """alpha schedule from 1 at cycle 0; additive is the default reading."""
        if mode == "additive":
            alpha = max(0.0, 1.0 - decay_per_cycle * cycle)
        elif mode == "multiplicative":
            alpha = (1.0 - decay_per_cycle) ** cycle
        else:
            raise ValueError(f"unknown alpha mode: {mode!r}")
        return cls(alpha=alpha, decay_per_cycle=decay_per_cycle, cycle=cycle)


def score_random(pool_ids) -> AcquisitionScore:
    """Equal weight on every pool member."""
    pool_ids = tuple(pool_ids)
    if not pool_ids:
        raise ValueError("pool is empty")
    return AcquisitionScore(
        ids=pool_ids,
        weights=np.full(len(pool_ids), 1.0 / len(pool_ids)),
        strategy="random",
    )


def score_min_margin(probs: np.ndarray, pool_ids) -> AcquisitionScore:
    """1 minus the gap between the two most probable classes.

    The smaller the margin the more uncertain the sample, so the weight
    argmax coincides with the margin argmin.
    """
    probs = validate_prob_matrix(probs)
    pool_ids = tuple(pool_ids)
    if probs.shape[0] != len(pool_ids):
        raise ValueError("probability rows do not match pool ids")
    if probs.shape[1] < 2:
        raise ValueError("minimum margin needs at least two classes")
    top2 = np.sort(probs, axis=1)[:, -2:]
    margin = top2[:, 1] - top2[:, 0]
    return AcquisitionScore(ids=pool_ids, weights=1.0 - margin, strategy="minmargin")


def score_var_ratio(mc_probs: np.ndarray, pool_ids) -> AcquisitionScore:
    """1 minus the averaged top-class probability; bounded by 1 - 1/K."""
    probs = validate_prob_matrix(mc_probs)
    pool_ids = tuple(pool_ids)
    if probs.shape[0] != len(pool_ids):
        raise ValueError("probability rows do not match pool ids")
    return AcquisitionScore(ids=pool_ids, weights=1.0 - probs.max(axis=1), strategy="varratio")


def score_nds(
    X: FeatureMatrix,
    assignment: ClusterAssignment,
    m: int,
    distances: DistanceMatrix | None = None,
) -> AcquisitionScore:
    """Weight 1 on every non-dominant member of any cluster, 0 elsewhere.

    The per-cluster pools are sized for ceil(m/K) draws, escalating the
    cutoff tenfold whenever a pool comes up short; multipliers, shortfalls,
    and the pools themselves are carried in the metadata for stratified
    drawing.
    """
    K = assignment.num_clusters
    if m < K:
        raise ValueError(f"draw size {m} is smaller than the cluster count {K}")
    required = math.ceil(m / K)
    pools = nds_pools(X, assignment, required, distances=distances)
    nondominant = {s for pool in pools.values() for s in pool.nondominant_ids}
    weights = np.array([1.0 if s in nondominant else 0.0 for s in X.ids])
    return AcquisitionScore(
        ids=X.ids,
        weights=weights,
        strategy="nds",
        metadata={
            "pools": {k: pool.nondominant_ids for k, pool in pools.items()},
            "cutoff_multipliers": {k: pool.cutoff_multiplier for k, pool in pools.items()},
            "shortfalls": {k: pool.shortfall for k, pool in pools.items()},
        },
    )


def score_nds_plus(
    nds: AcquisitionScore,
    uncertainty: AcquisitionScore,
    mix: MixingState,
) -> AcquisitionScore:
    """alpha-weighted blend of normalized nds and uncertainty weights.

    Both sides are normalized to unit mass over the pool first, so alpha is a
    probability-mass split; at alpha = 1 the support equals the nds support.
    """
    if nds.ids != uncertainty.ids:
        raise ValueError("nds and uncertainty scores cover different pools")
    if uncertainty.weights.max() > 1.0 + 1e-12:
        raise ValueError("uncertainty weights must lie in [0, 1]")
    blended = mix.alpha * _normalized(nds.weights) + (1.0 - mix.alpha) * _normalized(
        uncertainty.weights
    )
    metadata = dict(nds.metadata)
    metadata["alpha"] = mix.alpha
    metadata["uncertainty_strategy"] = uncertainty.strategy
    return AcquisitionScore(ids=nds.ids, weights=blended, strategy="ndsplus", metadata=metadata)


def _normalized(weights: np.ndarray) -> np.ndarray:
    total = weights.sum()
    if total <= 0.0:
        # a perfectly confident model can zero out an uncertainty score;
        # treat that side as uninformative rather than undefined
        return np.full(weights.shape, 1.0 / weights.shape[0])
    return weights / total


def draw(scores: AcquisitionScore, m: int, seed: int) -> tuple:
    """Select min(m, pool size) distinct ids; deterministic given the seed.

    The nds strategy draws uniformly within each cluster's non-dominant pool,
    splitting m across clusters as evenly as possible (remainder spread
    round-robin in cluster order). Every other strategy samples without
    replacement proportional to weight. When the positive-weight support
    cannot cover the request, all of it is taken and the rest is filled
    uniformly from the remaining pool, with a warning.
    """
    if m < 1:
        raise ValueError(f"draw size must be >= 1, got {m}")
    pool = scores.ids
    n = len(pool)
    rng = np.random.default_rng(seed)
    if m >= n:
        return tuple(pool)
    if scores.strategy == "nds" and "pools" in scores.metadata:
        selected = _draw_stratified(scores, m, rng)
    else:
        selected = _draw_weighted(pool, scores.weights, m, rng)
    return tuple(selected)


def _draw_weighted(pool: tuple, weights: np.ndarray, m: int, rng) -> list:
    support = np.flatnonzero(weights > 0.0)
    if support.size >= m:
        p = weights[support] / weights[support].sum()
        picked = rng.choice(support, size=m, replace=False, p=p, shuffle=False)
        return [pool[i] for i in picked]
    selected = [pool[i] for i in support]
    rest = np.flatnonzero(weights <= 0.0)
    fill = m - support.size
    warnings.warn(
        f"positive-weight support ({support.size}) smaller than draw size ({m}); "
        f"filling {fill} uniformly from the remaining pool"
    )
    picked = rng.choice(rest, size=fill, replace=False, shuffle=False)
    selected.extend(pool[i] for i in picked)
    return selected


def _draw_stratified(scores: AcquisitionScore, m: int, rng) -> list:
    pools = scores.metadata["pools"]
    K = len(pools)
    base, remainder = divmod(m, K)
    quotas = {k: base + (1 if i < remainder else 0) for i, k in enumerate(sorted(pools))}
    selected: list = []
    shortfall = 0
    for k in sorted(pools):
        members = list(pools[k])
        quota = quotas[k]
        if len(members) <= quota:
            selected.extend(members)
            shortfall += quota - len(members)
        else:
            picked = rng.choice(len(members), size=quota, replace=False, shuffle=False)
            selected.extend(members[i] for i in picked)
    if shortfall > 0:
        chosen = set(selected)
        rest = [s for s in scores.ids if s not in chosen]
        fill = min(shortfall, len(rest))
        warnings.warn(
            f"non-dominant pools short by {shortfall}; filling uniformly from the remaining pool"
        )
        picked = rng.choice(len(rest), size=fill, replace=False, shuffle=False)
        selected.extend(rest[i] for i in picked)
    return selected
