"""Per-cluster cohesion solves and dominant / non-dominant partitioning.

Each cluster is turned into a complete edge-weighted affinity graph, and a
simplex-constrained participation vector is found by replicator dynamics:
starting from the barycenter, iterate ``z_i <- z_i (Az)_i / (z^T A z)``. For
symmetric non-negative weights the objective ``z^T A z`` never decreases, the
iterates stay on the simplex, and the limit concentrates on the cluster's
most mutually-similar members. Samples at or below the median positive
participation form the non-dominant (boundary-like) side.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import AUTO, DistanceMatrix, FeatureMatrix, pairwise_distances, to_affinity
from .spectral import ClusterAssignment

POSITIVE_EPS = 1e-8


@dataclass(frozen=True)
class ClusterGraph:
    """Complete affinity graph over one cluster's members."""

    ids: tuple
    weights: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "ids", tuple(self.ids))
        m = len(self.ids)
        if W.shape != (m, m):
            raise ValueError(f"weights shape {W.shape} does not match {m} ids")
        if np.abs(W - W.T).max(initial=0.0) > 1e-9:
            raise ValueError("cluster graph weights must be symmetric within 1e-9")
        if np.abs(np.diagonal(W)).max(initial=0.0) != 0.0:
            raise ValueError("cluster graph must have no self-loops")
        if W.min(initial=0.0) < 0.0 or W.max(initial=0.0) > 1.0:
            raise ValueError("cluster graph weights must lie in [0, 1]")
        object.__setattr__(self, "weights", W)

    @property
    def size(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class ParticipationVector:
    """Simplex-constrained sample-cluster participation values."""

    ids: tuple
    values: np.ndarray
    objective: float
    iterations: int
    converged: bool
    degenerate: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.ids),):
            raise ValueError("participation length does not match ids")
        if values.min(initial=0.0) < 0.0:
            raise ValueError("participation values must be non-negative")
        if abs(values.sum() - 1.0) > 1e-9:
            raise ValueError("participation values must sum to 1 within 1e-9")


@dataclass(frozen=True)
class DominantPartition:
    """Split of a cluster at cutoff tau = multiplier * median positive participation."""

    cutoff: float
    dominant_ids: tuple
    nondominant_ids: tuple
    cutoff_multiplier: float

    def __post_init__(self):
        object.__setattr__(self, "dominant_ids", tuple(self.dominant_ids))
        object.__setattr__(self, "nondominant_ids", tuple(self.nondominant_ids))


@dataclass(frozen=True)
class NondominantPool:
    """Per-cluster non-dominant selection pool with escalation diagnostics."""

    cluster: int
    nondominant_ids: tuple
    cutoff_multiplier: float
    shortfall: int
    participation: ParticipationVector


def replicator_dynamics(
    G: ClusterGraph,
    tol: float = 1e-6,
    max_iter: int = 1000,
    trace: list | None = None,
) -> ParticipationVector:
    """Maximize z^T A z on the simplex by multiplicative replicator updates.

    Starts at the barycenter and stops when the max-norm step drops below
    ``tol`` or after ``max_iter`` iterations. A graph whose barycenter payoff
    is zero (all-zero weights) yields the uniform vector with the degeneracy
    flag set. If ``trace`` is given, ``(z, objective)`` is appended after
    every update for invariant checking.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")
    m = G.size
    if m == 0:
        raise ValueError("cluster graph has no vertices")
    A = G.weights
    z = np.full(m, 1.0 / m)
    if m == 1:
        return ParticipationVector(G.ids, z, objective=0.0, iterations=0, converged=True)

    payoff = A @ z
    objective = float(z @ payoff)
    if objective <= 0.0:
        return ParticipationVector(
            G.ids, z, objective=0.0, iterations=0, converged=True, degenerate=True
        )

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        z_next = z * (payoff / objective)
        step = np.abs(z_next - z).max()
        z = z_next
        payoff = A @ z
        objective = float(z @ payoff)
        if trace is not None:
            trace.append((z.copy(), objective))
        if step < tol:
            converged = True
            break
    return ParticipationVector(
        G.ids, z, objective=objective, iterations=iterations, converged=converged
    )


def partition(P: ParticipationVector, cutoff_multiplier: float = 1.0) -> DominantPartition:
    """Split members at tau = multiplier * median of positive participations.

    Ties land on the non-dominant side, so a singleton cluster (z = 1, tau =
    1) is non-dominant, and zero-participation members always are.
    """
    if cutoff_multiplier < 1.0:
        raise ValueError(f"cutoff multiplier must be >= 1, got {cutoff_multiplier}")
    values = P.values
    positive = values > POSITIVE_EPS
    if not positive.any():
        raise ValueError("degenerate participation vector: no positive values above 1e-8")
    tau = cutoff_multiplier * float(np.median(values[positive]))
    nondominant = values <= tau
    return DominantPartition(
        cutoff=tau,
        dominant_ids=tuple(s for s, nd in zip(P.ids, nondominant) if not nd),
        nondominant_ids=tuple(s for s, nd in zip(P.ids, nondominant) if nd),
        cutoff_multiplier=cutoff_multiplier,
    )


def cluster_graph(
    X: FeatureMatrix,
    member_ids,
    distances: DistanceMatrix | None = None,
) -> ClusterGraph:
    """Affinity graph over one cluster, with a per-cluster median bandwidth.

    ``distances``, when given, must cover all rows of X in row order; the
    cluster's block is sliced out instead of being recomputed.
    """
    member_ids = tuple(member_ids)
    if len(member_ids) == 1:
        return ClusterGraph(member_ids, np.zeros((1, 1)))
    idx = [X.index_of(s) for s in member_ids]
    if distances is None:
        D = pairwise_distances(X.restrict(member_ids))
    else:
        D = distances.submatrix(idx)
    try:
        A = to_affinity(D, AUTO)
    except ValueError:
        # every pairwise distance is zero: fully-duplicated cluster, treat as
        # maximally cohesive (complete graph of unit affinities)
        W = np.ones((len(member_ids), len(member_ids)))
        np.fill_diagonal(W, 0.0)
        return ClusterGraph(member_ids, W)
    return ClusterGraph(member_ids, A.data)


def nds_pools(
    X: FeatureMatrix,
    assignment: ClusterAssignment,
    required_per_cluster: int,
    distances: DistanceMatrix | None = None,
    tol: float = 1e-6,
    max_iter: int = 1000,
) -> dict[int, NondominantPool]:
    """Non-dominant selection pool for every cluster, escalating the cutoff.

    Each cluster is partitioned at the median positive participation; while
    the non-dominant side is smaller than ``required_per_cluster`` the cutoff
    multiplier is raised tenfold and the split redone. A cluster smaller than
    the requirement is returned whole, with the shortfall reported.
    """
    if required_per_cluster < 1:
        raise ValueError(f"required_per_cluster must be >= 1, got {required_per_cluster}")
    pools: dict[int, NondominantPool] = {}
    for k in range(assignment.num_clusters):
        members = assignment.members(k)
        G = cluster_graph(X, members, distances=distances)
        P = replicator_dynamics(G, tol=tol, max_iter=max_iter)
        multiplier = 1.0
        part = partition(P, multiplier)
        while (
            len(part.nondominant_ids) < required_per_cluster
            and len(part.nondominant_ids) < len(members)
        ):
            multiplier *= 10.0
            part = partition(P, multiplier)
        pools[k] = NondominantPool(
            cluster=k,
            nondominant_ids=part.nondominant_ids,
            cutoff_multiplier=multiplier,
            shortfall=max(0, required_per_cluster - len(part.nondominant_ids)),
            participation=P,
        )
    return pools
