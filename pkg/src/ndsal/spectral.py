"""Normalized spectral clustering of pooled feature vectors.

Pipeline: pairwise distances -> Gaussian affinity (median bandwidth) ->
symmetric normalized Laplacian -> eigenvectors of the K smallest eigenvalues
-> row normalization -> seeded k-means. Rows are canonically ordered by id
before any seeded step, so permuting the input rows permutes the output
labels identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import (
    AUTO,
    AffinityMatrix,
    DistanceMatrix,
    FeatureMatrix,
    kmeans,
    pairwise_distances,
    sym_eigen,
    to_affinity,
)


@dataclass(frozen=True)
class ClusterAssignment:
    """Partition of samples into K non-empty clusters."""

    num_clusters: int
    labels: np.ndarray
    member_ids: tuple[tuple, ...]

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "member_ids", tuple(tuple(m) for m in self.member_ids))
        K = self.num_clusters
        if len(self.member_ids) != K:
            raise ValueError(f"expected {K} clusters, got {len(self.member_ids)}")
        if labels.min(initial=0) < 0 or labels.max(initial=0) >= K:
            raise ValueError("cluster labels out of range")
        sizes = np.bincount(labels, minlength=K)
        if (sizes == 0).any():
            raise ValueError("empty cluster in assignment")
        flat = [s for m in self.member_ids for s in m]
        if len(flat) != len(set(flat)) or len(flat) != labels.shape[0]:
            raise ValueError("member ids must partition the samples")

    def members(self, k: int) -> tuple:
        return self.member_ids[k]


def normalized_laplacian(A: AffinityMatrix) -> np.ndarray:
    """Symmetric normalized Laplacian I - D^{-1/2} A D^{-1/2}.

    A zero-degree (isolated) vertex gets an identity row, which parks it at
    eigenvalue 1 without poisoning the factorization.
    """
    W = A.data
    deg = W.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    positive = deg > 0
    inv_sqrt[positive] = 1.0 / np.sqrt(deg[positive])
    L = -(inv_sqrt[:, None] * W * inv_sqrt[None, :])
    np.fill_diagonal(L, 1.0)
    return (L + L.T) * 0.5


def spectral_cluster(
    X: FeatureMatrix,
    K: int,
    seed: int,
    distances: DistanceMatrix | None = None,
) -> ClusterAssignment:
    """Cluster the rows of X into K groups; deterministic given the seed.

    ``distances`` may carry a precomputed pairwise-distance matrix over the
    rows of X (in the same row order) to avoid recomputing it in a loop.
    """
    n = X.n_samples
    if K < 2:
        raise ValueError(f"K must be at least 2, got {K}")
    if n < K:
        raise ValueError(f"need at least K={K} samples, got {n}")

    # canonical id order so that row permutations of the input cannot leak
    # into the seeded stages
    order = sorted(range(n), key=lambda i: X.ids[i])
    X_sorted = FeatureMatrix(X.data[order], tuple(X.ids[i] for i in order))
    if distances is None:
        D = pairwise_distances(X_sorted)
    else:
        if distances.size != n:
            raise ValueError(f"distance matrix size {distances.size} does not match {n} samples")
        D = distances.submatrix(order)

    A = to_affinity(D, AUTO)
    L = normalized_laplacian(A)
    _, vectors = sym_eigen(L, K)

    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    embedding = np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)
    labels_sorted = kmeans(embedding, K, seed)

    labels = np.empty(n, dtype=np.int64)
    labels[order] = labels_sorted
    member_ids = tuple(
        tuple(X.ids[i] for i in np.flatnonzero(labels == k)) for k in range(K)
    )
    return ClusterAssignment(num_clusters=K, labels=labels, member_ids=member_ids)


def restrict_assignment(assignment: ClusterAssignment, keep_ids) -> ClusterAssignment:
    """Drop samples outside ``keep_ids``, preserving cluster identities.

    Supports freezing cycle-0 clusters while the pool shrinks; an emptied
    cluster is rejected since every selection step assumes K live clusters.
    """
    keep = set(keep_ids)
    member_ids = tuple(
        tuple(s for s in members if s in keep) for members in assignment.member_ids
    )
    if any(len(m) == 0 for m in member_ids):
        raise ValueError("a frozen cluster lost all of its members")
    order = {s: i for i, s in enumerate(sorted(keep, key=str))}
    labels = np.empty(len(keep), dtype=np.int64)
    for k, members in enumerate(member_ids):
        for s in members:
            labels[order[s]] = k
    return ClusterAssignment(
        num_clusters=assignment.num_clusters, labels=labels, member_ids=member_ids
    )


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected agreement between two clusterings of the same items."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("label vectors must be 1-d and of equal length")
    n = a.shape[0]
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_cells = comb2(table).sum()
    sum_rows = comb2(table.sum(axis=1)).sum()
    sum_cols = comb2(table.sum(axis=0)).sum()
    total = comb2(n)
    expected = sum_rows * sum_cols / total if total > 0 else 0.0
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))
