"""Dense numerical kernels shared by the selection machinery.

Pairwise Euclidean distances, Gaussian distance-to-affinity transforms,
symmetric eigendecomposition, and seeded k-means. Everything here is a pure
function of its inputs plus an explicit seed; returned arrays are never
aliased to the inputs and are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

AUTO = "auto"

_SYMMETRY_TOL = 1e-9
_EIGEN_SYMMETRY_TOL = 1e-7


def _check_unique_ids(ids: tuple, n: int) -> None:
    if len(ids) != n:
        raise ValueError(f"expected {n} ids, got {len(ids)}")
    if len(set(ids)) != len(ids):
        raise ValueError("sample ids must be unique")


@dataclass(frozen=True)
class FeatureMatrix:
    """n x d matrix of embedding vectors with one stable id per row."""

    data: np.ndarray
    ids: tuple

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"feature matrix must be 2-d and non-empty, got shape {data.shape}")
        finite_rows = np.isfinite(data).all(axis=1)
        if not finite_rows.all():
            bad = int(np.flatnonzero(~finite_rows)[0])
            raise ValueError(f"non-finite value in feature row {bad}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "ids", tuple(self.ids))
        _check_unique_ids(self.ids, data.shape[0])

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def index_of(self, sample_id) -> int:
        try:
            return self._index[sample_id]
        except AttributeError:
            object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.ids)})
            return self._index[sample_id]

    def restrict(self, ids) -> "FeatureMatrix":
        """Sub-matrix holding the given ids, in the given order."""
        idx = [self.index_of(s) for s in ids]
        return FeatureMatrix(self.data[idx], tuple(ids))


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric matrix of pairwise distances with a zero diagonal."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {data.shape}")
        if not np.isfinite(data).all():
            raise ValueError("distance matrix contains non-finite values")
        if np.abs(data - data.T).max(initial=0.0) > _SYMMETRY_TOL:
            raise ValueError("distance matrix is not symmetric within 1e-9")
        if np.abs(np.diagonal(data)).max(initial=0.0) != 0.0:
            raise ValueError("distance matrix diagonal must be zero")
        if data.min(initial=0.0) < 0.0:
            raise ValueError("distances must be non-negative")
        object.__setattr__(self, "data", data)

    @property
    def size(self) -> int:
        return self.data.shape[0]

    def submatrix(self, indices) -> "DistanceMatrix":
        idx = np.asarray(indices, dtype=np.intp)
        return DistanceMatrix(self.data[np.ix_(idx, idx)])


@dataclass(frozen=True)
class AffinityMatrix:
    """Symmetric matrix of pairwise similarities in [0, 1], no self-loops."""

    data: np.ndarray
    bandwidth: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"affinity matrix must be square, got shape {data.shape}")
        if np.abs(data - data.T).max(initial=0.0) > _SYMMETRY_TOL:
            raise ValueError("affinity matrix is not symmetric within 1e-9")
        if np.abs(np.diagonal(data)).max(initial=0.0) != 0.0:
            raise ValueError("affinity matrix diagonal must be zero (no self-loops)")
        if data.min(initial=0.0) < 0.0 or data.max(initial=0.0) > 1.0:
            raise ValueError("affinities must lie in [0, 1]")
        object.__setattr__(self, "data", data)

    @property
    def size(self) -> int:
        return self.data.shape[0]


def pairwise_distances(X: FeatureMatrix) -> DistanceMatrix:
    """Euclidean distance between every pair of rows.

    Each entry is computed independently with a fixed summation order, so the
    result does not depend on how the work is scheduled.
    """
    D = cdist(X.data, X.data, metric="euclidean")
    np.fill_diagonal(D, 0.0)
    return DistanceMatrix(D)


def to_affinity(D: DistanceMatrix, bandwidth=AUTO) -> AffinityMatrix:
    """Gaussian-kernel similarity exp(-dist^2 / (2 sigma^2)) with zero diagonal.

    ``bandwidth=AUTO`` uses the median of the off-diagonal distances, which is
    scale-free; it is undefined (and rejected) when every off-diagonal
    distance is zero.
    """
    data = D.data
    n = data.shape[0]
    if bandwidth == AUTO:
        off = data[~np.eye(n, dtype=bool)]
        if off.size == 0 or off.max() == 0.0:
            raise ValueError("auto bandwidth undefined: all off-diagonal distances are zero")
        sigma = float(np.median(off))
        if sigma == 0.0:
            # more than half the pairs are duplicates; take the median of the
            # positive distances so the kernel stays defined
            sigma = float(np.median(off[off > 0]))
    else:
        sigma = float(bandwidth)
        if not np.isfinite(sigma) or sigma <= 0.0:
            raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    A = np.exp(data * data / (-2.0 * sigma * sigma))
    np.fill_diagonal(A, 0.0)
    return AffinityMatrix(A, bandwidth=sigma)


def sym_eigen(A: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a symmetric matrix for the k smallest eigenvalues.

    Returns ``(values, vectors)`` with values ascending and vectors as
    orthonormal columns satisfying ``A @ v = lam * v`` within 1e-6. Backed by
    LAPACK's symmetric solver; a non-converged factorization is reported
    rather than silently returned.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    n = A.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k must be in 1..{n}, got {k}")
    if not np.isfinite(A).all():
        raise ValueError("matrix contains non-finite values")
    if np.abs(A - A.T).max(initial=0.0) > _EIGEN_SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric within 1e-7")
    try:
        if k == n:
            vals, vecs = scipy.linalg.eigh(A, check_finite=False)
        else:
            vals, vecs = scipy.linalg.eigh(A, subset_by_index=(0, k - 1), check_finite=False)
    except scipy.linalg.LinAlgError as err:
        raise RuntimeError(f"eigendecomposition did not converge: {err}") from err
    return vals[:k], vecs[:, :k]


def kmeans(X: np.ndarray, K: int, seed: int, max_iter: int = 300) -> np.ndarray:
    """Seeded k-means labels in 0..K-1 via k-means++ and Lloyd iterations.

    Runs to an assignment fixpoint or ``max_iter``; an emptied cluster is
    re-seeded to the point farthest from its current centroid, so every
    cluster is non-empty on return. Deterministic given the seed.
    """
    labels, _, _ = _kmeans_full(X, K, seed, max_iter)
    return labels


def _kmeans_full(X: np.ndarray, K: int, seed: int, max_iter: int = 300):
    """k-means returning (labels, centroids, per-iteration objectives)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {X.shape}")
    n = X.shape[0]
    if not (1 <= K <= n):
        raise ValueError(f"K must be in 1..{n}, got {K}")
    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(X, K, rng)

    labels = np.full(n, -1, dtype=np.int64)
    objectives = []
    for _ in range(max_iter):
        d2 = _sq_dists(X, centroids)
        new_labels = d2.argmin(axis=1)
        point_d2 = d2[np.arange(n), new_labels]

        for k in range(K):
            if not (new_labels == k).any():
                far = int(point_d2.argmax())
                centroids[k] = X[far]
                new_labels[far] = k
                point_d2[far] = 0.0

        objectives.append(float(point_d2.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for k in range(K):
            members = X[labels == k]
            if members.shape[0] > 0:
                centroids[k] = members.mean(axis=0)
    return labels, centroids, objectives


def _plusplus_init(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((K, X.shape[1]), dtype=np.float64)
    centroids[0] = X[rng.integers(n)]
    closest = _sq_dists(X, centroids[:1]).ravel()
    for k in range(1, K):
        total = closest.sum()
        if total > 0.0:
            idx = rng.choice(n, p=closest / total)
        else:
            idx = rng.integers(n)
        centroids[k] = X[idx]
        closest = np.minimum(closest, _sq_dists(X, centroids[k : k + 1]).ravel())
    return centroids


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d2 = (X * X).sum(axis=1)[:, None] - 2.0 * X @ C.T + (C * C).sum(axis=1)[None, :]
    np.maximum(d2, 0.0, out=d2)
    return d2
