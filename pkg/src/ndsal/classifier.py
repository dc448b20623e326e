"""Stand-in probabilistic classifier interrogated by the uncertainty strategies.

A single-hidden-layer network (ReLU, then dropout, then linear + softmax)
trained with plain minibatch gradient descent on cross-entropy. Training is a
pure function of (data, config, seed): every cycle trains a fresh model, no
state survives between cycles. Dropout is applied only at inference time,
where averaging stochastic forward passes yields the Bayesian-style
uncertainty estimates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .numerics import FeatureMatrix

# learning rate used by the full-scale encoder fine-tuning setup; the desk
# default of 1e-2 suits raw synthetic embeddings
FINE_TUNE_LEARNING_RATE = 2e-5


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    learning_rate: float = 1e-2
    batch_size: int = 64
    hidden: int = 64
    dropout_rate: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValueError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")

    def with_seed(self, seed: int) -> "TrainConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class ClassifierParams:
    """Immutable trained parameters of the two-layer network."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    dropout_rate: float
    seed: int

    def __post_init__(self):
        for name in ("w1", "b1", "w2", "b2"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.isfinite(arr).all():
                raise ValueError(f"non-finite values in parameter {name}")
            object.__setattr__(self, name, arr)
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValueError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def num_classes(self) -> int:
        return self.w2.shape[1]


def _as_array(X) -> np.ndarray:
    if isinstance(X, FeatureMatrix):
        return X.data
    return np.asarray(X, dtype=np.float64)


def init_params(dim: int, num_classes: int, config: TrainConfig) -> ClassifierParams:
    """Fresh parameters from the seed alone (reset semantics)."""
    rng = np.random.default_rng(config.seed)
    h = config.hidden
    return ClassifierParams(
        w1=rng.normal(0.0, 1.0 / np.sqrt(dim), size=(dim, h)),
        b1=np.zeros(h),
        w2=rng.normal(0.0, 1.0 / np.sqrt(h), size=(h, num_classes)),
        b2=np.zeros(num_classes),
        dropout_rate=config.dropout_rate,
        seed=config.seed,
    )


def train(X, y, num_classes: int, config: TrainConfig = TrainConfig()) -> ClassifierParams:
    """Minibatch gradient descent on cross-entropy from a fresh initialization.

    Deterministic given ``config.seed``; zero epochs returns the
    initialization untouched. Labels outside 0..K-1 are rejected.
    """
    X = _as_array(X)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("features and labels must have matching first dimension")
    if y.shape[0] < 1:
        raise ValueError("training set is empty")
    if y.min() < 0 or y.max() >= num_classes:
        bad = int(y[(y < 0) | (y >= num_classes)][0])
        raise ValueError(f"label {bad} outside 0..{num_classes - 1}")

    params = init_params(X.shape[1], num_classes, config)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed, spawn_key=(1,)))
    w1, b1, w2, b2 = params.w1.copy(), params.b1.copy(), params.w2.copy(), params.b2.copy()
    n = X.shape[0]
    lr = config.learning_rate
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            grads = _loss_and_grads(w1, b1, w2, b2, X[batch], y[batch], num_classes)[1]
            w1 -= lr * grads[0]
            b1 -= lr * grads[1]
            w2 -= lr * grads[2]
            b2 -= lr * grads[3]
    return ClassifierParams(
        w1=w1, b1=b1, w2=w2, b2=b2, dropout_rate=config.dropout_rate, seed=config.seed
    )


def training_loss(params: ClassifierParams, X, y) -> float:
    """Mean cross-entropy of the deterministic forward pass."""
    X = _as_array(X)
    y = np.asarray(y, dtype=np.int64)
    loss, _ = _loss_and_grads(
        params.w1, params.b1, params.w2, params.b2, X, y, params.num_classes, want_grads=False
    )
    return loss


def loss_gradients(params: ClassifierParams, X, y) -> dict[str, np.ndarray]:
    """Analytic gradients of the training loss for every parameter tensor."""
    X = _as_array(X)
    y = np.asarray(y, dtype=np.int64)
    _, grads = _loss_and_grads(params.w1, params.b1, params.w2, params.b2, X, y, params.num_classes)
    return {"w1": grads[0], "b1": grads[1], "w2": grads[2], "b2": grads[3]}


def _loss_and_grads(w1, b1, w2, b2, X, y, num_classes, want_grads=True):
    B = X.shape[0]
    pre = X @ w1 + b1
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ w2 + b2
    probs = _softmax(logits)
    loss = float(-np.log(np.clip(probs[np.arange(B), y], 1e-300, None)).mean())
    if not want_grads:
        return loss, None
    dlogits = probs.copy()
    dlogits[np.arange(B), y] -= 1.0
    dlogits /= B
    dw2 = hidden.T @ dlogits
    db2 = dlogits.sum(axis=0)
    dhidden = dlogits @ w2.T
    dpre = dhidden * (pre > 0.0)
    dw1 = X.T @ dpre
    db1 = dpre.sum(axis=0)
    return loss, (dw1, db1, dw2, db2)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def predict_proba(
    params: ClassifierParams,
    X,
    dropout_active: bool = False,
    seed: int = 0,
) -> np.ndarray:
    """Row-stochastic class probabilities; optionally with a dropout mask.

    With ``dropout_active`` an inverted-dropout mask (deterministic given the
    seed) is applied to the hidden layer before the output layer. A zero
    dropout rate leaves the pass bit-identical to the deterministic one.
    """
    X = _as_array(X)
    if X.ndim != 2 or X.shape[1] != params.input_dim:
        raise ValueError(
            f"feature dimension {X.shape[1] if X.ndim == 2 else X.shape} "
            f"does not match model input dimension {params.input_dim}"
        )
    hidden = np.maximum(X @ params.w1 + params.b1, 0.0)
    if dropout_active and params.dropout_rate > 0.0:
        rng = np.random.default_rng(seed)
        keep = 1.0 - params.dropout_rate
        mask = (rng.random(hidden.shape) < keep) / keep
        hidden = hidden * mask
    return _softmax(hidden @ params.w2 + params.b2)


def mc_predict(params: ClassifierParams, X, passes: int, seed: int = 0) -> np.ndarray:
    """Mean of ``passes`` dropout-active forward passes.

    Per-pass seeds are derived from ``seed``. With a zero dropout rate every
    pass is identical, so the deterministic pass is returned as the exact
    mean.
    """
    if passes < 1:
        raise ValueError(f"passes must be >= 1, got {passes}")
    if params.dropout_rate == 0.0:
        return predict_proba(params, X, dropout_active=False)
    total = None
    for i in range(passes):
        pass_seed = np.random.SeedSequence(entropy=seed, spawn_key=(i,)).generate_state(1)[0]
        p = predict_proba(params, X, dropout_active=True, seed=int(pass_seed))
        total = p if total is None else total + p
    return total / passes


def save_params(path, params: ClassifierParams) -> None:
    """Persist trained parameters as an .npz archive."""
    np.savez(
        path,
        w1=params.w1,
        b1=params.b1,
        w2=params.w2,
        b2=params.b2,
        dropout_rate=np.float64(params.dropout_rate),
        seed=np.int64(params.seed),
    )


def load_params(path) -> ClassifierParams:
    with np.load(path) as data:
        return ClassifierParams(
            w1=data["w1"],
            b1=data["b1"],
            w2=data["w2"],
            b2=data["b2"],
            dropout_rate=float(data["dropout_rate"]),
            seed=int(data["seed"]),
        )


def validate_prob_matrix(probs: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Assert row-stochastic probabilities; returns the validated array."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2:
        raise ValueError(f"probability matrix must be 2-d, got shape {probs.shape}")
    if probs.min(initial=0.0) < 0.0 or probs.max(initial=0.0) > 1.0 + tol:
        raise ValueError("probabilities must lie in [0, 1]")
    sums = probs.sum(axis=1)
    if np.abs(sums - 1.0).max(initial=0.0) > tol:
        bad = int(np.abs(sums - 1.0).argmax())
        raise ValueError(f"probability row {bad} sums to {sums[bad]:.8f}, expected 1")
    return probs
