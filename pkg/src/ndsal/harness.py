"""Active-learning experiment engine.

Synthetic imbalanced data generation, the cycle loop (select -> label ->
reset -> retrain -> evaluate), repetition management, and record emission.
An experiment is fully determined by its master seed: repetition, cycle, and
purpose are folded into independent child seeds, so adding repetitions never
perturbs earlier ones.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import acquisition
from .classifier import TrainConfig, mc_predict, predict_proba, train
from .numerics import DistanceMatrix, FeatureMatrix, pairwise_distances
from .spectral import restrict_assignment, spectral_cluster

# class proportions of the two reference corpora (abusive/hateful/spam/normal
# and attack/normal), used as synthetic-generator presets
PRESET_PROPORTIONS = {
    "twitter-abusive": (0.240, 0.047, 0.148, 0.565),
    "wiki-attack": (0.117, 0.883),
}

_PURPOSES = ("data", "split", "init", "train", "strategy", "draw", "dropout")


def derive_seed(master_seed: int, repetition: int, cycle: int, purpose: str) -> int:
    """Counter-based child seed; independent streams per (rep, cycle, purpose)."""
    code = _PURPOSES.index(purpose)
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(repetition, cycle, code))
    return int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class PoolState:
    """Partition of sample ids into labeled set, unlabeled pool, and test set."""

    labeled_ids: tuple
    pool_ids: tuple
    test_ids: tuple
    cycle: int = 0

    def __post_init__(self):
        object.__setattr__(self, "labeled_ids", tuple(self.labeled_ids))
        object.__setattr__(self, "pool_ids", tuple(self.pool_ids))
        object.__setattr__(self, "test_ids", tuple(self.test_ids))
        sets = [set(self.labeled_ids), set(self.pool_ids), set(self.test_ids)]
        if any(len(s) != len(ids) for s, ids in zip(sets, (self.labeled_ids, self.pool_ids, self.test_ids))):
            raise ValueError("duplicate ids within a pool-state partition")
        if sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2]:
            raise ValueError("labeled, pool, and test ids must be pairwise disjoint")

    def advance(self, selected) -> "PoolState":
        """Move the selected ids from the pool into the labeled set."""
        selected = tuple(selected)
        chosen = set(selected)
        if not chosen <= set(self.pool_ids):
            raise ValueError("selected ids must come from the pool")
        return PoolState(
            labeled_ids=self.labeled_ids + selected,
            pool_ids=tuple(s for s in self.pool_ids if s not in chosen),
            test_ids=self.test_ids,
            cycle=self.cycle + 1,
        )


@dataclass(frozen=True)
class ALConfig:
    """Everything an experiment needs besides the data itself."""

    strategy: str
    draw_size: int = 20
    initial_size: int = 100
    budget: int = 500
    k: int = 4
    epochs: int = 10
    mc_passes: int = 10
    dropout_rate: float = 0.2
    alpha_decay: float = 0.02
    alpha_mode: str = "additive"
    repetitions: int = 10
    master_seed: int = 0
    learning_rate: float = 1e-2
    batch_size: int = 64
    hidden: int = 64
    recluster_each_cycle: bool = True
    f1_average: str = "macro"

    def __post_init__(self):
        if self.strategy not in acquisition.STRATEGIES:
            raise ValueError(
                f"unknown strategy {self.strategy!r}; expected one of {acquisition.STRATEGIES}"
            )
        if self.initial_size % self.k != 0:
            raise ValueError(
                f"initial_size {self.initial_size} must be divisible by k={self.k}"
            )
        if self.budget < self.initial_size:
            raise ValueError("budget must be at least initial_size")
        if self.draw_size < 1:
            raise ValueError("draw_size must be >= 1")
        if self.f1_average not in ("macro", "micro"):
            raise ValueError(f"f1_average must be 'macro' or 'micro', got {self.f1_average!r}")


@dataclass
class CycleRecord:
    strategy: str
    repetition: int
    cycle: int
    labeled_count: int
    macro_f1: float
    per_class_f1: tuple
    alpha: float | None = None
    cutoff_multipliers: dict | None = None
    elapsed_ms: float = 0.0


@dataclass
class RunRecord:
    repetition: int
    rows: list[CycleRecord] = field(default_factory=list)


class ExperimentFailure(RuntimeError):
    """A repetition failed; the completed repetitions ride along so callers
    can persist partial results before surfacing the error."""

    def __init__(self, message: str, partial: "ExperimentResult", repetition: int):
        super().__init__(message)
        self.partial = partial
        self.repetition = repetition


@dataclass
class ExperimentResult:
    config: ALConfig
    runs: list[RunRecord]

    def aggregate(self) -> list[dict]:
        """Per labeled-count mean and std of the F1 score across repetitions."""
        by_count: dict[int, list[float]] = {}
        for run in self.runs:
            for row in run.rows:
                by_count.setdefault(row.labeled_count, []).append(row.macro_f1)
        out = []
        for count in sorted(by_count):
            vals = np.asarray(by_count[count])
            out.append(
                {
                    "strategy": self.config.strategy,
                    "labeled_count": count,
                    "mean_f1": float(vals.mean()),
                    "std_f1": float(vals.std()),
                    "repetitions": int(vals.size),
                }
            )
        return out

    def mean_f1_at(self, labeled_count: int) -> float:
        for row in self.aggregate():
            if row["labeled_count"] == labeled_count:
                return row["mean_f1"]
        raise KeyError(f"no aggregate row at labeled count {labeled_count}")


def preset_counts(preset: str, n: int, num_classes: int | None = None) -> tuple[int, ...]:
    """Per-class counts for n samples under a named imbalance preset.

    Largest-remainder apportionment, so the counts always sum to n.
    """
    if preset == "balanced":
        if not num_classes or num_classes < 2:
            raise ValueError("balanced preset needs num_classes >= 2")
        proportions = (1.0 / num_classes,) * num_classes
    else:
        try:
            proportions = PRESET_PROPORTIONS[preset]
        except KeyError:
            raise ValueError(
                f"unknown preset {preset!r}; expected one of "
                f"{sorted(PRESET_PROPORTIONS) + ['balanced']}"
            ) from None
    raw = [p * n for p in proportions]
    counts = [int(math.floor(r)) for r in raw]
    remainders = [(r - c, i) for i, (r, c) in enumerate(zip(raw, counts))]
    for _, i in sorted(remainders, key=lambda t: (-t[0], t[1]))[: n - sum(counts)]:
        counts[i] += 1
    return tuple(counts)


def generate_synthetic(
    class_counts,
    dim: int,
    spread: float,
    seed: int,
    min_center_distance: float | None = None,
) -> tuple[FeatureMatrix, np.ndarray]:
    """Gaussian blobs with well-separated random centers; one blob per class.

    Centers are redrawn until all pairwise distances reach
    ``min_center_distance`` (default 6x the spread); placement failing 1000
    attempts is rejected.
    """
    class_counts = tuple(int(c) for c in class_counts)
    K = len(class_counts)
    if K < 2:
        raise ValueError("need at least two classes")
    if any(c < 1 for c in class_counts):
        raise ValueError("every class count must be >= 1")
    if spread <= 0:
        raise ValueError("spread must be positive")
    min_dist = 6.0 * spread if min_center_distance is None else float(min_center_distance)

    rng = np.random.default_rng(seed)
    # scale so typical center separations sit just above the required
    # minimum instead of growing with sqrt(dim); the minimum stays a hard
    # constraint enforced by redrawing
    scale = 1.1 * min_dist / np.sqrt(2.0 * dim)
    centers = None
    for _ in range(1000):
        candidate = rng.normal(0.0, scale, size=(K, dim))
        diffs = candidate[:, None, :] - candidate[None, :, :]
        dists = np.sqrt((diffs * diffs).sum(axis=2))
        if dists[~np.eye(K, dtype=bool)].min() >= min_dist:
            centers = candidate
            break
    if centers is None:
        raise ValueError("failed to place blob centers after 1000 attempts")

    rows = []
    labels = []
    for k, count in enumerate(class_counts):
        rows.append(centers[k] + rng.normal(0.0, spread, size=(count, dim)))
        labels.extend([k] * count)
    data = np.vstack(rows)
    return FeatureMatrix(data, tuple(range(data.shape[0]))), np.asarray(labels, dtype=np.int64)


def split_stratified(labels: np.ndarray, test_fraction: float, seed: int):
    """Per-class random train/test split; returns (train_ids, test_ids)."""
    labels = np.asarray(labels)
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for k in np.unique(labels):
        members = np.flatnonzero(labels == k)
        perm = rng.permutation(members)
        n_test = int(round(len(members) * test_fraction))
        test.extend(perm[:n_test].tolist())
        train.extend(perm[n_test:].tolist())
    return tuple(sorted(train)), tuple(sorted(test))


def init_balanced(
    labels: np.ndarray,
    train_ids,
    test_ids,
    initial_size: int,
    num_classes: int,
    seed: int,
) -> PoolState:
    """Seed the labeled set with exactly initial_size/K samples per class."""
    labels = np.asarray(labels)
    if initial_size % num_classes != 0:
        raise ValueError(f"initial_size {initial_size} not divisible by {num_classes} classes")
    per_class = initial_size // num_classes
    train_ids = tuple(train_ids)
    rng = np.random.default_rng(seed)
    labeled = []
    for k in range(num_classes):
        members = [s for s in train_ids if labels[s] == k]
        if len(members) < per_class:
            raise ValueError(
                f"class {k} has only {len(members)} training samples, need {per_class}"
            )
        picked = rng.choice(len(members), size=per_class, replace=False, shuffle=False)
        labeled.extend(members[i] for i in picked)
    labeled = tuple(labeled)
    pool = tuple(s for s in train_ids if s not in set(labeled))
    return PoolState(labeled_ids=labeled, pool_ids=pool, test_ids=tuple(test_ids), cycle=0)


def f1_scores(predictions, truth, num_classes: int) -> np.ndarray:
    """Per-class F1; a class absent from both sides scores 0 with a warning."""
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape or predictions.ndim != 1:
        raise ValueError("predictions and truth must be 1-d and of equal length")
    if predictions.shape[0] == 0:
        raise ValueError("cannot score an empty prediction set")
    scores = np.zeros(num_classes)
    for k in range(num_classes):
        tp = int(((predictions == k) & (truth == k)).sum())
        fp = int(((predictions == k) & (truth != k)).sum())
        fn = int(((predictions != k) & (truth == k)).sum())
        if tp + fp + fn == 0:
            warnings.warn(f"class {k} absent from both truth and predictions; F1 set to 0")
            continue
        scores[k] = 2.0 * tp / (2.0 * tp + fp + fn)
    return scores


def macro_f1(predictions, truth, num_classes: int) -> float:
    """Unweighted mean of the per-class F1 scores."""
    return float(f1_scores(predictions, truth, num_classes).mean())


def micro_f1(predictions, truth, num_classes: int) -> float:
    """Global-count F1 (equals accuracy for single-label classification)."""
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape[0] == 0:
        raise ValueError("cannot score an empty prediction set")
    return float((predictions == truth).mean())


def _train_config(config: ALConfig, seed: int) -> TrainConfig:
    return TrainConfig(
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        batch_size=config.batch_size,
        hidden=config.hidden,
        dropout_rate=config.dropout_rate,
        seed=seed,
    )


def _evaluate(features: FeatureMatrix, labels, state: PoolState, config: ALConfig, repetition: int):
    """Reset-and-retrain on the labeled set, then score the test split."""
    train_seed = derive_seed(config.master_seed, repetition, state.cycle, "train")
    y_labeled = [int(labels[s]) for s in state.labeled_ids]
    params = train(
        features.restrict(state.labeled_ids),
        y_labeled,
        config.k,
        _train_config(config, train_seed),
    )
    X_test = features.restrict(state.test_ids)
    probs = predict_proba(params, X_test)
    predicted = probs.argmax(axis=1)
    y_test = np.asarray([int(labels[s]) for s in state.test_ids])
    per_class = f1_scores(predicted, y_test, config.k)
    if config.f1_average == "micro":
        score = micro_f1(predicted, y_test, config.k)
    else:
        score = float(per_class.mean())
    return params, score, tuple(float(v) for v in per_class)


def _score_pool(
    features: FeatureMatrix,
    state: PoolState,
    config: ALConfig,
    repetition: int,
    params,
    distances: DistanceMatrix | None,
    train_positions: dict | None,
    assignment=None,
) -> acquisition.AcquisitionScore:
    pool = state.pool_ids
    X_pool = features.restrict(pool)
    D_pool = None
    if distances is not None and train_positions is not None:
        D_pool = distances.submatrix([train_positions[s] for s in pool])
    strategy = config.strategy
    if strategy == "random":
        return acquisition.score_random(pool)
    if strategy == "minmargin":
        return acquisition.score_min_margin(predict_proba(params, X_pool), pool)
    if strategy == "varratio":
        dropout_seed = derive_seed(config.master_seed, repetition, state.cycle, "dropout")
        mc = mc_predict(params, X_pool, config.mc_passes, seed=dropout_seed)
        return acquisition.score_var_ratio(mc, pool)

    if assignment is None:
        strategy_seed = derive_seed(config.master_seed, repetition, state.cycle, "strategy")
        assignment = spectral_cluster(X_pool, config.k, strategy_seed, distances=D_pool)
    nds = acquisition.score_nds(X_pool, assignment, config.draw_size, distances=D_pool)
    if strategy == "nds":
        return nds
    margin = acquisition.score_min_margin(predict_proba(params, X_pool), pool)
    mix = acquisition.MixingState.for_cycle(
        state.cycle, decay_per_cycle=config.alpha_decay, mode=config.alpha_mode
    )
    return acquisition.score_nds_plus(nds, margin, mix)


def run_cycle(
    features: FeatureMatrix,
    labels,
    state: PoolState,
    config: ALConfig,
    repetition: int = 0,
    distances: DistanceMatrix | None = None,
    train_positions: dict | None = None,
    assignment=None,
) -> tuple[PoolState, CycleRecord]:
    """One select -> label -> reset -> retrain -> evaluate step.

    Requires an unexhausted budget and a non-empty pool; the drawn count is
    min(draw_size, budget - labeled, pool size). ``distances`` may carry the
    train-split pairwise distances with ``train_positions`` mapping sample id
    to row, sparing the per-cycle recomputation; ``assignment`` overrides the
    per-cycle reclustering (the frozen-clusters ablation).
    """
    if len(state.labeled_ids) >= config.budget:
        raise ValueError("labeled budget already exhausted")
    if not state.pool_ids:
        raise ValueError("pool is empty")
    start = time.perf_counter()
    labels = np.asarray(labels)

    params, score_value, per_class = _evaluate(features, labels, state, config, repetition)
    scores = _score_pool(
        features, state, config, repetition, params, distances, train_positions, assignment
    )

    m = min(config.draw_size, config.budget - len(state.labeled_ids), len(state.pool_ids))
    draw_seed = derive_seed(config.master_seed, repetition, state.cycle, "draw")
    selected = acquisition.draw(scores, m, draw_seed)
    record = CycleRecord(
        strategy=config.strategy,
        repetition=repetition,
        cycle=state.cycle,
        labeled_count=len(state.labeled_ids),
        macro_f1=score_value,
        per_class_f1=per_class,
        alpha=scores.metadata.get("alpha"),
        cutoff_multipliers=scores.metadata.get("cutoff_multipliers"),
        elapsed_ms=(time.perf_counter() - start) * 1000.0,
    )
    return state.advance(selected), record


def run_repetition(
    features: FeatureMatrix,
    labels,
    config: ALConfig,
    repetition: int,
) -> RunRecord:
    """Full cycle loop for one repetition, ending with a terminal evaluation."""
    labels = np.asarray(labels)
    split_seed = derive_seed(config.master_seed, repetition, 0, "split")
    train_ids, test_ids = split_stratified(labels, 0.2, split_seed)
    init_seed = derive_seed(config.master_seed, repetition, 0, "init")
    state = init_balanced(labels, train_ids, test_ids, config.initial_size, config.k, init_seed)

    distances = None
    train_positions = None
    frozen = None
    if config.strategy in ("nds", "ndsplus"):
        distances = pairwise_distances(features.restrict(train_ids))
        train_positions = {s: i for i, s in enumerate(train_ids)}
        if not config.recluster_each_cycle:
            seed0 = derive_seed(config.master_seed, repetition, 0, "strategy")
            D0 = distances.submatrix([train_positions[s] for s in state.pool_ids])
            frozen = spectral_cluster(
                features.restrict(state.pool_ids), config.k, seed0, distances=D0
            )

    run = RunRecord(repetition=repetition)
    while len(state.labeled_ids) < config.budget and state.pool_ids:
        assignment = (
            None if frozen is None else restrict_assignment(frozen, state.pool_ids)
        )
        state, record = run_cycle(
            features, labels, state, config, repetition, distances, train_positions, assignment
        )
        run.rows.append(record)

    start = time.perf_counter()
    _, score_value, per_class = _evaluate(features, labels, state, config, repetition)
    run.rows.append(
        CycleRecord(
            strategy=config.strategy,
            repetition=repetition,
            cycle=state.cycle,
            labeled_count=len(state.labeled_ids),
            macro_f1=score_value,
            per_class_f1=per_class,
            elapsed_ms=(time.perf_counter() - start) * 1000.0,
        )
    )
    return run


def run_experiment(
    config: ALConfig,
    data: tuple[FeatureMatrix, np.ndarray] | None = None,
    preset: str = "twitter-abusive",
    n_samples: int = 2000,
    dim: int = 32,
    spread: float = 1.0,
    min_center_distance: float | None = None,
) -> ExperimentResult:
    """All repetitions of one strategy; aggregates mean F1 per labeled count.

    With no explicit ``data``, every repetition generates its own synthetic
    dataset from a seed derived from (master seed, repetition) only, so two
    strategies under the same master seed see identical data.
    ``min_center_distance`` overrides the generator's 6x-spread separation to
    control class overlap.
    """
    runs = []
    for repetition in range(config.repetitions):
        try:
            if data is None:
                data_seed = derive_seed(config.master_seed, repetition, 0, "data")
                counts = preset_counts(preset, n_samples, config.k)
                features, labels = generate_synthetic(
                    counts, dim, spread, data_seed, min_center_distance=min_center_distance
                )
            else:
                features, labels = data
            runs.append(run_repetition(features, labels, config, repetition))
        except (ValueError, RuntimeError) as err:
            raise ExperimentFailure(
                f"repetition {repetition} failed: {err}",
                ExperimentResult(config=config, runs=runs),
                repetition,
            ) from err
    return ExperimentResult(config=config, runs=runs)


def select_once(
    features: FeatureMatrix,
    known_labels: dict,
    pool_ids,
    strategy: str,
    k: int,
    m: int,
    seed: int,
    train_config: TrainConfig | None = None,
    mc_passes: int = 10,
    alpha: float = 1.0,
    params=None,
) -> tuple:
    """One-shot selection of m pool ids; the engine shared by CLI and service.

    ``known_labels`` maps already-labeled ids to classes; model-based
    strategies train a fresh classifier on them unless pre-trained ``params``
    are supplied. All internal randomness (clustering, dropout, drawing) is
    derived from ``seed``.
    """
    pool_ids = tuple(pool_ids)
    if not pool_ids:
        raise ValueError("pool is empty")
    if strategy not in acquisition.STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {acquisition.STRATEGIES}")

    def sub_seed(slot: int) -> int:
        return int(np.random.SeedSequence(entropy=seed, spawn_key=(slot,)).generate_state(1)[0])

    if params is None and strategy in ("minmargin", "varratio", "ndsplus"):
        labeled_ids = tuple(known_labels)
        if not labeled_ids:
            raise ValueError(f"strategy {strategy!r} requires labeled samples to train on")
        cfg = train_config or TrainConfig()
        params = train(
            features.restrict(labeled_ids),
            [known_labels[s] for s in labeled_ids],
            k,
            cfg.with_seed(sub_seed(0)),
        )

    X_pool = features.restrict(pool_ids)
    if strategy == "random":
        scores = acquisition.score_random(pool_ids)
    elif strategy == "minmargin":
        scores = acquisition.score_min_margin(predict_proba(params, X_pool), pool_ids)
    elif strategy == "varratio":
        mc = mc_predict(params, X_pool, mc_passes, seed=sub_seed(1))
        scores = acquisition.score_var_ratio(mc, pool_ids)
    else:
        assignment = spectral_cluster(X_pool, k, sub_seed(2))
        scores = acquisition.score_nds(X_pool, assignment, max(m, k))
        if strategy == "ndsplus":
            margin = acquisition.score_min_margin(predict_proba(params, X_pool), pool_ids)
            scores = acquisition.score_nds_plus(scores, margin, acquisition.MixingState(alpha))
    return acquisition.draw(scores, m, sub_seed(3))


def records_json_rows(results) -> list[dict]:
    """Deterministic per-cycle record objects, sorted for stable emission."""
    rows = []
    for result in results:
        for run in result.runs:
            for row in run.rows:
                rows.append(
                    {
                        "strategy": row.strategy,
                        "repetition": row.repetition,
                        "cycle": row.cycle,
                        "labeled_count": row.labeled_count,
                        "macro_f1": row.macro_f1,
                        "per_class_f1": list(row.per_class_f1),
                        "alpha": row.alpha,
                        "cutoff_multipliers": (
                            None
                            if row.cutoff_multipliers is None
                            else {str(k): v for k, v in sorted(row.cutoff_multipliers.items())}
                        ),
                    }
                )
    rows.sort(key=lambda r: (r["strategy"], r["repetition"], r["cycle"]))
    return rows


def write_records(path, results) -> None:
    """Line-delimited records, one object per cycle per repetition.

    Wall times go to the ``.timings.jsonl`` sidecar next to ``path`` so the
    record file itself is byte-identical across reruns of the same seed.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for row in records_json_rows(results):
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    timing_rows = []
    for result in results:
        for run in result.runs:
            for row in run.rows:
                timing_rows.append(
                    {
                        "strategy": row.strategy,
                        "repetition": row.repetition,
                        "cycle": row.cycle,
                        "elapsed_ms": round(row.elapsed_ms, 3),
                    }
                )
    timing_rows.sort(key=lambda r: (r["strategy"], r["repetition"], r["cycle"]))
    sidecar = str(path) + ".timings.jsonl"
    with open(sidecar, "w", encoding="utf-8") as fh:
        for row in timing_rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def write_summary(path, results) -> None:
    """Aggregate table: strategy, labeled count, mean/std F1, repetitions."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("strategy\tlabeled_count\tmean_f1\tstd_f1\trepetitions\n")
        for result in results:
            for row in result.aggregate():
                fh.write(
                    f"{row['strategy']}\t{row['labeled_count']}\t"
                    f"{row['mean_f1']:.6f}\t{row['std_f1']:.6f}\t{row['repetitions']}\n"
                )


def write_plot_data(path, results) -> None:
    """Labeled count vs mean F1, one column per strategy."""
    strategies = [r.config.strategy for r in results]
    counts = sorted({row["labeled_count"] for r in results for row in r.aggregate()})
    columns = {r.config.strategy: {a["labeled_count"]: a["mean_f1"] for a in r.aggregate()} for r in results}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("labeled_count\t" + "\t".join(strategies) + "\n")
        for count in counts:
            cells = [
                f"{columns[s][count]:.6f}" if count in columns[s] else "" for s in strategies
            ]
            fh.write(f"{count}\t" + "\t".join(cells) + "\n")
