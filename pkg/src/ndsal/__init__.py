"""Pool-based active learning via non-dominant sets of local clusters.

The selection pipeline clusters the unlabeled pool in embedding space,
solves a simplex-constrained cohesion program per cluster with replicator
dynamics, and queries the samples that participate least in their cluster:
the boundary-like, harder-to-classify ones. Uncertainty scores from a
stand-in dropout classifier can be blended in with a decaying weight.
"""

from .acquisition import (
    AcquisitionScore,
    MixingState,
    STRATEGIES,
    draw,
    score_min_margin,
    score_nds,
    score_nds_plus,
    score_random,
    score_var_ratio,
)
from .classifier import (
    ClassifierParams,
    TrainConfig,
    load_params,
    mc_predict,
    predict_proba,
    save_params,
    train,
)
from .dominantset import (
    ClusterGraph,
    DominantPartition,
    NondominantPool,
    ParticipationVector,
    nds_pools,
    partition,
    replicator_dynamics,
)
from .harness import (
    ALConfig,
    ExperimentResult,
    PoolState,
    generate_synthetic,
    init_balanced,
    macro_f1,
    preset_counts,
    run_cycle,
    run_experiment,
    run_repetition,
    select_once,
    split_stratified,
)
from .iostore import (
    FormatError,
    read_embeddings,
    read_labels,
    write_embeddings,
    write_labels,
)
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
from .spectral import ClusterAssignment, adjusted_rand_index, spectral_cluster

__version__ = "0.1.0"

__all__ = [
    "ALConfig",
    "AUTO",
    "AcquisitionScore",
    "AffinityMatrix",
    "ClassifierParams",
    "ClusterAssignment",
    "ClusterGraph",
    "DistanceMatrix",
    "DominantPartition",
    "ExperimentResult",
    "FeatureMatrix",
    "FormatError",
    "MixingState",
    "NondominantPool",
    "ParticipationVector",
    "PoolState",
    "STRATEGIES",
    "TrainConfig",
    "adjusted_rand_index",
    "draw",
    "generate_synthetic",
    "init_balanced",
    "kmeans",
    "load_params",
    "macro_f1",
    "mc_predict",
    "nds_pools",
    "pairwise_distances",
    "partition",
    "predict_proba",
    "preset_counts",
    "read_embeddings",
    "read_labels",
    "replicator_dynamics",
    "run_cycle",
    "run_experiment",
    "run_repetition",
    "save_params",
    "score_min_margin",
    "score_nds",
    "score_nds_plus",
    "score_random",
    "score_var_ratio",
    "select_once",
    "spectral_cluster",
    "split_stratified",
    "sym_eigen",
    "to_affinity",
    "train",
    "write_embeddings",
    "write_labels",
]
