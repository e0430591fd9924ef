"""Diverse instance-weighting ensemble for drifting data streams."""

from .core import LabeledInstance, Stream, StreamSchema, euclidean_distance
from .diversity import (
    EnsembleSelection,
    RegionSetFamily,
    average_diversity,
    max_rdd_select,
    rdd,
)
from .ensemble import (
    ConfigError,
    DiweClassifier,
    DiweConfig,
    diwe_init,
    diwe_step,
    ibk_predict,
    load_checkpoint,
    save_checkpoint,
    soft_majority_vote,
)
from .evaluation import IngestionSpec, ingest_csv, prequential_run, sliding_window_knn
from .generators import GeneratorSpec, generate
from .regions import RegionSet, drift_horizon, min_training_size, zero_hit_probability

__all__ = [
    "ConfigError", "DiweClassifier", "DiweConfig", "EnsembleSelection", "GeneratorSpec",
    "IngestionSpec", "LabeledInstance", "RegionSet", "RegionSetFamily", "Stream",
    "StreamSchema", "average_diversity", "diwe_init", "diwe_step", "drift_horizon",
    "euclidean_distance", "generate", "ibk_predict", "ingest_csv", "load_checkpoint",
    "max_rdd_select", "min_training_size", "prequential_run", "rdd", "save_checkpoint",
    "sliding_window_knn", "soft_majority_vote", "zero_hit_probability",
]
