"""Radiomic feature ranking, equal-weight rank fusion and classifier sweeps."""

from .dataset import (BENIGN, MALIGNANT, DatasetSplit, FeatureMatrix, NormalizationRecord,
                      load_csv, stratified_split, write_csv, zscore_normalize)
from .errors import (ConfigError, ConvergenceError, DatasetError, EigenSolverError,
                     EmptySelectionError, PipelineError, RadiofsError, SvmConvergenceError)
from .experiment import ExperimentConfig, SweepReport, emit_report, run_sweep
from .fusion import RankingList, average_ranks, scores_to_ranks, top_k
from .metrics import ConfusionMatrix, Metrics, confusion, evaluate
from .scores import FeatureScores

__version__ = "0.1.0"
