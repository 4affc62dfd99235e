"""Missing-value imputation with individual, per-tuple regression models."""

from .dataset import Relation, load_relation, read_relation, write_relation
from .estimator import IIMImputer
from .baselines import GLRImputer, KNNMeanImputer, LoessImputer, MeanImputer
from .exceptions import (
    DataError,
    IIMError,
    NoCompleteTuplesError,
    NumericError,
    ParseError,
    PlanError,
)
from .impute import combine, impute_relation
from .learner import learn_adaptive, learn_fixed, load_models, save_models

__version__ = "0.1.0"

__all__ = [
    "Relation", "load_relation", "read_relation", "write_relation",
    "IIMImputer", "MeanImputer", "KNNMeanImputer", "GLRImputer", "LoessImputer",
    "IIMError", "DataError", "ParseError", "NoCompleteTuplesError", "NumericError", "PlanError",
    "combine", "impute_relation", "learn_fixed", "learn_adaptive", "save_models", "load_models",
]
