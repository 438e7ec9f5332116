"""Semi-supervised pseudo-labeling for imbalanced text classification.

Self-training with stratified confidence sampling, ensemble majority voting,
human-in-the-loop label correction, and multi-class evaluation.
"""

from .backends import Backend, BackendSpec, BuiltinBackend, ExternalBackend, make_backend
from .classifier import ClassifierConfig, TrainedModel, inverse_class_frequency, train
from .corpus import (
    DEFAULT_SCHEMA,
    Dataset,
    LabeledPost,
    LabelSchema,
    Post,
    load_dataset,
    make_schema,
    merge_datasets,
    save_dataset,
    stratified_kfold,
)
from .ensemble import (
    ConsensusLabel,
    VoteMatrix,
    cohen_kappa,
    consensus_for,
    majority_vote,
    run_ensemble,
    unanimity_histogram,
)
from .errors import BackendError, DataError
from .evaluation import CVReport, ClassReport, confusion, cross_validate, report
from .featurizer import FeaturizerConfig, Vocabulary, fit_vocabulary, tokenize
from .review import ReviewStore, apply_corrections, assign, build_queue
from .selftrain import SelfTrainConfig, scs_select, self_train
from .synthetic import make_blob_fixture, oracle_annotate

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "BackendError",
    "BackendSpec",
    "BuiltinBackend",
    "CVReport",
    "ClassReport",
    "ClassifierConfig",
    "ConsensusLabel",
    "DEFAULT_SCHEMA",
    "DataError",
    "Dataset",
    "ExternalBackend",
    "FeaturizerConfig",
    "LabelSchema",
    "LabeledPost",
    "Post",
    "ReviewStore",
    "SelfTrainConfig",
    "TrainedModel",
    "Vocabulary",
    "VoteMatrix",
    "apply_corrections",
    "assign",
    "build_queue",
    "cohen_kappa",
    "confusion",
    "consensus_for",
    "cross_validate",
    "fit_vocabulary",
    "inverse_class_frequency",
    "load_dataset",
    "majority_vote",
    "make_backend",
    "make_blob_fixture",
    "make_schema",
    "merge_datasets",
    "oracle_annotate",
    "report",
    "run_ensemble",
    "save_dataset",
    "scs_select",
    "self_train",
    "stratified_kfold",
    "tokenize",
    "train",
    "__version__",
]
