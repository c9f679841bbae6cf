"""Dual-teacher knowledge distillation for graphs that are missing both node
features and edges: a feature teacher with learned imputation, a structure
teacher over a PageRank-enhanced adjacency, and a student GNN trained under
classification plus dual distillation losses."""

from .autodiff import Parameter, Tape, Tensor, adam_step, backward, constant, zero_grads
from .config import DATA_ROOT_ENV, OUT_ROOT_ENV, ExperimentConfig, TrainConfig, derive_seed
from .distill import (DistillConfig, contrastive_mid_distill, dual_loss, l2_mid_distill,
                      logit_distill, student_loss)
from .errors import (ConfigError, DegenerateInputError, DimensionError, DuoteachError,
                     FormatError, ParseError, TapeError, TrainingDivergedError)
from .graphs import (IncompleteGraph, MaskSpec, Split, apply_masks, load_bundle,
                     load_edgelist, load_planetoid, make_splits, save_bundle)
from .models import (FeatureTeacher, GraphContext, ModelOutput, StructureTeacher,
                     gcn_layer, impute_features, make_student, positional_encoding)
from .ppr import PprConfig, build_enhanced_adjacency, enhance_adjacency, ppr_push, top_k_sparsify
from .sparsemat import SparseRowMatrix
from .trainer import (RunResult, evaluate, run_experiment, train_online, train_singleT,
                      train_student, train_teacher)

__version__ = "0.1.0"

__all__ = [
    "Parameter", "Tape", "Tensor", "adam_step", "backward", "constant", "zero_grads",
    "DATA_ROOT_ENV", "OUT_ROOT_ENV", "ExperimentConfig", "TrainConfig", "derive_seed",
    "DistillConfig", "contrastive_mid_distill", "dual_loss", "l2_mid_distill",
    "logit_distill", "student_loss",
    "ConfigError", "DegenerateInputError", "DimensionError", "DuoteachError",
    "FormatError", "ParseError", "TapeError", "TrainingDivergedError",
    "IncompleteGraph", "MaskSpec", "Split", "apply_masks", "load_bundle",
    "load_edgelist", "load_planetoid", "make_splits", "save_bundle",
    "FeatureTeacher", "GraphContext", "ModelOutput", "StructureTeacher",
    "gcn_layer", "impute_features", "make_student", "positional_encoding",
    "PprConfig", "build_enhanced_adjacency", "enhance_adjacency", "ppr_push",
    "top_k_sparsify",
    "SparseRowMatrix",
    "RunResult", "evaluate", "run_experiment", "train_online", "train_singleT",
    "train_student", "train_teacher",
    "__version__",
]
