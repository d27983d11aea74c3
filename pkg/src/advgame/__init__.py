"""Randomized attacks on classifier sets via zero-sum game solving.

Fix a data point and a noise budget. A set of classifiers and an adversary
choosing noise vectors play a zero-sum game whose mixed equilibrium yields
both the strongest randomized attack against the whole set and the most
attack-resistant way to randomize over its members. This package provides the
exact geometric best response for linear sets, a first-order surrogate for
networks, the multiplicative-weights solver tying them together, and the
deterministic baselines they are measured against.
"""

from .classifiers import (AllPairsClassifier, Classifier, ClassifierSet,
                          LinearClassifier, LogitAverageEnsemble, MLPClassifier,
                          MLPLayer, average_ensemble, convert_all_pairs,
                          convert_multivector)
from .losses import (LossKind, pointwise_loss, reverse_hinge,
                     untargeted_reverse_hinge, weighted_objective,
                     zero_one_loss)
from .geometry import (AttackBudget, EnumerationCapError, ExactOracle,
                       GeometryConfig, Region, enumerate_regions,
                       exact_best_response, linf_feasible_point, margin,
                       min_norm_to_region)
from .pgd import (PgdConfig, clip_to_pixel_box, iterations_for_accuracy,
                  pgd_best_response, project)
from .game import (GameTrace, MixedStrategy, MwuConfig, RandomizedAttack,
                   equilibrium_gap, mwu_attack, payoff)
from .bench import (AttackReport, GenerationError, SyntheticSpec,
                    best_individual_attack, brute_force_best_response,
                    ensemble_attack, evaluate_attack,
                    generate_orthogonal_mlp_pair, generate_synthetic_sparse_set,
                    margin_budget, oracle_attack, single_model_attack)
from .io import (ExperimentConfig, ModelFormatError, emit_report, load_attacks,
                 load_dataset, load_model, run_experiment, save_dataset,
                 save_model)

__all__ = [
    "AllPairsClassifier", "AttackBudget", "AttackReport", "Classifier",
    "ClassifierSet", "EnumerationCapError", "ExactOracle", "ExperimentConfig",
    "GameTrace", "GenerationError", "GeometryConfig", "LinearClassifier",
    "LogitAverageEnsemble", "LossKind", "MLPClassifier", "MLPLayer",
    "MixedStrategy", "ModelFormatError", "MwuConfig", "PgdConfig",
    "RandomizedAttack", "Region", "SyntheticSpec", "average_ensemble",
    "best_individual_attack", "brute_force_best_response", "clip_to_pixel_box",
    "convert_all_pairs", "convert_multivector", "emit_report",
    "ensemble_attack", "enumerate_regions", "equilibrium_gap",
    "evaluate_attack", "exact_best_response", "generate_orthogonal_mlp_pair",
    "generate_synthetic_sparse_set", "iterations_for_accuracy",
    "linf_feasible_point", "load_attacks", "load_dataset", "load_model",
    "margin", "margin_budget", "min_norm_to_region", "mwu_attack",
    "oracle_attack", "payoff", "pgd_best_response", "pointwise_loss",
    "project", "reverse_hinge", "run_experiment", "save_dataset", "save_model",
    "single_model_attack", "untargeted_reverse_hinge", "weighted_objective",
    "zero_one_loss",
]

__version__ = "0.1.0"
