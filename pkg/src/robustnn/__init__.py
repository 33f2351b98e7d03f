"""Robust 1-nearest-neighbour classification under adversarial perturbation."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .attacks import (Attack, AttackKind, AttackNotApplicable, AttackSpec, augment_adversarial,
                      direct_attack, fgsm, prepare_attack, train_substitute)
from .bounds import TheoryBounds, beta_n, theory_bounds
from .classifiers import (BayesClassifier, KernelClassifier, KnnClassifier, bayes_predict, kernel_gradient,
                          kernel_predict, knn_predict)
from .datasets import HalfmoonSpec, gen_halfmoon, load_abalone, load_idx, read_csv, write_csv
from .distributions import AnalyticDistribution, constant_eta, linear_eta_1d, smooth_step_2d
from .experiment import ConfigError, ExperimentConfig, run_experiment, tune_defense_radius
from .geometry import LabeledDataset, NeighborIndex, build_index, euclidean_distance, k_nearest
from .metrics import (RobustnessCertificate, astuteness_estimate, bayes_astuteness, certify_1nn_radius,
                      empirical_robust_accuracy, in_strict_interior, probability_radius)
from .mlp import MlpClassifier, mlp_gradient, mlp_predict, mlp_train
from .robust1nn import (ConfidentLabel, RobustParams, compute_kn, confident_label, mark_red,
                        max_separated_subset, robust_1nn_prune, robust_1nn_train)
