"""Certify that decision-tree predictions survive programmable training-data bias."""

from .abstract import AbstractDataset, CertificationResult, certify
from .bias import BiasComponent, BiasModel, normalize, parse_bias_dsl
from .concrete import infer, predict, train
from .dataset import Dataset, Feature, FeatureSchema, load_dataset
from .fuzz import falsify, perturb
from .interval import Interval
from .oracle import Universe, enumerate_bias_set, oracle_robust, pr_bounds_bruteforce
from .report import emit, stratified_rates

__all__ = [
    "AbstractDataset",
    "BiasComponent",
    "BiasModel",
    "CertificationResult",
    "Dataset",
    "Feature",
    "FeatureSchema",
    "Interval",
    "Universe",
    "certify",
    "emit",
    "enumerate_bias_set",
    "falsify",
    "infer",
    "load_dataset",
    "normalize",
    "oracle_robust",
    "parse_bias_dsl",
    "perturb",
    "pr_bounds_bruteforce",
    "predict",
    "stratified_rates",
    "train",
]
