"""Mask-then-infill adversarial example generation for text classifiers."""
from .engine import AttackConfig, AttackResult, ModelSuite, attack, attack_dataset, build_action_pool
from .evaluate import aggregate, modification_count, modification_rate
from .perturb import Action, build_candidate_set, select_fill
from .textcore import Dataset, LabeledExample, TokenizedText, detokenize, load_dataset, tokenize

__all__ = [
    "Action", "AttackConfig", "AttackResult", "Dataset", "LabeledExample", "ModelSuite",
    "TokenizedText", "aggregate", "attack", "attack_dataset", "build_action_pool",
    "build_candidate_set", "detokenize", "load_dataset", "modification_count",
    "modification_rate", "select_fill", "tokenize",
]
