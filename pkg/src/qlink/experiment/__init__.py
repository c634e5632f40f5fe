"""Config-driven experiment orchestration and result serialization."""
from .analysis import BELL_LABELS, BellComparison, best_bell_fidelity_lu, compare_bell_basis, in_bell_basis
from .config import SCHEMA, ExperimentConfig, describe_schema, load_config, validate
from .records import (
    PartialWriter, ResultRecord, decode_matrix, emit, encode_matrix, record_from_json, record_to_json,
    rows_to_csv,
)
from .runners import RECIPES, chain_seed, parallel_map, recipe_config, run_experiment

__all__ = [
    "BELL_LABELS", "BellComparison", "best_bell_fidelity_lu", "compare_bell_basis", "in_bell_basis",
    "SCHEMA", "ExperimentConfig", "describe_schema", "load_config", "validate",
    "PartialWriter", "ResultRecord", "decode_matrix", "emit", "encode_matrix", "record_from_json",
    "record_to_json", "rows_to_csv", "RECIPES", "chain_seed", "parallel_map", "recipe_config",
    "run_experiment",
]
