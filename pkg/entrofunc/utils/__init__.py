"""
entrofunc utilities package.

Serialization of results, sample file I/O and experiment config loading.
"""

from .config_file import list_presets, load_experiment_config, parse_config
from .sample_io import read_sample, write_sample
from .serialization import safe_json_dumps, to_jsonable, write_csv, write_json

__all__ = [
    # Serialization utilities
    "to_jsonable",
    "safe_json_dumps",
    "write_csv",
    "write_json",
    # Sample files
    "read_sample",
    "write_sample",
    # Experiment configs
    "list_presets",
    "load_experiment_config",
    "parse_config",
]
