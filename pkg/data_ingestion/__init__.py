"""Data ingestion module."""
from .dataset_io import build_generator, generate_dataset, load_dataset_csv, load_spec_json, save_dataset_csv, write_report

__all__ = [
    "build_generator",
    "generate_dataset",
    "load_dataset_csv",
    "load_spec_json",
    "save_dataset_csv",
    "write_report",
]
