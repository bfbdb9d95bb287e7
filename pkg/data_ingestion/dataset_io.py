"""
Dataset and report I/O: CSV datasets with columns y, x0..x{p-1}, JSON
generator specs and CSV report frames.
"""
import argparse
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Union

import pandas as pd
from pydantic import ValidationError

from verifiers.data_gen import CausalSpec, IndepSpec, gen_causal, gen_independent
from verifiers.errors import ConfigError, InputError
from verifiers.regression_core import Dataset

logger = logging.getLogger(__name__)


def load_dataset_csv(path: Union[str, Path], intercept: bool = False) -> Dataset:
    """
    Read a dataset written by ``save_dataset_csv``.

    Args:
        path: CSV with a ``y`` column and covariate columns x0, x1, ...
        intercept: column x0 is the all-ones intercept column

    Returns:
        Dataset
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        raise InputError(f"cannot read dataset {path}: {e}") from e
    if "y" not in frame.columns:
        raise InputError(f"dataset {path} has no y column")
    columns = [c for c in frame.columns if c != "y"]
    expected = [f"x{j}" for j in range(len(columns))]
    if columns != expected:
        raise InputError(f"dataset {path} covariate columns must be {expected[:3]}..., got {columns[:3]}...")
    return Dataset(frame[columns].to_numpy(dtype=float), frame["y"].to_numpy(dtype=float), intercept=intercept)


def save_dataset_csv(d: Dataset, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(d.x, columns=[f"x{j}" for j in range(d.p)])
    frame.insert(0, "y", d.y)
    frame.to_csv(path, index=False)
    return path


def build_generator(raw: Dict[str, Any]) -> Union[IndepSpec, CausalSpec]:
    """{"type": "independent" | "causal", ...spec fields} -> validated generator spec."""
    fields = dict(raw)
    kind = fields.pop("type", "independent")
    model = {"independent": IndepSpec, "causal": CausalSpec}.get(kind)
    if model is None:
        raise ConfigError(f"unknown generator type {kind!r}")
    try:
        return model(**fields)
    except ValidationError as e:
        raise ConfigError(f"invalid {kind} generator: {e}") from e


def load_spec_json(path: Union[str, Path]) -> Union[IndepSpec, CausalSpec]:
    """Generator spec from JSON; the ``type`` field selects independent or causal."""
    try:
        with open(path, "r") as f:
            raw: Dict[str, Any] = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read generator spec {path}: {e}") from e
    return build_generator(raw)


def write_report(frame: pd.DataFrame, out_dir: Union[str, Path], name: str) -> Path:
    """Write a report frame as ``out_dir/name``."""
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    path = out_dir / name
    frame.to_csv(path, index=False)
    logger.info(f"wrote {path} ({len(frame)} rows)")
    return path


def generate_dataset(spec_path: Union[str, Path], n: int, seed: int, out_path: Union[str, Path]) -> Dict[str, Any]:
    """Draw one dataset from a JSON generator spec and save it as CSV."""
    try:
        spec = load_spec_json(spec_path)
        if isinstance(spec, CausalSpec):
            d, _ = gen_causal(spec, n, seed, "dataset")
        else:
            d = gen_independent(spec, n, seed, "dataset")
        path = save_dataset_csv(d, out_path)
        return {"success": True, "path": str(path), "n": d.n, "p": d.p}
    except (ConfigError, InputError) as e:
        logger.error(f"Error generating dataset: {e}")
        return {"success": False, "error": str(e)}


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Draw a dataset from a generator spec")
    parser.add_argument("spec", help="JSON generator spec")
    parser.add_argument("--n", type=int, required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="data/dataset.csv")
    args = parser.parse_args()

    # Configure logging
    logging.basicConfig(level=os.getenv("UNIFORM_LOG_LEVEL", "INFO").upper())

    result = generate_dataset(args.spec, args.n, args.seed, args.out)
    if result["success"]:
        logger.info(f"Dataset written: {result['path']} (n={result['n']}, p={result['p']})")
    else:
        logger.error(f"Dataset generation failed: {result.get('error', 'Unknown error')}")
        raise SystemExit(1)
