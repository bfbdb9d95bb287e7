"""
Run configuration: environment settings, per-command JSON configs and the run manifest.
"""
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from verifiers import __version__
from verifiers.errors import ConfigError

logger = logging.getLogger(__name__)

# Load environment variables
load_dotenv()

DEFAULT_SEED = 20240101
DEFAULT_SLOPE_WINDOWS = {"sup_l2_err": (-0.6, -0.4), "sup_rep_err": (-1.15, -0.85)}


class Settings(BaseModel):
    """Environment defaults; CLI flags and JSON fields take precedence."""

    out_dir: str = "output"
    threads: int = Field(default_factory=lambda: os.cpu_count() or 1)
    log_level: str = "INFO"
    mc_draws: int = 1_000_000
    seed: int = DEFAULT_SEED

    @classmethod
    def from_env(cls) -> "Settings":
        values: Dict[str, Any] = {
            "out_dir": os.getenv("UNIFORM_OUT_DIR", "output"),
            "log_level": os.getenv("UNIFORM_LOG_LEVEL", "INFO").upper(),
            "mc_draws": os.getenv("UNIFORM_MC_DRAWS", "1000000"),
            "seed": os.getenv("UNIFORM_SEED", str(DEFAULT_SEED)),
        }
        threads = os.getenv("UNIFORM_THREADS")
        if threads:
            values["threads"] = threads
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(f"invalid environment settings: {e}") from e


class RunConfig(BaseModel):
    """Fields shared by every command config."""

    model_config = ConfigDict(extra="forbid")

    seed: Optional[int] = None
    out_dir: Optional[str] = None
    threads: Optional[int] = None


class CheckBoundsConfig(RunConfig):
    source: Literal["random", "identical", "sample", "csv"] = "random"
    p: int = 8
    k: int = 3
    reps: int = 1
    ratio: float = 0.45
    theorems: Optional[List[str]] = None
    generator: Optional[Dict[str, Any]] = None
    n: Optional[int] = None
    data_path: Optional[str] = None


class RatesConfig(RunConfig):
    """An empty ``slope_windows`` turns the slope acceptance off."""

    generator: Dict[str, Any]
    n_grid: List[int]
    k: int
    reps: int = 200
    draws: Optional[int] = None
    slope_windows: Dict[str, Tuple[float, float]] = Field(default_factory=lambda: dict(DEFAULT_SLOPE_WINDOWS))


class TailCheckConfig(RunConfig):
    experiment: Literal["max-mean", "sparse-iid", "max-sum", "sparse-dependent"]
    generator: Dict[str, Any]
    n_grid: List[int]
    k: int = 1
    reps: int = 2000
    t_grid: List[float] = Field(default_factory=lambda: [1.0, 2.0, 3.0])
    nu: float = 1.0
    jexp: bool = False
    diagnostics: bool = True
    profile_reps: int = 4000


class DepNormConfig(RunConfig):
    generator: Dict[str, Any]
    r_grid: List[float] = Field(default_factory=lambda: [2.0, 3.0, 4.0, 6.0, 8.0])
    nu_grid: List[float] = Field(default_factory=lambda: [0.5, 1.0])
    alpha_grid: List[float] = Field(default_factory=lambda: [1.0, 2.0])
    coords: Optional[List[int]] = None
    reps: int = 2000
    extra_lags: int = 2
    checks: bool = True
    k: int = 2
    product_pairs: List[Tuple[int, int]] = Field(default_factory=lambda: [(0, 1)])


class NetConfig(RunConfig):
    p: int
    k: int
    eps_grid: List[float] = Field(default_factory=lambda: [0.5, 0.25])
    samples: int = 10_000
    trials: int = 100
    save_points: bool = False


class MEstConfig(RunConfig):
    generator: Dict[str, Any]
    loss: Literal["squared", "logistic", "poisson"] = "logistic"
    c_plus: Literal["sharp", "loose"] = "sharp"
    n: int
    k: int
    draws: Optional[int] = None
    require_event: bool = True


class AppendixConfig(RunConfig):
    n_grid: List[int] = Field(default_factory=lambda: [2 ** e for e in range(6, 15)])
    beta_grid: List[float] = Field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0])
    power_grid: List[float] = Field(default_factory=lambda: [2.0, 3.0, 4.0])
    nu_grid: List[float] = Field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0])
    lambda_grid: List[float] = Field(default_factory=lambda: [0.5, 2.0 / 3.0, 1.0, 2.0, 4.0])


CONFIG_MODELS: Dict[str, Type[RunConfig]] = {
    "check-bounds": CheckBoundsConfig,
    "rates": RatesConfig,
    "tailcheck": TailCheckConfig,
    "depnorm": DepNormConfig,
    "net": NetConfig,
    "mest": MEstConfig,
    "appendix-verify": AppendixConfig,
}


def load_config(command: str, path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Read and validate the JSON config of a command.

    Args:
        command: CLI command name
        path: JSON file; None gives the command's defaults

    Returns:
        Validated config

    Raises:
        ConfigError: unreadable file, bad JSON or schema violation
    """
    model = CONFIG_MODELS.get(command)
    if model is None:
        raise ConfigError(f"unknown command {command!r}")
    raw: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "r") as f:
                raw = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
    try:
        return model(**raw)
    except ValidationError as e:
        raise ConfigError(f"invalid {command} config: {e}") from e


class RunManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: str
    config_path: Optional[str] = None
    seed: int
    version: str = __version__
    outputs: List[str] = Field(default_factory=list)
    wall_clock_seconds: float = 0.0
    passed: Optional[bool] = None

    def write(self, out_dir: Union[str, Path]) -> Path:
        """Write manifest.json atomically (temp file + rename)."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        target = out_dir / "manifest.json"
        fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".manifest-", suffix=".json")
        try:
            with os.fdopen(fd, "w") as f:
                f.write(self.model_dump_json(indent=2))
            os.replace(tmp, target)
        except OSError:
            if os.path.exists(tmp):
                os.remove(tmp)
            raise
        return target
