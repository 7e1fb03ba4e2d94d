import logging
from pathlib import Path
from typing import Any, Literal, Optional, Union

from dotenv import dotenv_values
from pydantic import BaseModel, Field, PositiveFloat, PositiveInt, ValidationError, field_validator, model_validator

from batchscope.config import settings
from batchscope.core.exceptions import ConfigError
from batchscope.services.benchmarks import make_problem
from batchscope.utils.rng import MAX_SEED, check_seed

logger = logging.getLogger(__name__)

DEFAULT_ITERATIONS = 30
DEFAULT_CANDIDATES = 1000
LOW_DIM_CANDIDATES = 100


class RunConfig(BaseModel):
    problem: str = Field(..., description="Benchmark family name")
    dim: PositiveInt
    strategy: Literal["random", "ucb", "maximin", "pareto"] = "ucb"
    batch_size: PositiveInt = 4
    iterations: int = Field(DEFAULT_ITERATIONS, ge=0)
    candidates: Optional[PositiveInt] = Field(None, description="Defaults to 1000, or 100 when dim <= 2")
    init_size: Optional[PositiveInt] = Field(None, description="Defaults to 2 * (dim + 1)")
    seed: int = Field(0, ge=0, le=MAX_SEED)
    runs: PositiveInt = 1
    out: str = Field(default_factory=lambda: settings.output_dir)
    ucb_beta: PositiveFloat = 2.0
    tree_max_depth: PositiveInt = 4
    tree_min_leaf: PositiveInt = 5
    fi_method: Literal["permutation", "shapley"] = "permutation"
    exploration: Literal["surrogate", "distance"] = "surrogate"
    space_filling: bool = False

    workers: PositiveInt = Field(default_factory=lambda: settings.workers)
    shapley_samples: PositiveInt = Field(default_factory=lambda: settings.shapley_samples)
    shapley_background_cap: PositiveInt = Field(default_factory=lambda: settings.shapley_background_cap)
    permutation_repeats: PositiveInt = Field(default_factory=lambda: settings.permutation_repeats)
    fis_points: Optional[PositiveInt] = Field(default_factory=lambda: settings.fis_points,
                                              description="Cap on points explained by FIS; None explains all")
    dis_bandwidth: Union[Literal["median"], PositiveFloat] = Field(default_factory=lambda: settings.dis_bandwidth)
    des_leave_one_out: bool = Field(default_factory=lambda: settings.des_leave_one_out)

    model_config = {"extra": "forbid"}

    @field_validator("problem", mode="before")
    @classmethod
    def _lower_problem(cls, value):
        return value.strip().lower() if isinstance(value, str) else value

    @model_validator(mode="after")
    def _resolve(self):
        make_problem(self.problem, self.dim)
        if self.init_size is None:
            self.init_size = 2 * (self.dim + 1)
        if self.candidates is None:
            self.candidates = DEFAULT_CANDIDATES if self.dim > 2 else LOW_DIM_CANDIDATES
        check_seed(self.seed + self.runs - 1)
        if self.batch_size > self.candidates:
            raise ConfigError("BATCH_LARGER_THAN_CANDIDATES",
                              f"batch size {self.batch_size} exceeds candidate count {self.candidates}",
                              k=self.batch_size, m=self.candidates)
        return self

    @property
    def budget(self) -> int:
        """Expensive evaluations per run."""
        return self.init_size + self.iterations * self.batch_size

    def run_seeds(self) -> list[int]:
        return [self.seed + i for i in range(self.runs)]

    def run_id(self, seed: int) -> str:
        return f"{self.problem}-d{self.dim}-{self.strategy}-s{seed}"

    def metadata(self) -> dict[str, Any]:
        """Configuration echoed into every trace header."""
        return {
            "problem": self.problem,
            "dim": self.dim,
            "strategy": self.strategy,
            "batch_size": self.batch_size,
            "iterations": self.iterations,
            "candidates": self.candidates,
            "init_size": self.init_size,
            "space_filling": self.space_filling,
            "ucb_beta": self.ucb_beta,
            "surrogate": {"kind": "gp", "kernel": "squared_exponential", "length_scale": "median_heuristic",
                          "mean": "constant"},
            "reference_model": {"kind": "regression_tree", "max_depth": self.tree_max_depth,
                                "min_leaf": self.tree_min_leaf},
            "fi_method": self.fi_method,
            "exploration": self.exploration,
            "reference_point": "candidate_scores_plus_10pct_range",
            "shapley_samples": self.shapley_samples,
            "shapley_background_cap": self.shapley_background_cap,
            "permutation_repeats": self.permutation_repeats,
            "fis_points": self.fis_points,
            "dis_bandwidth": self.dis_bandwidth,
            "des_leave_one_out": self.des_leave_one_out,
        }


def normalize_key(key: str) -> str:
    return key.strip().lstrip("-").replace("-", "_").lower()


def read_config_file(path: Union[str, Path]) -> dict[str, str]:
    """
    Parse a key=value file. Keys are long flag names with either - or _.

    Raises:
        ConfigError: CONFIG_NOT_FOUND, CONFIG_VALUE_MISSING or UNKNOWN_CONFIG_KEY
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError("CONFIG_NOT_FOUND", f"config file {path} does not exist", path=str(path))
    raw = dotenv_values(path, interpolate=False)
    values = {}
    for key, value in raw.items():
        name = normalize_key(key)
        if name not in RunConfig.model_fields:
            raise ConfigError("UNKNOWN_CONFIG_KEY", f"{path}: unknown key {key!r}", key=key, path=str(path))
        if value is None:
            raise ConfigError("CONFIG_VALUE_MISSING", f"{path}: key {key!r} has no value", key=key, path=str(path))
        values[name] = value
    return values


def build_run_config(flags: dict[str, Any], config_path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Merge configuration layers: field defaults and BATCHSCOPE_ environment
    settings, then the config file, then explicitly given flags (None means
    not given).
    """
    values: dict[str, Any] = {}
    if config_path is not None:
        values.update(read_config_file(config_path))
    values.update({normalize_key(k): v for k, v in flags.items() if v is not None})
    try:
        config = RunConfig(**values)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or "config"
        raise ConfigError("INVALID_CONFIG", f"{key}: {first['msg']}", key=key) from exc
    logger.debug("run config resolved: %s", config.model_dump())
    return config
