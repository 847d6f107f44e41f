"""
Configuration settings for the Tessellated Linear Model
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigError

PARTITION_RULES = ("label", "classifier")


@dataclass
class FitConfig:
    """Settings shared by the per-node regressor and classifier fits"""
    ridge_lambda: float = 1e-3
    logit_l2: float = 1e-4
    max_iters: int = 500
    tol: float = 1e-6
    step: float = 1.0

    def __post_init__(self):
        if self.ridge_lambda < 0 or self.logit_l2 < 0:
            raise ConfigError("ridge_lambda and logit_l2 must be >= 0")
        if self.max_iters < 0:
            raise ConfigError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.tol <= 0 or self.step <= 0:
            raise ConfigError("tol and step must be > 0")


@dataclass
class MixupConfig:
    """Age-similarity mixup settings"""
    enabled: bool = False
    similarity_window: float = 2.0
    alpha: float = 0.4
    multiplier: float = 1.0

    def __post_init__(self):
        if self.similarity_window <= 0:
            raise ConfigError(f"similarity_window must be > 0, got {self.similarity_window}")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if self.multiplier < 0:
            raise ConfigError(f"multiplier must be >= 0, got {self.multiplier}")


@dataclass
class TreeConfig:
    """Tree construction settings"""
    max_depth: int = 4
    min_leaf: int = 20
    n_thresholds: int = 15
    purity_eps: float = 1e-9
    partition_by: str = "label"
    seed: int = 0
    n_jobs: int = 1
    fit: FitConfig = field(default_factory=FitConfig)
    mixup: MixupConfig = field(default_factory=MixupConfig)

    def __post_init__(self):
        if self.max_depth < 0:
            raise ConfigError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.min_leaf < 1:
            raise ConfigError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.n_thresholds < 1:
            raise ConfigError(f"n_thresholds must be >= 1, got {self.n_thresholds}")
        if self.purity_eps < 0:
            raise ConfigError("purity_eps must be >= 0")
        if self.partition_by not in PARTITION_RULES:
            raise ConfigError(f"partition_by must be one of {PARTITION_RULES}, got {self.partition_by!r}")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")


@dataclass
class TrainConfig:
    """Gradient-descent settings for the feature network and the MLP baseline"""
    learning_rate: float = 1e-3
    epochs: int = 50
    batch_size: int = 64
    seed: int = 0
    dropout_enabled: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


class AppConfig:
    """Main application configuration"""

    # Model file
    format_version: int = 1

    # Export Configuration
    csv_delimiter: str = ","
    json_indent: int = 2

    # Logging Configuration
    log_level: str = os.getenv("TLM_LOG_LEVEL", "INFO").upper()
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class RunConfig(BaseModel):
    """Validated settings for one CLI run; field names mirror the flags"""

    model_config = ConfigDict(extra="forbid")

    # files
    data: Optional[str] = None
    test_data: Optional[str] = None
    target_column: str = "y"
    out: Optional[str] = None
    report: Optional[str] = None
    loss_curve: Optional[str] = None

    # tree
    max_depth: int = Field(4, ge=0)
    min_leaf: int = Field(20, ge=1)
    n_thresholds: int = Field(15, ge=1)
    purity_eps: float = Field(1e-9, ge=0)
    partition_by: Literal["label", "classifier"] = "label"
    n_jobs: int = Field(1, ge=1)

    # linear fits
    ridge_lambda: float = Field(1e-3, ge=0)
    logit_l2: float = Field(1e-4, ge=0)
    max_iters: int = Field(500, ge=0)
    tol: float = Field(1e-6, gt=0)
    step: float = Field(1.0, gt=0)

    # mixup
    mixup: bool = False
    similarity_window: float = Field(2.0, gt=0)
    mixup_alpha: float = Field(0.4, gt=0)
    mixup_multiplier: float = Field(1.0, ge=0)

    # feature optimisation
    feature_opt: bool = False
    iterate: bool = False
    learning_rate: float = Field(1e-3, gt=0)
    epochs: int = Field(50, ge=0)
    batch_size: int = Field(64, ge=1)
    dropout_enabled: bool = True

    # inference and baselines
    routing: Literal["hard", "soft", "oracle"] = "hard"
    soft_strategy: Literal["path", "full", "leaves"] = "path"
    kmeans_k: int = Field(10, ge=1)
    mlp_hidden: List[int] = Field(default_factory=lambda: [128, 128])
    train_fraction: float = Field(0.8, gt=0, lt=1)

    seed: int = 0

    def fit_config(self) -> FitConfig:
        return FitConfig(
            ridge_lambda=self.ridge_lambda,
            logit_l2=self.logit_l2,
            max_iters=self.max_iters,
            tol=self.tol,
            step=self.step,
        )

    def tree_config(self) -> TreeConfig:
        return TreeConfig(
            max_depth=self.max_depth,
            min_leaf=self.min_leaf,
            n_thresholds=self.n_thresholds,
            purity_eps=self.purity_eps,
            partition_by=self.partition_by,
            seed=self.seed,
            n_jobs=self.n_jobs,
            fit=self.fit_config(),
            mixup=MixupConfig(
                enabled=self.mixup,
                similarity_window=self.similarity_window,
                alpha=self.mixup_alpha,
                multiplier=self.mixup_multiplier,
            ),
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            dropout_enabled=self.dropout_enabled,
        )

    @property
    def mlp_layers(self) -> Tuple[int, ...]:
        return tuple(self.mlp_hidden)

    @classmethod
    def resolve(cls, config_path: Optional[str], overrides: Dict[str, Any]) -> "RunConfig":
        """
        Merge a JSON config file with flag overrides and validate

        Args:
            config_path: Path to a JSON document of RunConfig fields (optional)
            overrides: Flag values; None means "not given on the command line"

        Returns:
            RunConfig: validated settings (flag > file > default)
        """
        values: Dict[str, Any] = {}
        if config_path:
            path = Path(config_path)
            if not path.exists():
                raise ConfigError(f"Config file not found: {path}")
            try:
                values = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as e:
                raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
            if not isinstance(values, dict):
                raise ConfigError(f"Config file {path} must hold a JSON object")

        values.update({key: value for key, value in overrides.items() if value is not None})

        try:
            return cls.model_validate(values)
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration: {e}") from e
