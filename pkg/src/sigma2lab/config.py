"""Suite configuration loading and defaults."""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .exceptions import ConfigurationNotFoundError, InvalidConfigurationError
from .models import DEFAULT_SUITE_MODELS
from .schema import validate_config_file
from .suite import SuiteSettings

DEFAULT_CONFIG_NAME = "sigma2lab.yaml"


@dataclass
class LabConfig:
    """Settings of an identity suite run."""

    seed: int = 42
    workers: int = 1
    chunk_size: int = 512
    points: int | None = None
    functions: int = 5
    pairs: int = 10
    models: list[str] = field(default_factory=lambda: list(DEFAULT_SUITE_MODELS))
    identities: list[str] | None = None
    tolerances: dict[str, float] = field(default_factory=dict)
    resolutions: dict[str, list[int]] = field(default_factory=dict)
    params: dict[str, dict[str, float]] = field(default_factory=dict)
    timings: bool = False

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LabConfig":
        """Create LabConfig from dictionary loaded from YAML."""
        defaults = cls()
        return cls(
            seed=data.get("seed", defaults.seed),
            workers=data.get("workers", defaults.workers),
            chunk_size=data.get("chunk_size", defaults.chunk_size),
            points=data.get("points"),
            functions=data.get("functions", defaults.functions),
            pairs=data.get("pairs", defaults.pairs),
            models=list(data.get("models", defaults.models)),
            identities=list(data["identities"]) if data.get("identities") else None,
            tolerances={key: float(value) for key, value in data.get("tolerances", {}).items()},
            resolutions={key: list(value) for key, value in data.get("resolutions", {}).items()},
            params={key: dict(value) for key, value in data.get("params", {}).items()},
            timings=data.get("timings", False),
        )

    def with_overrides(
        self,
        seed: int | None = None,
        workers: int | None = None,
        tolerances: dict[str, float] | None = None,
        resolutions: dict[str, list[int]] | None = None,
        timings: bool | None = None,
    ) -> "LabConfig":
        """Command-line values take precedence over the file."""
        return replace(
            self,
            seed=self.seed if seed is None else seed,
            workers=self.workers if workers is None else workers,
            tolerances={**self.tolerances, **(tolerances or {})},
            resolutions={**self.resolutions, **(resolutions or {})},
            timings=self.timings if timings is None else timings,
        )

    def to_settings(self) -> SuiteSettings:
        return SuiteSettings(
            seed=self.seed,
            points=self.points,
            functions=self.functions,
            pairs=self.pairs,
            chunk_size=self.chunk_size,
            workers=self.workers,
            tolerances=dict(self.tolerances),
            resolutions={key: tuple(value) for key, value in self.resolutions.items()},
            identities=tuple(self.identities) if self.identities else None,
        )


def get_config_path(config_path: str | None = None) -> Path:
    """Get the path to the configuration file (default: ``sigma2lab.yaml`` in the working directory)."""
    return Path(config_path) if config_path else Path.cwd() / DEFAULT_CONFIG_NAME


def load_config(config_path: str | None = None) -> LabConfig:
    """Load and validate a suite configuration file."""
    path = get_config_path(config_path)

    if not path.exists():
        raise ConfigurationNotFoundError(str(path))

    data = validate_config_file(str(path))
    try:
        return LabConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise InvalidConfigurationError(f"Invalid configuration values: {exc}", str(path)) from exc


def dump_config(config: LabConfig) -> str:
    """YAML text of a configuration, omitting unset optional keys."""
    data: dict[str, Any] = {
        "seed": config.seed,
        "workers": config.workers,
        "chunk_size": config.chunk_size,
        "functions": config.functions,
        "pairs": config.pairs,
        "models": config.models,
        "timings": config.timings,
    }
    if config.points is not None:
        data["points"] = config.points
    for key in ("identities", "tolerances", "resolutions", "params"):
        value = getattr(config, key)
        if value:
            data[key] = value
    return yaml.safe_dump(data, sort_keys=False)
