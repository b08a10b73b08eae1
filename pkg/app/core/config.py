from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, Optional, Union

from pydantic import ValidationError
from pydantic_settings import BaseSettings

from app.core.errors import ConfigurationError
from app.schemas.config import TrainConfig


class Settings(BaseSettings):
    # Application
    APP_NAME: str = "RelGraph AU"
    APP_VERSION: str = "1.0.0"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = False

    # Runs
    RUNS_DIR: str = "runs"
    DEFAULT_SEED: int = 0

    # Gradient check
    GRADCHECK_TOLERANCE: float = 1e-4
    GRADCHECK_STEP: float = 1e-6

    # Evaluation
    EVAL_THRESHOLD: float = 0.5

    class Config:
        env_file = ".env"
        env_prefix = "RELGRAPH_"
        case_sensitive = True


@lru_cache()
def get_settings() -> Settings:
    return Settings()


settings = get_settings()


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """
    Read a flat `key = value` file; `#` starts a comment, blank lines are ignored.

    Raises:
        ConfigurationError: If the file is missing or a line has no `=`
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")

    values: Dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def parse_overrides(items: Iterable[str]) -> Dict[str, str]:
    overrides: Dict[str, str] = {}
    for item in items:
        if "=" not in item:
            raise ConfigurationError(f"override must look like key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def build_train_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, str]] = None,
) -> TrainConfig:
    """
    Layer defaults < config file < overrides into a validated TrainConfig.

    Raises:
        ConfigurationError: On unknown keys or invalid values
    """
    values: Dict[str, str] = {"seed": str(settings.DEFAULT_SEED)}
    if path is not None:
        values.update(read_config_file(path))
    values.update(overrides or {})
    try:
        return TrainConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigurationError(f"invalid configuration: {e}") from e
