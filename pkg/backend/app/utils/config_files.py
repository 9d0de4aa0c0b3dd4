# backend/app/utils/config_files.py
import json
from pathlib import Path
from typing import Type, TypeVar

from pydantic import BaseModel, ValidationError

from app.core.exceptions import ConfigError, NotFoundException

ConfigType = TypeVar("ConfigType", bound=BaseModel)


def load_config(path: Path, schema: Type[ConfigType]) -> ConfigType:
    """Parse one JSON config file into `schema`; parse and validation problems become ConfigError."""
    path = Path(path)
    if not path.is_file():
        raise NotFoundException(f"config file {path} not found")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    try:
        return schema.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{path} is not a valid {schema.__name__}: {exc}") from exc


def dump_config(path: Path, config: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(config.model_dump_json(indent=2), encoding="utf-8")
    return path
