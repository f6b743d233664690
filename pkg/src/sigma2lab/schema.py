"""Configuration schema validation for sigma2-lab."""

import json
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import jsonschema
import yaml

from .exceptions import InvalidConfigurationError, ModelError, ValidationError
from .models import MODEL_NAMES, build_model
from .suite import IDENTITY_IDS


def get_schema() -> dict[str, Any]:
    """Load the JSON schema for configuration validation.

    The schema file at the project root wins; an unreadable or missing file falls
    back to the embedded copy.
    """
    schema_path = get_schema_path()

    if schema_path is not None:
        try:
            with open(schema_path, encoding="utf-8") as f:
                return json.load(f)
        except (json.JSONDecodeError, OSError):
            pass

    return get_embedded_schema()


def get_embedded_schema() -> dict[str, Any]:
    """Get an embedded JSON schema when external file is not available."""
    count = {"type": "integer", "minimum": 1}
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "sigma2-lab Configuration",
        "type": "object",
        "properties": {
            "seed": {"type": "integer", "minimum": 0},
            "workers": count,
            "chunk_size": {"type": "integer", "minimum": 16},
            "points": count,
            "functions": count,
            "pairs": count,
            "models": {
                "type": "array",
                "minItems": 1,
                "uniqueItems": True,
                "items": {"type": "string", "pattern": "^[a-z0-9_]+$"},
            },
            "identities": {
                "type": "array",
                "minItems": 1,
                "uniqueItems": True,
                "items": {"type": "string", "pattern": "^[a-z0-9-]+$"},
            },
            "tolerances": {
                "type": "object",
                "patternProperties": {"^[a-z0-9-]+$": {"type": "number", "exclusiveMinimum": 0}},
                "additionalProperties": False,
            },
            "resolutions": {
                "type": "object",
                "patternProperties": {
                    "^[a-z0-9_]+$": {
                        "type": "array",
                        "minItems": 1,
                        "items": {"type": "integer", "minimum": 8},
                    }
                },
                "additionalProperties": False,
            },
            "params": {
                "type": "object",
                "patternProperties": {
                    "^[a-z0-9_]+$": {
                        "type": "object",
                        "additionalProperties": {"type": "number"},
                    }
                },
                "additionalProperties": False,
            },
            "timings": {"type": "boolean", "default": False},
        },
        "additionalProperties": False,
    }


def find_line(text: str | None, path: Sequence[str | int]) -> int | None:
    """1-based line of the YAML node at ``path``, or of its deepest existing ancestor."""
    if not text:
        return None
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    if node is None:
        return None

    for key in path:
        child = None
        if isinstance(node, yaml.MappingNode):
            child = next((value for name, value in node.value if name.value == str(key)), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            child = node.value[key]
        if child is None:
            break
        node = child
    return node.start_mark.line + 1


def validate_config_data(data: dict[str, Any], source: str | None = None) -> dict[str, Any]:
    """Validate configuration data against the JSON schema and the model/identity catalogs.

    Args:
        data: The configuration data loaded from YAML
        source: The YAML text, used to attach line numbers to errors

    Returns:
        The validated configuration data (unchanged if valid)

    Raises:
        ValidationError: If the configuration is invalid
    """
    try:
        jsonschema.validate(data, get_schema())
    except jsonschema.ValidationError as e:
        path = list(e.absolute_path)
        error_path = " -> ".join(str(p) for p in path) if path else "root"
        line = find_line(source, path)
        location = f" (line {line})" if line else ""
        raise ValidationError(
            f"Configuration validation failed at '{error_path}'{location}: {e.message}",
            field=error_path,
            value=repr(e.instance),
            line=line,
        ) from e
    except jsonschema.SchemaError as e:
        raise ValidationError(f"Schema definition error: {e.message}") from e

    _validate_model_references(data, source)
    _validate_identity_references(data, source)
    _validate_resolutions(data, source)
    return data


def _reference_error(message: str, source: str | None, path: Sequence[str | int], value: str) -> ValidationError:
    line = find_line(source, path)
    location = f" (line {line})" if line else ""
    return ValidationError(f"{message}{location}", field=" -> ".join(str(p) for p in path), value=value, line=line)


def _validate_model_references(data: dict[str, Any], source: str | None = None) -> None:
    """Validate that every model name exists and parameter overrides are accepted."""
    for index, name in enumerate(data.get("models", [])):
        if name not in MODEL_NAMES:
            raise _reference_error(f"Unknown model '{name}'", source, ["models", index], name)

    for section in ("resolutions", "params"):
        for name in data.get(section, {}):
            if name not in MODEL_NAMES:
                raise _reference_error(f"Unknown model '{name}' in {section}", source, [section, name], name)

    for name, params in data.get("params", {}).items():
        try:
            build_model(name, params)
        except ModelError as e:
            raise _reference_error(str(e), source, ["params", name], repr(params)) from e


def _validate_identity_references(data: dict[str, Any], source: str | None = None) -> None:
    """Validate that identity allow-lists and tolerance overrides name known identities."""
    for index, identity in enumerate(data.get("identities", [])):
        if identity not in IDENTITY_IDS:
            raise _reference_error(f"Unknown identity '{identity}'", source, ["identities", index], identity)
    for identity in data.get("tolerances", {}):
        if identity not in IDENTITY_IDS:
            raise _reference_error(
                f"Unknown identity '{identity}' in tolerances", source, ["tolerances", identity], identity
            )


def _validate_resolutions(data: dict[str, Any], source: str | None = None) -> None:
    """Validate that each resolution lists one node count per model axis."""
    for name, resolution in data.get("resolutions", {}).items():
        model = build_model(name, data.get("params", {}).get(name))
        if not model.is_closed:
            raise _reference_error(
                f"Model '{name}' is not closed and takes no grid", source, ["resolutions", name], name
            )
        if len(resolution) != model.dim:
            raise _reference_error(
                f"Resolution for '{name}' needs {model.dim} node counts, got {len(resolution)}",
                source,
                ["resolutions", name],
                repr(resolution),
            )


def validate_config_file(config_path: str) -> dict[str, Any]:
    """Validate a configuration file against the JSON schema.

    Raises:
        ValidationError: If the configuration is invalid
        InvalidConfigurationError: If the file is missing or not a YAML mapping
    """
    config_file = Path(config_path)
    if not config_file.exists():
        raise InvalidConfigurationError(f"Configuration file not found: {config_path}", config_path)

    source = config_file.read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(source)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        location = f" (line {line})" if line else ""
        raise InvalidConfigurationError(
            f"Invalid YAML in configuration file{location}: {e}", config_path, line
        ) from e

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise InvalidConfigurationError("Configuration file must contain a YAML mapping", config_path)

    return validate_config_data(data, source)


def get_schema_path() -> Path | None:
    """Get the path to the JSON schema file if it exists."""
    possible_paths = [
        Path(__file__).parent.parent.parent / "sigma2lab-schema.json",  # Project root
    ]

    for schema_path in possible_paths:
        if schema_path.exists():
            return schema_path

    return None
