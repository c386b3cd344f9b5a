"""
Experiment config files.

UTF-8 INI text with ``[experiment]``, ``[dist_x]``, optional ``[dist_y]`` and
``[epsilon]`` sections of ``key = value`` lines. Unknown sections and keys are
rejected. Bare names such as ``example2`` resolve to the bundled presets.
"""

import configparser
from importlib import resources
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from entrofunc.errors import ConfigValidationError, InputFileError, InvalidArgumentError
from entrofunc.schemas import ExperimentConfig, canonical_spec_mapping

SECTIONS = ("experiment", "dist_x", "dist_y", "epsilon")


def list_presets() -> list[str]:
    folder = resources.files("entrofunc.presets")
    return sorted(
        entry.name.removesuffix(".ini")
        for entry in folder.iterdir()
        if entry.name.endswith(".ini")
    )


def read_config_text(source: str | Path) -> tuple[str, str]:
    """Return (text, origin) for a preset name or a file path."""
    path = Path(source)
    if path.is_file():
        return path.read_text(encoding="utf-8"), str(path)
    name = str(source)
    if name in list_presets():
        text = resources.files("entrofunc.presets").joinpath(f"{name}.ini").read_text(
            encoding="utf-8"
        )
        return text, f"preset:{name}"
    raise InputFileError(f"config file or preset not found: {source}", source=name)


def _error_key(loc: tuple[Any, ...]) -> str:
    if not loc:
        return "experiment"
    head = str(loc[0])
    if head in SECTIONS[1:]:
        # loc carries the union tag after the section name
        tail = [str(part) for part in loc[1:]]
        if tail and tail[0][:1].islower() and len(tail) > 1:
            tail = tail[1:]
        return ".".join([head, *tail])
    return f"experiment.{'.'.join(str(part) for part in loc)}"


def parse_config(text: str, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """Validate INI text into an ExperimentConfig."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment, method-assign]
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigValidationError(f"malformed config: {exc}", offending_keys=[]) from exc

    unknown = [name for name in parser.sections() if name not in SECTIONS]
    if unknown:
        raise ConfigValidationError(
            f"unknown sections: {', '.join(unknown)}", offending_keys=unknown
        )
    if not parser.has_section("experiment") or not parser.has_section("dist_x"):
        missing = [s for s in ("experiment", "dist_x") if not parser.has_section(s)]
        raise ConfigValidationError(
            f"missing sections: {', '.join(missing)}", offending_keys=missing
        )

    data: dict[str, Any] = dict(parser["experiment"])
    for section in ("dist_x", "dist_y"):
        if parser.has_section(section):
            try:
                data[section] = canonical_spec_mapping(dict(parser[section]))
            except InvalidArgumentError as exc:
                raise ConfigValidationError(
                    str(exc), offending_keys=[f"{section}.family"]
                ) from exc
    if parser.has_section("epsilon"):
        data["epsilon"] = dict(parser["epsilon"])
    data.update(overrides or {})

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        errors = exc.errors()
        keys = sorted({_error_key(tuple(err["loc"])) for err in errors})
        summary = "; ".join(f"{_error_key(tuple(e['loc']))}: {e['msg']}" for e in errors)
        raise ConfigValidationError(
            f"invalid experiment config: {summary}", offending_keys=keys
        ) from exc


def load_experiment_config(
    source: str | Path, overrides: dict[str, Any] | None = None
) -> ExperimentConfig:
    """Load and validate a config file or bundled preset."""
    text, _ = read_config_text(source)
    return parse_config(text, overrides)
