"""Run configuration: one JSON document per run, validated before any work.

The schema (defaults in parentheses; unknown keys anywhere are rejected):

    {
      "model": {
        "kind": "builtin" | "external",
        "name": "...",                  # builtin only
        "parameters": {...},            # builtin only, optional ({})
        "command": ["...", ...],        # external only
        "working_dir": ".",             # external, optional
        "io_format": "argfile"|"stdin", # external, optional ("argfile")
        "timeout_seconds": 3600         # external, optional
      },
      "inputs":  [{"name": "...", "min": ..., "max": ...}, ...],
      "outputs": ["...", ...],
      "method":  {"type": "full-grid", "order": p}
               | {"type": "sparse-grid", "level": l},
      "validation": {"lhs_strata": 10, "lhs_repeats": 300, "seed": 42},
      "report": {
        "percentiles": [10, 25, 50, 75, 90],
        "histogram_bins": 30,
        "sobol_max_subset_size": 2,
        "uq_samples": 3000
      },
      "paths": {
        "cache": null,                  # cache disabled when null
        "model_file": "model.json",
        "report_dir": "report"
      }
    }

Relative paths resolve against the directory containing the config file.
The sha256 of the file bytes is carried along as the run's config hash and
embedded into every artifact the CLI writes.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .blackbox import (
    BUILTIN,
    DEFAULT_TIMEOUT_SECONDS,
    EXTERNAL,
    IO_ARGFILE,
    ModelSpec,
)
from .errors import ConfigurationError
from .surrogate import FullGrid, InputVariable, SparseGrid


@dataclass(frozen=True)
class ValidationSettings:
    lhs_strata: int = 10
    lhs_repeats: int = 300
    seed: int = 42


@dataclass(frozen=True)
class ReportSettings:
    percentiles: tuple[float, ...] = (10.0, 25.0, 50.0, 75.0, 90.0)
    histogram_bins: int = 30
    sobol_max_subset_size: int = 2
    uq_samples: int = 3000


@dataclass(frozen=True)
class PathSettings:
    cache: Path | None
    model_file: Path
    report_dir: Path


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec
    inputs: tuple[InputVariable, ...]
    outputs: tuple[str, ...]
    method: FullGrid | SparseGrid
    validation: ValidationSettings
    report: ReportSettings
    paths: PathSettings
    config_hash: str


def _reject_unknown(mapping: dict, allowed: set[str], context: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigurationError(f"unknown key(s) {unknown} in {context}")


def _expect(mapping: dict, key: str, kind, context: str):
    if key not in mapping:
        raise ConfigurationError(f"missing required key {key!r} in {context}")
    value = mapping[key]
    if not isinstance(value, kind):
        raise ConfigurationError(
            f"key {key!r} in {context} must be {getattr(kind, '__name__', kind)}, "
            f"got {type(value).__name__}"
        )
    return value


def _parse_inputs(raw: list, context: str) -> tuple[InputVariable, ...]:
    if not raw:
        raise ConfigurationError(f"{context} must list at least one input variable")
    out = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ConfigurationError(f"{context}[{i}] must be an object")
        _reject_unknown(entry, {"name", "min", "max"}, f"{context}[{i}]")
        name = _expect(entry, "name", str, f"{context}[{i}]")
        low = _expect(entry, "min", (int, float), f"{context}[{i}]")
        high = _expect(entry, "max", (int, float), f"{context}[{i}]")
        out.append(InputVariable(name, float(low), float(high)))
    return tuple(out)


def _parse_model(raw: dict, inputs, outputs) -> ModelSpec:
    kind = _expect(raw, "kind", str, "model")
    input_names = tuple(var.name for var in inputs)
    if kind == BUILTIN:
        _reject_unknown(raw, {"kind", "name", "parameters"}, "model")
        return ModelSpec(
            kind=BUILTIN,
            input_names=input_names,
            output_names=tuple(outputs),
            name=_expect(raw, "name", str, "model"),
            parameters=raw.get("parameters", {}),
        )
    if kind == EXTERNAL:
        _reject_unknown(
            raw, {"kind", "command", "working_dir", "io_format", "timeout_seconds"}, "model"
        )
        command = _expect(raw, "command", list, "model")
        if not all(isinstance(part, str) for part in command):
            raise ConfigurationError("model.command must be a list of strings")
        return ModelSpec(
            kind=EXTERNAL,
            input_names=input_names,
            output_names=tuple(outputs),
            command=tuple(command),
            working_dir=str(raw.get("working_dir", ".")),
            io_format=str(raw.get("io_format", IO_ARGFILE)),
            timeout_seconds=float(raw.get("timeout_seconds", DEFAULT_TIMEOUT_SECONDS)),
        )
    raise ConfigurationError(f"model.kind must be 'builtin' or 'external', got {kind!r}")


def _parse_method(raw: dict) -> FullGrid | SparseGrid:
    kind = _expect(raw, "type", str, "method")
    if kind == "full-grid":
        _reject_unknown(raw, {"type", "order"}, "method")
        return FullGrid(order=int(_expect(raw, "order", int, "method")))
    if kind == "sparse-grid":
        _reject_unknown(raw, {"type", "level"}, "method")
        return SparseGrid(level=int(_expect(raw, "level", int, "method")))
    raise ConfigurationError(f"method.type must be 'full-grid' or 'sparse-grid', got {kind!r}")


def _parse_validation(raw: dict) -> ValidationSettings:
    _reject_unknown(raw, {"lhs_strata", "lhs_repeats", "seed"}, "validation")
    defaults = ValidationSettings()
    settings = ValidationSettings(
        lhs_strata=int(raw.get("lhs_strata", defaults.lhs_strata)),
        lhs_repeats=int(raw.get("lhs_repeats", defaults.lhs_repeats)),
        seed=int(raw.get("seed", defaults.seed)),
    )
    if settings.lhs_strata < 1 or settings.lhs_repeats < 1:
        raise ConfigurationError("validation.lhs_strata and lhs_repeats must be >= 1")
    return settings


def _parse_report(raw: dict) -> ReportSettings:
    _reject_unknown(
        raw,
        {"percentiles", "histogram_bins", "sobol_max_subset_size", "uq_samples"},
        "report",
    )
    defaults = ReportSettings()
    percentiles = raw.get("percentiles", list(defaults.percentiles))
    if not isinstance(percentiles, list) or not all(
        isinstance(q, (int, float)) and 0 <= q <= 100 for q in percentiles
    ):
        raise ConfigurationError("report.percentiles must be numbers in [0, 100]")
    settings = ReportSettings(
        percentiles=tuple(float(q) for q in percentiles),
        histogram_bins=int(raw.get("histogram_bins", defaults.histogram_bins)),
        sobol_max_subset_size=int(
            raw.get("sobol_max_subset_size", defaults.sobol_max_subset_size)
        ),
        uq_samples=int(raw.get("uq_samples", defaults.uq_samples)),
    )
    if settings.histogram_bins < 1:
        raise ConfigurationError("report.histogram_bins must be >= 1")
    if settings.sobol_max_subset_size < 1:
        raise ConfigurationError("report.sobol_max_subset_size must be >= 1")
    if settings.uq_samples < 2:
        raise ConfigurationError("report.uq_samples must be >= 2")
    return settings


def _parse_paths(raw: dict, base: Path) -> PathSettings:
    _reject_unknown(raw, {"cache", "model_file", "report_dir"}, "paths")

    def resolve(value: str) -> Path:
        path = Path(value)
        return path if path.is_absolute() else base / path

    cache = raw.get("cache")
    if cache is not None and not isinstance(cache, str):
        raise ConfigurationError("paths.cache must be a string or null")
    return PathSettings(
        cache=resolve(cache) if cache else None,
        model_file=resolve(str(raw.get("model_file", "model.json"))),
        report_dir=resolve(str(raw.get("report_dir", "report"))),
    )


def load_config(path: str | Path) -> RunConfig:
    """Load and fully validate a run configuration document."""
    path = Path(path)
    raw_bytes = path.read_bytes()
    config_hash = hashlib.sha256(raw_bytes).hexdigest()
    try:
        doc = json.loads(raw_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError(f"config {path} must be a JSON object")
    _reject_unknown(
        doc,
        {"model", "inputs", "outputs", "method", "validation", "report", "paths"},
        "config",
    )

    inputs = _parse_inputs(_expect(doc, "inputs", list, "config"), "inputs")
    outputs_raw = _expect(doc, "outputs", list, "config")
    if not outputs_raw or not all(isinstance(name, str) and name for name in outputs_raw):
        raise ConfigurationError("outputs must be a non-empty list of names")
    outputs = tuple(outputs_raw)

    return RunConfig(
        model=_parse_model(_expect(doc, "model", dict, "config"), inputs, outputs),
        inputs=inputs,
        outputs=outputs,
        method=_parse_method(_expect(doc, "method", dict, "config")),
        validation=_parse_validation(doc.get("validation", {})),
        report=_parse_report(doc.get("report", {})),
        paths=_parse_paths(doc.get("paths", {}), path.resolve().parent),
        config_hash=config_hash,
    )
