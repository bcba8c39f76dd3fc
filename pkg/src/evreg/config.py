"""Experiment configuration: one YAML document mapped onto the dataclasses.

The document is a nested mapping with one section per pipeline stage.  Keys
are checked strictly (unknown keys are rejected rather than ignored) and
values are coerced to the annotated field types, so "1e-3" and 1.0e-3 both
work and sigma entries may be written as null or "none".
"""

from __future__ import annotations

import types
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .data import SynthConfig
from .decode import DecodeParams
from .errors import EmptyGrid, InvalidConfig
from .metric import EdapConfig
from .model import ModelConfig, TrainConfig
from .targets import PdfSpec

OBJECTIVES = ("regression", "segmentation", "cpd")
SEG_METHODS = ("threshold", "peaks")

# decode output head implied by the training objective
_OUT_MODE = {
    "regression": "regression_2ch",
    "segmentation": "segmentation_2class",
    "cpd": "regression_1ch",
}

DEFAULT_GRID_MU = tuple(i / 10.0 for i in range(11))
DEFAULT_GRID_SIGMA = (None, 1.0, 10.0, 100.0, 1000.0)


@dataclass(frozen=True)
class PathsSpec:
    """On-disk dataset: a directory of per-series CSVs plus one events CSV."""

    series_dir: str
    events: str

    def __post_init__(self):
        if not self.series_dir or not self.events:
            raise InvalidConfig("paths dataset needs series_dir and events")


@dataclass(frozen=True)
class GridSpec:
    """Candidate decode thresholds and smoothing widths for tuning."""

    mu: tuple[float, ...] = DEFAULT_GRID_MU
    sigma: tuple[float | None, ...] = DEFAULT_GRID_SIGMA

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        object.__setattr__(
            self,
            "sigma",
            tuple(None if s is None else float(s) for s in self.sigma),
        )
        if not self.mu or not self.sigma:
            raise EmptyGrid("grid needs at least one mu and one sigma candidate")
        if any(not 0.0 <= m <= 1.0 for m in self.mu):
            raise InvalidConfig(f"grid mu values must lie in [0, 1], got {self.mu}")
        if any(s is not None and s <= 0 for s in self.sigma):
            raise InvalidConfig(
                f"grid sigma values must be positive or None, got {self.sigma}"
            )


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one run needs: data, targets, model, decoding, scoring."""

    objective: str
    data: SynthConfig | PathsSpec
    model: ModelConfig
    decode: DecodeParams
    metric: EdapConfig
    train: TrainConfig = field(default_factory=TrainConfig)
    pdf: PdfSpec | None = None
    grid: GridSpec = field(default_factory=GridSpec)
    folds: int = 4
    downsample: int = 1
    seg_method: str = "threshold"
    seed: int = 0

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise InvalidConfig(
                f"objective={self.objective!r}, expected one of {OBJECTIVES}"
            )
        if self.seg_method not in SEG_METHODS:
            raise InvalidConfig(
                f"seg_method={self.seg_method!r}, expected one of {SEG_METHODS}"
            )
        if self.folds < 2:
            raise InvalidConfig(f"folds={self.folds}, expected >= 2")
        if self.downsample < 1:
            raise InvalidConfig(f"downsample={self.downsample}, expected >= 1")
        if self.objective != "segmentation" and self.pdf is None:
            raise InvalidConfig(f"objective {self.objective!r} needs a pdf section")
        expected = _OUT_MODE[self.objective]
        if self.model.out_mode != expected:
            raise InvalidConfig(
                f"objective {self.objective!r} needs model out_mode {expected!r}, "
                f"got {self.model.out_mode!r}"
            )


# -- YAML loading -------------------------------------------------------------


def _is_none_string(value: Any) -> bool:
    return isinstance(value, str) and value.strip().lower() in ("none", "null")


def _coerce(value: Any, target: Any, where: str) -> Any:
    """Best-effort conversion of a YAML scalar/list to the annotated type."""
    origin = typing.get_origin(target)
    if origin is typing.Union or origin is types.UnionType:
        args = typing.get_args(target)
        if type(None) in args:
            if value is None or _is_none_string(value):
                return None
            rest = [a for a in args if a is not type(None)]
            if len(rest) == 1:
                return _coerce(value, rest[0], where)
        return value
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise InvalidConfig(f"{where}: expected a list, got {value!r}")
        args = typing.get_args(target)
        item = args[0] if args else Any
        return tuple(_coerce(v, item, where) for v in value)
    try:
        if target is float:
            return float(value)
        if target is int:
            as_float = float(value)
            if as_float != int(as_float):
                raise InvalidConfig(f"{where}: expected an integer, got {value!r}")
            return int(as_float)
        if target is str:
            if not isinstance(value, str):
                raise InvalidConfig(f"{where}: expected a string, got {value!r}")
            return value
        if target is bool:
            if not isinstance(value, bool):
                raise InvalidConfig(f"{where}: expected a boolean, got {value!r}")
            return value
    except (TypeError, ValueError):
        raise InvalidConfig(f"{where}: cannot interpret {value!r}") from None
    return value


def _build_section(cls, mapping: Mapping[str, Any], section: str):
    """Construct a config dataclass from a mapping with strict key checking."""
    if not isinstance(mapping, Mapping):
        raise InvalidConfig(f"section {section!r} must be a mapping")
    hints = typing.get_type_hints(cls)
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise InvalidConfig(f"unknown key {unknown[0]!r} in section {section!r}")
    kwargs = {
        key: _coerce(value, hints[key], f"{section}.{key}")
        for key, value in mapping.items()
    }
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise InvalidConfig(f"section {section!r}: {exc}") from None


def _build_data(mapping: Mapping[str, Any]) -> SynthConfig | PathsSpec:
    if not isinstance(mapping, Mapping):
        raise InvalidConfig("section 'data' must be a mapping")
    keys = set(mapping)
    if keys == {"synth"}:
        return _build_section(SynthConfig, mapping["synth"], "data.synth")
    if keys == {"paths"}:
        return _build_section(PathsSpec, mapping["paths"], "data.paths")
    raise InvalidConfig(
        "section 'data' must contain exactly one of 'synth' or 'paths'"
    )


_TOP_LEVEL = {
    "objective",
    "data",
    "pdf",
    "model",
    "train",
    "decode",
    "metric",
    "grid",
    "folds",
    "downsample",
    "seg_method",
    "seed",
}


def config_from_mapping(doc: Mapping[str, Any]) -> ExperimentConfig:
    """Build an ExperimentConfig from a parsed YAML document.

    Convenience derivations: the model's out_mode defaults to the one the
    objective implies, and the metric classes default to ("point",) for the
    cpd objective.
    """
    if not isinstance(doc, Mapping):
        raise InvalidConfig("config document must be a mapping")
    unknown = sorted(set(doc) - _TOP_LEVEL)
    if unknown:
        raise InvalidConfig(f"unknown top-level key {unknown[0]!r}")
    for key in ("objective", "data", "model", "decode", "metric"):
        if key not in doc:
            raise InvalidConfig(f"missing required section {key!r}")

    objective = doc["objective"]
    if objective not in OBJECTIVES:
        raise InvalidConfig(f"objective={objective!r}, expected one of {OBJECTIVES}")

    model_map = dict(doc["model"]) if isinstance(doc["model"], Mapping) else doc["model"]
    if isinstance(model_map, dict):
        model_map.setdefault("out_mode", _OUT_MODE[objective])
    metric_map = (
        dict(doc["metric"]) if isinstance(doc["metric"], Mapping) else doc["metric"]
    )
    if isinstance(metric_map, dict) and objective == "cpd":
        metric_map.setdefault("classes", ["point"])

    kwargs: dict[str, Any] = {
        "objective": objective,
        "data": _build_data(doc["data"]),
        "model": _build_section(ModelConfig, model_map, "model"),
        "decode": _build_section(DecodeParams, doc["decode"], "decode"),
        "metric": _build_section(EdapConfig, metric_map, "metric"),
    }
    # an explicit blank section (``pdf:`` in YAML) means the same as omitting it
    if doc.get("pdf") is not None:
        kwargs["pdf"] = _build_section(PdfSpec, doc["pdf"], "pdf")
    if "train" in doc:
        kwargs["train"] = _build_section(TrainConfig, doc["train"], "train")
    if "grid" in doc:
        kwargs["grid"] = _build_section(GridSpec, doc["grid"], "grid")
    for key in ("folds", "downsample", "seed"):
        if key in doc:
            kwargs[key] = _coerce(doc[key], int, key)
    if "seg_method" in doc:
        kwargs["seg_method"] = _coerce(doc["seg_method"], str, "seg_method")
    return ExperimentConfig(**kwargs)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a YAML experiment config.

    Every failure mode here is a configuration error: an unreadable file,
    malformed YAML, unknown keys, or invalid values.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise InvalidConfig(f"malformed config {path}{where}") from exc
    return config_from_mapping(doc)


def override_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    """Re-seed an experiment: the top-level, data, and model seeds all move."""
    data = config.data
    if isinstance(data, SynthConfig):
        data = replace(data, seed=seed)
    return replace(
        config,
        seed=seed,
        data=data,
        model=replace(config.model, seed=seed),
    )
