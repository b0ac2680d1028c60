"""
Experiment configuration: YAML in, frozen dataclasses out.

Schema (every key optional unless noted; unknown keys are rejected)::

    seed: 0                      # global seed, overridable with --seed
    output: runs                 # output directory, overridable with --out
    hierarchy:                   # branching-diffusion item sample
      branching: 2
      depth: 4
      num_features: 16
      flip_prob: 0.15
      seed: null                 # null = derived from the global seed
    dev:                         # old environment
      semantic_level: 2
      items_per_class: null
      item_offset: 0
      num_transforms: 1
      transform_kind: orthogonal-linear   # or permutation
      encoding: features                  # or onehot
    novel: null                  # new environment; null = same as dev
    shared_graphics: false
    network:
      widths: [8]
      activation: tanh           # linear | tanh | relu
      use_bias: true
      sigma: 0.1
    regimes:                     # required, at least one
      - kind: sequential         # required
        name: null
        old_tasks: [{head: old, labels: semantic}]
        new_tasks: [{head: new, labels: semantic}]
        phase_epochs: [500, 500]
        interleave_period: 50
        lr: [0.05]
        batch_size: null
        task_loss: cross-entropy # or squared-error
        old_weight: null         # null = 0.1 for A-LTM kinds, 1.0 otherwise
        new_weight: 1.0
        term_weights: {}
        sigma: null              # null = network.sigma
        seed: null               # null = global seed
        eval_every: 1
        replay_cap: null
        supervision: teacher     # or labels
    report:
      zoom: null                 # {regime: <name>, start: <epoch>, stop: <epoch>}
      band: 1.1
      old_head: null             # retention heads; null = first old/new task
      new_head: null

:func:`resolved_config` renders the fully defaulted configuration back to
plain data; that echo is all a run needs to be reproduced.
"""

from __future__ import annotations

__all__ = [
    "NetworkConfig",
    "ZoomConfig",
    "ReportConfig",
    "ExperimentConfig",
    "parse_config",
    "resolved_config",
]

import dataclasses
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

import yaml

from altm.errors import ConfigError
from altm.linalg import ActivationKind
from altm.regime import RegimeConfig, TaskSpec
from datagen.hierarchy import HierarchyConfig
from datagen.transition import EnvironmentConfig
from utils.seeding import derive_seed

_TOP_KEYS = ("seed", "output", "hierarchy", "dev", "novel", "shared_graphics", "network", "regimes", "report")


@dataclass(frozen=True, slots=True)
class NetworkConfig:
    widths: tuple[int, ...] = (8,)
    activation: ActivationKind = ActivationKind.TANH
    use_bias: bool = True
    sigma: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "activation", ActivationKind(self.activation))
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if not self.widths or any(w < 1 for w in self.widths):
            raise ValueError(f"widths must be a non-empty list of positive ints, got {list(self.widths)}")
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not isinstance(self.use_bias, bool):
            raise ValueError(f"use_bias must be true or false, got {self.use_bias!r}")


@dataclass(frozen=True, slots=True)
class ZoomConfig:
    regime: str
    start: int
    stop: int

    def __post_init__(self) -> None:
        if self.stop < self.start:
            raise ValueError(f"zoom stop {self.stop} is before start {self.start}")


@dataclass(frozen=True, slots=True)
class ReportConfig:
    zoom: ZoomConfig | None = None
    band: float = 1.1
    old_head: str | None = None
    new_head: str | None = None

    def __post_init__(self) -> None:
        if not self.band >= 1.0:
            raise ValueError(f"band must be >= 1, got {self.band}")


@dataclass(frozen=True, slots=True)
class ExperimentConfig:
    seed: int
    output: Path
    hierarchy: HierarchyConfig
    dev: EnvironmentConfig
    novel: EnvironmentConfig
    shared_graphics: bool
    network: NetworkConfig
    regimes: tuple[RegimeConfig, ...]
    report: ReportConfig


# ------------------------------------------------------------------
# Parsing
# ------------------------------------------------------------------
def parse_config(
    source: str | Path,
    *,
    seed: int | None = None,
    output: str | Path | None = None,
) -> ExperimentConfig:
    """
    Parse and fully validate an experiment config.

    Args:
        source: a path to a YAML file, or the YAML text itself.
        seed: overrides the document's global seed.
        output: overrides the document's output directory.

    Raises:
        ConfigError: on a YAML syntax error (with line and column), an
            unknown key, or an invalid value (naming the key).
    """
    if isinstance(source, Path):
        try:
            text = source.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {source}: {exc.strerror}") from exc
    else:
        text = source

    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        problem = getattr(exc, "problem", None) or str(exc)
        if mark is None:
            raise ConfigError(f"invalid YAML: {problem}") from exc
        raise ConfigError(f"invalid YAML: {problem}", line=mark.line + 1, column=mark.column + 1) from exc
    doc = {} if doc is None else doc
    _check_mapping(doc, "config")
    _reject_unknown(doc, _TOP_KEYS, "")

    if seed is None:
        seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"must be a non-negative integer, got {seed!r}", key="seed")
    out = Path(output) if output is not None else Path(str(doc.get("output", "runs")))

    h_doc = dict(_section(doc, "hierarchy"))
    if h_doc.get("seed") is None:
        h_doc["seed"] = derive_seed(seed, "hierarchy")
    hierarchy = _build(HierarchyConfig, h_doc, "hierarchy")
    dev = _build(EnvironmentConfig, _section(doc, "dev"), "dev")
    novel = dev if doc.get("novel") is None else _build(EnvironmentConfig, _section(doc, "novel"), "novel")
    shared = doc.get("shared_graphics", False)
    if not isinstance(shared, bool):
        raise ConfigError(f"must be true or false, got {shared!r}", key="shared_graphics")
    network = _build(NetworkConfig, _section(doc, "network"), "network")

    raw_regimes = doc.get("regimes")
    if not isinstance(raw_regimes, list) or not raw_regimes:
        raise ConfigError("at least one regime is required", key="regimes")
    regimes = tuple(
        _regime(entry, f"regimes[{i}]", seed=seed, sigma=network.sigma) for i, entry in enumerate(raw_regimes)
    )
    labels = [r.label for r in regimes]
    duplicates = sorted({name for name in labels if labels.count(name) > 1})
    if duplicates:
        raise ConfigError(f"regime names must be unique, repeated: {duplicates}", key="regimes")

    report = _report(_section(doc, "report"), labels, regimes[0])
    for key, cfg in (("dev", dev), ("novel", novel)):
        try:
            cfg.leaves(hierarchy)
        except ValueError as exc:
            raise ConfigError(str(exc), key=key) from exc

    return ExperimentConfig(
        seed=seed,
        output=out,
        hierarchy=hierarchy,
        dev=dev,
        novel=novel,
        shared_graphics=shared,
        network=network,
        regimes=regimes,
        report=report,
    )


def _regime(entry: Any, key: str, *, seed: int, sigma: float) -> RegimeConfig:
    _check_mapping(entry, key)
    body = dict(entry)
    if "kind" not in body:
        raise ConfigError("regime kind is required", key=f"{key}.kind")
    for field_name in ("old_tasks", "new_tasks"):
        if field_name in body:
            tasks = body[field_name]
            if not isinstance(tasks, list):
                raise ConfigError("must be a list of {head, labels}", key=f"{key}.{field_name}")
            body[field_name] = tuple(
                _build(TaskSpec, t, f"{key}.{field_name}[{j}]") for j, t in enumerate(tasks)
            )
    if isinstance(body.get("lr"), (int, float)):
        body["lr"] = [body["lr"]]
    if body.get("seed") is None:
        body["seed"] = seed
    if body.get("sigma") is None:
        body["sigma"] = sigma
    if body.get("term_weights") is None:
        body["term_weights"] = {}
    cfg = _build(RegimeConfig, body, key)
    return dataclasses.replace(cfg, old_weight=cfg.resolved_old_weight)


def _report(doc: Mapping[str, Any], labels: list[str], first: RegimeConfig) -> ReportConfig:
    body = dict(doc)
    if body.get("old_head") is None:
        body["old_head"] = first.old_tasks[0].head
    if body.get("new_head") is None and first.new_tasks:
        body["new_head"] = first.new_tasks[0].head
    if body.get("zoom") is not None:
        body["zoom"] = _build(ZoomConfig, _section(body, "zoom", prefix="report"), "report.zoom")
        if body["zoom"].regime not in labels:
            raise ConfigError(f"names no configured regime (have {labels})", key="report.zoom.regime")
    return _build(ReportConfig, body, "report")


def _build(cls: type, doc: Any, key: str):
    _check_mapping(doc, key)
    names = [f.name for f in dataclasses.fields(cls)]
    _reject_unknown(doc, names, key)
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
    try:
        return cls(**values)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), key=key) from exc


def _section(doc: Mapping[str, Any], name: str, *, prefix: str = "") -> Mapping[str, Any]:
    value = doc.get(name)
    key = f"{prefix}.{name}" if prefix else name
    if value is None:
        return {}
    _check_mapping(value, key)
    return value


def _check_mapping(doc: Any, key: str) -> None:
    if not isinstance(doc, dict):
        raise ConfigError(f"expected a mapping, got {type(doc).__name__}", key=key)


def _reject_unknown(doc: Mapping[str, Any], allowed: Any, key: str) -> None:
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        where = f"{key}." if key else ""
        raise ConfigError(f"unknown key{'s' if len(unknown) > 1 else ''} {unknown}", key=f"{where}{unknown[0]}")


# ------------------------------------------------------------------
# Echo
# ------------------------------------------------------------------
def resolved_config(cfg: ExperimentConfig) -> dict[str, Any]:
    """
    Plain-data rendering of *cfg* with every default spelled out.

    The output directory is left out: it does not affect any result.
    """
    data = _plain(cfg)
    data.pop("output")
    return data


def _plain(value: Any) -> Any:
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value
