"""JSON scenario files.

A scenario is one JSON object with sections ``phantom``, ``control`` and
optionally ``contact``, ``render``, ``perception``, ``manual`` and
``outputs``, plus top-level ``seed``, ``initial_offset`` and
``angle_window``. Absent entries take their defaults. Per-region values are
written as ``{"Sacrum": .., "Lumbar": .., "Thoracic": ..}``.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .contact import ContactParams
from .control import ControlConfig
from .errors import DomainError, ScenarioError
from .imaging import RenderParams
from .perception import ClassifierParams, DetectorParams, PerceptionConfig
from .phantom import REGIONS, PhantomModel
from .scanner import ManualParams


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    dump_frames: bool = False
    dump_coronal: bool = True
    emit_csv: bool = True


@dataclass(frozen=True)
class Scenario:
    phantom: PhantomModel = field(default_factory=PhantomModel)
    control: ControlConfig = field(default_factory=ControlConfig)
    contact: ContactParams = field(default_factory=ContactParams)
    render: RenderParams = field(default_factory=RenderParams)
    perception: PerceptionConfig = field(default_factory=PerceptionConfig)
    manual: ManualParams = field(default_factory=ManualParams)
    outputs: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0
    initial_offset: float = 0.0
    angle_window: float = 0.020


_REGION_KEYED = {"sp_depth_per_region", "F_ref_per_region", "K_pitch_per_region"}
_NESTED = {
    (PerceptionConfig, "detector"): DetectorParams,
    (PerceptionConfig, "classifier"): ClassifierParams,
}


def _number(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(key, f"expected a number, got {value!r}")
    return float(value)


def _convert(cls, name, value, default, key):
    if (cls, name) in _NESTED:
        return _build(_NESTED[(cls, name)], value, key)
    if name in _REGION_KEYED:
        if not isinstance(value, dict):
            raise ScenarioError(key, "expected an object keyed by region name")
        names = {r.value: i for i, r in enumerate(REGIONS)}
        out = list(default)
        for region, v in value.items():
            if region not in names:
                raise ScenarioError(f"{key}.{region}", "unknown region")
            out[names[region]] = _number(v, f"{key}.{region}")
        return tuple(out)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ScenarioError(key, f"expected true/false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(key, f"expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        return _number(value, key)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ScenarioError(key, f"expected a string, got {value!r}")
        return value
    # tuples and optional tuples
    if value is None:
        return None
    if not isinstance(value, list):
        raise ScenarioError(key, f"expected a list, got {value!r}")
    return tuple(tuple(_number(u, key) for u in v) if isinstance(v, list) else _number(v, key)
                 for v in value)


def _build(cls, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioError(path, "expected a JSON object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    defaults = cls()
    kwargs = {}
    for name, value in data.items():
        key = f"{path}.{name}" if path else name
        if name not in fields:
            raise ScenarioError(key, "unknown key")
        kwargs[name] = _convert(cls, name, value, getattr(defaults, name), key)
    try:
        return cls(**kwargs)
    except DomainError as exc:
        bad = str(exc).split()[0]
        key = f"{path}.{bad}" if bad in fields else path
        raise ScenarioError(key, str(exc)) from None


def scenario_from_dict(data) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("", "scenario must be a JSON object")
    for required in ("phantom", "control"):
        if required not in data:
            raise ScenarioError(required, "missing section")
    sections = {"phantom": PhantomModel, "control": ControlConfig, "contact": ContactParams,
                "render": RenderParams, "perception": PerceptionConfig, "manual": ManualParams,
                "outputs": OutputConfig}
    kwargs = {}
    for key, value in data.items():
        if key in sections:
            kwargs[key] = _build(sections[key], value, key)
    scalars = {k: v for k, v in data.items() if k not in sections}
    top = _build(Scenario, scalars, "")
    return dataclasses.replace(top, **kwargs)


def parse_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ScenarioError("", f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"malformed JSON in {path}: {exc}") from None
    return scenario_from_dict(data)
