"""Run configuration: strict JSON schema backed by dataclasses.

Unknown keys and ill-typed values raise :class:`SchemaError`.  A config has the sections
``lattice``, ``protocol`` (``kind`` plus that protocol's parameters), ``noise`` (``null``
for a noiseless run), ``postselection``, ``output`` and an optional ``sweep``.
"""
from __future__ import annotations

import copy
import dataclasses
import itertools
import json
import types
import typing
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from kfsim.experiments import KINDS
from kfsim.lattice import Lattice, build_lattice
from kfsim.noise import NoiseModel, PostselectionPolicy


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeConfig:
    rows: int = 4
    cols: int = 8
    boundary: str = "cylinder"

    def build(self) -> Lattice:
        return build_lattice(self.rows, self.cols, self.boundary)


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "kfsim_out"
    snapshots: bool = True
    snapshot_limit: int | None = None
    gamma: bool = True


@dataclass(frozen=True)
class SweepConfig:
    axes: dict = field(default_factory=dict)  # dotted key -> list of values
    report: tuple[str, ...] = ()  # observables kept in the sweep table (all if empty)

    def cells(self) -> list[dict]:
        keys = list(self.axes)
        return [dict(zip(keys, vals)) for vals in itertools.product(*(self.axes[k] for k in keys))]


@dataclass
class RunConfig:
    lattice: LatticeConfig
    protocol: typing.Any
    kind: str
    noise: NoiseModel | None
    postselection: PostselectionPolicy
    trajectories: int = 1000
    seed: int = 0
    workers: int | None = None
    output: OutputConfig = field(default_factory=OutputConfig)
    sweep: SweepConfig | None = None
    description: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=1, sort_keys=True)


TOP_KEYS = {"lattice", "protocol", "noise", "postselection", "trajectories", "seed", "workers", "output",
            "sweep", "description"}


def _coerce(value, tp, path: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union or origin is types.UnionType:
        if value is None and type(None) in args:
            return None
        for a in args:
            if a is type(None):
                continue
            try:
                return _coerce(value, a, path)
            except SchemaError:
                pass
        raise SchemaError(f"{path}: bad value {value!r}")
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise SchemaError(f"{path}: expected a list")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(v, args[0], f"{path}[{i}]") for i, v in enumerate(value))
        if len(value) != len(args):
            raise SchemaError(f"{path}: expected {len(args)} entries")
        return tuple(_coerce(v, a, f"{path}[{i}]") for i, (v, a) in enumerate(zip(value, args)))
    if origin is dict or tp is dict:
        if not isinstance(value, dict):
            raise SchemaError(f"{path}: expected an object")
        return dict(value)
    if tp is bool:
        if not isinstance(value, bool):
            raise SchemaError(f"{path}: expected true/false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(f"{path}: expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"{path}: expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise SchemaError(f"{path}: expected a string")
        return value
    return value


def _build(cls, data, path: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = set(data) - names
    if unknown:
        raise SchemaError(f"{path}: unknown keys {sorted(unknown)}")
    kw = {k: _coerce(v, hints[k], f"{path}.{k}") for k, v in data.items()}
    try:
        return cls(**kw)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"{path}: {e}") from e


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise SchemaError("config must be a JSON object")
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise SchemaError(f"unknown top-level keys {sorted(unknown)}")
    if "protocol" not in data or not isinstance(data["protocol"], dict) or "kind" not in data["protocol"]:
        raise SchemaError("protocol.kind is required")
    proto = dict(data["protocol"])
    kind = proto.pop("kind")
    if kind not in KINDS:
        raise SchemaError(f"protocol.kind must be one of {sorted(KINDS)}")
    params = _build(KINDS[kind][0], proto, "protocol")
    lattice = _build(LatticeConfig, data.get("lattice"), "lattice")
    try:
        lattice.build()
    except ValueError as e:
        raise SchemaError(f"lattice: {e}") from e
    noise = None if data.get("noise", {}) is None else _build(NoiseModel, data.get("noise"), "noise")
    post = _build(PostselectionPolicy, data.get("postselection"), "postselection")
    output = _build(OutputConfig, data.get("output"), "output")
    sweep = None if data.get("sweep") is None else _build(SweepConfig, data["sweep"], "sweep")
    cfg = RunConfig(lattice, params, kind, noise, post, output=output, sweep=sweep, raw=copy.deepcopy(data))
    for key, tp in (("trajectories", int), ("seed", int), ("workers", int)):
        if key in data and data[key] is not None:
            setattr(cfg, key, _coerce(data[key], tp, key))
    cfg.description = _coerce(data.get("description", ""), str, "description")
    if cfg.trajectories < 1:
        raise SchemaError("trajectories must be >= 1")
    if cfg.seed < 0:
        raise SchemaError("seed must be >= 0")
    if cfg.workers is not None and cfg.workers < 1:
        raise SchemaError("workers must be >= 1")
    if sweep is not None:
        for key, vals in sweep.axes.items():
            if not isinstance(vals, list) or not vals:
                raise SchemaError(f"sweep axis {key} needs a non-empty list")
            for v in vals:
                set_dotted(data, key, v)  # validates the path
    return cfg


def set_dotted(data: dict, key: str, value) -> dict:
    """Copy of ``data`` with ``a.b.c`` set to ``value``; unknown sections are rejected."""
    out = copy.deepcopy(data)
    parts = key.split(".")
    if parts[0] not in TOP_KEYS - {"sweep"}:
        raise SchemaError(f"sweep axis {key}: unknown section")
    node = out
    for p in parts[:-1]:
        if node.get(p) is None:
            node[p] = {}
        node = node[p]
        if not isinstance(node, dict):
            raise SchemaError(f"sweep axis {key}: not an object")
    node[parts[-1]] = value
    return out


def load_config(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON ({e})") from e
    except OSError as e:
        raise SchemaError(f"{path}: {e}") from e


def preset_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("kfsim.presets").iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    if name not in preset_names():
        raise SchemaError(f"unknown preset {name!r}; choose from {preset_names()}")
    return json.loads(resources.files("kfsim.presets").joinpath(f"{name}.json").read_text())
