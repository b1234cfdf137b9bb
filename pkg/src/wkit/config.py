"""One config object governing every threshold, JSON round-trippable.

Resolution order for the CLI: --config flag, then the WKIT_CONFIG
environment variable, then defaults.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assemble import AssembleConfig
from .decode import DecodeConfig
from .loipool import PoolConfig
from .metrics import SapConfig
from .tensorio import ContractError, FormatError
from .wireframe3d import FusionConfig

ENV_VAR = "WKIT_CONFIG"


@dataclass(frozen=True)
class GnnSettings:
    d: int = 256
    n: int = 3
    hidden: int = 32
    weights_path: str | None = None

    def __post_init__(self):
        if self.d < 1 or self.n < 0 or self.hidden < 1:
            raise ContractError(
                f"invalid gnn settings d={self.d} n={self.n} hidden={self.hidden}"
            )


@dataclass(frozen=True)
class GtSettings:
    stride: int = 4
    sigma: float = 1.0

    def __post_init__(self):
        if self.stride < 1 or self.sigma <= 0:
            raise ContractError(
                f"invalid gt settings stride={self.stride} sigma={self.sigma}"
            )


@dataclass(frozen=True)
class PipelineConfig:
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    assemble: AssembleConfig = field(default_factory=AssembleConfig)
    pool: PoolConfig = field(default_factory=PoolConfig)
    gnn: GnnSettings = field(default_factory=GnnSettings)
    sap: SapConfig = field(default_factory=SapConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    gt: GtSettings = field(default_factory=GtSettings)
    seed: int = 0

    def to_dict(self):
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if dataclasses.is_dataclass(value):
                sub = dataclasses.asdict(value)
                for k, v in sub.items():
                    if isinstance(v, tuple):
                        sub[k] = list(v)
                out[f.name] = sub
            else:
                out[f.name] = value
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


_SECTIONS = {
    "decode": DecodeConfig,
    "assemble": AssembleConfig,
    "pool": PoolConfig,
    "gnn": GnnSettings,
    "sap": SapConfig,
    "fusion": FusionConfig,
    "gt": GtSettings,
}


def config_from_dict(doc):
    kwargs = {}
    known = set(_SECTIONS) | {"seed"}
    for key in doc:
        if key not in known:
            raise ContractError(f"unknown config section {key!r}")
    for name, cls in _SECTIONS.items():
        section = doc.get(name, {})
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(section) - names
        if unknown:
            raise ContractError(
                f"unknown keys {sorted(unknown)} in config section {name!r}"
            )
        kwargs[name] = cls(**section)
    kwargs["seed"] = int(doc.get("seed", 0))
    return PipelineConfig(**kwargs)


def load_config(path=None):
    """Config from an explicit path, the WKIT_CONFIG env var, or defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None:
        return PipelineConfig()
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise OSError(f"reading config from {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    return config_from_dict(doc)
