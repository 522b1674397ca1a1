"""Engine configuration: window, density parameters, event threshold, IO knobs."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .postnet import WindowConfig
from .similarity import DecayKind, SimilarityParams

__all__ = ["EngineConfig"]


@dataclass(frozen=True)
class EngineConfig:
    window_len: int = 10
    tick_unit: int = 1
    decay: str = "reciprocal"
    eps0: float = 0.2
    eps1: float = 0.5
    delta1: float = 0.5
    phi: int = 10
    top_k: int = 20
    strict_entities: bool = False
    annotate_ops: bool = True
    snapshot_path: str | None = None
    snapshot_interval: int = 0

    def __post_init__(self) -> None:
        # Delegate range checks to the parameter types.
        self.similarity_params()
        self.window_config()
        if self.phi < 1:
            raise ValueError(f"phi must be >= 1, got {self.phi}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.snapshot_interval < 0:
            raise ValueError("snapshot_interval must be >= 0")

    def similarity_params(self) -> SimilarityParams:
        return SimilarityParams(
            decay=DecayKind(self.decay),
            eps0=self.eps0,
            eps1=self.eps1,
            delta1=self.delta1,
        )

    def window_config(self) -> WindowConfig:
        return WindowConfig(window_len=self.window_len, tick_unit=self.tick_unit)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "EngineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def with_overrides(self, **kwargs) -> "EngineConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self
