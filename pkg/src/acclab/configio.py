"""Config <-> dict conversion and content hashing shared by artifacts."""

from __future__ import annotations

import dataclasses
import hashlib
import json

from .env import EnvConfig
from .plant import PlantConfig, ScenarioConfig

__all__ = [
    "to_jsonable",
    "canonical_json",
    "digest",
    "env_config_to_dict",
    "env_config_from_dict",
]


def to_jsonable(obj):
    """Recursively convert dataclasses/tuples/numpy scalars to JSON-safe values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return obj.item()
    return obj


def canonical_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"))


def digest(obj) -> str:
    """Stable sha256 hex digest of any JSON-able structure."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def env_config_to_dict(cfg: EnvConfig) -> dict:
    return to_jsonable(cfg)


def env_config_from_dict(d: dict) -> EnvConfig:
    plant = PlantConfig(**d["plant"])
    scenario = ScenarioConfig(**d["scenario"])
    rest = {k: v for k, v in d.items() if k not in ("plant", "scenario")}
    return EnvConfig(plant=plant, scenario=scenario, **rest)
