# src/kato_scat/reporting/records.py

import dataclasses
import hashlib
import json
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field

from kato_scat.config.models import RunConfig

SCHEMA_VERSION = "1.0"


def to_jsonable(value: Any) -> Any:
    """Plain JSON types; complex numbers become [re, im], arrays become lists."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        return number if np.isfinite(number) else None
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump())
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {field.name: to_jsonable(getattr(value, field.name)) for field in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    return value


def config_hash(config: RunConfig) -> str:
    return hashlib.sha256(config.canonical_json().encode()).hexdigest()[:12]


def operator_key(config: RunConfig) -> str:
    """Hash of the sections that fix a stationary operator; shared by waveops and evolve-compare."""
    payload = config.model_dump_json(include={"potential", "grid", "lattice"})
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


class Report(BaseModel):
    """Envelope written by every command."""

    schema_version: str = SCHEMA_VERSION
    command: str
    status: str = "pass"
    config: dict
    config_hash: str
    results: dict = Field(default_factory=dict)
    checks: dict = Field(default_factory=dict)

    @classmethod
    def build(cls, config: RunConfig, results: dict, checks: dict | None = None) -> "Report":
        checks = to_jsonable(checks or {})
        status = "pass" if all(item.get("passed", True) for item in checks.values()) else "fail"
        return cls(
            command=config.command,
            status=status,
            config=to_jsonable(json.loads(config.canonical_json())),
            config_hash=config_hash(config),
            results=to_jsonable(results),
            checks=checks,
        )

    def to_json(self) -> str:
        return dumps(self.model_dump())


def check(value: float, tolerance: float) -> dict:
    """A {value, tolerance, passed} record; NaN never passes."""
    value = float(value)
    return {"value": value, "tolerance": float(tolerance), "passed": bool(np.isfinite(value) and value <= tolerance)}


def at_least(value: float, minimum: float) -> dict:
    value = float(value)
    return {"value": value, "minimum": float(minimum), "passed": bool(value >= minimum)}


def flag(passed: bool) -> dict:
    return {"value": bool(passed), "passed": bool(passed)}


def dumps(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False)
