# src/kato_scat/config/settings.py

import logging
import os

import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

from kato_scat.config.models import PotentialSection, RunConfig
from kato_scat.config.parser import ConfigParser
from kato_scat.errors import ConfigError
from kato_scat.potential.potential import Potential

ENVIRONMENT_KEYS = {
    "KATO_SCAT_THREADS": ("runtime", "threads"),
    "KATO_SCAT_LOG_LEVEL": ("runtime", "log_level"),
    "KATO_SCAT_STORE": ("runtime", "store"),
}


def _merge(target: dict, updates: dict):
    for section, values in updates.items():
        target.setdefault(section, {}).update({key: value for key, value in values.items() if value is not None})


def environment_overrides() -> dict:
    load_dotenv()
    overrides: dict = {}
    for variable, (section, key) in ENVIRONMENT_KEYS.items():
        value = os.getenv(variable)
        if value:
            overrides.setdefault(section, {})[key] = value
    return overrides


def load_config(path=None, overrides: dict | None = None, command: str = "spectrum") -> RunConfig:
    """
    Resolves a RunConfig. Later layers win: defaults, environment (.env included),
    the config file, then command-line overrides.

    Raises:
        ConfigError: unreadable file or values the models reject.
    """
    raw: dict = {}
    _merge(raw, environment_overrides())
    if path is not None:
        _merge(raw, ConfigParser().parse_file(path))
    _merge(raw, overrides or {})
    unknown = set(raw) - set(RunConfig.model_fields)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    try:
        config = RunConfig(command=command, **raw)
    except ValidationError as error:
        details = "; ".join(f"{'.'.join(str(p) for p in item['loc'])}: {item['msg']}" for item in error.errors())
        raise ConfigError(f"invalid configuration: {details}") from error
    logging.debug(f"Resolved config for '{command}': {config.canonical_json()}")
    return config


def load_potential_csv(path, tail_kind: str, tail_rate: float) -> Potential:
    """Columns x, Re V and optionally Im V; '#' lines are comments."""
    try:
        table = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except (OSError, ValueError) as error:
        raise ConfigError(f"cannot read potential csv {path}: {error}") from error
    if table.shape[1] not in (2, 3):
        raise ConfigError(f"potential csv needs 2 or 3 columns, found {table.shape[1]}")
    values = table[:, 1] + (1j * table[:, 2] if table.shape[1] == 3 else 0.0)
    return Potential.sampled(table[:, 0], values, tail_kind, tail_rate)


def build_potential(section: PotentialSection) -> Potential:
    amplitude = complex(section.amplitude_re, section.amplitude_im)
    match section.family:
        case "zero":
            return Potential.zero()
        case "step":
            return Potential.step(section.v0, section.a, section.theta)
        case "stack":
            return Potential.stack([(x0, x1, complex(re, im)) for x0, x1, re, im in section.intervals])
        case "exponential":
            return Potential.exponential(amplitude, section.rate)
        case "gaussian":
            return Potential.gaussian(amplitude, section.width)
        case _:
            return load_potential_csv(section.csv, section.tail_kind, section.tail_rate)
