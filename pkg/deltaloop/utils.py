#!/usr/bin/env python

import os
import os.path
import yaml
from typing import Any, Dict, List, Optional, Union
import numpy as np

__all__ = [
    "format_float",
    "format_row",
    "load_config",
    "rpm_to_omega_e",
    "thread_count",
    "ArgumentException",
    "Config",
    "ConfigurationException",
    "DegenerateOperatingPointException",
    "DeltaLoopException",
    "Theta",
    "UNIT_AMPERE",
    "UNIT_NEWTON_METER",
    "UNIT_VOLT",
    "DEFAULT_CONFIG",
    "DEFAULT_SAMPLES",
    "CSV_DIGITS",
    "TOLERANCES",
    "VERSION",
]


UNIT_AMPERE = "A"
UNIT_NEWTON_METER = "Nm"
UNIT_VOLT = "V"

DEFAULT_SAMPLES = 1024
CSV_DIGITS = 17
DEFAULT_CONFIG = {
    "CONFIG": "deltaloop.yml",
    "MACHINE": "nine_slot_six_pole",
    "SAMPLES": DEFAULT_SAMPLES,
    "THREADS": None,
    "ODE__STEPS_PER_CYCLE": 2048,
    "ODE__SETTLE_TOLERANCE": 1e-6,
    "ODE__SETTLE_TIME_CONSTANTS": 15,
    "ODE__MAX_STEP_DECAY": 0.5,
    "SWEEP__POINTS": 41,
    "SWEEP__RATIO_START": 0.01,
    "SWEEP__RATIO_END": 100.0,
}
CONFIG_ENV = "DELTA_LOOP_CONFIG"
THREADS_ENV = "DELTA_LOOP_THREADS"

# Acceptance tolerances of the verification suite
TOLERANCES = {
    "loop_sum": 1e-10,
    "cancellation": 1e-12,
    "phasor_residual": 1e-9,
    "phasor_ode": 1e-3,
    "torque_oracle": 1e-9,
    "torque_ode": 1e-3,
    "torque_purity": 1e-9,
    "current_asymptote": 1e-2,
    "ripple_asymptote": 1e-2,
    "dc_decay": 2e-2,
    "parseval": 1e-9,
    "energy_balance": 5e-3,
    "star_observability": 1e-10,
}

VERSION_FILE = os.path.join(os.path.dirname(__file__), "VERSION")

with open(VERSION_FILE) as f:
    VERSION = f.read().strip()

# Typing
Config = Dict[str, Any]
Theta = Union[float, np.ndarray]


class DeltaLoopException(Exception):
    "Base class of the package errors"
    kind = "error"


class ArgumentException(DeltaLoopException, ValueError):
    kind = "argument"


class ConfigurationException(DeltaLoopException):
    kind = "configuration"


class DegenerateOperatingPointException(DeltaLoopException):
    kind = "degenerate"


def load_config(filename: Optional[str] = None) -> Config:
    "Load the configuration"
    config = dict(DEFAULT_CONFIG)
    config["CONFIG"] = filename or os.environ.get(CONFIG_ENV) or config["CONFIG"]
    if os.path.exists(config["CONFIG"]):
        with open(config["CONFIG"], "r") as f:
            config.update(yaml.safe_load(f) or {})
    # Convert the keys to uppercase
    t = dict((k.upper(), v) for k, v in config.items())
    result = {}
    for k, v in t.items():
        if isinstance(v, dict):
            result.update(dict(("%s__%s" % (k.upper(), kk.upper()), vv) for kk, vv in v.items()))
        else:
            result[k.upper()] = v
    return result


def thread_count(config: Config) -> int:
    "Parallelism cap for sweeps, DELTA_LOOP_THREADS wins over the configuration"
    value = os.environ.get(THREADS_ENV) or config.get("THREADS")
    if value is None or value == "":
        return os.cpu_count() or 1
    try:
        threads = int(value)
    except (TypeError, ValueError):
        raise ArgumentException("{} must be a positive integer, got {!r}".format(THREADS_ENV, value))
    if threads < 1:
        raise ArgumentException("{} must be a positive integer, got {!r}".format(THREADS_ENV, value))
    return threads


def rpm_to_omega_e(rpm: float, pole_pairs: int) -> float:
    "Mechanical speed in rpm to electrical angular speed in rad/s"
    return pole_pairs * 2.0 * np.pi / 60.0 * rpm


def format_float(value: float) -> str:
    return format(float(value), ".%dg" % CSV_DIGITS)


def format_row(row: List[float]) -> List[str]:
    return [format_float(x) for x in row]
