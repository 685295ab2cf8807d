#!/usr/bin/env python
"""
Machine description and per-winding flux linkage / back-EMF evaluation.

Winding w (0..n-1, a=0, b=1, c=2 for three phases) is displaced by w*beta electrical
radians, beta = 2*pi/n. The PM flux linking winding w is

    lambda_w(theta) = sum_h -lambda_h * cos(h * (theta - w * beta))

and its back-EMF is omega_e * d(lambda_w)/d(theta). The fundamental is the order 1
entry of the spectrum. All evaluation functions accept a scalar position or a numpy array.
"""

import os.path
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from typing import Any, Dict, List, Sequence, Tuple
import numpy as np
from .utils import ArgumentException, DeltaLoopException, Theta

__all__ = [
    "bemf_winding",
    "bemf_winding_at",
    "bundled_machines",
    "check_winding",
    "flux_derivative_loop",
    "flux_derivative_winding",
    "flux_linkage_winding",
    "load_machine",
    "machine_from_dict",
    "machine_to_dict",
    "single_order",
    "spectrum_of",
    "terminal_bemf",
    "terminal_bemf_at",
    "FluxHarmonic",
    "MachineException",
    "MachineParams",
    "OperatingPoint",
    "WindingConfig",
]


class MachineException(DeltaLoopException):
    "Invalid machine description, names the offending field"
    kind = "validation"

    def __init__(self, field: str, message: str) -> None:
        super().__init__("{}: {}".format(field, message))
        self.field = field


class WindingConfig(Enum):
    STAR = "star"
    DELTA = "delta"


@dataclass(frozen=True)
class FluxHarmonic:
    order: int
    magnitude: float  # Wb

    def __post_init__(self) -> None:
        if isinstance(self.order, bool) or not isinstance(self.order, int) or self.order < 1:
            raise MachineException("order", "must be a positive integer, got {!r}".format(self.order))
        if not math.isfinite(self.magnitude) or self.magnitude < 0:
            raise MachineException("magnitude", "must be finite and >= 0, got {!r}".format(self.magnitude))


@dataclass(frozen=True)
class MachineParams:
    """
    Electrical and magnetic description of an n-phase machine.

    All windings share R, L and M. Inductances are position independent (non-salient rotor).
    """

    n: int
    p: int
    R: float
    L: float
    M: float
    spectrum: Tuple[FluxHarmonic, ...] = field(default_factory=tuple)
    config: WindingConfig = WindingConfig.DELTA

    def __post_init__(self) -> None:
        # Accept any sequence of harmonics, store a tuple
        object.__setattr__(self, "spectrum", tuple(self.spectrum))
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 3:
            raise MachineException("n", "phase count must be an integer >= 3, got {!r}".format(self.n))
        if isinstance(self.p, bool) or not isinstance(self.p, int) or self.p < 1:
            raise MachineException("p", "pole pairs must be an integer >= 1, got {!r}".format(self.p))
        for name in ("R", "L", "M"):
            if not math.isfinite(getattr(self, name)):
                raise MachineException(name, "must be finite, got {!r}".format(getattr(self, name)))
        if self.R < 0:
            raise MachineException("R", "winding resistance must be >= 0, got {!r}".format(self.R))
        if self.loop_inductance <= 0:
            raise MachineException(
                "L'", "loop inductance L - 2M must be > 0, got {!r} (L={!r}, M={!r})".format(
                    self.loop_inductance, self.L, self.M
                )
            )
        if not isinstance(self.config, WindingConfig):
            raise MachineException("config", "must be star or delta, got {!r}".format(self.config))
        orders = [x.order for x in self.spectrum]
        if len(set(orders)) != len(orders):
            raise MachineException("spectrum", "orders must be distinct, got {}".format(orders))

    @property
    def loop_inductance(self) -> float:
        "Effective inductance L' = L - 2M seen by the loop current"
        return self.L - 2.0 * self.M

    @property
    def beta(self) -> float:
        return 2.0 * math.pi / self.n

    @property
    def orders(self) -> List[int]:
        return sorted(x.order for x in self.spectrum)

    def magnitude(self, order: int) -> float:
        "Flux linkage magnitude of the given order, 0 when absent"
        for harmonic in self.spectrum:
            if harmonic.order == order:
                return harmonic.magnitude
        return 0.0


@dataclass(frozen=True)
class OperatingPoint:
    omega_e: float  # rad/s
    theta_e: float = 0.0  # rad

    def __post_init__(self) -> None:
        if not math.isfinite(self.omega_e) or self.omega_e < 0:
            raise ArgumentException("omega_e must be finite and >= 0, got {!r}".format(self.omega_e))
        if not math.isfinite(self.theta_e):
            raise ArgumentException("theta_e must be finite, got {!r}".format(self.theta_e))


def check_winding(params: MachineParams, w: int) -> None:
    if isinstance(w, bool) or not isinstance(w, (int, np.integer)) or not 0 <= w < params.n:
        raise ArgumentException("winding index must be in 0..{}, got {!r}".format(params.n - 1, w))


def _orders_and_magnitudes(params: MachineParams) -> Tuple[np.ndarray, np.ndarray]:
    orders = np.array([x.order for x in params.spectrum], dtype=float)
    magnitudes = np.array([x.magnitude for x in params.spectrum], dtype=float)
    return orders, magnitudes


def _angles(params: MachineParams, w: int, theta_e: Theta) -> Tuple[np.ndarray, np.ndarray]:
    "h * (theta - w * beta) for every spectrum order, orders along the last axis"
    orders, magnitudes = _orders_and_magnitudes(params)
    theta = np.asarray(theta_e, dtype=float)[..., np.newaxis]
    return orders * (theta - w * params.beta), magnitudes


def _result(value: np.ndarray, theta_e: Theta) -> Theta:
    return float(value) if np.ndim(theta_e) == 0 else value


def flux_linkage_winding(params: MachineParams, w: int, theta_e: Theta) -> Theta:
    "PM flux linking winding w (Wb)"
    check_winding(params, w)
    angles, magnitudes = _angles(params, w, theta_e)
    return _result(np.sum(-magnitudes * np.cos(angles), axis=-1), theta_e)


def flux_derivative_winding(params: MachineParams, w: int, theta_e: Theta) -> Theta:
    "d(lambda_w)/d(theta_e) in Wb/rad, independent of speed"
    check_winding(params, w)
    angles, magnitudes = _angles(params, w, theta_e)
    orders, _ = _orders_and_magnitudes(params)
    return _result(np.sum(orders * magnitudes * np.sin(angles), axis=-1), theta_e)


def flux_derivative_loop(params: MachineParams, theta_e: Theta) -> Theta:
    "Sum over all windings of d(lambda_w)/d(theta_e)"
    total = sum(np.asarray(flux_derivative_winding(params, w, theta_e)) for w in range(params.n))
    return _result(np.asarray(total), theta_e)


def bemf_winding(params: MachineParams, w: int, op: OperatingPoint) -> float:
    "Back-EMF of winding w (V)"
    return op.omega_e * flux_derivative_winding(params, w, op.theta_e)  # type: ignore


def bemf_winding_at(params: MachineParams, w: int, omega_e: float, theta_e: Theta) -> Theta:
    "Back-EMF of winding w on a position grid"
    return omega_e * flux_derivative_winding(params, w, theta_e)  # type: ignore


def terminal_bemf(params: MachineParams, op: OperatingPoint) -> List[float]:
    "Line-to-line voltages seen at the terminals, entry w between terminals w and w+1"
    phase = [bemf_winding(params, w, op) for w in range(params.n)]
    if params.config == WindingConfig.DELTA:
        return phase
    return [phase[w] - phase[(w + 1) % params.n] for w in range(params.n)]


def terminal_bemf_at(params: MachineParams, omega_e: float, theta_e: np.ndarray) -> np.ndarray:
    "Line-to-line voltages on a position grid, shape (n, len(theta_e))"
    phase = np.array([bemf_winding_at(params, w, omega_e, theta_e) for w in range(params.n)])
    if params.config == WindingConfig.DELTA:
        return phase
    return phase - np.roll(phase, -1, axis=0)


def single_order(params: MachineParams, order: int) -> MachineParams:
    "The same machine with only one spectrum order retained"
    return replace(params, spectrum=tuple(x for x in params.spectrum if x.order == order))


# -----------------------------------------------------------------------------
# Machine description documents


def _number(data: Dict[str, Any], key: str, path: str) -> float:
    if key not in data:
        raise MachineException(path, "missing")
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MachineException(path, "must be a number, got {!r}".format(value))
    return float(value)


def _integer(data: Dict[str, Any], key: str, path: str) -> int:
    if key not in data:
        raise MachineException(path, "missing")
    value = data[key]
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int):
        raise MachineException(path, "must be an integer, got {!r}".format(value))
    return value


def _harmonics(items: Any) -> List[FluxHarmonic]:
    if not isinstance(items, list):
        raise MachineException("spectrum", "must be a list of {order, magnitude} objects")
    result = []
    for i, item in enumerate(items):
        path = "spectrum[{}]".format(i)
        if not isinstance(item, dict):
            raise MachineException(path, "must be an object with order and magnitude")
        order = _integer(item, "order", path + ".order")
        magnitude = _number(item, "magnitude", path + ".magnitude")
        try:
            result.append(FluxHarmonic(order=order, magnitude=magnitude))
        except MachineException as ex:
            raise MachineException("{}.{}".format(path, ex.field), str(ex).split(": ", 1)[1])
    return result


def machine_from_dict(data: Any) -> MachineParams:
    "Build and validate a machine from its JSON document"
    if not isinstance(data, dict):
        raise MachineException("machine", "must be a JSON object")
    config = data.get("config")
    try:
        winding_config = WindingConfig(str(config).lower())
    except ValueError:
        raise MachineException("config", "must be 'star' or 'delta', got {!r}".format(config))
    return MachineParams(
        n=_integer(data, "n", "n"),
        p=_integer(data, "p", "p"),
        R=_number(data, "R", "R"),
        L=_number(data, "L", "L"),
        M=_number(data, "M", "M"),
        spectrum=tuple(_harmonics(data.get("spectrum", []))),
        config=winding_config,
    )


def machine_to_dict(params: MachineParams) -> Dict[str, Any]:
    return {
        "n": params.n,
        "p": params.p,
        "R": params.R,
        "L": params.L,
        "M": params.M,
        "config": params.config.value,
        "spectrum": [{"order": x.order, "magnitude": x.magnitude} for x in params.spectrum],
    }


def bundled_machines() -> List[str]:
    "Names of the example machines shipped with the package"
    names = [x.name for x in resources.files("deltaloop.machines").iterdir()]
    return sorted(os.path.splitext(x)[0] for x in names if x.endswith(".json"))


def load_machine(source: str) -> MachineParams:
    "Load a machine JSON document from a path or a bundled machine name"
    try:
        if os.path.exists(source):
            with open(source, "r", encoding="utf-8") as f:
                data = json.load(f)
        elif source in bundled_machines():
            data = json.loads(resources.files("deltaloop.machines").joinpath(source + ".json").read_text())
        else:
            raise MachineException("machine", "{} not found".format(source))
    except json.JSONDecodeError as ex:
        raise MachineException("machine", "invalid JSON in {}: {}".format(source, ex))
    except (UnicodeDecodeError, OSError) as ex:
        raise MachineException("machine", "cannot read {}: {}".format(source, ex))
    return machine_from_dict(data)


def spectrum_of(pairs: Sequence[Tuple[int, float]]) -> Tuple[FluxHarmonic, ...]:
    "Shorthand: ((order, magnitude), ...) to a spectrum"
    return tuple(FluxHarmonic(order=h, magnitude=m) for h, m in pairs)
