#!/usr/bin/env python
"""
Closed-form steady state of the delta loop.

Only spectrum orders h that are multiples of n survive the sum around the loop; each
drives the loop with E_h = n*h*omega_e*lambda_h*sin(h*theta). The loop current is the
superposition of the per-order solutions of R*I + L'*dI/dt + E_c = 0:

    I_h(theta) = -A_h * sin(h*theta - phi_h)
    A_h = n*h*omega_e*lambda_h / |Z_h|,  |Z_h| = sqrt(R^2 + (h*omega_e*L')^2)
    phi_h = atan2(h*omega_e*L', R)

Torque is computed by virtual work with the loop current held constant:
T = p * I_c * sum_w d(lambda_w)/d(theta). A single order gives

    T = -(p*n^2*h^2*omega_e*lambda_h^2 / (2*|Z_h|)) * (cos(phi_h) - cos(2*h*theta - phi_h))

that is a DC drag term and a ripple at order 2h. Positive I_c circulates a->b->c.
"""

import math
from dataclasses import dataclass
from typing import List
import numpy as np
from .machine import (
    flux_derivative_loop,
    single_order,
    MachineParams,
    OperatingPoint,
    WindingConfig,
)
from .spectral import decompose, theta_grid, Waveform
from .utils import (
    ArgumentException,
    ConfigurationException,
    DegenerateOperatingPointException,
    Theta,
    DEFAULT_SAMPLES,
    UNIT_AMPERE,
    UNIT_NEWTON_METER,
)

__all__ = [
    "circulating_current_phasor",
    "circulating_current_waveform",
    "circulating_orders",
    "dc_torque",
    "high_speed_current_limit",
    "high_speed_ripple_limit",
    "loop_bemf_sum",
    "loop_drives",
    "peak_dc_speed",
    "required_samples",
    "ripple_amplitude",
    "torque_closed_form",
    "torque_summary",
    "torque_waveform",
    "CurrentPhasor",
    "LoopDrive",
    "TorqueSummary",
]


@dataclass(frozen=True)
class LoopDrive:
    order: int
    magnitude: float  # V, n*h*omega_e*lambda_h


@dataclass(frozen=True)
class CurrentPhasor:
    order: int
    amplitude: float  # A
    phase_lag: float  # rad

    def at(self, theta_e: Theta) -> Theta:
        "Loop current of this order, -amplitude * sin(h*theta - phi)"
        return -self.amplitude * np.sin(self.order * np.asarray(theta_e, dtype=float) - self.phase_lag)


@dataclass(frozen=True)
class TorqueSummary:
    order: int  # circulating order h
    dc: float  # Nm
    ripple_order: int  # 2h
    ripple_amplitude: float  # Nm
    ripple_phase: float  # rad


def circulating_orders(params: MachineParams) -> List[int]:
    "Spectrum orders that add up around the loop, none for a star machine"
    if params.config != WindingConfig.DELTA:
        return []
    return [h for h in params.orders if h % params.n == 0]


def _require_delta(params: MachineParams) -> None:
    if params.config != WindingConfig.DELTA:
        raise ConfigurationException("a star connected machine has no winding loop")


def _require_circulating(params: MachineParams, h: int) -> None:
    if h not in circulating_orders(params):
        raise ArgumentException("order {!r} is not a circulating order of this machine".format(h))


def loop_drives(params: MachineParams, omega_e: float) -> List[LoopDrive]:
    return [
        LoopDrive(order=h, magnitude=params.n * h * omega_e * params.magnitude(h)) for h in circulating_orders(params)
    ]


def loop_bemf_sum(params: MachineParams, op: OperatingPoint) -> float:
    "Sum of the winding back-EMFs around the delta loop (V)"
    _require_delta(params)
    return float(sum(drive.magnitude * math.sin(drive.order * op.theta_e) for drive in loop_drives(params, op.omega_e)))


def _impedance(params: MachineParams, omega_e: float, h: int) -> float:
    return math.hypot(params.R, h * omega_e * params.loop_inductance)


def circulating_current_phasor(params: MachineParams, omega_e: float, h: int) -> CurrentPhasor:
    "Steady-state loop current of order h"
    _require_circulating(params, h)
    if not math.isfinite(omega_e) or omega_e < 0:
        raise ArgumentException("omega_e must be finite and >= 0, got {!r}".format(omega_e))
    if params.R == 0 and omega_e == 0:
        raise DegenerateOperatingPointException("R = 0 at zero speed leaves the loop current undetermined")
    z = _impedance(params, omega_e, h)
    return CurrentPhasor(
        order=h,
        amplitude=params.n * h * omega_e * params.magnitude(h) / z,
        phase_lag=math.atan2(h * omega_e * params.loop_inductance, params.R),
    )


def required_samples(params: MachineParams) -> int:
    "Smallest grid that resolves the 2h torque ripple of every circulating order"
    orders = circulating_orders(params)
    return 4 * max(orders) + 1 if orders else 4


def _grid(params: MachineParams, samples: int) -> np.ndarray:
    if samples < required_samples(params):
        raise ArgumentException(
            "{} samples cannot resolve order {}, use at least {}".format(
                samples, 2 * max(circulating_orders(params)), required_samples(params)
            )
        )
    return theta_grid(samples)


def circulating_current_waveform(params: MachineParams, omega_e: float, samples: int = DEFAULT_SAMPLES) -> Waveform:
    "Loop current over one electrical cycle, identically zero without a loop"
    theta = _grid(params, samples)
    current = np.zeros(samples)
    for h in circulating_orders(params):
        current += circulating_current_phasor(params, omega_e, h).at(theta)
    return Waveform(current, UNIT_AMPERE)


def torque_waveform(params: MachineParams, omega_e: float, samples: int = DEFAULT_SAMPLES) -> Waveform:
    "Circulating current torque by virtual work, p * I_c * sum_w d(lambda_w)/d(theta)"
    current = circulating_current_waveform(params, omega_e, samples)
    torque = params.p * current.samples * flux_derivative_loop(params, current.theta)
    return Waveform(torque, UNIT_NEWTON_METER)


def torque_closed_form(params: MachineParams, omega_e: float, h: int, theta_e: Theta) -> Theta:
    "Expanded single-order torque, DC plus ripple at order 2h"
    phasor = circulating_current_phasor(params, omega_e, h)
    theta = np.asarray(theta_e, dtype=float)
    scale = params.p * params.n * h * params.magnitude(h) * phasor.amplitude / 2.0
    return -scale * (math.cos(phasor.phase_lag) - np.cos(2 * h * theta - phasor.phase_lag))


def dc_torque(params: MachineParams, omega_e: float, h: int) -> float:
    "Mean torque of order h, -p*n^2*h^2*omega_e*lambda^2*R / (2*|Z|^2)"
    phasor = circulating_current_phasor(params, omega_e, h)
    return -params.p * params.n * h * params.magnitude(h) * phasor.amplitude * math.cos(phasor.phase_lag) / 2.0


def ripple_amplitude(params: MachineParams, omega_e: float, h: int) -> float:
    "Amplitude of the order 2h torque ripple of a single circulating order"
    phasor = circulating_current_phasor(params, omega_e, h)
    return params.p * params.n * h * params.magnitude(h) * phasor.amplitude / 2.0


def torque_summary(params: MachineParams, omega_e: float, samples: int = DEFAULT_SAMPLES) -> List[TorqueSummary]:
    "DC contribution and order 2h ripple for each circulating order"
    _require_delta(params)
    orders = circulating_orders(params)
    if not orders:
        return []
    torque = torque_waveform(params, omega_e, samples)
    decomposition = decompose(torque, 2 * max(orders))
    result = []
    for h in orders:
        ripple = decomposition.component(2 * h)
        single = torque_waveform(single_order(params, h), omega_e, samples)
        result.append(
            TorqueSummary(
                order=h,
                dc=single.mean,
                ripple_order=2 * h,
                ripple_amplitude=ripple.magnitude if ripple else 0.0,
                ripple_phase=ripple.phase if ripple else 0.0,
            )
        )
    return result


def high_speed_current_limit(params: MachineParams, h: int) -> float:
    "Loop current amplitude as omega_e -> infinity, n*lambda_h/L'"
    _require_circulating(params, h)
    return params.n * params.magnitude(h) / params.loop_inductance


def high_speed_ripple_limit(params: MachineParams, h: int) -> float:
    "Order 2h ripple amplitude as omega_e -> infinity, p*n^2*h*lambda_h^2/(2*L')"
    return params.p * params.n * h * params.magnitude(h) * high_speed_current_limit(params, h) / 2.0


def peak_dc_speed(params: MachineParams, h: int) -> float:
    "Speed of the largest DC drag of order h, where h*omega_e*L' = R"
    _require_circulating(params, h)
    return params.R / (h * params.loop_inductance)
