#!/usr/bin/env python
"""
Time-domain oracle for the delta loop.

The loop KVL L' * dI/dt = -(R*I + sum_w E_w) is integrated in the position domain,
dI/dtheta = (1/omega_e) * dI/dt, with classical fixed-step RK4 so that samples land on
the uniform grid used by the spectral module. The back-EMF sum is evaluated winding by
winding from the machine model, never from the closed-form loop drive.

For this linear equation one RK4 step is an affine map I_{k+1} = g*I_k + c_k. The stage
arithmetic is evaluated once for the homogeneous part (g) and once over the whole cycle
for the forced part (c_k), then the recurrence runs as a first order IIR filter.
"""

import math
from dataclasses import dataclass
import numpy as np
from scipy import signal  # type: ignore
from .machine import bemf_winding_at, flux_derivative_loop, MachineParams, WindingConfig
from .analytics import circulating_orders
from .spectral import theta_grid, Waveform
from .utils import (
    ConfigurationException,
    DegenerateOperatingPointException,
    DeltaLoopException,
    DEFAULT_CONFIG,
    UNIT_AMPERE,
    UNIT_NEWTON_METER,
)

__all__ = [
    "integrate_loop",
    "rk4_step",
    "settle_cycles_default",
    "SimSpec",
    "SimulationException",
    "SteadyStateResult",
]

SETTLE_TIME_CONSTANTS = DEFAULT_CONFIG["ODE__SETTLE_TIME_CONSTANTS"]
SETTLE_TOLERANCE = DEFAULT_CONFIG["ODE__SETTLE_TOLERANCE"]
MAX_STEP_DECAY = DEFAULT_CONFIG["ODE__MAX_STEP_DECAY"]
MIN_SETTLE_CYCLES = 5
ROUNDING_FLOOR = 1e-9


class SimulationException(DeltaLoopException):
    kind = "simulation"


def settle_cycles_default(
    params: MachineParams, omega_e: float, time_constants: float = SETTLE_TIME_CONSTANTS
) -> int:
    "Electrical cycles covering the requested number of loop time constants L'/R"
    if params.R <= 0:
        raise SimulationException("R = 0: the loop transient never decays, supply the exact initial current")
    if omega_e <= 0:
        raise DegenerateOperatingPointException("omega_e must be > 0 for a periodic cycle, got {!r}".format(omega_e))
    tau = params.loop_inductance / params.R
    period = 2.0 * math.pi / omega_e
    return max(MIN_SETTLE_CYCLES, int(math.ceil(time_constants * tau / period)))


@dataclass(frozen=True)
class SimSpec:
    steps_per_cycle: int
    settle_cycles: int
    initial_current: float = 0.0
    substeps: int = 1  # integration steps per output sample
    tolerance: float = SETTLE_TOLERANCE

    def __post_init__(self) -> None:
        if self.steps_per_cycle < 4:
            raise SimulationException("steps_per_cycle must be >= 4, got {}".format(self.steps_per_cycle))
        if self.settle_cycles < 1:
            raise SimulationException("settle_cycles must be >= 1, got {}".format(self.settle_cycles))
        if self.substeps < 1:
            raise SimulationException("substeps must be >= 1, got {}".format(self.substeps))
        if not math.isfinite(self.initial_current):
            raise SimulationException("initial_current must be finite")

    def check(self, params: MachineParams) -> None:
        orders = circulating_orders(params)
        minimum = 8 * max(orders) if orders else 4
        if self.steps_per_cycle < minimum:
            raise SimulationException(
                "steps_per_cycle={} is below {} for circulating order {}".format(
                    self.steps_per_cycle, minimum, max(orders)
                )
            )

    @classmethod
    def for_operating_point(
        cls,
        params: MachineParams,
        omega_e: float,
        steps_per_cycle: int,
        time_constants: float = SETTLE_TIME_CONSTANTS,
        max_step_decay: float = MAX_STEP_DECAY,
        tolerance: float = SETTLE_TOLERANCE,
    ) -> "SimSpec":
        "Settle length and sub-steps suited to the loop time constant at this speed"
        settle = settle_cycles_default(params, omega_e, time_constants)
        decay = params.R / (omega_e * params.loop_inductance) * 2.0 * math.pi / steps_per_cycle
        substeps = max(1, int(math.ceil(decay / max_step_decay)))
        return cls(steps_per_cycle=steps_per_cycle, settle_cycles=settle, substeps=substeps, tolerance=tolerance)


@dataclass(frozen=True, eq=False)
class SteadyStateResult:
    current: Waveform
    torque: Waveform
    residual_settle: float
    converged: bool
    cycles: int


def rk4_step(current, slope, forcing_start, forcing_mid, forcing_end, step):  # type: ignore
    "One classical RK4 step of dI/dtheta = slope*I + forcing(theta), arrays welcome"
    k1 = slope * current + forcing_start
    k2 = slope * (current + step / 2.0 * k1) + forcing_mid
    k3 = slope * (current + step / 2.0 * k2) + forcing_mid
    k4 = slope * (current + step * k3) + forcing_end
    return current + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _loop_bemf(params: MachineParams, omega_e: float, theta: np.ndarray) -> np.ndarray:
    return np.sum([bemf_winding_at(params, w, omega_e, theta) for w in range(params.n)], axis=0)


def _relative_rms(delta: np.ndarray, reference: np.ndarray, floor: float = 0.0) -> float:
    scale = max(float(np.sqrt(np.mean(reference**2))), floor)
    change = float(np.sqrt(np.mean(delta**2)))
    if scale == 0:
        return 0.0 if change == 0 else math.inf
    return change / scale


def integrate_loop(params: MachineParams, omega_e: float, spec: SimSpec) -> SteadyStateResult:
    "Integrate the loop current over settle_cycles + 1 cycles and return the last one"
    if params.config != WindingConfig.DELTA:
        raise ConfigurationException("a star connected machine has no winding loop")
    if not math.isfinite(omega_e) or omega_e <= 0:
        raise DegenerateOperatingPointException("omega_e must be > 0 for a periodic cycle, got {!r}".format(omega_e))
    spec.check(params)
    steps = spec.steps_per_cycle * spec.substeps
    step = 2.0 * math.pi / steps
    # Forcing on the half-step grid of one cycle: even indices are step ends, odd are midpoints
    half_grid = np.arange(2 * steps + 1) * step / 2.0
    forcing = -_loop_bemf(params, omega_e, half_grid) / (omega_e * params.loop_inductance)
    # Below this RMS the loop current is rounding left over from the winding sum
    winding = float(np.max(np.abs(bemf_winding_at(params, 0, omega_e, half_grid))))
    floor = ROUNDING_FLOOR * params.n * winding / math.hypot(params.R, omega_e * params.loop_inductance)
    slope = -params.R / (omega_e * params.loop_inductance)
    gain = rk4_step(1.0, slope, 0.0, 0.0, 0.0, step)
    if abs(gain) > 1.0:
        raise SimulationException(
            "step too coarse for the loop time constant (|a*h|={:.3g}), raise substeps".format(abs(slope * step))
        )
    offset = rk4_step(np.zeros(steps), slope, forcing[0:-1:2], forcing[1::2], forcing[2::2], step)

    start = spec.initial_current
    previous = None
    cycle = np.zeros(steps)
    residual = math.inf
    for _ in range(spec.settle_cycles + 1):
        # y[k] = offset[k] + gain * y[k-1], y[-1] = start, y[k] = I_{k+1}
        after, _state = signal.lfilter([1.0], [1.0, -gain], offset, zi=[gain * start])
        cycle = np.concatenate(([start], after[:-1]))
        start = float(after[-1])
        if previous is not None:
            residual = _relative_rms(cycle - previous, cycle, floor)
        previous = cycle

    theta = theta_grid(spec.steps_per_cycle)
    current = cycle[:: spec.substeps]
    torque = params.p * current * flux_derivative_loop(params, theta)
    return SteadyStateResult(
        current=Waveform(current, UNIT_AMPERE),
        torque=Waveform(torque, UNIT_NEWTON_METER),
        residual_settle=residual,
        converged=residual <= spec.tolerance,
        cycles=spec.settle_cycles + 1,
    )

