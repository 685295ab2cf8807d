#!/usr/bin/env python

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO, Tuple
import numpy as np
from .analytics import (
    circulating_current_phasor,
    circulating_current_waveform,
    circulating_orders,
    dc_torque,
    high_speed_current_limit,
    high_speed_ripple_limit,
    peak_dc_speed,
    ripple_amplitude,
    torque_summary,
    torque_waveform,
)
from .machine import bemf_winding_at, terminal_bemf_at, MachineParams, WindingConfig
from .spectral import decompose, theta_grid, Waveform
from .timedomain import integrate_loop, SimSpec, SteadyStateResult
from .utils import (
    format_row,
    ArgumentException,
    Config,
    DegenerateOperatingPointException,
    DEFAULT_CONFIG,
    DEFAULT_SAMPLES,
    UNIT_AMPERE,
    UNIT_NEWTON_METER,
    UNIT_VOLT,
)

__all__ = [
    "bemf_table",
    "compare_table",
    "default_sweep",
    "evaluate",
    "steady_state",
    "sweep_summary",
    "sweep_table",
    "waveform_table",
    "write_csv",
    "SimSettings",
    "SweepSpec",
    "Table",
    "SCALE_LINEAR",
    "SCALE_LOG",
]

SCALE_LINEAR = "linear"
SCALE_LOG = "log"

# Header and rows of a CSV table
Table = Tuple[List[str], List[List[float]]]


@dataclass(frozen=True)
class SweepSpec:
    omega_start: float
    omega_end: float
    points: int
    scale: str = SCALE_LOG

    def __post_init__(self) -> None:
        if not (math.isfinite(self.omega_start) and math.isfinite(self.omega_end)):
            raise ArgumentException("sweep bounds must be finite")
        if not 0 < self.omega_start <= self.omega_end:
            raise ArgumentException(
                "sweep needs 0 < omega_start <= omega_end, got {!r}..{!r}".format(self.omega_start, self.omega_end)
            )
        if self.scale not in (SCALE_LINEAR, SCALE_LOG):
            raise ArgumentException("scale must be {} or {}, got {!r}".format(SCALE_LINEAR, SCALE_LOG, self.scale))
        if self.points < 1 or (self.points == 1 and self.omega_start != self.omega_end):
            raise ArgumentException("a sweep between two speeds needs at least 2 points, got {}".format(self.points))

    def omegas(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.omega_start])
        if self.scale == SCALE_LOG:
            return np.geomspace(self.omega_start, self.omega_end, self.points)
        return np.linspace(self.omega_start, self.omega_end, self.points)


def default_sweep(params: MachineParams, config: Config = DEFAULT_CONFIG) -> SweepSpec:
    "Log sweep over h*omega_e*L'/R in [SWEEP__RATIO_START, SWEEP__RATIO_END] for the lowest circulating order"
    orders = circulating_orders(params)
    if not orders or params.R == 0:
        raise ArgumentException("no characteristic speed for this machine, give --omega-start and --omega-end")
    base = peak_dc_speed(params, orders[0])
    return SweepSpec(
        omega_start=base * float(config["SWEEP__RATIO_START"]),
        omega_end=base * float(config["SWEEP__RATIO_END"]),
        points=int(config["SWEEP__POINTS"]),
        scale=SCALE_LOG,
    )


@dataclass(frozen=True)
class SimSettings:
    steps_per_cycle: int = DEFAULT_CONFIG["ODE__STEPS_PER_CYCLE"]
    time_constants: float = DEFAULT_CONFIG["ODE__SETTLE_TIME_CONSTANTS"]
    max_step_decay: float = DEFAULT_CONFIG["ODE__MAX_STEP_DECAY"]
    tolerance: float = DEFAULT_CONFIG["ODE__SETTLE_TOLERANCE"]

    @classmethod
    def from_config(cls, config: Config) -> "SimSettings":
        return cls(
            steps_per_cycle=int(config["ODE__STEPS_PER_CYCLE"]),
            time_constants=float(config["ODE__SETTLE_TIME_CONSTANTS"]),
            max_step_decay=float(config["ODE__MAX_STEP_DECAY"]),
            tolerance=float(config["ODE__SETTLE_TOLERANCE"]),
        )

    def spec(self, params: MachineParams, omega_e: float, steps_per_cycle: Optional[int] = None) -> SimSpec:
        steps = steps_per_cycle or self.steps_per_cycle
        if params.R == 0:
            # Undamped loop: start on the analytic steady state and integrate one extra cycle
            initial = sum(
                float(circulating_current_phasor(params, omega_e, h).at(0.0)) for h in circulating_orders(params)
            )
            return SimSpec(steps_per_cycle=steps, settle_cycles=1, initial_current=initial, tolerance=self.tolerance)
        return SimSpec.for_operating_point(
            params,
            omega_e,
            steps,
            time_constants=self.time_constants,
            max_step_decay=self.max_step_decay,
            tolerance=self.tolerance,
        )


def steady_state(
    params: MachineParams, omega_e: float, settings: SimSettings, steps_per_cycle: Optional[int] = None
) -> SteadyStateResult:
    "Time-domain steady state, zeros for a machine without a winding loop"
    if params.config != WindingConfig.DELTA:
        steps = steps_per_cycle or settings.steps_per_cycle
        zeros = np.zeros(steps)
        return SteadyStateResult(
            current=Waveform(zeros, UNIT_AMPERE),
            torque=Waveform(zeros, UNIT_NEWTON_METER),
            residual_settle=0.0,
            converged=True,
            cycles=0,
        )
    return integrate_loop(params, omega_e, settings.spec(params, omega_e, steps_per_cycle))


def evaluate(fn: Callable[[float], Any], omegas: Sequence[float], threads: int = 1) -> List[Any]:
    "Map fn over the speeds, results in speed order whatever the parallelism"
    if threads <= 1 or len(omegas) <= 1:
        return [fn(x) for x in omegas]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, omegas))


def _check_settled(ode: SteadyStateResult, omega_e: float, warn: Optional[Callable[[str], None]]) -> None:
    if warn is not None and not ode.converged:
        warn(
            "time-domain run at omega_e={} rad/s not settled after {} cycles (residual {:.3g})".format(
                omega_e, ode.cycles, ode.residual_settle
            )
        )


def _rms_mismatch(measured: Waveform, reference: Waveform) -> float:
    scale = float(np.max(np.abs(reference.samples)))
    delta = (measured - reference).rms
    if scale == 0:
        return delta
    return delta / scale


# -----------------------------------------------------------------------------
# Waveform


def waveform_table(
    params: MachineParams,
    omega_e: float,
    samples: int,
    settings: SimSettings,
    warn: Optional[Callable[[str], None]] = None,
) -> Table:
    "Loop current and torque over one cycle, closed form next to the time-domain oracle"
    if omega_e <= 0:
        raise DegenerateOperatingPointException("omega_e must be > 0, got {!r}".format(omega_e))
    current = circulating_current_waveform(params, omega_e, samples)
    torque = torque_waveform(params, omega_e, samples)
    ode = steady_state(params, omega_e, settings, steps_per_cycle=samples)
    _check_settled(ode, omega_e, warn)
    header = ["theta_e_rad", "i_circ_analytic_A", "i_circ_ode_A", "torque_analytic_Nm", "torque_ode_Nm"]
    rows = np.column_stack(
        [current.theta, current.samples, ode.current.samples, torque.samples, ode.torque.samples]
    ).tolist()
    return header, rows


# -----------------------------------------------------------------------------
# Sweep


def sweep_header(params: MachineParams, verify: bool) -> List[str]:
    orders = circulating_orders(params)
    header = ["omega_e_rad_s"]
    for h in orders:
        header.extend(["i_h{}_amplitude_A".format(h), "i_h{}_phase_rad".format(h)])
    header.append("torque_dc_Nm")
    for h in orders:
        header.extend(["torque_o{}_amplitude_Nm".format(2 * h), "torque_o{}_phase_rad".format(2 * h)])
    if verify:
        header.append("ode_current_rms_mismatch")
    return header


def sweep_point(
    params: MachineParams,
    omega_e: float,
    samples: int,
    verify: bool,
    settings: SimSettings,
    warn: Optional[Callable[[str], None]] = None,
) -> List[float]:
    "One sweep row, independent of every other speed"
    row = [omega_e]
    for h in circulating_orders(params):
        phasor = circulating_current_phasor(params, omega_e, h)
        row.extend([phasor.amplitude, phasor.phase_lag])
    row.append(torque_waveform(params, omega_e, samples).mean)
    if params.config == WindingConfig.DELTA:
        for item in torque_summary(params, omega_e, samples):
            row.extend([item.ripple_amplitude, item.ripple_phase])
    if verify:
        ode = steady_state(params, omega_e, settings, steps_per_cycle=samples)
        _check_settled(ode, omega_e, warn)
        row.append(_rms_mismatch(ode.current, circulating_current_waveform(params, omega_e, samples)))
    return row


def sweep_table(
    params: MachineParams,
    sweep: SweepSpec,
    samples: int = DEFAULT_SAMPLES,
    verify: bool = False,
    settings: SimSettings = SimSettings(),
    threads: int = 1,
    warn: Optional[Callable[[str], None]] = None,
) -> Table:
    rows = evaluate(
        lambda x: sweep_point(params, float(x), samples, verify, settings, warn), list(sweep.omegas()), threads
    )
    return sweep_header(params, verify), rows


def sweep_summary(params: MachineParams, sweep: SweepSpec, table: Table) -> Dict[str, Any]:
    "High-speed limits and DC peak of a sweep next to their closed-form values"
    header, rows = table
    omegas = [row[0] for row in rows]
    dc = [abs(row[header.index("torque_dc_Nm")]) for row in rows]
    top = omegas[-1]
    orders: Dict[str, Any] = {}
    for h in circulating_orders(params):
        current = [row[header.index("i_h{}_amplitude_A".format(h))] for row in rows]
        ripple = [row[header.index("torque_o{}_amplitude_Nm".format(2 * h))] for row in rows]
        orders[str(h)] = {
            "high_speed_current_limit_A": {
                "theory": high_speed_current_limit(params, h),
                "measured": current[-1],
            },
            "high_speed_ripple_limit_Nm": {
                "theory": high_speed_ripple_limit(params, h),
                "measured": ripple[-1],
                "single_order": ripple_amplitude(params, top, h),
            },
            "dc_peak_omega_e_rad_s": {
                "theory": peak_dc_speed(params, h),
                "grid": omegas[int(np.argmax([abs(dc_torque(params, x, h)) for x in omegas]))],
            },
            "speed_ratio_at_top": h * top * params.loop_inductance / params.R if params.R > 0 else math.inf,
        }
    return {
        "omega_start": sweep.omega_start,
        "omega_end": sweep.omega_end,
        "points": sweep.points,
        "scale": sweep.scale,
        "circulating_orders": circulating_orders(params),
        "torque_dc_peak_omega_e_rad_s": omegas[int(np.argmax(dc))] if rows else None,
        "orders": orders,
    }


# -----------------------------------------------------------------------------
# Back-EMF


def bemf_table(params: MachineParams, omega_e: float, samples: int = DEFAULT_SAMPLES) -> Table:
    "Per-order magnitudes of one winding, star line-to-line and delta line-to-line back-EMF"
    max_order = max(params.orders, default=1)
    samples = max(samples, 4 * max_order + 4)
    theta = theta_grid(samples)
    winding = Waveform(bemf_winding_at(params, 0, omega_e, theta), UNIT_VOLT)
    star = Waveform(terminal_bemf_at(replace(params, config=WindingConfig.STAR), omega_e, theta)[0], UNIT_VOLT)
    delta = Waveform(terminal_bemf_at(replace(params, config=WindingConfig.DELTA), omega_e, theta)[0], UNIT_VOLT)
    decompositions = [decompose(x, max_order) for x in (winding, star, delta)]
    header = ["order", "winding_V", "star_line_V", "delta_line_V"]
    rows = [[float(m)] + [d.magnitude(m) for d in decompositions] for m in range(1, max_order + 1)]
    return header, rows


# -----------------------------------------------------------------------------
# Star / delta comparison


def compare_table(params: MachineParams, omegas: Sequence[float], samples: int = DEFAULT_SAMPLES) -> Table:
    """
    Circulating current torque of the same machine connected in star and in delta.

    The open delta columns give the same windings with the loop left open: no current flows, so
    the torque is zero, and the corner voltage shows each circulating order of the back-EMF sum.
    """
    star = replace(params, config=WindingConfig.STAR)
    delta = replace(params, config=WindingConfig.DELTA)
    orders = circulating_orders(delta)
    header = ["omega_e_rad_s", "star_torque_dc_Nm", "delta_torque_dc_Nm", "open_delta_torque_dc_Nm"]
    for h in orders:
        header.extend(["star_torque_o{}_Nm".format(2 * h), "delta_torque_o{}_Nm".format(2 * h)])
    header.extend(["open_delta_emf_h{}_V".format(h) for h in orders])
    theta = theta_grid(samples)
    rows = []
    for omega_e in omegas:
        corner = np.sum([bemf_winding_at(params, w, omega_e, theta) for w in range(params.n)], axis=0)
        open_delta = decompose(Waveform(corner, UNIT_VOLT), max(orders, default=0))
        star_torque = decompose(torque_waveform(star, omega_e, samples), 2 * max(orders, default=1))
        delta_torque = decompose(torque_waveform(delta, omega_e, samples), 2 * max(orders, default=1))
        row = [omega_e, star_torque.dc, delta_torque.dc, 0.0]
        for h in orders:
            row.extend([star_torque.magnitude(2 * h), delta_torque.magnitude(2 * h)])
        row.extend([open_delta.magnitude(h) for h in orders])
        rows.append(row)
    return header, rows


def write_csv(table: Table, f: TextIO) -> None:
    "Header row, then every value with 17 significant digits"
    header, rows = table
    writer = csv.writer(f, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(format_row(row))
