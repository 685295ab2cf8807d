#!/usr/bin/env python
"""
Invariant suite run by `deltaloop verify`.

Each check measures one property of a machine over a sweep and compares it with its
tolerance from utils.TOLERANCES. Time-domain checks are skipped for R = 0 and every loop
check is skipped for a star machine.
"""

import math
from dataclasses import asdict, dataclass, replace
from typing import Any, Callable, Dict, List, Optional
import numpy as np
from .analytics import (
    circulating_current_phasor,
    circulating_current_waveform,
    circulating_orders,
    dc_torque,
    high_speed_current_limit,
    high_speed_ripple_limit,
    loop_bemf_sum,
    loop_drives,
    peak_dc_speed,
    ripple_amplitude,
    torque_closed_form,
    torque_waveform,
)
from .machine import bemf_winding_at, single_order, terminal_bemf_at, MachineParams, OperatingPoint, WindingConfig
from .spectral import decompose, theta_grid, Waveform
from .workbench import steady_state, SimSettings, SweepSpec
from .utils import DEFAULT_SAMPLES, TOLERANCES, UNIT_VOLT

__all__ = ["run_checks", "Check", "PASSED", "FAILED", "SKIPPED"]

PASSED = "passed"
FAILED = "failed"
SKIPPED = "skipped"

ASYMPTOTE_RATIO = 100.0
LOOP_POSITIONS = 64


@dataclass(frozen=True)
class Check:
    name: str
    status: str
    measured: Optional[float]
    tolerance: float
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        result = asdict(self)
        if self.measured is not None and not math.isfinite(self.measured):
            result["measured"] = str(self.measured)
        return result


def _measured(name: str, measured: float, detail: str = "") -> Check:
    tolerance = TOLERANCES[name]
    status = PASSED if measured < tolerance else FAILED
    return Check(name=name, status=status, measured=float(measured), tolerance=tolerance, detail=detail)


def _skipped(name: str, detail: str) -> Check:
    return Check(name=name, status=SKIPPED, measured=None, tolerance=TOLERANCES[name], detail=detail)


def _ratio(value: float, scale: float) -> float:
    if scale == 0:
        return 0.0 if value == 0 else math.inf
    return value / scale


class Suite(object):
    def __init__(self, params: MachineParams, sweep: SweepSpec, samples: int, settings: SimSettings) -> None:
        self.params = params
        self.sweep = sweep
        self.omegas = [float(x) for x in sweep.omegas()]
        self.samples = samples
        self.settings = settings
        self.orders = [h for h in circulating_orders(params) if params.magnitude(h) > 0]
        self.is_delta = params.config == WindingConfig.DELTA
        self._ode: Dict[float, Any] = {}

    def ode(self, omega_e: float) -> Any:
        if omega_e not in self._ode:
            self._ode[omega_e] = steady_state(self.params, omega_e, self.settings, steps_per_cycle=self.samples)
        return self._ode[omega_e]

    # Loop back-EMF

    def loop_sum(self) -> Check:
        if not self.is_delta:
            return _skipped("loop_sum", "star connection has no winding loop")
        theta = theta_grid(LOOP_POSITIONS)
        worst = 0.0
        for omega_e in self.omegas:
            scale = self.params.n * sum(h.order * omega_e * h.magnitude for h in self.params.spectrum)
            windings = np.sum([bemf_winding_at(self.params, w, omega_e, theta) for w in range(self.params.n)], axis=0)
            closed = [loop_bemf_sum(self.params, OperatingPoint(omega_e, x)) for x in theta]
            worst = max(worst, _ratio(float(np.max(np.abs(windings - closed))), scale))
        return _measured("loop_sum", worst, "sum of winding back-EMFs vs closed-form loop drive")

    def cancellation(self) -> Check:
        others = [x for x in self.params.spectrum if x.order % self.params.n != 0 and x.magnitude > 0]
        if not others:
            return _skipped("cancellation", "no non-circulating orders in the spectrum")
        theta = theta_grid(LOOP_POSITIONS)
        omega_e = self.omegas[-1]
        worst = 0.0
        for harmonic in others:
            machine = single_order(self.params, harmonic.order)
            total = np.sum([bemf_winding_at(machine, w, omega_e, theta) for w in range(machine.n)], axis=0)
            worst = max(worst, float(np.max(np.abs(total))) / (harmonic.order * omega_e * harmonic.magnitude))
        return _measured("cancellation", worst, "loop sum of non-circulating orders per winding magnitude")

    # Closed-form current

    def phasor_residual(self) -> Check:
        if not self.orders:
            return _skipped("phasor_residual", "no circulating orders")
        theta = theta_grid(self.samples)
        worst = 0.0
        for omega_e in self.omegas:
            for drive in loop_drives(self.params, omega_e):
                h = drive.order
                phasor = circulating_current_phasor(self.params, omega_e, h)
                current = phasor.at(theta)
                derivative = -phasor.amplitude * h * omega_e * np.cos(h * theta - phasor.phase_lag)
                emf = drive.magnitude * np.sin(h * theta)
                residual = self.params.R * current + self.params.loop_inductance * derivative + emf
                worst = max(worst, _ratio(float(np.max(np.abs(residual))), drive.magnitude))
        return _measured("phasor_residual", worst, "R*I + L'*dI/dt + E_c relative to the loop drive")

    def phasor_ode(self) -> Check:
        if not self.is_delta:
            return _skipped("phasor_ode", "star connection has no winding loop")
        if not self.orders:
            return _skipped("phasor_ode", "no circulating orders")
        if self.params.R == 0:
            return _skipped("phasor_ode", "R = 0: analytic checks only")
        worst = 0.0
        for omega_e in self.omegas:
            reference = circulating_current_waveform(self.params, omega_e, self.samples)
            rms = (self.ode(omega_e).current - reference).rms
            worst = max(worst, _ratio(rms, float(np.max(np.abs(reference.samples)))))
        return _measured("phasor_ode", worst, "RMS of RK4 minus closed-form current per amplitude")

    # Torque

    def torque_oracle(self) -> Check:
        if not self.orders:
            return _skipped("torque_oracle", "no circulating orders")
        theta = theta_grid(self.samples)
        worst = 0.0
        for h in self.orders:
            machine = single_order(self.params, h)
            for omega_e in self.omegas:
                virtual_work = torque_waveform(machine, omega_e, self.samples).samples
                closed = torque_closed_form(self.params, omega_e, h, theta)
                scale = ripple_amplitude(self.params, omega_e, h)
                worst = max(worst, _ratio(float(np.max(np.abs(virtual_work - closed))), scale))
        return _measured("torque_oracle", worst, "expanded closed form vs p*I_c*sum d(lambda)/d(theta)")

    def torque_ode(self) -> Check:
        if not self.is_delta:
            return _skipped("torque_ode", "star connection has no winding loop")
        if not self.orders:
            return _skipped("torque_ode", "no circulating orders")
        if self.params.R == 0:
            return _skipped("torque_ode", "R = 0: analytic checks only")
        worst = 0.0
        for omega_e in self.omegas:
            reference = torque_waveform(self.params, omega_e, self.samples)
            rms = (self.ode(omega_e).torque - reference).rms
            worst = max(worst, _ratio(rms, float(np.max(np.abs(reference.samples)))))
        return _measured("torque_ode", worst, "RMS of time-domain minus closed-form torque per peak")

    def torque_purity(self) -> Check:
        if not self.orders:
            return _skipped("torque_purity", "no circulating orders")
        worst = 0.0
        for h in self.orders:
            machine = single_order(self.params, h)
            m_max = min(self.samples // 2 - 1, 4 * h)
            for omega_e in self.omegas:
                decomposition = decompose(torque_waveform(machine, omega_e, self.samples), m_max)
                ripple = decomposition.magnitude(2 * h)
                stray = max(x.magnitude for x in decomposition.components if x.order != 2 * h)
                worst = max(worst, _ratio(stray, ripple))
        return _measured("torque_purity", worst, "largest torque order other than DC and 2h per 2h ripple")

    # Asymptotes

    def _below_asymptote(self, h: int) -> bool:
        "Sweep top short of h*omega*L'/R = ASYMPTOTE_RATIO, up to rounding of the grid"
        if self.params.R == 0:
            return False
        ratio = h * self.omegas[-1] * self.params.loop_inductance / self.params.R
        return ratio < ASYMPTOTE_RATIO * (1 - 1e-9)

    def current_asymptote(self) -> Check:
        if not self.orders:
            return _skipped("current_asymptote", "no circulating orders")
        worst = 0.0
        for h in self.orders:
            amplitudes = [circulating_current_phasor(self.params, x, h).amplitude for x in self.omegas]
            limit = high_speed_current_limit(self.params, h)
            rising = all(b >= a * (1 - 1e-12) for a, b in zip(amplitudes, amplitudes[1:]))
            if not rising or max(amplitudes) > limit * (1 + 1e-12):
                return Check("current_asymptote", FAILED, None, TOLERANCES["current_asymptote"], "not monotone")
            if self._below_asymptote(h):
                return _skipped("current_asymptote", "sweep top below h*omega*L'/R = {:g}".format(ASYMPTOTE_RATIO))
            worst = max(worst, abs(amplitudes[-1] - limit) / limit)
        return _measured("current_asymptote", worst, "amplitude at the sweep top vs n*lambda/L'")

    def ripple_asymptote(self) -> Check:
        if not self.orders:
            return _skipped("ripple_asymptote", "no circulating orders")
        worst = 0.0
        for h in self.orders:
            if self._below_asymptote(h):
                return _skipped("ripple_asymptote", "sweep top below h*omega*L'/R = {:g}".format(ASYMPTOTE_RATIO))
            limit = high_speed_ripple_limit(self.params, h)
            worst = max(worst, abs(ripple_amplitude(self.params, self.omegas[-1], h) - limit) / limit)
        return _measured("ripple_asymptote", worst, "2h ripple at the sweep top vs p*n^2*h*lambda^2/(2L')")

    def dc_decay(self) -> Check:
        if not self.orders:
            return _skipped("dc_decay", "no circulating orders")
        if self.params.R == 0:
            return _skipped("dc_decay", "R = 0: no DC drag")
        worst = 0.0
        for h in self.orders:
            peak = peak_dc_speed(self.params, h)
            if not self.omegas[0] <= peak <= self.omegas[-1]:
                return _skipped("dc_decay", "order {} DC peak outside the sweep".format(h))
            nearest = self.omegas[int(np.argmin(np.abs(np.log(self.omegas) - math.log(peak))))]
            argmax = self.omegas[int(np.argmax([abs(dc_torque(self.params, x, h)) for x in self.omegas]))]
            if argmax != nearest:
                return Check("dc_decay", FAILED, None, TOLERANCES["dc_decay"], "order {} DC peak off grid".format(h))
            if self._below_asymptote(h):
                return _skipped("dc_decay", "sweep top below h*omega*L'/R = {:g}".format(ASYMPTOTE_RATIO))
            top = abs(dc_torque(self.params, self.omegas[-1], h))
            worst = max(worst, top / abs(dc_torque(self.params, peak, h)))
        return _measured("dc_decay", worst, "DC drag at the sweep top per DC peak")

    # Spectra and energy

    def parseval(self) -> Check:
        worst = 0.0
        m_max = self.samples // 2 - 1
        for omega_e in (self.omegas[0], self.omegas[-1]):
            for wave in (
                circulating_current_waveform(self.params, omega_e, self.samples),
                torque_waveform(self.params, omega_e, self.samples),
            ):
                worst = max(worst, _parseval_error(wave, m_max))
        return _measured("parseval", worst, "mean square vs dc^2 + sum magnitude^2 / 2")

    def energy_balance(self) -> Check:
        if not self.is_delta:
            return _skipped("energy_balance", "star connection has no winding loop")
        if not self.orders:
            return _skipped("energy_balance", "no circulating orders")
        if self.params.R == 0:
            return _skipped("energy_balance", "R = 0: analytic checks only")
        worst = 0.0
        for omega_e in self.omegas:
            ode = self.ode(omega_e)
            dissipated = self.params.R * float(np.mean(ode.current.samples**2))
            mechanical = -omega_e / self.params.p * ode.torque.mean
            worst = max(worst, _ratio(abs(dissipated - mechanical), dissipated))
        return _measured("energy_balance", worst, "R*<I^2> vs -omega_m*<T> in the time domain")

    def star_observability(self) -> Check:
        star = replace(self.params, config=WindingConfig.STAR)
        max_order = max(star.orders, default=0)
        if max_order == 0:
            return _skipped("star_observability", "empty spectrum")
        omega_e = self.omegas[-1]
        samples = max(self.samples, 4 * max_order + 4)
        theta = theta_grid(samples)
        decomposition = decompose(Waveform(terminal_bemf_at(star, omega_e, theta)[0], UNIT_VOLT), max_order)
        dominant = decomposition.dominant()
        worst = 0.0
        for m in range(star.n, max_order + 1, star.n):
            worst = max(worst, _ratio(decomposition.magnitude(m), dominant))
        current = circulating_current_waveform(star, omega_e, self.samples)
        if np.any(current.samples != 0):
            return Check("star_observability", FAILED, None, TOLERANCES["star_observability"], "star loop current")
        return _measured("star_observability", worst, "star line-to-line content at multiples of n")


def _parseval_error(wave: Waveform, m_max: int) -> float:
    decomposition = decompose(wave, m_max)
    power = float(np.mean(wave.samples**2))
    spectrum = decomposition.dc**2 + 0.5 * sum(x.magnitude**2 for x in decomposition.components)
    return _ratio(abs(power - spectrum), power)


def run_checks(
    params: MachineParams,
    sweep: SweepSpec,
    samples: int = DEFAULT_SAMPLES,
    settings: SimSettings = SimSettings(),
    progress: Optional[Callable[[str], None]] = None,
) -> List[Check]:
    "Run the whole invariant suite, one Check per property"
    suite = Suite(params, sweep, samples, settings)
    checks = [
        suite.loop_sum,
        suite.cancellation,
        suite.phasor_residual,
        suite.phasor_ode,
        suite.torque_oracle,
        suite.torque_ode,
        suite.torque_purity,
        suite.current_asymptote,
        suite.ripple_asymptote,
        suite.dc_decay,
        suite.parseval,
        suite.energy_balance,
        suite.star_observability,
    ]
    result = []
    for check in checks:
        if progress is not None:
            progress(check.__name__)
        result.append(check())
    return result
