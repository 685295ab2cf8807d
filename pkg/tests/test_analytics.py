#!/usr/bin/env python

import math
from unittest import TestCase, main
import numpy as np
from numpy.testing import assert_allclose
from hypothesis import given, settings, strategies as st
from deltaloop.analytics import (
    circulating_current_phasor,
    circulating_current_waveform,
    circulating_orders,
    dc_torque,
    high_speed_current_limit,
    high_speed_ripple_limit,
    loop_bemf_sum,
    loop_drives,
    peak_dc_speed,
    required_samples,
    ripple_amplitude,
    torque_closed_form,
    torque_summary,
    torque_waveform,
)
from deltaloop.machine import (
    bemf_winding,
    flux_linkage_winding,
    spectrum_of,
    MachineParams,
    OperatingPoint,
    WindingConfig,
)
from deltaloop.spectral import decompose, theta_grid
from deltaloop.utils import ArgumentException, ConfigurationException, DegenerateOperatingPointException

# R = 0.05 ohm, L' = 0.1 mH
R = 0.05
L = 1.5e-4
M = 2.5e-5


def machine(pairs, n=3, R=R, L=L, M=M, p=3, config=WindingConfig.DELTA):
    return MachineParams(n=n, p=p, R=R, L=L, M=M, spectrum=spectrum_of(pairs), config=config)


def speed(params, h, ratio):
    "Electrical speed where h*omega*L'/R equals ratio"
    return ratio * params.R / (h * params.loop_inductance)


class TestCirculatingOrders(TestCase):
    def test_orders(self):
        pairs = [(h, 0.001) for h in (1, 3, 5, 7, 9)]
        self.assertEqual(circulating_orders(machine(pairs)), [3, 9])
        self.assertEqual(circulating_orders(machine([(1, 0.01), (5, 0.001), (7, 0.001)])), [])
        five = machine([(1, 0.01), (3, 0.001), (5, 0.001), (15, 0.001)], n=5)
        self.assertEqual(circulating_orders(five), [5, 15])

    def test_star(self):
        self.assertEqual(circulating_orders(machine([(3, 0.01)], config=WindingConfig.STAR)), [])

    def test_loop_drives(self):
        drives = loop_drives(machine([(1, 0.05), (3, 0.01)]), 100.0)
        self.assertEqual([x.order for x in drives], [3])
        self.assertAlmostEqual(drives[0].magnitude, 9.0, places=12)


class TestLoopBemfSum(TestCase):
    def test_fundamental_cancels(self):
        params = machine([(1, 0.05)])
        for theta in (0.0, 0.5, 3.0):
            self.assertEqual(loop_bemf_sum(params, OperatingPoint(100.0, theta)), 0.0)

    def test_triplen_value(self):
        params = machine([(3, 0.01)])
        op = OperatingPoint(100.0, math.pi / 6)
        self.assertAlmostEqual(loop_bemf_sum(params, op), 9.0, places=12)
        self.assertAlmostEqual(sum(bemf_winding(params, w, op) for w in range(3)), 9.0, places=12)

    def test_fifth_cancels(self):
        params = machine([(5, 0.002)])
        for theta in (0.0, 0.5, 3.0):
            op = OperatingPoint(100.0, theta)
            self.assertEqual(loop_bemf_sum(params, op), 0.0)
            self.assertLess(abs(sum(bemf_winding(params, w, op) for w in range(3))), 1e-12)

    def test_star(self):
        with self.assertRaises(ConfigurationException):
            loop_bemf_sum(machine([(3, 0.01)], config=WindingConfig.STAR), OperatingPoint(100.0))


class TestCurrentPhasor(TestCase):
    def test_zero_speed(self):
        phasor = circulating_current_phasor(machine([(3, 0.01)]), 0.0, 3)
        self.assertEqual(phasor.amplitude, 0.0)
        self.assertEqual(phasor.phase_lag, 0.0)

    def test_corner_speed(self):
        params = machine([(3, 0.01)])
        phasor = circulating_current_phasor(params, speed(params, 3, 1.0), 3)
        self.assertAlmostEqual(phasor.phase_lag, math.pi / 4, places=12)

    def test_reference_point(self):
        params = machine([(3, 0.01)])
        phasor = circulating_current_phasor(params, 200.0, 3)
        z = math.hypot(0.05, 3 * 200.0 * 1e-4)
        self.assertAlmostEqual(phasor.amplitude, 3 * 3 * 200.0 * 0.01 / z, places=9)
        self.assertAlmostEqual(phasor.phase_lag, math.atan2(0.06, 0.05), places=12)

    def test_errors(self):
        params = machine([(1, 0.05), (3, 0.01)])
        with self.assertRaises(ArgumentException):
            circulating_current_phasor(params, 100.0, 1)
        with self.assertRaises(ArgumentException):
            circulating_current_phasor(params, -1.0, 3)
        with self.assertRaises(DegenerateOperatingPointException):
            circulating_current_phasor(machine([(3, 0.01)], R=0.0), 0.0, 3)

    def test_lossless(self):
        phasor = circulating_current_phasor(machine([(3, 0.01)], R=0.0), 100.0, 3)
        self.assertEqual(phasor.phase_lag, math.pi / 2)

    def test_phase_monotone(self):
        params = machine([(3, 0.01)])
        phases = [circulating_current_phasor(params, x, 3).phase_lag for x in np.geomspace(0.01, 1e6, 50)]
        self.assertTrue(all(b > a for a, b in zip(phases, phases[1:])))
        self.assertLess(phases[0], 1e-3)
        self.assertGreater(phases[-1], math.pi / 2 - 1e-3)

    def test_waveform_satisfies_kvl(self):
        params = machine([(3, 0.01), (9, 0.002)])
        theta = theta_grid(256)
        omega_e = 300.0
        for drive in loop_drives(params, omega_e):
            h = drive.order
            phasor = circulating_current_phasor(params, omega_e, h)
            derivative = -phasor.amplitude * h * omega_e * np.cos(h * theta - phasor.phase_lag)
            residual = R * phasor.at(theta) + params.loop_inductance * derivative + drive.magnitude * np.sin(h * theta)
            self.assertLess(np.max(np.abs(residual)) / drive.magnitude, 1e-9)


class TestCurrentWaveform(TestCase):
    def test_star_is_zero(self):
        wave = circulating_current_waveform(machine([(1, 0.05), (3, 0.01)], config=WindingConfig.STAR), 100.0, 64)
        self.assertEqual(np.count_nonzero(wave.samples), 0)

    def test_superposition(self):
        params = machine([(1, 0.05), (3, 0.01), (9, 0.002)])
        wave = circulating_current_waveform(params, 500.0, 128)
        expected = sum(circulating_current_phasor(params, 500.0, h).at(wave.theta) for h in (3, 9))
        assert_allclose(wave.samples, expected, rtol=0, atol=1e-12)

    def test_required_samples(self):
        params = machine([(3, 0.01), (9, 0.002)])
        self.assertEqual(required_samples(params), 37)
        circulating_current_waveform(params, 100.0, 37)
        with self.assertRaises(ArgumentException):
            circulating_current_waveform(params, 100.0, 36)


class TestTorque(TestCase):
    def test_no_circulating_orders(self):
        wave = torque_waveform(machine([(1, 0.05), (5, 0.002)]), 100.0, 64)
        self.assertEqual(np.count_nonzero(wave.samples), 0)

    def test_virtual_work_finite_difference(self):
        params = machine([(1, 0.05), (3, 0.01)])
        wave = torque_waveform(params, 200.0, 64)
        current = circulating_current_waveform(params, 200.0, 64).samples
        step = 1e-6
        for k, theta in enumerate(wave.theta):
            derivative = sum(
                (flux_linkage_winding(params, w, theta + step) - flux_linkage_winding(params, w, theta - step))
                / (2 * step)
                for w in range(3)
            )
            self.assertAlmostEqual(wave.samples[k], 3 * current[k] * derivative, places=6)

    def test_closed_form(self):
        params = machine([(3, 0.01)])
        omega_e = 200.0
        wave = torque_waveform(params, omega_e, 128)
        closed = torque_closed_form(params, omega_e, 3, wave.theta)
        scale = ripple_amplitude(params, omega_e, 3)
        self.assertLess(np.max(np.abs(wave.samples - closed)) / scale, 1e-9)

    def test_dc_and_ripple_formulas(self):
        params = machine([(3, 0.01)])
        for omega_e in (10.0, 200.0, 5000.0):
            z = math.hypot(R, 3 * omega_e * params.loop_inductance)
            dc = -3 * 9 * 9 * omega_e * 0.01**2 * R / (2 * z**2)
            ripple = 3 * 9 * 9 * omega_e * 0.01**2 / (2 * z)
            self.assertAlmostEqual(dc_torque(params, omega_e, 3) / dc, 1.0, places=12)
            self.assertAlmostEqual(ripple_amplitude(params, omega_e, 3) / ripple, 1.0, places=12)

    def test_summary_matches_closed_form(self):
        params = machine([(3, 0.01)])
        (summary,) = torque_summary(params, 200.0, 128)
        self.assertEqual((summary.order, summary.ripple_order), (3, 6))
        self.assertAlmostEqual(summary.dc / dc_torque(params, 200.0, 3), 1.0, places=9)
        self.assertAlmostEqual(summary.ripple_amplitude / ripple_amplitude(params, 200.0, 3), 1.0, places=9)

    def test_summary_per_order(self):
        params = machine([(1, 0.05), (3, 0.01), (9, 0.002)])
        summaries = torque_summary(params, 300.0, 256)
        self.assertEqual([x.order for x in summaries], [3, 9])
        self.assertEqual([x.ripple_order for x in summaries], [6, 18])
        for item in summaries:
            self.assertAlmostEqual(item.dc / dc_torque(params, 300.0, item.order), 1.0, places=9)

    def test_summary_zero_speed(self):
        for item in torque_summary(machine([(3, 0.01), (9, 0.002)]), 0.0, 64):
            self.assertEqual(item.dc, 0.0)
            self.assertEqual(item.ripple_amplitude, 0.0)

    def test_summary_star(self):
        with self.assertRaises(ConfigurationException):
            torque_summary(machine([(3, 0.01)], config=WindingConfig.STAR), 100.0)

    def test_purity(self):
        for h, n in ((3, 3), (6, 3), (5, 5)):
            params = machine([(h, 0.01)], n=n)
            for ratio in (0.1, 1.0, 10.0):
                d = decompose(torque_waveform(params, speed(params, h, ratio), 128), 4 * h)
                ripple = d.magnitude(2 * h)
                stray = max(x.magnitude for x in d.components if x.order != 2 * h)
                self.assertLess(stray / ripple, 1e-9)

    @settings(max_examples=50, deadline=None)
    @given(ratio=st.floats(1e-3, 1e3), magnitude=st.floats(1e-4, 0.05))
    def test_energy_balance(self, ratio, magnitude):
        params = machine([(3, magnitude)])
        omega_e = speed(params, 3, ratio)
        current = circulating_current_waveform(params, omega_e, 64)
        torque = torque_waveform(params, omega_e, 64)
        dissipated = R * float(np.mean(current.samples**2))
        self.assertAlmostEqual(-omega_e / 3 * torque.mean / dissipated, 1.0, places=9)


class TestLimits(TestCase):
    def test_current_limit(self):
        params = machine([(3, 0.01)])
        self.assertAlmostEqual(high_speed_current_limit(params, 3), 300.0, places=9)
        amplitude = circulating_current_phasor(params, speed(params, 3, 1e4), 3).amplitude
        self.assertAlmostEqual(amplitude / 300.0, 1.0, places=7)

    def test_current_asymptote(self):
        params = machine([(3, 0.01)])
        amplitudes = [circulating_current_phasor(params, x, 3).amplitude for x in np.geomspace(1.0, 1e6, 60)]
        self.assertTrue(all(b > a for a, b in zip(amplitudes, amplitudes[1:])))
        self.assertLess(max(amplitudes), high_speed_current_limit(params, 3))
        top = circulating_current_phasor(params, speed(params, 3, 100.0), 3).amplitude
        self.assertLess(abs(top / high_speed_current_limit(params, 3) - 1), 1e-2)

    def test_ripple_limit(self):
        params = machine([(3, 0.01)])
        self.assertAlmostEqual(high_speed_ripple_limit(params, 3) / (3 * 9 * 3 * 0.01**2 / (2 * 1e-4)), 1.0, places=9)
        (summary,) = torque_summary(params, speed(params, 3, 100.0), 64)
        self.assertLess(abs(summary.ripple_amplitude / high_speed_ripple_limit(params, 3) - 1), 1e-2)

    def test_ripple_limit_scaling(self):
        base = high_speed_ripple_limit(machine([(3, 0.01)]), 3)
        self.assertAlmostEqual(high_speed_ripple_limit(machine([(3, 0.02)]), 3) / base, 4.0, places=12)
        self.assertEqual(high_speed_ripple_limit(machine([(3, 0.01)], R=2.0), 3), base)

    def test_dc_peak_and_decay(self):
        params = machine([(3, 0.01)])
        peak = peak_dc_speed(params, 3)
        self.assertAlmostEqual(peak, R / (3 * 1e-4), places=9)
        omegas = np.geomspace(peak / 100, peak * 100, 41)
        dc = [abs(dc_torque(params, x, 3)) for x in omegas]
        self.assertEqual(int(np.argmax(dc)), 20)
        self.assertLess(dc[-1] / abs(dc_torque(params, peak, 3)), 2e-2)
        self.assertTrue(all(x <= 0 for x in (dc_torque(params, y, 3) for y in omegas)))

    def test_not_circulating(self):
        params = machine([(1, 0.05), (3, 0.01)])
        for fn in (high_speed_current_limit, high_speed_ripple_limit, peak_dc_speed):
            with self.assertRaises(ArgumentException):
                fn(params, 1)


if __name__ == "__main__":
    main()
