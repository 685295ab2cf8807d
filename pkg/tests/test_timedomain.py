#!/usr/bin/env python

import math
from dataclasses import replace
from unittest import TestCase, main
import numpy as np
from hypothesis import given, settings, strategies as st
from deltaloop.analytics import circulating_current_phasor, circulating_current_waveform, torque_waveform
from deltaloop.machine import single_order, spectrum_of, MachineParams, WindingConfig
from deltaloop.timedomain import (
    integrate_loop,
    rk4_step,
    settle_cycles_default,
    SimSpec,
    SimulationException,
)
from deltaloop.utils import ConfigurationException, DegenerateOperatingPointException


def machine(pairs, n=3, R=0.05, L=1.5e-4, M=2.5e-5, p=3, config=WindingConfig.DELTA):
    return MachineParams(n=n, p=p, R=R, L=L, M=M, spectrum=spectrum_of(pairs), config=config)


def rms_error(params, omega_e, result):
    reference = circulating_current_waveform(params, omega_e, len(result.current)).samples
    error = result.current.samples - reference
    return float(np.sqrt(np.mean(error**2))) / float(np.max(np.abs(reference)))


class TestSettleCycles(TestCase):
    def test_floor(self):
        # tau = 2 ms against a 0.63 s cycle
        self.assertEqual(settle_cycles_default(machine([(3, 0.01)]), 10.0), 5)

    def test_long_time_constant(self):
        # tau = 1 s, cycle = 10 ms
        params = machine([(3, 0.01)], R=1e-4)
        self.assertGreaterEqual(settle_cycles_default(params, 2 * math.pi / 0.01), 1000)

    def test_errors(self):
        with self.assertRaises(SimulationException):
            settle_cycles_default(machine([(3, 0.01)], R=0.0), 100.0)
        with self.assertRaises(DegenerateOperatingPointException):
            settle_cycles_default(machine([(3, 0.01)]), 0.0)


class TestSimSpec(TestCase):
    def test_validation(self):
        with self.assertRaises(SimulationException):
            SimSpec(steps_per_cycle=2, settle_cycles=5)
        with self.assertRaises(SimulationException):
            SimSpec(steps_per_cycle=64, settle_cycles=0)
        with self.assertRaises(SimulationException):
            SimSpec(steps_per_cycle=64, settle_cycles=5, substeps=0)

    def test_nyquist_margin(self):
        params = machine([(3, 0.01), (9, 0.002)])
        SimSpec(steps_per_cycle=72, settle_cycles=5).check(params)
        with self.assertRaises(SimulationException):
            SimSpec(steps_per_cycle=64, settle_cycles=5).check(params)

    def test_substeps_at_low_speed(self):
        params = machine([(3, 0.01)])
        spec = SimSpec.for_operating_point(params, 1.0, 64)
        # |a*h| = R / (omega * L') * 2*pi / (64 * substeps)
        self.assertLessEqual(500.0 * 2 * math.pi / (64 * spec.substeps), 0.5)
        self.assertEqual(SimSpec.for_operating_point(params, 1e4, 64).substeps, 1)


class TestRk4(TestCase):
    def test_exponential_decay(self):
        # dI/dtheta = -I, one step of 0.1 against exp(-0.1)
        self.assertAlmostEqual(rk4_step(1.0, -1.0, 0.0, 0.0, 0.0, 0.1), math.exp(-0.1), places=6)

    def test_constant_forcing(self):
        # dI/dtheta = 2 integrates exactly
        self.assertEqual(rk4_step(1.0, 0.0, 2.0, 2.0, 2.0, 0.5), 2.0)

    def test_arrays(self):
        result = rk4_step(np.zeros(3), -1.0, np.ones(3), np.ones(3), np.ones(3), 0.1)
        self.assertEqual(result.shape, (3,))


class TestIntegrateLoop(TestCase):
    def test_zero_forcing(self):
        params = machine([(1, 0.05), (5, 0.002)])
        result = integrate_loop(params, 100.0, SimSpec.for_operating_point(params, 100.0, 256))
        # non-circulating orders cancel around the loop up to rounding
        self.assertLess(np.max(np.abs(result.current.samples)), 1e-9)
        self.assertLess(np.max(np.abs(result.torque.samples)), 1e-9)
        self.assertTrue(result.converged)

    def test_zero_forcing_five_phase(self):
        params = machine([(1, 0.05), (2, 0.01), (7, 0.003)], n=5)
        for omega_e in (10.0, 100.0, 1000.0, 10000.0):
            result = integrate_loop(params, omega_e, SimSpec.for_operating_point(params, omega_e, 256))
            self.assertLess(np.max(np.abs(result.current.samples)), 1e-9)
            self.assertTrue(result.converged, omega_e)
            self.assertLess(result.residual_settle, 1e-6)

    def test_matches_phasor(self):
        params = machine([(3, 0.01)])
        spec = SimSpec.for_operating_point(params, 200.0, 2048)
        result = integrate_loop(params, 200.0, spec)
        self.assertTrue(result.converged)
        self.assertEqual(result.cycles, spec.settle_cycles + 1)
        self.assertEqual(len(result.current), 2048)
        self.assertLess(rms_error(params, 200.0, result), 1e-3)

    def test_torque_matches_closed_form(self):
        params = machine([(3, 0.01), (9, 0.002)])
        result = integrate_loop(params, 300.0, SimSpec.for_operating_point(params, 300.0, 1024))
        reference = torque_waveform(params, 300.0, 1024).samples
        error = float(np.sqrt(np.mean((result.torque.samples - reference) ** 2)))
        self.assertLess(error / float(np.max(np.abs(reference))), 1e-3)

    def test_initial_condition_independence(self):
        params = machine([(3, 0.01)])
        amplitude = circulating_current_phasor(params, 200.0, 3).amplitude
        spec = SimSpec.for_operating_point(params, 200.0, 512)
        zero = integrate_loop(params, 200.0, spec)
        kicked = integrate_loop(params, 200.0, replace(spec, initial_current=2 * amplitude))
        self.assertLess(np.max(np.abs(kicked.current.samples - zero.current.samples)) / amplitude, 1e-6)

    def test_unsettled_is_flagged(self):
        params = machine([(3, 0.01)])
        result = integrate_loop(params, 200.0, SimSpec(steps_per_cycle=256, settle_cycles=1))
        self.assertFalse(result.converged)
        self.assertGreater(result.residual_settle, 1e-6)

    def test_energy_balance(self):
        params = machine([(3, 0.01), (9, 0.002)])
        for omega_e in (50.0, 500.0, 5000.0):
            result = integrate_loop(params, omega_e, SimSpec.for_operating_point(params, omega_e, 1024))
            dissipated = params.R * float(np.mean(result.current.samples**2))
            mechanical = -omega_e / params.p * result.torque.mean
            self.assertLess(abs(dissipated - mechanical) / dissipated, 5e-3)

    def test_superposition(self):
        params = machine([(3, 0.01), (9, 0.002)])
        spec = SimSpec.for_operating_point(params, 500.0, 512)
        both = integrate_loop(params, 500.0, spec).current.samples
        parts = sum(integrate_loop(single_order(params, h), 500.0, spec).current.samples for h in (3, 9))
        error = np.sqrt(np.mean((both - parts) ** 2)) / np.sqrt(np.mean(both**2))
        self.assertLess(error, 1e-3)

    def test_fourth_order(self):
        params = machine([(3, 0.01)])
        # h*omega*L'/R = 1
        omega_e = 0.05 / (3 * params.loop_inductance)
        coarse = rms_error(params, omega_e, integrate_loop(params, omega_e, SimSpec(128, settle_cycles=5)))
        fine = rms_error(params, omega_e, integrate_loop(params, omega_e, SimSpec(256, settle_cycles=5)))
        self.assertGreater(coarse / fine, 12)
        self.assertLess(coarse / fine, 20)

    def test_unstable_step(self):
        params = machine([(3, 0.01)])
        with self.assertRaises(SimulationException):
            integrate_loop(params, 1.0, SimSpec(steps_per_cycle=64, settle_cycles=1))

    def test_errors(self):
        spec = SimSpec(steps_per_cycle=256, settle_cycles=5)
        with self.assertRaises(ConfigurationException):
            integrate_loop(machine([(3, 0.01)], config=WindingConfig.STAR), 100.0, spec)
        with self.assertRaises(DegenerateOperatingPointException):
            integrate_loop(machine([(3, 0.01)]), 0.0, spec)
        with self.assertRaises(SimulationException):
            integrate_loop(machine([(3, 0.01), (9, 0.002)]), 100.0, SimSpec(steps_per_cycle=32, settle_cycles=5))

    @settings(max_examples=50, deadline=None)
    @given(
        n=st.sampled_from([3, 5]),
        k=st.integers(1, 3),
        magnitude=st.floats(1e-4, 0.05),
        R=st.floats(0.01, 1.0),
        L=st.floats(1e-5, 1e-3),
        coupling=st.floats(0.0, 0.4),
    )
    def test_random_single_order(self, n, k, magnitude, R, L, coupling):
        h = k * n
        params = machine([(h, magnitude)], n=n, R=R, L=L, M=coupling * L)
        for ratio in (0.05, 0.5, 1.0, 5.0, 50.0):
            omega_e = ratio * R / (h * params.loop_inductance)
            result = integrate_loop(params, omega_e, SimSpec.for_operating_point(params, omega_e, 2048))
            self.assertLess(rms_error(params, omega_e, result), 1e-3)


if __name__ == "__main__":
    main()
