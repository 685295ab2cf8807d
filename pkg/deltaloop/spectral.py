#!/usr/bin/env python
"""
Harmonic decomposition of periodic waveforms sampled over one electrical cycle.

Samples sit on the uniform grid theta_k = 2*pi*k/N, k = 0..N-1. A decomposition holds the
mean value and, for each electrical order m, a magnitude and a phase such that

    x(theta) = dc + sum_m magnitude_m * sin(m * theta + phase_m)

with phase in (-pi, pi]. Projection is direct (one pass per order), exact on the grid for
band-limited signals with max order < N/2.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional
import numpy as np
from .utils import ArgumentException, UNIT_AMPERE, UNIT_NEWTON_METER, UNIT_VOLT

__all__ = [
    "decompose",
    "synthesize",
    "theta_grid",
    "AliasingException",
    "HarmonicComponent",
    "HarmonicDecomposition",
    "Waveform",
]

MIN_SAMPLES = 4
UNITS = (UNIT_AMPERE, UNIT_NEWTON_METER, UNIT_VOLT)


class AliasingException(ArgumentException):
    kind = "aliasing"


def theta_grid(samples: int) -> np.ndarray:
    "Electrical positions of a uniformly sampled cycle"
    if isinstance(samples, bool) or not isinstance(samples, (int, np.integer)) or samples < MIN_SAMPLES:
        raise ArgumentException("samples must be an integer >= {}, got {!r}".format(MIN_SAMPLES, samples))
    return 2.0 * np.pi * np.arange(samples) / samples


@dataclass(frozen=True, eq=False)
class Waveform:
    samples: np.ndarray
    unit: str

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or len(samples) < MIN_SAMPLES:
            raise ArgumentException("a waveform needs at least {} samples".format(MIN_SAMPLES))
        if self.unit not in UNITS:
            raise ArgumentException("unknown unit {!r}".format(self.unit))
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def theta(self) -> np.ndarray:
        return theta_grid(len(self.samples))

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.samples**2)))

    def __sub__(self, other: "Waveform") -> "Waveform":
        if other.unit != self.unit or len(other) != len(self):
            raise ArgumentException("waveforms differ in unit or length")
        return Waveform(self.samples - other.samples, self.unit)


@dataclass(frozen=True)
class HarmonicComponent:
    order: int
    magnitude: float
    phase: float  # rad, component = magnitude * sin(order * theta + phase)


@dataclass(frozen=True)
class HarmonicDecomposition:
    dc: float
    components: List[HarmonicComponent] = field(default_factory=list)

    @property
    def max_order(self) -> int:
        return max((x.order for x in self.components), default=0)

    def component(self, order: int) -> Optional[HarmonicComponent]:
        for item in self.components:
            if item.order == order:
                return item
        return None

    def magnitude(self, order: int) -> float:
        "Magnitude at the given order, the absolute mean for order 0"
        if order == 0:
            return abs(self.dc)
        item = self.component(order)
        return item.magnitude if item is not None else 0.0

    def dominant(self) -> float:
        "Largest magnitude among the dc term and all components"
        return max([abs(self.dc)] + [x.magnitude for x in self.components])


def _wrap_phase(phase: float) -> float:
    if phase <= -math.pi:
        phase += 2.0 * math.pi
    return phase


def decompose(w: Waveform, m_max: int) -> HarmonicDecomposition:
    "Project a sampled cycle on orders 1..m_max"
    n = len(w)
    if m_max < 0 or 2 * m_max >= n:
        raise AliasingException("m_max must satisfy 0 <= m_max < N/2, got m_max={} N={}".format(m_max, n))
    theta = w.theta
    x = w.samples
    orders = np.arange(1, m_max + 1)
    angles = np.outer(orders, theta)
    a = 2.0 / n * np.cos(angles) @ x
    b = 2.0 / n * np.sin(angles) @ x
    components = [
        HarmonicComponent(
            order=int(m),
            magnitude=float(math.hypot(am, bm)),
            phase=_wrap_phase(math.atan2(am, bm)),
        )
        for m, am, bm in zip(orders, a, b)
    ]
    return HarmonicDecomposition(dc=float(np.mean(x)), components=components)


def synthesize(d: HarmonicDecomposition, samples: int, unit: str = UNIT_AMPERE) -> Waveform:
    "Rebuild a sampled cycle from its decomposition"
    if samples < MIN_SAMPLES or 2 * d.max_order >= samples:
        raise AliasingException(
            "{} samples cannot carry order {}, need at least {} and more than twice the order".format(
                samples, d.max_order, MIN_SAMPLES
            )
        )
    theta = theta_grid(samples)
    x = np.full(samples, d.dc, dtype=float)
    for item in d.components:
        x += item.magnitude * np.sin(item.order * theta + item.phase)
    return Waveform(x, unit)
