"""Synthetic test signals and the additive-noise observation model."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numerics import as_finite, gaussian_noise


@dataclass(frozen=True, eq=False)
class Signal:
    """Uniformly sampled real time series."""

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        # private copy: the caller's array stays writable and unaliased
        arr = np.array(as_finite(self.samples, "samples"), copy=True)
        if arr.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not self.fs > 0:
            raise ValueError("fs must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "fs", float(self.fs))

    def __len__(self):
        return self.samples.size

    def with_samples(self, samples):
        return Signal(samples, self.fs)


@dataclass(frozen=True)
class HarmonicComponent:
    amplitude: float
    frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError("component amplitude must be positive")
        if self.frequency < 0:
            raise ValueError("component frequency must be nonnegative")


def sum_of_sines(components: Sequence[HarmonicComponent], n: int, fs: float) -> Signal:
    """``z[k] = sum_j A_j cos(2 pi f_j k / fs + phi_j)`` for ``k = 0..n-1``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    k = np.arange(n, dtype=float)
    z = np.zeros(n)
    for c in components:
        if c.frequency >= fs / 2:
            raise ValueError(f"frequency {c.frequency} Hz aliases at fs={fs} Hz")
        z += c.amplitude * np.cos(2 * np.pi * c.frequency * k / fs + c.phase)
    return Signal(z, fs)


def commensurate_components(amplitudes, cycles, period, fs=1.0, phases=None):
    """Components with ``f_j = cycles[j] * fs / period``."""
    phases = [0.0] * len(cycles) if phases is None else phases
    return [
        HarmonicComponent(a, p * fs / period, ph)
        for a, p, ph in zip(amplitudes, cycles, phases)
    ]


def ahm_signal(n, P, p1, p2, fs, *, span=None, am_depth=0.2, fm_depth=0.01,
               chirp=20.0, base_amp=1.4):
    """Two-component AM-FM test signal.

    ``x[k] = cos(2 pi phi1[k]) + R[k] cos(2 pi phi2[k])`` with

    - ``R[k] = base_amp + am_depth * cos(4 pi k / span)``
    - ``phi1[k] = (p1/P) * (k + fm_depth/(2 pi) * cos(2 pi k / span))``
    - ``phi2[k] = p2 k / P + chirp / (2 span fs) * k**2``

    `span` is the nominal record length the modulations are laid out on;
    it defaults to `n`. Generating ``n = span + L`` samples yields the
    record plus its true continuation.
    """
    if P <= 0:
        raise ValueError("P must be positive")
    if n < 0 or p1 <= 0 or p2 <= 0:
        raise ValueError("n, p1, p2 must be positive")
    if not fs > 0:
        raise ValueError("fs must be positive")
    span = n if span is None else span
    if span <= 0:
        raise ValueError("span must be positive")
    k = np.arange(n, dtype=float)
    R = base_amp + am_depth * np.cos(4 * np.pi * k / span)
    phi1 = (p1 / P) * (k + fm_depth / (2 * np.pi) * np.cos(2 * np.pi * k / span))
    phi2 = p2 * k / P + chirp / (2 * span * fs) * k**2
    return Signal(np.cos(2 * np.pi * phi1) + R * np.cos(2 * np.pi * phi2), fs)


def add_noise(z: Signal, sigma: float, seed: int) -> Signal:
    """Observation model ``x = z + sigma * w`` with unit white Gaussian `w`."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return z
    return z.with_samples(z.samples + sigma * gaussian_noise(len(z), 1.0, seed))
