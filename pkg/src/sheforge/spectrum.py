"""Harmonic magnitudes of cycle-exact records by synchronous projection.

Each order n is obtained by correlating the record with cos/sin at n*f0
over the whole record (rectangular window). Because the record spans an
integer number of cycles the projection has no leakage, and the phase of
every sample is an exact integer index into one precomputed table.
"""
from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from . import kernels
from .errors import DegenerateFundamentalError, DomainError
from .harmonics import WaveformTrace


@dataclass(frozen=True)
class HarmonicSpectrum:
    """Peak-amplitude magnitudes for orders 1..N (``magnitudes[0]`` is h1)."""

    f0: float
    magnitudes: np.ndarray
    phase: np.ndarray
    dc: float = 0.0

    @property
    def max_order(self):
        return len(self.magnitudes)

    def __getitem__(self, order):
        if order < 1 or order > self.max_order:
            raise IndexError(order)
        return float(self.magnitudes[order - 1])

    @property
    def orders(self):
        return np.arange(1, self.max_order + 1)


def _record_cycles(n_samples, f0, sample_rate):
    cycles = Fraction(str(float(f0))) * n_samples / Fraction(str(float(sample_rate)))
    if cycles.denominator != 1 or cycles == 0:
        raise DomainError(
            f"record of {n_samples} samples at {sample_rate} Hz is not an integer number of {f0} Hz cycles"
        )
    return int(cycles)


def harmonic_spectrum(samples, f0=None, max_order=49, sample_rate=None):
    """Project ``samples`` onto harmonics 1..max_order of ``f0``.

    ``samples`` may be a :class:`WaveformTrace` (then ``f0`` and
    ``sample_rate`` default to the trace's own values) or a bare array.
    A pure sine of amplitude A yields magnitude A at its order.
    """
    if isinstance(samples, WaveformTrace):
        f0 = samples.fundamental_freq if f0 is None else f0
        sample_rate = samples.sample_rate if sample_rate is None else sample_rate
        samples = samples.samples
    if f0 is None or sample_rate is None:
        raise DomainError("f0 and sample_rate are required for raw sample arrays")
    if max_order < 1:
        raise DomainError("max_order must be >= 1")
    if not sample_rate > 2.0 * f0 * max_order:
        raise DomainError(
            f"sample_rate {sample_rate} Hz cannot resolve order {max_order} of {f0} Hz"
        )
    x = np.ascontiguousarray(samples, dtype=np.float64)
    L = x.shape[0]
    cycles = _record_cycles(L, f0, sample_rate)
    grid = 2.0 * math.pi * np.arange(L) / L
    a, b = kernels.project_harmonics(x, np.cos(grid), np.sin(grid), cycles, int(max_order))
    return HarmonicSpectrum(
        f0=float(f0),
        magnitudes=np.hypot(a, b),
        phase=np.arctan2(a, b),
        dc=float(np.mean(x)),
    )


def thd(spectrum, max_order=None):
    """sqrt(sum of h_n^2 for n = 2..max_order) / h_1."""
    mags = spectrum.magnitudes
    if max_order is None:
        max_order = len(mags)
    if max_order > len(mags):
        raise DomainError(f"spectrum only holds orders up to {len(mags)}")
    h1 = float(mags[0])
    if not h1 > 0.0:
        raise DegenerateFundamentalError("fundamental magnitude is zero")
    return math.sqrt(float(np.sum(mags[1:max_order] ** 2))) / h1
