"""Fourier analysis and synthesis of the quarter-wave symmetric staircase.

A cascaded H-bridge with ``s`` equal sources steps up by ``vdc`` at each
switching angle in the first quarter cycle. Odd harmonic amplitudes are

    h(n) = 4*vdc/(n*pi) * sum_k cos(n*theta_k)

and every even harmonic vanishes.
"""
from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from .errors import DegenerateFundamentalError, DomainError

HALF_PI = 0.5 * math.pi


def _as_angles(angles):
    if isinstance(angles, SwitchingAngleSet):
        return np.asarray(angles.angles, dtype=np.float64)
    arr = np.asarray(angles, dtype=np.float64).ravel()
    if arr.size < 1:
        raise DomainError("at least one switching angle is required")
    if not np.all(np.isfinite(arr)):
        raise DomainError("switching angles must be finite")
    return arr


@dataclass(frozen=True)
class SwitchingAngleSet:
    """Firing angles in radians, strictly ascending inside (0, pi/2)."""

    angles: tuple

    def __post_init__(self):
        arr = np.asarray(self.angles, dtype=np.float64).ravel()
        if arr.size < 1:
            raise DomainError("at least one switching angle is required")
        if not np.all(np.isfinite(arr)):
            raise DomainError("switching angles must be finite")
        if arr[0] <= 0.0 or arr[-1] >= HALF_PI:
            raise DomainError("switching angles must lie strictly inside (0, pi/2)")
        if np.any(np.diff(arr) <= 0.0):
            raise DomainError("switching angles must be strictly ascending")
        object.__setattr__(self, "angles", tuple(float(a) for a in arr))

    @property
    def s(self):
        return len(self.angles)

    @classmethod
    def from_degrees(cls, degrees):
        return cls(tuple(np.radians(np.asarray(degrees, dtype=np.float64))))

    def degrees(self):
        return np.degrees(np.asarray(self.angles))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.angles, dtype=dtype)

    def __len__(self):
        return len(self.angles)


@dataclass(frozen=True)
class WaveformTrace:
    sample_rate: float
    samples: np.ndarray
    fundamental_freq: float

    @property
    def time(self):
        return np.arange(len(self.samples)) / self.sample_rate

    @property
    def n_cycles(self):
        return len(self.samples) * self.fundamental_freq / self.sample_rate


def level_count(s):
    """Output levels of a cascade of ``s`` H-bridges: 2s + 1."""
    if s < 1:
        raise DomainError("bridge count must be >= 1")
    return 2 * s + 1


def bridges_for_levels(levels):
    """H-bridges needed for an ``levels``-level inverter: (levels - 1) / 2."""
    if levels < 3 or levels % 2 == 0:
        raise DomainError("level count must be odd and >= 3")
    return (levels - 1) // 2


def harmonic_amplitude(angles, vdc, n):
    """Signed amplitude of harmonic ``n`` of the staircase; exactly 0 for even ``n``."""
    if int(n) != n or n < 1:
        raise DomainError(f"harmonic order must be an integer >= 1, got {n}")
    n = int(n)
    if n % 2 == 0:
        return 0.0
    theta = _as_angles(angles)
    return 4.0 * vdc / (n * math.pi) * float(np.sum(np.cos(n * theta)))


def harmonic_amplitudes(angles, vdc, max_order):
    """h(1..max_order) as an array (index 0 is the fundamental)."""
    theta = _as_angles(angles)
    orders = np.arange(1, max_order + 1)
    h = 4.0 * vdc / (orders * math.pi) * np.cos(np.outer(orders, theta)).sum(axis=1)
    h[1::2] = 0.0
    return h


def modulation_index_from_fundamental(v1, vdc, s):
    """Per-unit modulation index m = pi*V1 / (4*s*vdc)."""
    if vdc <= 0 or s < 1 or v1 < 0:
        raise DomainError("need vdc > 0, s >= 1 and v1 >= 0")
    return math.pi * v1 / (4.0 * s * vdc)


def fundamental_from_modulation_index(m, vdc, s):
    return 4.0 * s * vdc * m / math.pi


def analytic_thd(angles, max_order=49):
    """THD (fraction) from the closed-form harmonic amplitudes, orders 2..max_order."""
    if max_order < 1:
        raise DomainError("max_order must be >= 1")
    theta = _as_angles(angles)
    h = harmonic_amplitudes(theta, 1.0, max_order)
    # cos(pi/2) is ~6e-17 in floating point, so "zero" needs a tolerance
    if abs(h[0]) <= 1e-12 * theta.size:
        raise DegenerateFundamentalError("fundamental amplitude is zero")
    return math.sqrt(float(np.sum(h[1:] ** 2))) / abs(h[0])


def _exact_ratio(num, den):
    return Fraction(str(float(num))) / Fraction(str(float(den)))


def sample_count(f0, sample_rate, n_cycles):
    """Samples spanning exactly ``n_cycles`` fundamental periods, or DomainError."""
    n = _exact_ratio(sample_rate, f0) * int(n_cycles)
    if n.denominator != 1:
        raise DomainError(
            f"{n_cycles} cycles at f0={f0} Hz do not span an integer number of samples at {sample_rate} Hz"
        )
    return int(n)


def cycle_fraction(n_samples, freq, sample_rate):
    """Exact-rational phase of ``freq`` at each sample, as (numerator, denominator).

    Sample i sits at fraction ``numerator[i] / denominator`` of its cycle; the
    integer form keeps symmetric samples bit-identical.
    """
    ratio = _exact_ratio(freq, sample_rate)
    p, q = ratio.numerator, ratio.denominator
    i = np.arange(n_samples, dtype=np.int64)
    return (i * (p % q)) % q, q


def folded_phase(n_samples, f0, sample_rate):
    """Per-sample half-wave sign (+1/-1) and quarter-wave folded angle in [0, pi/2]."""
    num, den = cycle_fraction(n_samples, f0, sample_rate)
    z = 4 * num  # one cycle == 4*den
    sign = np.where(z < 2 * den, 1, -1).astype(np.int8)
    w = z % (2 * den)
    w = np.where(w <= den, w, 2 * den - w)
    return sign, HALF_PI * (w / den)


def staircase_levels(angles, sign, folded):
    theta = np.asarray(angles, dtype=np.float64)
    count = np.searchsorted(theta, folded, side="right")
    return (sign * count).astype(np.int8)


def synthesize_staircase(angles, vdc, f0, sample_rate, n_cycles=1):
    """Sample the multilevel staircase over ``n_cycles`` fundamental cycles.

    On [0, pi/2] the output is ``vdc`` times the number of angles at or below
    the phase; quarter- and half-wave symmetry fill the rest of the cycle.
    """
    if not isinstance(angles, SwitchingAngleSet):
        angles = SwitchingAngleSet(tuple(_as_angles(angles)))
    if sample_rate < 200 * f0:
        raise DomainError("sample_rate must be at least 200 * f0")
    if n_cycles < 1:
        raise DomainError("n_cycles must be >= 1")
    n = sample_count(f0, sample_rate, n_cycles)
    sign, folded = folded_phase(n, f0, sample_rate)
    levels = staircase_levels(angles.angles, sign, folded)
    return WaveformTrace(float(sample_rate), vdc * levels.astype(np.float64), float(f0))
