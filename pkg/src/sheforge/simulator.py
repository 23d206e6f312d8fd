"""Behavioral time-domain model of a cascaded H-bridge inverter.

Switches are ideal: each bridge outputs +vdc, 0 or -vdc and the load is a
pure resistor. Three gating schemes are modelled: phase-disposition SPWM,
fundamental-frequency SHE gating, and SPWM whose modulation index is set
once per cycle by a velocity-form PI loop on the output RMS voltage.
"""
from dataclasses import asdict, dataclass, field
import math

import numpy as np

from . import kernels
from .errors import DomainError
from .harmonics import (
    SwitchingAngleSet,
    WaveformTrace,
    cycle_fraction,
    folded_phase,
    level_count,
    sample_count,
)

DEFAULT_SAMPLE_RATE = 200_000.0


@dataclass(frozen=True)
class InverterConfig:
    """Defaults are the nine-level test rig: 4 x 10 V, 5 kHz carriers, 100 ohm."""

    s: int = 4
    vdc: tuple = (10.0, 10.0, 10.0, 10.0)
    f0: float = 50.0
    carrier_freq: float = 5_000.0
    load_resistance: float = 100.0
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        if self.s < 1:
            raise DomainError("s must be >= 1")
        vdc = self.vdc
        if np.isscalar(vdc):
            vdc = (float(vdc),) * self.s
        vdc = tuple(float(v) for v in vdc)
        if len(vdc) != self.s:
            raise DomainError(f"expected {self.s} DC source voltages, got {len(vdc)}")
        if any(not v > 0 for v in vdc):
            raise DomainError("DC source voltages must be positive")
        if not self.f0 > 0:
            raise DomainError("f0 must be positive")
        if not self.carrier_freq > 2 * self.f0:
            raise DomainError("carrier_freq must exceed 2 * f0")
        if not self.load_resistance > 0:
            raise DomainError("load_resistance must be positive")
        object.__setattr__(self, "vdc", vdc)

    @property
    def levels(self):
        return level_count(self.s)

    @property
    def equal_sources(self):
        return len(set(self.vdc)) == 1

    @property
    def peak_voltage(self):
        return math.fsum(self.vdc)

    def to_dict(self):
        d = asdict(self)
        d["vdc"] = list(self.vdc)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise DomainError(f"unknown config fields: {sorted(unknown)}")
        if "vdc" in known and not np.isscalar(known["vdc"]):
            known["vdc"] = tuple(known["vdc"])
        return cls(**known)


@dataclass(frozen=True)
class PiGains:
    """Velocity-form PI acting on the modulation index.

    ``kp`` is per volt of RMS error, ``ki`` per volt-second.
    """

    kp: float = 0.004
    ki: float = 1.0
    m_min: float = 0.0
    m_max: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.m_min < self.m_max <= 1.0):
            raise DomainError("need 0 <= m_min < m_max <= 1")


@dataclass
class SimulationTrace:
    sample_rate: float
    f0: float
    voltage: np.ndarray
    current: np.ndarray
    level_index: np.ndarray
    m_trajectory: np.ndarray
    strategy: str = ""
    cycle_m: np.ndarray = field(default=None, repr=False)

    @property
    def time(self):
        return np.arange(len(self.voltage)) / self.sample_rate

    def waveform(self, channel="voltage"):
        return WaveformTrace(self.sample_rate, getattr(self, channel), self.f0)

    def rms(self, channel="voltage"):
        x = getattr(self, channel)
        return math.sqrt(float(np.mean(x * x)))


def _check_duration(config, duration):
    cycles = duration * config.f0
    n = round(cycles)
    if n < 1 or abs(cycles - n) > 1e-9 * max(1.0, cycles):
        raise DomainError(f"duration {duration} s is not an integer number of {config.f0} Hz cycles")
    return int(n)


def _sample_rate(config, sample_rate):
    fs = config.sample_rate if sample_rate is None else float(sample_rate)
    if fs < 20 * config.carrier_freq:
        raise DomainError("sample_rate must be at least 20 * carrier_freq")
    return fs


def _triangle(u):
    # unit triangle starting at 0, peak 1 at half period
    return 1.0 - np.abs(2.0 * u - 1.0)


def _voltage_from_levels(config, level):
    if config.equal_sources:
        return level * config.vdc[0]
    cum = np.concatenate([[0.0], np.cumsum(config.vdc)])
    return np.sign(level) * cum[np.abs(level).astype(np.intp)]


def _finish(config, fs, level, m_traj, strategy, cycle_m=None):
    voltage = _voltage_from_levels(config, level.astype(np.float64))
    return SimulationTrace(fs, config.f0, voltage, voltage / config.load_resistance,
                           level, m_traj, strategy, cycle_m)


def spwm_level(m, t, config):
    """SPWM output level at a single instant ``t``."""
    if not 0.0 <= m <= 1.0:
        raise DomainError("modulation index must be in [0, 1]")
    ref = m * config.s * math.sin(2.0 * math.pi * ((config.f0 * t) % 1.0))
    carrier = float(_triangle((config.carrier_freq * t) % 1.0))
    return int(kernels.spwm_levels(np.array([ref]), np.array([carrier]), config.s)[0])


class _SpwmClock:
    """Reference sine and carrier sampled with exact rational phases."""

    def __init__(self, config, n, fs):
        num, den = cycle_fraction(n, config.f0, fs)
        self.sine = np.sin(2.0 * math.pi * (num / den))
        cnum, cden = cycle_fraction(n, config.carrier_freq, fs)
        self.carrier = _triangle(cnum / cden)
        self.s = config.s

    def levels(self, m, lo=0, hi=None):
        ref = np.ascontiguousarray(m * self.s * self.sine[lo:hi])
        return kernels.spwm_levels(ref, np.ascontiguousarray(self.carrier[lo:hi]), self.s)


def simulate_open_loop_spwm(config, m, duration, sample_rate=None):
    if not 0.0 <= m <= 1.0:
        raise DomainError("modulation index must be in [0, 1]")
    cycles = _check_duration(config, duration)
    fs = _sample_rate(config, sample_rate)
    n = sample_count(config.f0, fs, cycles)
    level = _SpwmClock(config, n, fs).levels(m)
    return _finish(config, fs, level, np.full(n, float(m)), "spwm_open_loop")


def simulate_she(config, angles, duration, sample_rate=None, m=None):
    """Fundamental-frequency gating: bridge k is on for theta_k <= phase <= pi - theta_k.

    ``m`` only labels the trace's ``m_trajectory``; it does not affect gating.
    """
    if not isinstance(angles, SwitchingAngleSet):
        angles = SwitchingAngleSet(tuple(angles))
    if angles.s != config.s:
        raise DomainError(f"{angles.s} angles for {config.s} bridges")
    cycles = _check_duration(config, duration)
    fs = _sample_rate(config, sample_rate)
    n = sample_count(config.f0, fs, cycles)
    sign, folded = folded_phase(n, config.f0, fs)
    voltage = np.zeros(n)
    count = np.zeros(n, dtype=np.int8)
    for theta, vdc in zip(angles.angles, config.vdc):
        gate = folded >= theta
        voltage += vdc * gate
        count += gate
    voltage *= sign
    level = sign * count
    return SimulationTrace(fs, config.f0, voltage, voltage / config.load_resistance,
                           level, np.full(n, math.nan if m is None else float(m)), "she")


def simulate_closed_loop_pi(config, v_ref_rms, gains=None, duration=0.5, sample_rate=None, m_init=0.5):
    """SPWM with the modulation index updated once per fundamental cycle.

    After each cycle the error e = v_ref_rms - rms(cycle) drives
    m <- clamp(m + kp*(e - e_prev) + ki*T0*e, m_min, m_max).
    """
    if v_ref_rms < 0:
        raise DomainError("v_ref_rms must be >= 0")
    gains = PiGains() if gains is None else gains
    cycles = _check_duration(config, duration)
    fs = _sample_rate(config, sample_rate)
    n = sample_count(config.f0, fs, cycles)
    clock = _SpwmClock(config, n, fs)
    bounds = [(c * n) // cycles for c in range(cycles + 1)]
    T0 = 1.0 / config.f0
    level = np.empty(n, dtype=np.int8)
    m_traj = np.empty(n)
    cycle_m = np.empty(cycles)
    m = min(max(float(m_init), gains.m_min), gains.m_max)
    e_prev = 0.0
    for c in range(cycles):
        lo, hi = bounds[c], bounds[c + 1]
        level[lo:hi] = clock.levels(m, lo, hi)
        m_traj[lo:hi] = m
        cycle_m[c] = m
        v = _voltage_from_levels(config, level[lo:hi].astype(np.float64))
        e = v_ref_rms - math.sqrt(float(np.mean(v * v)))
        m = m + gains.kp * (e - e_prev) + gains.ki * T0 * e
        m = min(max(m, gains.m_min), gains.m_max)
        e_prev = e
    return _finish(config, fs, level, m_traj, "spwm_pi", cycle_m)


def cycle_rms(trace, channel="voltage"):
    """RMS of each fundamental cycle of a trace."""
    x = getattr(trace, channel)
    cycles = round(len(x) * trace.f0 / trace.sample_rate)
    bounds = [(c * len(x)) // cycles for c in range(cycles + 1)]
    return np.array([math.sqrt(float(np.mean(x[a:b] ** 2))) for a, b in zip(bounds[:-1], bounds[1:])])
