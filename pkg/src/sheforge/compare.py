"""Side-by-side THD of open-loop SPWM, PI closed loop and NN-angle SHE."""
from dataclasses import dataclass
import os

import numpy as np

from . import __version__, svg
from .ann import predict_angles
from .formats import fmt, write_spectrum, write_trace
from .simulator import (
    InverterConfig,
    PiGains,
    SimulationTrace,
    simulate_closed_loop_pi,
    simulate_open_loop_spwm,
    simulate_she,
)
from .spectrum import harmonic_spectrum, thd

THD_ORDERS = (13, 49, 200)
ANALYSIS_CYCLES = 10
PI_SETTLE_CYCLES = 30

COMPARE_HEADER = ["strategy", "m", "fundamental_V", "v_rms_V",
                  *[f"thd{n}_pct" for n in THD_ORDERS], "seed", "tool_version"]


@dataclass
class StrategyResult:
    strategy: str
    m: float
    trace: SimulationTrace
    spectrum: object
    thd: dict

    @property
    def fundamental(self):
        return self.spectrum[1]

    def row(self, seed):
        return [self.strategy, fmt(self.m), fmt(self.fundamental), fmt(self.trace.rms()),
                *[fmt(100.0 * self.thd[n]) for n in THD_ORDERS], str(seed), __version__]


def _tail(trace, cycles):
    total = round(len(trace.voltage) * trace.f0 / trace.sample_rate)
    sl = slice(len(trace.voltage) - len(trace.voltage) * cycles // total, None)
    return SimulationTrace(trace.sample_rate, trace.f0, trace.voltage[sl], trace.current[sl],
                           trace.level_index[sl], trace.m_trajectory[sl], trace.strategy)


def _analyze(name, m, trace):
    spec = harmonic_spectrum(trace.waveform("voltage"), max_order=max(THD_ORDERS))
    return StrategyResult(name, m, trace, spec, {n: thd(spec, n) for n in THD_ORDERS})


def compare(config=None, m=0.9, gains=None, model=None):
    """Run the three strategies at modulation index ``m``.

    The PI loop is asked for the RMS voltage the open-loop modulator delivers
    at ``m`` and is analyzed over its last ``ANALYSIS_CYCLES`` cycles after
    settling. Raises whatever the first failing sub-run raises.
    """
    config = InverterConfig() if config is None else config
    gains = PiGains() if gains is None else gains
    if model is None:
        raise ValueError("a trained angle model is required")
    T = ANALYSIS_CYCLES / config.f0
    angles = predict_angles(model, m)
    spwm = simulate_open_loop_spwm(config, m, T)
    pi = simulate_closed_loop_pi(config, spwm.rms(), gains,
                                 (PI_SETTLE_CYCLES + ANALYSIS_CYCLES) / config.f0)
    pi_tail = _tail(pi, ANALYSIS_CYCLES)
    she = simulate_she(config, angles, T, m=m)
    return [
        _analyze("spwm_open_loop", m, spwm),
        _analyze("spwm_pi", float(pi_tail.m_trajectory[-1]), pi_tail),
        _analyze("she_nn", m, she),
    ], angles


def write_report(out_dir, results, seed, plots=False):
    """compare.csv plus one trace and spectrum CSV per strategy; returns paths written."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    report = os.path.join(out_dir, "compare.csv")
    with open(report, "w", newline="") as fh:
        fh.write(",".join(COMPARE_HEADER) + "\n")
        for r in results:
            fh.write(",".join(r.row(seed)) + "\n")
    paths.append(report)
    for r in results:
        sp = os.path.join(out_dir, f"spectrum_{r.strategy}.csv")
        write_spectrum(sp, r.spectrum, r.thd[max(THD_ORDERS)], max(THD_ORDERS))
        tr = os.path.join(out_dir, f"trace_{r.strategy}.csv")
        write_trace(tr, r.trace)
        paths += [sp, tr]
        if plots:
            paths += plot_result(out_dir, r)
    return paths


def plot_result(out_dir, result):
    wave = os.path.join(out_dir, f"waveform_{result.strategy}.svg")
    one_cycle = int(round(result.trace.sample_rate / result.trace.f0))
    t = result.trace.time[:one_cycle] * 1e3
    svg.line_chart(wave, [(t, result.trace.voltage[:one_cycle], "v_out")],
                   title=f"Output voltage, {result.strategy}", xlabel="time (ms)",
                   ylabel="voltage (V)", step=True)
    bars = os.path.join(out_dir, f"spectrum_{result.strategy}.svg")
    h = result.spectrum.magnitudes
    svg.bar_chart(bars, result.spectrum.orders, 100.0 * h / h[0],
                  title=f"Harmonic spectrum, {result.strategy} "
                        f"(THD{max(THD_ORDERS)} = {100 * result.thd[max(THD_ORDERS)]:.2f}%)",
                  xlabel="harmonic order", ylabel="% of fundamental")
    return [wave, bars]


def table_plots(out_dir, table, prefix="table"):
    """Modulation index vs angles, and vs THD, for an angle table."""
    m = table.m_values()
    ang = np.array([r.angles_deg for r in table.rows], dtype=float).reshape(len(m), table.s)
    thd_col = np.array([r.thd_pct for r in table.rows], dtype=float)
    a = os.path.join(out_dir, f"{prefix}_angles.svg")
    svg.line_chart(a, [(m, ang[:, k], f"theta{k + 1}") for k in range(table.s)],
                   title="Switching angles vs modulation index", xlabel="m (per unit)",
                   ylabel="angle (deg)")
    b = os.path.join(out_dir, f"{prefix}_thd.svg")
    svg.line_chart(b, [(m, thd_col, "THD")], title="THD vs modulation index",
                   xlabel="m (per unit)", ylabel="THD (%)")
    return [a, b]


