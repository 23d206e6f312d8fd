"""Acceptance gate: one PASS/FAIL line per criterion, printed in the pytest summary."""
import math
import time

import numpy as np
import pytest

from sheforge import ann
from sheforge.cli import run_cli
from sheforge.compare import compare
from sheforge.errors import SheforgeError
from sheforge.formats import load_reference_table
from sheforge.harmonics import analytic_thd, synthesize_staircase
from sheforge.simulator import (
    PiGains,
    cycle_rms,
    simulate_closed_loop_pi,
    simulate_open_loop_spwm,
    simulate_she,
)
from sheforge.solver import FLAG_M_RANGE, audit_table, newton_solve, residual_vector, sweep_solutions
from sheforge.spectrum import harmonic_spectrum, thd

pytestmark = pytest.mark.acceptance

RESULTS = {}


def report(n, title, checks):
    """Record criterion ``n``; ``checks`` is a list of (ok, detail)."""
    ok = all(c for c, _ in checks)
    detail = "; ".join(d if c else f"NOT MET {d}" for c, d in checks)
    RESULTS[n] = f"criterion {n} [{title}]: {'PASS' if ok else 'FAIL'} ({detail})"
    print(RESULTS[n])
    assert ok, RESULTS[n]


def _solved(m, hset):
    sol = newton_solve(m, hset)
    r = residual_vector(sol.angles, m, hset)
    deg = sol.degrees()
    good = (sol.converged and np.max(np.abs(r)) < 1e-9
            and 0 < deg[0] and deg[-1] < 90 and bool(np.all(np.diff(deg) > 0)))
    return sol, float(np.max(np.abs(r))), good


def test_criterion_1_solver(hset):
    checks = []
    for m in np.round(np.arange(0.55, 0.9001, 0.05), 2):
        _, res, good = _solved(float(m), hset)
        checks.append((good, f"m={m:.2f} residual={res:.2e}"))
    sweep_solutions(0.55, 0.90, 0.01, hset)  # warm-up
    start = time.perf_counter()
    sweep_solutions(0.55, 0.90, 0.01, hset)
    elapsed = time.perf_counter() - start
    checks.append((elapsed < 1.0, f"sweep step 0.01 took {elapsed:.2f} s"))
    report(1, "solver correctness", checks)


def test_criterion_2_table_audit(hset):
    table = load_reference_table()
    rep = audit_table(table, hset)
    flagged = [r.m for r in rep.rows if FLAG_M_RANGE in r.flags]
    row = next(r for r in rep.rows if r.m == 0.9)
    r5 = row.to_dict()["residual_3sf"][1]
    report(2, "reference table audit", [
        (len(table) == 12, f"{len(table)} rows ingested"),
        (flagged == [8.81], f"m-range flags on {flagged}"),
        (abs(float(r5)) > 0.1, f"m=0.9 sum cos(5 theta) = {r5}"),
    ])


def test_criterion_3_cross_method_thd(hset):
    checks = []
    for m in (0.6, 0.7, 0.8, 0.9):
        sol, res, good = _solved(m, hset)
        if not good:
            checks.append((False, f"m={m}: no converged angles (residual {res:.3g})"))
            continue
        tr = synthesize_staircase(sol.angles, 10.0, 50.0, 200_000.0, n_cycles=10)
        num = 100 * thd(harmonic_spectrum(tr, max_order=49))
        ana = 100 * analytic_thd(sol.angles, 49)
        checks.append((abs(num - ana) < 0.2, f"m={m}: |{num:.4f} - {ana:.4f}| pp"))
    report(3, "cross-method THD", checks)


def test_criterion_4_suppression(hset, config):
    checks = []
    for m in (0.6, 0.7, 0.8):
        sol = newton_solve(m, hset)
        sp = harmonic_spectrum(simulate_she(config, sol.angle_set, 0.2).waveform(), max_order=11)
        worst = max(sp[n] / sp[1] for n in (5, 7, 11))
        checks.append((sol.converged and worst < 0.005, f"m={m}: max h5,h7,h11 = {100 * worst:.2e}% of h1"))
    report(4, "eliminated-harmonic suppression", checks)


def test_criterion_5_surrogate(surrogate, rng):
    model, held = surrogate
    worst_deg, worst_pp = 0.0, -math.inf
    for m, target in zip(held.m, held.angles):
        pred = ann.predict_angles(model, m)
        worst_deg = max(worst_deg, float(np.degrees(np.max(np.abs(np.array(pred.angles) - target)))))
        worst_pp = max(worst_pp, 100 * (analytic_thd(pred, 49) - analytic_thd(target, 49)))
    net = ann.init_mlp((1, 16, 4), 0)
    for b in net.biases:
        b[:] = rng.normal(scale=0.3, size=b.shape)
    grad = max(ann.gradient_check(net, (rng.uniform(-1, 1, 1), rng.uniform(-1, 1, 4)), 1e-5)
               for _ in range(3))
    report(5, "ANN surrogate", [
        (worst_deg < 0.5, f"{len(held)} held-out points, worst angle error {worst_deg:.3f} deg"),
        (worst_pp < 0.3, f"worst THD49 penalty {worst_pp:.3f} pp"),
        (grad < 1e-4, f"gradient check {grad:.2e}"),
    ])


@pytest.fixture(scope="module")
def full_model(ann_sweep):
    model = ann.init_mlp(ann.surrogate_layers(4), seed=0)
    model, _ = ann.train(model, ann.TrainingDataset.from_table(ann_sweep), ann.SURROGATE_EPOCHS,
                         ann.SURROGATE_LR, target_scaling=ann.SURROGATE_SCALING)
    return model


def test_criterion_6_ranking(full_model, config):
    def run(m):
        start = time.perf_counter()
        results, _ = compare(config, m, PiGains(), full_model)
        by = {r.strategy: r for r in results}
        she49, spwm200 = 100 * by["she_nn"].thd[49], 100 * by["spwm_open_loop"].thd[200]
        return [
            (len(results) == 3, f"m={m}: 3 strategy rows"),
            (she49 < spwm200, f"m={m}: SHE THD49 {she49:.2f}% vs SPWM THD200 {spwm200:.2f}%"),
            (time.perf_counter() - start < 10.0, f"m={m}: compare took {time.perf_counter() - start:.2f} s"),
        ]

    try:
        checks = run(0.9)
    except SheforgeError as exc:
        # still fails; the run at the top of the trained range is reported for context only
        hi = full_model.train_range[1]
        context = "; ".join(d for _, d in run(hi))
        checks = [(False, f"compare at m=0.9 failed: {exc}"), (True, f"context only, {context}")]
    report(6, "strategy ranking", checks)


def test_criterion_7_spwm_linearity(config):
    checks = []
    for m in (0.4, 0.6, 0.8, 1.0):
        h1 = harmonic_spectrum(simulate_open_loop_spwm(config, m, 0.2).waveform(), max_order=1)[1]
        ratio = h1 / (m * 40.0)
        checks.append((abs(ratio - 1) < 0.02, f"m={m}: h1/(m s vdc) = {ratio:.4f}"))
    report(7, "SPWM linearity", checks)


def test_criterion_8_pi(config):
    pi = simulate_closed_loop_pi(config, 25.0, duration=0.5)
    rms = cycle_rms(pi)
    settled = next((k for k in range(len(rms)) if np.all(np.abs(rms[k:] - 25.0) <= 0.5)), None)
    zero = simulate_closed_loop_pi(config, 25.0, PiGains(0.0, 0.0), duration=0.2, m_init=0.5)
    open_loop = simulate_open_loop_spwm(config, 0.5, 0.2)
    report(8, "PI loop", [
        (settled is not None, f"final cycle RMS {rms[-1]:.3f} V, within 2% from cycle {settled}"),
        (np.array_equal(zero.voltage, open_loop.voltage), "kp=ki=0 equals open loop"),
    ])


def _snapshot(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_9_determinism(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    runs = {
        "solve": ["solve", "--m", "0.8", "--out", "solve/sol.json"],
        "sweep": ["sweep", "--from", "0.6", "--to", "0.9", "--step", "0.01", "--out", "sweep/t.csv"],
        "audit": ["audit", "--out", "audit/a.json"],
        "train": ["train", "--epochs", "500", "--hidden", "8", "--out", "train/model.json"],
        "predict": ["predict", "--model", "train/model.json", "--m", "0.8", "--out", "predict/p.json"],
        "simulate": ["simulate", "--strategy", "pi", "--duration", "0.2", "--out", "simulate/pi.csv"],
        "spectrum": ["spectrum", "--trace", "simulate/pi.csv", "--max-order", "200", "--out", "spectrum/s.csv"],
        "compare": ["compare", "--model", "train/model.json", "--m", "0.8", "--out-dir", "compare", "--svg"],
        "plot": ["plot", "--kind", "table", "--input", "sweep/t.csv", "--out-dir", "plot"],
    }
    checks = []
    for name, argv in runs.items():
        if run_cli(argv) != 0:
            checks.append((False, f"{name} exited non-zero"))
            continue
        d = tmp_path / name
        before = _snapshot(d)
        manifest = next(str(p) for p in d.glob("*manifest.json"))
        for p in d.iterdir():
            if not p.name.endswith("manifest.json"):
                p.unlink()
        code = run_cli(["replay", manifest])
        checks.append((code == 0 and _snapshot(d) == before, f"{name}: {len(before)} files"))
    report(9, "determinism", checks)
