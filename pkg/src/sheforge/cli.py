"""``sheforge`` command line.

Exit codes: 0 success, 1 domain or numerical error (one JSON line on
stderr), 2 usage error. Every command that writes files also writes a run
manifest that ``sheforge replay`` can re-execute.
"""
import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from . import ann, compare as cmp
from .errors import DomainError, FormatError, SheforgeError
from .formats import (
    audit_sidecar_path,
    infer_sample_rate,
    ingest_angle_table,
    load_reference_table,
    read_columns,
    read_json,
    write_angle_table,
    write_json,
    write_spectrum,
    write_trace,
)
from .harmonics import SwitchingAngleSet, analytic_thd
from .manifest import RunManifest, manifest_path_for, resolve_seed
from .simulator import (
    InverterConfig,
    PiGains,
    simulate_closed_loop_pi,
    simulate_open_loop_spwm,
    simulate_she,
)
from .solver import PRESETS, HarmonicSet, audit_table, newton_solve, sweep_solutions
from .spectrum import harmonic_spectrum, thd
from . import svg


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _hset(args):
    s = args.s
    if args.harmonics is not None:
        h = HarmonicSet(tuple(sorted(args.harmonics)))
        if h.s != s:
            raise DomainError(f"{len(h)} eliminated orders do not fit s={s} (need {s - 1})")
        return h
    return PRESETS[args.preset](s)


def _config(args):
    if getattr(args, "config", None):
        return InverterConfig.from_dict(read_json(args.config))
    return InverterConfig()


def _load_model(path):
    return ann.MlpModel.from_dict(read_json(path))


def _ensure_dir(path):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)


# --- subcommands ------------------------------------------------------------

def cmd_solve(args):
    hset = _hset(args)
    guess = "default" if args.guess is None else np.radians(args.guess)
    sol = newton_solve(args.m, hset, guess=guess, tol=args.tol, max_iter=args.max_iter, seed=args.seed)
    doc = sol.to_dict()
    doc["thd_pct_49"] = 100.0 * _thd_or_nan(sol.angles)
    _ensure_dir(args.out)
    write_json(args.out, doc)
    print(f"m={sol.m} converged={sol.converged} residual={sol.residual_norm:.3g} "
          f"angles_deg={np.round(sol.degrees(), 4).tolist()}")
    if not sol.converged:
        raise _NotConverged(f"no solution found at m={args.m}; best residual "
                            f"{sol.residual_norm:.3g} written to {args.out}", [args.out])
    return [args.out]


class _NotConverged(SheforgeError):
    """Failure that still produced files, which get a manifest like any output."""

    kind = "not_converged"

    def __init__(self, message, outputs):
        super().__init__(message)
        self.outputs = outputs


def _thd_or_nan(angles):
    try:
        return analytic_thd(angles, 49)
    except SheforgeError:
        return math.nan


def cmd_sweep(args):
    hset = _hset(args)
    table = sweep_solutions(args.from_, args.to, args.step, hset, tol=args.tol, seed=args.seed, s=args.s)
    _ensure_dir(args.out)
    write_angle_table(args.out, table)
    sidecar = audit_sidecar_path(args.out)
    write_json(sidecar, audit_table(table, hset).to_dict())
    bad = [r.m for r in table.rows if not r.ok]
    print(f"{len(table)} rows, {len(table) - len(bad)} converged"
          + (f"; not converged at m={bad}" if bad else ""))
    return [args.out, sidecar]


def cmd_audit(args):
    table = load_reference_table() if args.table == "reference" else ingest_angle_table(args.table)
    s = table.s
    hset = HarmonicSet(tuple(sorted(args.harmonics))) if args.harmonics else PRESETS[args.preset](s)
    report = audit_table(table, hset)
    for r in report.rows:
        res = "-" if r.residual is None else " ".join(f"{v:.3g}" for v in r.residual)
        print(f"m={r.m:g} residual=[{res}] thd_pct={r.thd_pct:.3g} flags={','.join(r.flags) or 'none'}")
    out = args.out or (audit_sidecar_path(args.table) if args.table != "reference" else "reference.audit.json")
    _ensure_dir(out)
    write_json(out, report.to_dict())
    return [out]


def cmd_train(args):
    if args.table:
        table = ingest_angle_table(args.table)
    else:
        table = sweep_solutions(args.from_, args.to, args.step, PRESETS[args.preset](args.s), seed=args.seed, s=args.s)
    if args.holdout:
        data, held = ann.holdout_split(table, args.holdout)
    else:
        data, held = ann.TrainingDataset.from_table(table), None
    model = ann.init_mlp((1, *args.hidden, table.s), seed=args.seed)
    model, history = ann.train(model, data, args.epochs, args.lr, target_scaling=args.target_scaling)
    _ensure_dir(args.out)
    write_json(args.out, model.to_dict())
    msg = f"trained on {len(data)} rows: loss {history[0]:.3g} -> {history[-1]:.3g}"
    if held is not None and len(held):
        pred = np.array([ann.predict_angles(model, m).angles for m in held.m])
        msg += f"; held-out max error {np.degrees(np.abs(pred - held.angles)).max():.3g} deg"
    print(msg)
    return [args.out]


def cmd_predict(args):
    model = _load_model(args.model)
    angles = ann.predict_angles(model, args.m)
    doc = {"m": args.m, "angles_rad": list(angles.angles),
           "angles_deg": [float(d) for d in angles.degrees()], "thd_pct_49": 100.0 * _thd_or_nan(angles)}
    print(json.dumps(doc))
    if args.out:
        _ensure_dir(args.out)
        write_json(args.out, doc)
        return [args.out]
    return []


def cmd_simulate(args):
    cfg = _config(args)
    if args.strategy == "spwm":
        trace = simulate_open_loop_spwm(cfg, args.m, args.duration, args.sample_rate)
    elif args.strategy == "pi":
        gains = PiGains(args.kp, args.ki, args.m_min, args.m_max)
        trace = simulate_closed_loop_pi(cfg, args.v_ref, gains, args.duration, args.sample_rate, m_init=args.m)
    else:
        if args.angles is not None:
            angles = SwitchingAngleSet.from_degrees(args.angles)
        elif args.model:
            angles = ann.predict_angles(_load_model(args.model), args.m)
        else:
            sol = newton_solve(args.m, PRESETS[args.preset](cfg.s), seed=args.seed)
            if not sol.converged:
                raise _NotConverged(f"no SHE solution at m={args.m}")
            angles = sol.angle_set
        trace = simulate_she(cfg, angles, args.duration, args.sample_rate, m=args.m)
    _ensure_dir(args.out)
    write_trace(args.out, trace)
    print(f"{trace.strategy}: {len(trace.voltage)} samples, v_rms={trace.rms():.6g} V")
    return [args.out]


def cmd_spectrum(args):
    cols = read_columns(args.trace)
    if args.column not in cols or "t_s" not in cols:
        raise FormatError(f"{args.trace} needs t_s and {args.column} columns")
    fs = args.sample_rate or infer_sample_rate(cols["t_s"])
    spec = harmonic_spectrum(cols[args.column], args.f0, args.max_order, sample_rate=fs)
    value = thd(spec, args.max_order)
    _ensure_dir(args.out)
    write_spectrum(args.out, spec, value, args.max_order)
    print(f"h1={spec[1]:.6g} thd_pct={100 * value:.6g} max_order={args.max_order}")
    return [args.out]


def cmd_compare(args):
    cfg = _config(args)
    gains = PiGains(args.kp, args.ki, args.m_min, args.m_max)
    model = _load_model(args.model)
    results, angles = cmp.compare(cfg, args.m, gains, model)
    paths = cmp.write_report(args.out_dir, results, args.seed, plots=args.svg)
    for r in results:
        print(f"{r.strategy:15s} m={r.m:.4f} " + " ".join(
            f"THD{n}={100 * r.thd[n]:.3f}%" for n in cmp.THD_ORDERS))
    return paths


def cmd_plot(args):
    os.makedirs(args.out_dir, exist_ok=True)
    if args.kind == "table":
        table = load_reference_table() if args.input == "reference" else ingest_angle_table(args.input)
        return cmp.table_plots(args.out_dir, table, args.prefix)
    cols = read_columns(args.input)
    out = os.path.join(args.out_dir, f"{args.prefix}_{args.kind}.svg")
    if args.kind == "trace":
        fs = infer_sample_rate(cols["t_s"])
        n = int(round(fs * args.cycles / args.f0))
        svg.line_chart(out, [(cols["t_s"][:n] * 1e3, cols["v_out_V"][:n], "v_out")],
                       title="Output voltage", xlabel="time (ms)", ylabel="voltage (V)", step=True)
    else:
        h = cols["magnitude"]
        svg.bar_chart(out, cols["order"], 100.0 * h / h[0], title="Harmonic spectrum",
                      xlabel="harmonic order", ylabel="% of fundamental")
    return [out]


def cmd_replay(args):
    man = RunManifest.read(args.manifest)
    if man.command == "replay":
        raise DomainError("refusing to replay a replay manifest")
    return run_cli(man.argv)


COMMANDS = {
    "solve": cmd_solve, "sweep": cmd_sweep, "audit": cmd_audit, "train": cmd_train,
    "predict": cmd_predict, "simulate": cmd_simulate, "spectrum": cmd_spectrum,
    "compare": cmd_compare, "plot": cmd_plot, "replay": cmd_replay,
}


def build_parser():
    p = _Parser(prog="sheforge", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"sheforge {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, harmonics=True):
        sp.add_argument("--seed", type=int, default=None,
                        help="RNG seed (default: $SHEFORGE_SEED or 0)")
        if harmonics:
            sp.add_argument("--s", type=int, default=4, help="number of H-bridges")
            sp.add_argument("--harmonics", type=_ints, default=None,
                            help="orders to eliminate, e.g. 5,7,11")
            sp.add_argument("--preset", choices=sorted(PRESETS), default="default",
                            help="default={5,7,11,...}, low-odd={3,5,7,...}")

    sp = sub.add_parser("solve", help="solve the SHE equations at one modulation index")
    common(sp)
    sp.add_argument("--m", type=float, required=True)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=50)
    sp.add_argument("--guess", type=_floats, default=None, help="initial angles in degrees")
    sp.add_argument("--out", default="solution.json")

    sp = sub.add_parser("sweep", help="continuation sweep over modulation index")
    common(sp)
    sp.add_argument("--from", dest="from_", type=float, required=True)
    sp.add_argument("--to", type=float, required=True)
    sp.add_argument("--step", type=float, required=True)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--out", default="table.csv")

    sp = sub.add_parser("audit", help="check an angle table against the SHE equations")
    common(sp)
    sp.add_argument("--table", default="reference", help="angle-table CSV, or 'reference' for the bundled reference table")
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("train", help="train the angle surrogate network")
    common(sp)
    sp.add_argument("--table", default=None, help="angle-table CSV (default: run a sweep)")
    sp.add_argument("--from", dest="from_", type=float, default=0.55)
    sp.add_argument("--to", type=float, default=0.92)
    sp.add_argument("--step", type=float, default=0.005)
    sp.add_argument("--hidden", type=_ints, default=list(ann.SURROGATE_HIDDEN))
    sp.add_argument("--epochs", type=int, default=ann.SURROGATE_EPOCHS)
    sp.add_argument("--lr", type=float, default=ann.SURROGATE_LR)
    sp.add_argument("--target-scaling", choices=["half_pi", "range"], default=ann.SURROGATE_SCALING)
    sp.add_argument("--holdout", type=int, default=0, help="withhold every Nth row (0: none)")
    sp.add_argument("--out", default="model.json")

    sp = sub.add_parser("predict", help="predict switching angles with a trained model")
    common(sp, harmonics=False)
    sp.add_argument("--model", required=True)
    sp.add_argument("--m", type=float, required=True)
    sp.add_argument("--out", default=None)

    def sim_opts(sp):
        sp.add_argument("--config", default=None, help="inverter config JSON")
        sp.add_argument("--kp", type=float, default=PiGains.kp)
        sp.add_argument("--ki", type=float, default=PiGains.ki)
        sp.add_argument("--m-min", type=float, default=PiGains.m_min)
        sp.add_argument("--m-max", type=float, default=PiGains.m_max)

    sp = sub.add_parser("simulate", help="time-domain inverter simulation")
    common(sp)
    sim_opts(sp)
    sp.add_argument("--strategy", choices=["spwm", "she", "pi"], required=True)
    sp.add_argument("--m", type=float, default=0.9, help="modulation index (initial value for pi)")
    sp.add_argument("--angles", type=_floats, default=None, help="SHE angles in degrees")
    sp.add_argument("--model", default=None, help="predict SHE angles with this model")
    sp.add_argument("--v-ref", type=float, default=25.0, help="RMS reference for pi (V)")
    sp.add_argument("--duration", type=float, default=0.2)
    sp.add_argument("--sample-rate", type=float, default=None)
    sp.add_argument("--out", default="trace.csv")

    sp = sub.add_parser("spectrum", help="harmonic spectrum and THD of a trace CSV")
    common(sp, harmonics=False)
    sp.add_argument("--trace", required=True)
    sp.add_argument("--column", default="v_out_V")
    sp.add_argument("--f0", type=float, default=50.0)
    sp.add_argument("--max-order", type=int, default=49)
    sp.add_argument("--sample-rate", type=float, default=None)
    sp.add_argument("--out", default="spectrum.csv")

    sp = sub.add_parser("compare", help="open-loop SPWM vs PI vs NN-angle SHE")
    common(sp, harmonics=False)
    sim_opts(sp)
    sp.add_argument("--m", type=float, default=0.9)
    sp.add_argument("--model", required=True)
    sp.add_argument("--out-dir", default="compare")
    sp.add_argument("--svg", action="store_true", help="also write SVG plots")

    sp = sub.add_parser("plot", help="SVG plots of tables, traces or spectra")
    common(sp, harmonics=False)
    sp.add_argument("--kind", choices=["table", "trace", "spectrum"], required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--out-dir", default="plots")
    sp.add_argument("--prefix", default="plot")
    sp.add_argument("--f0", type=float, default=50.0)
    sp.add_argument("--cycles", type=int, default=1)

    sp = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    sp.add_argument("manifest")
    sp.add_argument("--seed", type=int, default=None, help=argparse.SUPPRESS)
    return p


def _manifest_target(args, outputs):
    if args.command == "compare" or args.command == "plot":
        return os.path.join(args.out_dir, "manifest.json")
    return manifest_path_for(outputs[0])


def _record(args, argv, outputs):
    if not outputs:
        return
    inputs = {k: v for k, v in sorted(vars(args).items()) if k != "command"}
    recorded = argv if "--seed" in argv else [*argv, "--seed", str(args.seed)]
    RunManifest(args.command, recorded, inputs, outputs, args.seed).write(_manifest_target(args, outputs))


def run_cli(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"sheforge: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    args.seed = resolve_seed(args.seed)
    try:
        if args.command == "replay":
            return cmd_replay(args)
        try:
            outputs = COMMANDS[args.command](args)
        except _NotConverged as exc:
            _record(args, argv, exc.outputs)
            raise
        _record(args, argv, outputs)
    except (SheforgeError, OSError) as exc:
        kind = getattr(exc, "kind", "io")
        print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run_cli())
