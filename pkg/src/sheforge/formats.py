"""Readers and writers for the CSV and JSON files the CLI exchanges.

Floats are written with 17 significant digits so every file round-trips
bit-exactly.
"""
import csv
import json
import math
import os
from importlib import resources

import numpy as np

from .errors import FormatError
from .harmonics import HALF_PI
from .solver import (
    FLAG_ANGLES,
    FLAG_BAD_CELL,
    FLAG_M_RANGE,
    AngleRow,
    AngleTable,
)

WAVEFORM_HEADER = ["t_s", "v_out_V"]
TRACE_HEADER = ["t_s", "v_out_V", "i_out_A", "level", "m"]
SPECTRUM_HEADER = ["order", "freq_hz", "magnitude"]


def fmt(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _write_rows(path, header, columns, footer=None):
    cols = [[fmt(v) for v in c] if np.asarray(c).dtype.kind == "f" else [str(int(v)) for v in c]
            for c in columns]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(row) + "\n")
        if footer:
            fh.write(footer + "\n")


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


# --- angle tables -----------------------------------------------------------

def angle_table_header(s):
    return ["m", *[f"theta{k}_deg" for k in range(1, s + 1)], "thd_pct"]


def audit_sidecar_path(path):
    root, _ = os.path.splitext(path)
    return root + ".audit.json"


def write_angle_table(path, table):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(angle_table_header(table.s)) + "\n")
        for row in table.rows:
            fh.write(",".join(fmt(v) for v in (row.m, *row.angles_deg, row.thd_pct)) + "\n")


def _parse_header(header):
    if not header or header[0].strip() != "m" or header[-1].strip() != "thd_pct":
        raise FormatError("angle table header must read m,theta1_deg,...,thd_pct")
    thetas = [h.strip() for h in header[1:-1]]
    if not thetas or thetas != [f"theta{k}_deg" for k in range(1, len(thetas) + 1)]:
        raise FormatError("angle table needs theta1_deg..thetaS_deg columns")
    return len(thetas)


def parse_angle_table(lines):
    """Parse angle-table CSV text lines; rows are validated and flagged, never dropped."""
    reader = csv.reader(line for line in lines if line.strip() and not line.lstrip().startswith("#"))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("angle table is empty (missing header)") from None
    s = _parse_header(header)
    table = AngleTable(s, [])
    for cells in reader:
        flags = []
        values = []
        for c in cells:
            try:
                values.append(float(c))
            except ValueError:
                values.append(math.nan)
        if len(values) != s + 2:
            flags.append(FLAG_BAD_CELL)
            values = (values + [math.nan] * (s + 2))[: s + 2]
        m, angles, thd = values[0], values[1:-1], values[-1]
        if not all(math.isfinite(v) for v in values) and FLAG_BAD_CELL not in flags:
            flags.append(FLAG_BAD_CELL)
        if not (math.isfinite(m) and 0.0 < m < 1.0):
            flags.append(FLAG_M_RANGE)
        theta = np.radians(angles)
        if np.all(np.isfinite(theta)) and not (
            theta[0] > 0 and theta[-1] < HALF_PI and np.all(np.diff(theta) > 0)
        ):
            flags.append(FLAG_ANGLES)
        table.rows.append(AngleRow(m, tuple(angles), thd, tuple(flags)))
    return table


def ingest_angle_table(path):
    with open(path, newline="") as fh:
        return parse_angle_table(fh.read().splitlines())


def reference_table_text():
    return resources.files("sheforge").joinpath("data/reference_angles.csv").read_text()


def load_reference_table():
    """Bundled nine-level reference angle table (degrees, THD in percent)."""
    return parse_angle_table(reference_table_text().splitlines())


# --- traces and spectra -----------------------------------------------------

def write_waveform(path, trace):
    _write_rows(path, WAVEFORM_HEADER, [trace.time, trace.samples])


def write_trace(path, trace):
    _write_rows(path, TRACE_HEADER, [trace.time, trace.voltage, trace.current,
                                     trace.level_index, trace.m_trajectory])


def read_columns(path):
    """Numeric CSV columns keyed by header name (comment lines skipped)."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise FormatError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    try:
        data = np.array([[float(c) for c in r] for r in body], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric cell ({exc})") from exc
    if body and data.shape[1] != len(header):
        raise FormatError(f"{path}: ragged rows")
    data = data.reshape(len(body), len(header))
    return {h: data[:, i] for i, h in enumerate(header)}


def infer_sample_rate(t):
    if len(t) < 2:
        raise FormatError("need at least two samples to infer the sample rate")
    return float(round((len(t) - 1) / (t[-1] - t[0]), 6))


def write_spectrum(path, spectrum, thd_fraction, max_order):
    orders = spectrum.orders
    footer = f"# thd_pct={fmt(100.0 * thd_fraction)},max_order={int(max_order)}"
    _write_rows(path, SPECTRUM_HEADER,
                [orders, orders * float(spectrum.f0), np.asarray(spectrum.magnitudes, dtype=np.float64)],
                footer)


def read_spectrum(path):
    cols = read_columns(path)
    footer = {}
    with open(path) as fh:
        for line in fh:
            if line.startswith("# "):
                footer.update(kv.split("=", 1) for kv in line[2:].strip().split(","))
    return cols, footer
