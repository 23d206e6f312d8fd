import math

import numpy as np
import pytest

from sheforge.errors import FormatError
from sheforge.formats import (
    fmt,
    ingest_angle_table,
    load_reference_table,
    parse_angle_table,
    read_columns,
    read_spectrum,
    write_angle_table,
    write_spectrum,
    write_trace,
)
from sheforge.harmonics import SwitchingAngleSet
from sheforge.simulator import simulate_closed_loop_pi, simulate_she
from sheforge.solver import FLAG_ANGLES, FLAG_BAD_CELL, FLAG_M_RANGE, sweep_solutions
from sheforge.spectrum import harmonic_spectrum, thd


def test_fmt_round_trips(rng):
    for x in rng.normal(size=200) * 10.0 ** rng.integers(-12, 12, 200):
        assert float(fmt(x)) == x
    assert fmt(math.nan) == "nan"


def test_sweep_round_trip(tmp_path):
    table = sweep_solutions(0.6, 0.9, 0.05)
    path = tmp_path / "t.csv"
    write_angle_table(path, table)
    back = ingest_angle_table(path)
    assert back.same_data(table)
    assert [r.flags for r in back.rows][-1] == (FLAG_BAD_CELL,)


def test_reference_table():
    t = load_reference_table()
    assert len(t) == 12 and t.s == 4
    assert [r.m for r in t.rows if FLAG_M_RANGE in r.flags] == [8.81]
    assert t.rows[-1].m == 0.91


def test_empty_data_section():
    t = parse_angle_table(["m,theta1_deg,theta2_deg,thd_pct", ""])
    assert len(t) == 0 and t.s == 2


@pytest.mark.parametrize("lines", [[], ["0.8,1,2,3"], ["m,thd_pct"], ["m,theta2_deg,thd_pct"]])
def test_bad_header(lines):
    with pytest.raises(FormatError):
        parse_angle_table(lines)


def test_rows_flagged_not_dropped():
    t = parse_angle_table(["m,theta1_deg,theta2_deg,thd_pct",
                           "0.8,10,abc,5",
                           "0.8,40,20,5",
                           "0.8,10",
                           "1.3,10,20,5"])
    assert len(t) == 4
    assert FLAG_BAD_CELL in t.rows[0].flags
    assert t.rows[1].flags == (FLAG_ANGLES,)
    assert FLAG_BAD_CELL in t.rows[2].flags
    assert t.rows[3].flags == (FLAG_M_RANGE,)


def test_trace_round_trip(tmp_path, config):
    tr = simulate_closed_loop_pi(config, 20.0, duration=0.04)
    path = tmp_path / "trace.csv"
    write_trace(path, tr)
    with open(path) as fh:
        assert fh.readline().strip() == "t_s,v_out_V,i_out_A,level,m"
    cols = read_columns(path)
    assert np.array_equal(cols["v_out_V"], tr.voltage)
    assert np.array_equal(cols["i_out_A"], tr.current)
    assert np.array_equal(cols["m"], tr.m_trajectory)
    assert np.array_equal(cols["level"], tr.level_index)


def test_spectrum_round_trip(tmp_path, config):
    tr = simulate_she(config, SwitchingAngleSet.from_degrees((10, 20, 40, 60)), 0.02)
    sp = harmonic_spectrum(tr.waveform(), max_order=49)
    path = tmp_path / "sp.csv"
    write_spectrum(path, sp, thd(sp), 49)
    cols, footer = read_spectrum(path)
    assert np.array_equal(cols["magnitude"], sp.magnitudes)
    assert cols["freq_hz"][1] == 100.0
    assert float(footer["thd_pct"]) == 100 * thd(sp)
    assert footer["max_order"] == "49"


def test_read_columns_errors(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("")
    with pytest.raises(FormatError):
        read_columns(p)
    p.write_text("a,b\n1,zz\n")
    with pytest.raises(FormatError):
        read_columns(p)
