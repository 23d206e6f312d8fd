import math

import numpy as np
import pytest

from sheforge.errors import DomainError
from sheforge.harmonics import SwitchingAngleSet, analytic_thd, synthesize_staircase
from sheforge.simulator import (
    InverterConfig,
    PiGains,
    cycle_rms,
    simulate_closed_loop_pi,
    simulate_open_loop_spwm,
    simulate_she,
    spwm_level,
)
from sheforge.spectrum import harmonic_spectrum, thd

SOLVED_08 = SwitchingAngleSet.from_degrees((9.840880, 20.383093, 38.405399, 60.415552))


class TestConfig:
    def test_defaults(self, config):
        assert config.levels == 9 and config.peak_voltage == 40.0

    def test_scalar_vdc(self):
        assert InverterConfig(s=3, vdc=12.0).vdc == (12.0, 12.0, 12.0)

    @pytest.mark.parametrize("kw", [dict(s=0), dict(vdc=(10.0, 10.0)), dict(vdc=(10, 10, 10, -1)),
                                    dict(carrier_freq=90.0), dict(load_resistance=0.0), dict(f0=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            InverterConfig(**kw)

    def test_dict_round_trip(self, config):
        assert InverterConfig.from_dict(config.to_dict()) == config
        with pytest.raises(DomainError):
            InverterConfig.from_dict({"bridges": 4})

    def test_gains(self):
        with pytest.raises(DomainError):
            PiGains(m_min=0.5, m_max=0.5)
        with pytest.raises(DomainError):
            PiGains(m_max=1.5)


class TestSpwmLevel:
    def test_zero_reference(self, config):
        assert spwm_level(0.7, 0.0, config) == 0
        assert spwm_level(0.7, 0.01 + 5e-5, config) == 0

    def test_peak(self, config):
        assert spwm_level(1.0, 0.005, config) == 4
        # carrier at a band interior; at carrier 0 the tie with -s resolves to -(s-1)
        assert spwm_level(1.0, 0.015 + 5e-5, config) == -4
        assert spwm_level(1.0, 0.015, config) == -3

    def test_bounds(self, config):
        ts = np.linspace(0.0, 0.04, 997)
        assert all(abs(spwm_level(1.0, t, config)) <= 4 for t in ts)

    def test_precondition(self, config):
        with pytest.raises(DomainError):
            spwm_level(1.1, 0.0, config)

    def test_matches_trace(self, config):
        tr = simulate_open_loop_spwm(config, 0.8, 0.02)
        idx = np.arange(0, len(tr.voltage), 37)
        assert [spwm_level(0.8, i / tr.sample_rate, config) for i in idx] == tr.level_index[idx].tolist()


class TestOpenLoop:
    def test_peak_and_current(self, config):
        tr = simulate_open_loop_spwm(config, 1.0, 0.02)
        assert np.max(np.abs(tr.voltage)) <= 40.0
        assert np.array_equal(tr.current, tr.voltage / 100.0)
        assert np.all(np.abs(tr.level_index) <= 4)
        assert np.all(tr.m_trajectory == 1.0)
        assert len(tr.voltage) == 4000

    @pytest.mark.parametrize("m", [0.4, 0.6, 0.8, 1.0])
    def test_linearity(self, config, m):
        tr = simulate_open_loop_spwm(config, m, 0.2)
        h1 = harmonic_spectrum(tr.waveform(), max_order=1)[1]
        assert h1 == pytest.approx(m * 40.0, rel=0.02)

    def test_preconditions(self, config):
        with pytest.raises(DomainError):
            simulate_open_loop_spwm(config, 0.8, 0.015)
        with pytest.raises(DomainError):
            simulate_open_loop_spwm(config, 0.8, 0.02, sample_rate=50_000)
        with pytest.raises(DomainError):
            simulate_open_loop_spwm(config, 1.2, 0.02)

    def test_deterministic(self, config):
        a = simulate_open_loop_spwm(config, 0.9, 0.04)
        b = simulate_open_loop_spwm(config, 0.9, 0.04)
        assert np.array_equal(a.voltage, b.voltage)

    def test_unequal_sources(self):
        cfg = InverterConfig(vdc=(10.0, 20.0, 30.0, 40.0))
        tr = simulate_open_loop_spwm(cfg, 1.0, 0.02)
        assert np.max(tr.voltage) == 100.0
        assert set(np.unique(tr.voltage)) <= {0.0, 10.0, 30.0, 60.0, 100.0, -10.0, -30.0, -60.0, -100.0}


class TestShe:
    def test_equals_staircase(self, config):
        tr = simulate_she(config, SOLVED_08, 0.1)
        ref = synthesize_staircase(SOLVED_08, 10.0, 50.0, 200_000.0, n_cycles=5)
        assert np.array_equal(tr.voltage, ref.samples)

    def test_nine_levels(self, config):
        tr = simulate_she(config, SOLVED_08, 0.02)
        assert len(np.unique(tr.voltage)) == 9
        assert np.array_equal(tr.voltage, tr.level_index * 10.0)

    def test_thd_matches_analytic(self, config):
        tr = simulate_she(config, SOLVED_08, 0.2)
        num = thd(harmonic_spectrum(tr.waveform(), max_order=49))
        assert num * 100 == pytest.approx(analytic_thd(SOLVED_08, 49) * 100, abs=0.2)

    def test_eliminated_orders(self, config):
        sp = harmonic_spectrum(simulate_she(config, SOLVED_08, 0.2).waveform(), max_order=11)
        for n in (5, 7, 11):
            assert sp[n] < 0.005 * sp[1]

    def test_angle_count(self, config):
        with pytest.raises(DomainError):
            simulate_she(config, SwitchingAngleSet((0.1, 0.2, 0.3)), 0.02)
        with pytest.raises(DomainError):
            simulate_she(config, (0.3, 0.2, 0.4, 0.5), 0.02)


class TestClosedLoop:
    def test_zero_gains_is_open_loop(self, config):
        pi = simulate_closed_loop_pi(config, 25.0, PiGains(0.0, 0.0), duration=0.1, m_init=0.7)
        ol = simulate_open_loop_spwm(config, 0.7, 0.1)
        assert np.array_equal(pi.voltage, ol.voltage)
        assert np.all(pi.m_trajectory == 0.7)

    def test_saturates(self, config):
        pi = simulate_closed_loop_pi(config, 100.0, PiGains(m_max=0.95), duration=0.2)
        assert pi.cycle_m[-1] == 0.95
        assert np.all(pi.m_trajectory <= 0.95)

    def test_settles(self, config):
        pi = simulate_closed_loop_pi(config, 25.0, duration=0.5)
        rms = cycle_rms(pi)
        assert abs(rms[-1] - 25.0) <= 0.5
        assert np.all(np.abs(rms[-5:] - 25.0) <= 0.5)

    def test_deterministic(self, config):
        a = simulate_closed_loop_pi(config, 20.0, duration=0.1)
        b = simulate_closed_loop_pi(config, 20.0, duration=0.1)
        assert np.array_equal(a.voltage, b.voltage) and np.array_equal(a.cycle_m, b.cycle_m)

    def test_negative_reference(self, config):
        with pytest.raises(DomainError):
            simulate_closed_loop_pi(config, -1.0)
