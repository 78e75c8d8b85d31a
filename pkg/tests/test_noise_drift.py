from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from photonic_imc.device_cell import CellState, PhotonicCell, energy_for_level
from photonic_imc.drift import DriftModel, correct_drift, hold, probe_cycle, relative_shift
from photonic_imc.errors import ProtocolError
from photonic_imc.noise import (
    NoiseModel, child_rng, derive_seed, make_rng, sample_detector_noise, sample_pump_factor,
    sample_write_noise, splitmix64,
)

MASK = (1 << 64) - 1


def _splitmix_reference(x):
    # reference SplitMix64 step written out from the published constants
    x = (x + 0x9E3779B97F4A7C15) % 2**64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) % 2**64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) % 2**64
    return x ^ (x >> 31)


def test_splitmix64_known_value():
    # first output of the SplitMix64 generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


@given(st.integers(0, MASK), st.integers(0, 2**32))
def test_derive_seed_matches_reference(parent, index):
    assert derive_seed(parent, index) == _splitmix_reference(_splitmix_reference(parent) ^ index)


def test_derive_seed_distinct_children():
    seeds = {derive_seed(42, i) for i in range(1000)}
    assert len(seeds) == 1000
    with pytest.raises(ValueError):
        derive_seed(1, -1)


def test_child_streams_reproducible():
    a = child_rng(9, 3).normal(size=5)
    b = child_rng(9, 3).normal(size=5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, child_rng(9, 4).normal(size=5))


def test_zero_sd_draws_nothing():
    rng = make_rng(5)
    state = rng.bit_generator.state
    off = NoiseModel.off()
    assert off.is_zero
    assert sample_write_noise(off, rng, 0.143) == 0.0
    assert sample_pump_factor(off, rng) == 1.0
    assert np.all(sample_detector_noise(off, rng, size=3) == 0)
    assert rng.bit_generator.state == state


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(write_sd=-1)
    with pytest.raises(ValueError):
        NoiseModel(detector_sd=float("nan"))


def test_pump_factor_statistics():
    f = sample_pump_factor(NoiseModel(pump_fluctuation_sd=0.01), make_rng(3), size=20000)
    assert f.mean() == pytest.approx(1.0, abs=5e-4)
    assert f.std() == pytest.approx(0.01, rel=0.05)


def test_drift_strength_profile():
    m = DriftModel()
    assert m.strength(0.1) == 1.0 and m.strength(0.2) == 1.0
    assert m.strength(0.05) == 0.0 and m.strength(0.0) == 0.0
    assert m.strength(0.075) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        DriftModel(probe_safe_power=0.2)
    with pytest.raises(ValueError):
        DriftModel(direction=0.5)


def test_hold_never_drifts(cal):
    s = CellState(t_prog=0.1)
    for _ in range(100):
        s = hold(s, 0.1, 100.0)
    assert s.transmittance(cal) == pytest.approx(0.47)
    assert s.drift_offset == 0.0


def test_probe_cycle_shift_and_correction(cal):
    rng = make_rng(11)
    noise = NoiseModel(write_sd=0.0035)
    cell = PhotonicCell(cal, noise, rng)
    cell.write(energy_for_level(cal, 0.1))
    before = cell.transmittance
    cell.state = probe_cycle(cell.state, cal, DriftModel(), 0.1, 5400.0, rng)
    assert relative_shift(cell.state, cal) == pytest.approx(0.09)
    assert cell.transmittance / before - 1 == pytest.approx(0.09)
    fixed = correct_drift(cell.state, cal, noise, rng)
    assert fixed.drift_offset == 0.0
    assert abs(fixed.t_prog - 0.1) < 4 * 0.0035 * cal.t_prog_max


def test_safe_power_and_zero_off_time_do_not_shift(cal, rng):
    s = CellState(t_prog=0.05)
    assert probe_cycle(s, cal, DriftModel(), 0.05, 7200.0, rng).drift_offset == 0.0
    assert probe_cycle(s, cal, DriftModel(), 0.1, 0.0, rng).drift_offset == 0.0


def test_downward_drift_and_relaxation_sd(cal, rng):
    s = CellState(t_prog=0.05)
    down = probe_cycle(s, cal, DriftModel(direction=-1.0), 0.1, 100.0, rng)
    assert relative_shift(down, cal) == pytest.approx(-0.09)
    shifts = [relative_shift(probe_cycle(s, cal, DriftModel(relaxation_sd=0.1), 0.1, 100.0, rng), cal)
              for _ in range(2000)]
    assert np.mean(shifts) == pytest.approx(0.09, rel=0.02)
    assert np.std(shifts) == pytest.approx(0.009, rel=0.1)


def test_correct_drift_requires_history(cal, quiet, rng):
    with pytest.raises(ProtocolError):
        correct_drift(CellState(), cal, quiet, rng)


@given(st.floats(0.0, 0.143), st.floats(0.0, 0.99))
def test_drifted_transmittance_stays_physical(t_prog, mag):
    from photonic_imc.device_cell import FIG4
    s = probe_cycle(CellState(t_prog=t_prog), FIG4, DriftModel(relaxation_magnitude=mag), 0.2, 10.0,
                    make_rng(0))
    assert 0.0 < s.transmittance(FIG4) < 1.0
