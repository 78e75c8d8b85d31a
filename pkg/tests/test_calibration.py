from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photonic_imc.calibration import (
    DeviceProfile, SweepRecord, builtin_profile, dumps_profile, fit_linear_response,
    fit_width_saturation, load_profile, loads_profile, read_sweep_csv, save_profile,
    to_absolute_delta, to_relative_delta, write_sweep_csv,
)
from photonic_imc.device_cell import FIG4, target_level
from photonic_imc.drift import DriftModel
from photonic_imc.errors import ProfileError
from photonic_imc.noise import NoiseModel


def test_profile_roundtrip_byte_exact(tmp_path):
    p = DeviceProfile("custom", replace(FIG4, t_baseline=0.1 + 0.2), noise=NoiseModel(0.01, 0.5, 0.002),
                      drift=DriftModel(relaxation_magnitude=0.07))
    path = tmp_path / "p.cal"
    save_profile(p, path)
    q = load_profile(path)
    assert q == p
    assert dumps_profile(q) == path.read_text()


@settings(max_examples=50)
@given(st.floats(0.01, 0.5), st.floats(0.01, 0.4), st.floats(0, 0.1))
def test_profile_roundtrip_property(t0, tmax, sd):
    cal = replace(FIG4, t_baseline=t0, t_prog_max=tmax)
    p = DeviceProfile("x", cal, noise=NoiseModel(write_sd=sd))
    assert loads_profile(dumps_profile(p)) == p


def test_profile_errors_name_the_key():
    text = dumps_profile(builtin_profile("fig4"))
    broken = "\n".join(ln for ln in text.splitlines() if not ln.startswith("cell.t_baseline"))
    with pytest.raises(ProfileError, match="cell.t_baseline"):
        loads_profile(broken)
    with pytest.raises(ProfileError, match="header"):
        loads_profile("hello\n")
    with pytest.raises(ProfileError, match="cell.e_threshold"):
        loads_profile(text.replace("cell.e_threshold = 180.0", "cell.e_threshold = abc"))
    with pytest.raises(ProfileError, match="unknown keys"):
        loads_profile(text + "cell.bogus = 1.0\n")
    with pytest.raises(ProfileError, match="duplicate"):
        loads_profile(text + "noise.write_sd = 0.1\n")
    with pytest.raises(ProfileError, match="invalid cell"):
        loads_profile(text.replace("cell.t_baseline = 0.37", "cell.t_baseline = 1.5"))
    with pytest.raises(ProfileError):
        builtin_profile("nope")


def test_optional_sections_default():
    text = dumps_profile(builtin_profile("fig4"))
    only_cell = "\n".join(ln for ln in text.splitlines() if not ln.startswith(("noise.", "drift.")))
    p = loads_profile(only_cell)
    assert p.noise == NoiseModel() and p.drift == DriftModel()


def test_relative_absolute_delta():
    assert to_relative_delta(0.037, 0.37) == pytest.approx(0.1)
    assert to_absolute_delta(to_relative_delta(0.05, 0.37), 0.37) == pytest.approx(0.05)
    with pytest.raises(ValueError):
        to_relative_delta(0.1, 0.0)


def _linear_sweep(cal, energies, noise_sd=0.0, seed=0):
    rng = np.random.default_rng(seed)
    return [SweepRecord(float(e), float(target_level(cal, e, cal.width_reference)
                                        + rng.normal(0, noise_sd) if noise_sd else
                                        target_level(cal, e, cal.width_reference)))
            for e in energies]


def test_linear_fit_recovers_breakpoints():
    recs = _linear_sweep(FIG4, np.arange(100.0, 450.0, 5.0))
    fit = fit_linear_response(recs)
    assert fit.e_threshold == pytest.approx(180.0, abs=1e-6)
    assert fit.e_linear_max == pytest.approx(354.0, abs=1e-6)
    assert fit.t_prog_max == pytest.approx(0.143, abs=1e-9)
    assert fit.residual < 1e-12


def test_linear_fit_noisy():
    recs = _linear_sweep(FIG4, np.arange(100.0, 450.0, 2.0), noise_sd=0.0005, seed=3)
    fit = fit_linear_response(recs)
    assert fit.e_threshold == pytest.approx(180.0, abs=6.0)
    assert fit.e_linear_max == pytest.approx(354.0, abs=6.0)


def test_linear_fit_degenerate():
    with pytest.raises(ValueError):
        fit_linear_response([SweepRecord(1.0, 0.0), SweepRecord(2.0, 0.0), SweepRecord(3.0, 0.0)])
    with pytest.raises(ValueError):
        fit_linear_response([SweepRecord(1.0, 0.0)])


def test_width_fit_recovers_tau():
    tau, amp = 12.0, 0.2
    w = np.arange(2.0, 100.0, 2.0)
    recs = [SweepRecord(float(x), float(amp * (1 - np.exp(-x / tau)))) for x in w]
    fit = fit_width_saturation(recs)
    assert fit.ok and fit.monotone
    assert fit.tau == pytest.approx(tau, rel=1e-6)
    assert fit.amplitude == pytest.approx(amp, rel=1e-6)
    assert fit.saturation_width == pytest.approx(tau * np.log(100))
    assert fit.curve(1e6) == pytest.approx(amp)


def test_width_fit_flat_and_nonmonotone():
    flat = fit_width_saturation([SweepRecord(float(w), 0.1) for w in range(1, 10)])
    assert not flat.ok and flat.residual == float("inf") and flat.warnings
    bumpy = [SweepRecord(float(w), float(1 - np.exp(-w / 5.0))) for w in range(1, 30)]
    bumpy[20] = SweepRecord(21.0, 0.5)
    assert not fit_width_saturation(bumpy).monotone
    with pytest.raises(ValueError):
        fit_width_saturation([SweepRecord(0.0, 0.0), SweepRecord(1.0, 1.0), SweepRecord(2.0, 1.0)])


def test_sweep_csv_roundtrip(tmp_path):
    recs = [SweepRecord(0.1 * i, 1 / 3 * i) for i in range(5)]
    write_sweep_csv(tmp_path / "s.csv", recs)
    assert read_sweep_csv(tmp_path / "s.csv") == recs
    (tmp_path / "b.csv").write_text("1,2\nx,y\n")
    with pytest.raises(ValueError):
        read_sweep_csv(tmp_path / "b.csv")
    with pytest.raises(ValueError):
        SweepRecord(float("nan"), 1.0)


def test_width_fit_noisy_sweep_is_monotone_within_noise():
    rng = np.random.default_rng(9)
    w = np.arange(2.0, 100.0, 1.0)
    y = 0.15 * (1 - np.exp(-w / 20.0)) + rng.normal(0, 0.001, w.size)
    fit = fit_width_saturation([SweepRecord(float(a), float(b)) for a, b in zip(w, y)])
    assert fit.ok and fit.monotone
    assert fit.tau == pytest.approx(20.0, rel=0.05)
