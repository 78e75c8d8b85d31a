"""Figure-reproduction experiments as plain functions returning data.

File output lives in :mod:`photonic_imc.cli`; everything here is pure
simulation driven by an explicit random stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .array import DifferentialArray, program_matrix
from .calibration import DeviceProfile
from .device_cell import PhotonicCell, energy_for_level, target_level
from .drift import DriftModel, correct_drift, hold, probe_cycle, relative_shift
from .noise import NoiseModel, child_rng, sample_write_noise
from .pulses import make_erase_train
from .scalar_mult import OperandMapping, error_stats, run_grid
from .solver import AnalogOracle, ExactOracle, LinearSystem, SolverConfig, cg, gmres, mixed_precision_solve


@dataclass
class WidthSweep:
    widths: np.ndarray
    power: float
    energies: np.ndarray
    switching_energies: np.ndarray
    delta_t: np.ndarray
    saturated_delta: float

    @property
    def relative(self) -> np.ndarray:
        return self.delta_t / self.saturated_delta


def sweep_width(profile: DeviceProfile, noise: NoiseModel, rng: np.random.Generator,
                widths=None, power: float | None = None) -> WidthSweep:
    """Constant-power pulses of increasing width from the erased state."""
    cal = profile.calibration
    widths = np.arange(5.0, 101.0, 1.0) if widths is None else np.asarray(widths, dtype=float)
    power = cal.e_linear_max / cal.width_reference if power is None else power
    energies = power * widths
    delta = np.asarray(target_level(cal, energies, widths), dtype=float)
    delta = np.maximum(delta + sample_write_noise(noise, rng, cal.t_prog_max, size=delta.shape), 0.0)
    saturated = target_level(cal, cal.e_linear_max, cal.width_saturation)
    return WidthSweep(widths, power, energies, energies * (1 - cal.t_baseline), delta, saturated)


@dataclass
class LevelRun:
    repeat: np.ndarray
    sequence: np.ndarray
    level_index: np.ndarray
    programmed: np.ndarray
    achieved: np.ndarray
    n_levels: int
    t_prog_max: float

    @property
    def errors(self) -> np.ndarray:
        """Achieved minus programmed, as a fraction of the full programmable range."""
        return (self.achieved - self.programmed) / self.t_prog_max

    def centroids(self) -> np.ndarray:
        return np.array([self.achieved[self.level_index == k].mean() / self.t_prog_max
                         if np.any(self.level_index == k) else np.nan
                         for k in range(self.n_levels)])

    def summary(self) -> dict:
        err = self.errors
        sd = float(np.std(err, ddof=1))
        cent = self.centroids()
        sep = float(np.nanmin(np.diff(cent)))
        return {
            "transitions": int(err.size),
            "error_mean": float(np.mean(err)),
            "error_sd": sd,
            "error_skew": float(stats.skew(err)) if sd > 0 else 0.0,
            "error_excess_kurtosis": float(stats.kurtosis(err)) if sd > 0 else 0.0,
            "min_adjacent_separation": sep,
            "separation_over_sd": sep / sd if sd > 0 else float("inf"),
        }


def condition_levels(profile: DeviceProfile, noise: NoiseModel, rng: np.random.Generator,
                     n_levels: int = 13, repeats: int = 3, sequences: int = 20,
                     per_sequence: int = 10) -> LevelRun:
    """Random-order Erase/Write transitions between equally spaced levels."""
    cal = profile.calibration
    if per_sequence > n_levels:
        raise ValueError("per_sequence cannot exceed n_levels")
    levels = np.linspace(0.0, cal.t_prog_max, n_levels)
    cell = PhotonicCell(cal, noise, rng)
    rows = []
    for rep in range(repeats):
        for seq in range(sequences):
            for k in rng.permutation(n_levels)[:per_sequence]:
                cell.erase()
                cell.write(energy_for_level(cal, levels[k]))
                rows.append((rep, seq, k, levels[k], cell.state.t_prog))
    a = np.array(rows, dtype=float)
    return LevelRun(a[:, 0].astype(int), a[:, 1].astype(int), a[:, 2].astype(int),
                    a[:, 3], a[:, 4], n_levels, cal.t_prog_max)


@dataclass
class DriftPanel:
    name: str
    probe_power: float
    times: list = field(default_factory=list)
    transmittance: list = field(default_factory=list)
    probe_on: list = field(default_factory=list)
    events: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    def sample(self, t, cell, event=""):
        self.times.append(float(t))
        self.transmittance.append(cell.transmittance)
        self.probe_on.append(cell.state.probe_on)
        self.events.append(event)


def _prelude(panel, cell, t, interval):
    """Arbitrary-order multilevel transitions: Writes upward, decreasing trains downward."""
    cal = cell.cal
    train = make_erase_train(cal.erase_peak_power * 0.7, 5, cal.erase_peak_power * 0.1, 50.0)
    # ends on an upward Write so correct_drift re-targets the held level
    for frac in (0.5, 0.9, 0.3, 0.2, 0.6):
        level = frac * cal.t_prog_max
        if level >= cell.state.t_prog:
            cell.write(energy_for_level(cal, level))
            event = "write"
        else:
            cell.erase_to(train, level)
            event = "erase_train"
        for k in range(5):
            panel.sample(t, cell, event if k == 0 else "")
            t += interval
    return t


def drift_experiment(profile_ab: DeviceProfile, profile_c: DeviceProfile, noise: NoiseModel,
                     rng: np.random.Generator, drift: DriftModel | None = None,
                     interval: float = 60.0) -> list:
    """Probe on for 8.5 h; probe 0.1 mW off for 1.5 h then corrected; probe 0.05 mW off for 2 h."""
    drift = profile_ab.drift if drift is None else drift
    hold_p, safe_p = drift.probe_hold_power, drift.probe_safe_power

    # a: continuous probe
    pa = DriftPanel("a", hold_p)
    cell = PhotonicCell(profile_ab.calibration, noise, rng)
    t = _prelude(pa, cell, 0.0, interval)
    t_start, t0 = t, cell.transmittance
    while t <= t_start + 8.5 * 3600:
        cell.state = hold(cell.state, hold_p, interval)
        pa.sample(t, cell)
        t += interval
    held = np.array(pa.transmittance[pa.times.index(t_start):])
    pa.metrics = {"hold_s": 8.5 * 3600, "max_relative_deviation": float(np.max(np.abs(held / t0 - 1)))}

    # b: probe off ~1.5 h, shift on turn-on, then corrected by re-writing
    pb = DriftPanel("b", hold_p)
    cell = PhotonicCell(profile_ab.calibration, noise, rng)
    t = _prelude(pb, cell, 0.0, interval)
    while t < 3000.0:
        pb.sample(t, cell)
        t += interval
    before = cell.transmittance
    cell.state = replace(cell.state, probe_on=False)
    pb.sample(t, cell, "probe_off")
    t += 5400.0
    cell.state = probe_cycle(cell.state, cell.cal, drift, hold_p, 5400.0, rng)
    pb.sample(t, cell, "probe_on")
    shift = relative_shift(cell.state, cell.cal)
    observed = cell.transmittance / before - 1
    for _ in range(3):
        t += interval
        pb.sample(t, cell)
    t += interval
    cell.state = correct_drift(cell.state, cell.cal, noise, rng)
    pb.sample(t, cell, "correct")
    intended = target_level(cell.cal, cell.state.last_write_energy, cell.state.last_write_width)
    restored = abs(cell.state.t_prog - intended)
    while t < 1e4:
        t += interval
        pb.sample(t, cell)
    write_sd_abs = noise.write_sd * cell.cal.t_prog_max
    pb.metrics = {
        "off_s": 5400.0,
        "relative_shift": float(shift),
        "observed_shift": float(observed),
        "restored_abs_error": float(restored),
        "restored_in_write_sd": float(restored / write_sd_abs) if write_sd_abs > 0 else 0.0,
    }

    # c: reduced probe power, off ~2 h
    pc = DriftPanel("c", safe_p)
    cell = PhotonicCell(profile_c.calibration, noise, rng)
    t = _prelude(pc, cell, 0.0, interval)
    cell.state = hold(cell.state, safe_p, interval)
    before = cell.transmittance
    pc.sample(t, cell, "probe_off")
    t += 7200.0
    cell.state = probe_cycle(cell.state, cell.cal, drift, safe_p, 7200.0, rng)
    pc.sample(t, cell, "probe_on")
    for _ in range(10):
        t += interval
        pc.sample(t, cell)
    pc.metrics = {"off_s": 7200.0, "relative_shift": float(cell.transmittance / before - 1)}
    return [pa, pb, pc]


@dataclass
class GridRun:
    records: list
    stats: object
    corr_abs_error_a: float
    corr_abs_error_b: float


def multiply_grid(profile: DeviceProfile, noise: NoiseModel, rng: np.random.Generator,
                  n_a: int = 13, n_b: int = 33, e_in_max: float = 112.8, **kwargs) -> GridRun:
    cal = profile.calibration
    mapping = OperandMapping.for_calibration(cal, e_in_max)
    cell = PhotonicCell(cal, noise, rng)
    records = run_grid(cell, mapping, n_a, n_b, **kwargs)
    errs = np.abs([r.error for r in records])
    a = np.array([r.a for r in records])
    b = np.array([r.b for r in records])

    def corr(u, v):
        if np.std(u) == 0 or np.std(v) == 0:
            return 0.0
        return float(np.corrcoef(u, v)[0, 1])

    return GridRun(records, error_stats(records), corr(errs, a), corr(errs, b))


def solve_modes(A, b, profile: DeviceProfile, noise: NoiseModel, rng: np.random.Generator,
                config: SolverConfig, seed: int = 0) -> dict:
    """Exact, analog-only and mixed-precision solves of one system.

    The analog and mixed runs share one programmed array, so they see the
    same programming noise.
    """
    system = LinearSystem(A, b)
    solver = cg if config.method == "cg" else gmres
    if config.method == "cg":
        system.check_spd()
    out = {"exact": solver(system, ExactOracle(system.A), config)}
    arr = DifferentialArray.create(system.n, system.n, profile.calibration)
    enc = program_matrix(arr, system.A, noise, rng)
    out["analog"] = solver(system, AnalogOracle(enc, noise, child_rng(seed, 1)), config)
    out["mixed"] = mixed_precision_solve(system, AnalogOracle(enc, noise, child_rng(seed, 2)), config)
    return out
