"""Single GST-on-Si3N4 photonic memory cell.

The cell's physical transmittance is ``T = t_baseline + t_prog + drift_offset``:
``t_baseline`` is the fully crystalline level, ``t_prog`` the level added by
partial amorphization (Write), ``drift_offset`` the step left by probe
relaxation. Pulses at or above ``e_threshold`` switch the cell; anything
below only reads it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import noise as _noise
from .errors import ProtocolError
from .noise import NoiseModel
from .pulses import DoubleStepPulse, EnergyLedger, FRACTION_TOL, PulseTrain, make_erase_pulse


def solve_width_tau(fraction: float, width: float, saturation_width: float) -> float:
    """Time constant for which the normalized width curve hits ``fraction`` at ``width``.

    The curve is ``(1 - exp(-w/tau)) / (1 - exp(-w_sat/tau))``, so it reaches
    exactly 1 at ``saturation_width``.
    """
    if not 0 < width < saturation_width:
        raise ValueError("need 0 < width < saturation_width")
    linear = width / saturation_width
    if not linear < fraction < 1:
        raise ValueError(f"fraction must lie in ({linear}, 1) for a saturating curve")

    def f(tau):
        return -math.expm1(-width / tau) / -math.expm1(-saturation_width / tau) - fraction

    lo, hi = 1e-3 * width, 1e3 * saturation_width
    return brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class CellGeometry:
    length_gst: float = 2.0  # um
    width_waveguide: float = 1.3  # um
    height_etch: float = 165.0  # nm

    def __post_init__(self):
        if min(self.length_gst, self.width_waveguide, self.height_etch) <= 0:
            raise ValueError("cell dimensions must be > 0")


@dataclass(frozen=True)
class CellCalibration:
    """Per-device constants. Energies pJ, powers mW, times ns."""

    e_threshold: float
    e_linear_max: float
    t_prog_max: float
    t_baseline: float
    width_reference: float
    width_tau: float
    width_saturation: float
    settle_time: float
    erase_peak_power: float
    erase_step_fraction: float
    erase_step1_width: float
    erase_step2_width: float

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if not 0 < self.t_baseline < 1:
            raise ValueError("t_baseline must lie in (0, 1)")
        if not self.t_prog_max > 0:
            raise ValueError("t_prog_max must be > 0")
        if not self.t_baseline + self.t_prog_max < 1:
            raise ValueError("t_baseline + t_prog_max must be < 1")
        if not 0 <= self.e_threshold < self.e_linear_max:
            raise ValueError("need 0 <= e_threshold < e_linear_max")
        if not 0 < self.erase_step_fraction < 1:
            raise ValueError("erase_step_fraction must lie in (0, 1)")
        if not (self.width_reference > 0 and self.width_tau > 0 and self.width_saturation > 0):
            raise ValueError("width constants must be > 0")
        if self.settle_time < 0:
            raise ValueError("settle_time must be >= 0")
        if self.erase_peak_power <= 0 or self.erase_step1_width <= 0 or self.erase_step2_width <= 0:
            raise ValueError("erase pulse parameters must be > 0")

    @property
    def slope(self) -> float:
        """Programmed level per pJ in the linear region, at the reference width."""
        return self.t_prog_max / (self.e_linear_max - self.e_threshold)


WIDTH_ANCHOR_FRACTION = 0.75
WIDTH_ANCHOR_NS = 25.0
WIDTH_SATURATION_NS = 45.0
DEFAULT_WIDTH_TAU = solve_width_tau(WIDTH_ANCHOR_FRACTION, WIDTH_ANCHOR_NS, WIDTH_SATURATION_NS)

_ERASE_DEFAULTS = dict(
    settle_time=200.0,
    erase_peak_power=14.1,
    erase_step_fraction=0.4,
    erase_step1_width=25.0,
    erase_step2_width=100.0,
)

# 2 um cell, 25 ns single-shot Write/Erase, used for the multiplication runs.
FIG4 = CellCalibration(
    e_threshold=180.0,
    e_linear_max=354.0,
    t_prog_max=0.143,
    t_baseline=0.37,
    width_reference=25.0,
    width_tau=DEFAULT_WIDTH_TAU,
    width_saturation=WIDTH_SATURATION_NS,
    **_ERASE_DEFAULTS,
)

# 2 um cell driven with 50 ns Writes between 350 and 600 pJ (drift runs).
# Level range and baseline are not reported for this cell; FIG4's are reused.
FIG3A = CellCalibration(
    e_threshold=350.0,
    e_linear_max=600.0,
    t_prog_max=0.143,
    t_baseline=0.37,
    width_reference=50.0,
    width_tau=DEFAULT_WIDTH_TAU,
    width_saturation=WIDTH_SATURATION_NS,
    **_ERASE_DEFAULTS,
)

PROFILES = {"fig4": FIG4, "fig3a": FIG3A}


@dataclass(frozen=True)
class CellState:
    t_prog: float = 0.0
    drift_offset: float = 0.0
    probe_power: float = 0.1
    probe_on: bool = True
    last_write_energy: float | None = None
    last_write_width: float | None = None

    def transmittance(self, cal: CellCalibration) -> float:
        return cal.t_baseline + self.t_prog + self.drift_offset

    def at_baseline(self) -> bool:
        return self.t_prog == 0.0 and self.drift_offset == 0.0


def _check_nonneg(name, value):
    if np.any(np.asarray(value) < 0) or not np.all(np.isfinite(value)):
        raise ValueError(f"{name} must be finite and >= 0")


def width_factor(cal: CellCalibration, width):
    """Fraction of the saturated level reached by a pulse of ``width`` ns.

    Saturating exponential normalized to 1 at ``width_saturation``; wider
    pulses are clamped there.
    """
    w = np.minimum(np.asarray(width, dtype=float), cal.width_saturation)
    out = -np.expm1(-w / cal.width_tau) / -math.expm1(-cal.width_saturation / cal.width_tau)
    return float(out) if out.ndim == 0 else out


def target_level(cal: CellCalibration, energy, width):
    """Noise-free programmed level for a Write of ``energy`` pJ and ``width`` ns.

    Affine between ``e_threshold`` (0) and ``e_linear_max`` (``t_prog_max``)
    at the reference width, flat outside; scaled by the width curve relative
    to the reference width. Accepts arrays.
    """
    _check_nonneg("energy", energy)
    if np.any(np.asarray(width) <= 0):
        raise ValueError("width must be > 0")
    frac = np.clip((np.asarray(energy, dtype=float) - cal.e_threshold)
                   / (cal.e_linear_max - cal.e_threshold), 0.0, 1.0)
    scale = width_factor(cal, width) / width_factor(cal, cal.width_reference)
    out = cal.t_prog_max * scale * frac
    return float(out) if np.ndim(out) == 0 else out


def energy_for_level(cal: CellCalibration, level: float) -> float:
    """Write energy (reference width) whose noise-free level is ``level``."""
    if not 0 <= level <= cal.t_prog_max:
        raise ValueError(f"level must lie in [0, {cal.t_prog_max}]")
    return cal.e_threshold + level / cal.t_prog_max * (cal.e_linear_max - cal.e_threshold)


def absorbed_energy(state: CellState, cal: CellCalibration, energy):
    """Energy a pulse deposits in the GST; everything not transmitted counts as absorbed."""
    _check_nonneg("energy", energy)
    return energy * (1.0 - state.transmittance(cal))


def write(state: CellState, cal: CellCalibration, energy: float, width: float,
          noise: NoiseModel, rng: np.random.Generator):
    """Program a new level. Returns ``(new_state, transmitted_energy)``.

    The transmitted part of the Write pulse is reported for bookkeeping only.
    """
    new, transmitted, _ = _write(state, cal, energy, width, noise, rng)
    return new, transmitted


def _write(state, cal, energy, width, noise, rng):
    _check_nonneg("energy", energy)
    if energy < cal.e_threshold:
        raise ProtocolError(
            f"write energy {energy} pJ is below threshold {cal.e_threshold} pJ; use read()"
        )
    delivered = energy * _noise.sample_pump_factor(noise, rng)
    level = target_level(cal, delivered, width) + _noise.sample_write_noise(noise, rng, cal.t_prog_max)
    level = min(max(level, 0.0), cal.t_prog_max)
    transmitted = delivered * state.transmittance(cal)
    new = replace(state, t_prog=float(level), drift_offset=0.0,
                  last_write_energy=float(energy), last_write_width=float(width))
    return new, transmitted, delivered


def read(state: CellState, cal: CellCalibration, energy: float,
         noise: NoiseModel, rng: np.random.Generator) -> float:
    """Output energy of a sub-threshold pulse. The state is not touched."""
    _check_nonneg("energy", energy)
    if energy >= cal.e_threshold:
        raise ProtocolError(
            f"read energy {energy} pJ would switch the cell (threshold {cal.e_threshold} pJ)"
        )
    delivered = energy * _noise.sample_pump_factor(noise, rng)
    return delivered * state.transmittance(cal) + _noise.sample_detector_noise(noise, rng)


def check_erase_pulse(cal: CellCalibration, pulse: DoubleStepPulse) -> None:
    if not isinstance(pulse, DoubleStepPulse):
        raise ProtocolError("single-shot erase needs a DoubleStepPulse")
    if abs(pulse.fraction - cal.erase_step_fraction) > FRACTION_TOL:
        raise ProtocolError(
            f"erase step fraction {pulse.fraction} != calibrated {cal.erase_step_fraction}"
        )
    if abs(pulse.step1.power - cal.erase_peak_power) > FRACTION_TOL * cal.erase_peak_power:
        raise ProtocolError("erase step 1 power does not match the calibrated peak power")
    if pulse.step1.width != cal.erase_step1_width or pulse.step2.width != cal.erase_step2_width:
        raise ProtocolError("erase step widths do not match the calibration")


def erase_single_shot(state: CellState, cal: CellCalibration, pulse: DoubleStepPulse) -> CellState:
    """Recrystallize to baseline with the calibrated double-step pulse."""
    check_erase_pulse(cal, pulse)
    return replace(state, t_prog=0.0, drift_offset=0.0)


def erase_train(state: CellState, cal: CellCalibration, train: PulseTrain, target: float,
                noise: NoiseModel, rng: np.random.Generator) -> CellState:
    """Partial recrystallization down to ``target`` with a decreasing-power train."""
    if not isinstance(train, PulseTrain):
        raise ProtocolError("erase_train needs a PulseTrain")
    if target < 0:
        raise ValueError("target must be >= 0")
    if target > state.t_prog:
        raise ProtocolError(
            f"erase trains only move down: target {target} > current level {state.t_prog}"
        )
    level = target + _noise.sample_write_noise(noise, rng, cal.t_prog_max)
    level = min(max(level, 0.0), cal.t_prog_max)
    return replace(state, t_prog=float(level), drift_offset=0.0)


@dataclass
class PhotonicCell:
    """Stateful wrapper owning one cell, its random stream and an energy ledger."""

    cal: CellCalibration
    noise: NoiseModel = field(default_factory=NoiseModel)
    rng: np.random.Generator = field(default_factory=lambda: _noise.make_rng(0))
    state: CellState = field(default_factory=CellState)
    ledger: EnergyLedger = field(default_factory=EnergyLedger)

    @property
    def transmittance(self) -> float:
        return self.state.transmittance(self.cal)

    def write(self, energy: float, width: float | None = None) -> float:
        width = self.cal.width_reference if width is None else width
        self.state, transmitted, delivered = _write(self.state, self.cal, energy, width,
                                                    self.noise, self.rng)
        self.ledger.record("write", delivered, delivered - transmitted)
        return transmitted

    def read(self, energy: float) -> float:
        out = read(self.state, self.cal, energy, self.noise, self.rng)
        self.ledger.record("read", energy, absorbed_energy(self.state, self.cal, energy))
        return out

    def erase(self, pulse: DoubleStepPulse | None = None) -> None:
        pulse = make_erase_pulse(self.cal) if pulse is None else pulse
        before = self.state
        self.state = erase_single_shot(before, self.cal, pulse)
        self.ledger.record("erase", pulse.energy, absorbed_energy(before, self.cal, pulse.energy))

    def erase_to(self, train: PulseTrain, target: float) -> None:
        before = self.state
        self.state = erase_train(before, self.cal, train, target, self.noise, self.rng)
        self.ledger.record("erase_train", train.energy, absorbed_energy(before, self.cal, train.energy),
                           count=len(train.pulses))
