"""Probe-dependent level relaxation and its correction by re-writing.

Drift is an event, not a process: while the CW probe stays on, nothing
moves. When a heating-strength probe is switched off and back on, the level
comes back shifted by a fixed fraction of its transmittance. A weak probe
leaves the level alone.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .device_cell import CellCalibration, CellState, write
from .errors import ProtocolError
from .noise import NoiseModel


@dataclass(frozen=True)
class DriftModel:
    """Probe-relaxation parameters.

    Attributes:
        probe_hold_power: probe power (mW) at or above which the full
            relaxation step appears after an OFF period.
        probe_safe_power: probe power (mW) at or below which no relaxation
            appears. Between the two powers the step scales linearly.
        relaxation_magnitude: relative transmittance shift at full strength.
        direction: sign of the shift, +1 raises transmittance.
        relaxation_sd: relative SD of the step size between events.
    """

    probe_hold_power: float = 0.1
    probe_safe_power: float = 0.05
    relaxation_magnitude: float = 0.09
    direction: float = 1.0
    relaxation_sd: float = 0.0

    def __post_init__(self):
        if not 0 <= self.probe_safe_power < self.probe_hold_power:
            raise ValueError("need 0 <= probe_safe_power < probe_hold_power")
        if not 0 <= self.relaxation_magnitude < 1:
            raise ValueError("relaxation_magnitude must lie in [0, 1)")
        if self.direction not in (1.0, -1.0):
            raise ValueError("direction must be +1 or -1")
        if self.relaxation_sd < 0:
            raise ValueError("relaxation_sd must be >= 0")

    def strength(self, probe_power: float) -> float:
        if probe_power >= self.probe_hold_power:
            return 1.0
        if probe_power <= self.probe_safe_power:
            return 0.0
        return (probe_power - self.probe_safe_power) / (self.probe_hold_power - self.probe_safe_power)


def hold(state: CellState, probe_power: float, duration: float) -> CellState:
    """Keep the probe on for ``duration`` seconds; the level does not move."""
    if duration < 0:
        raise ValueError("duration must be >= 0")
    return replace(state, probe_power=probe_power, probe_on=True)


def probe_cycle(state: CellState, cal: CellCalibration, model: DriftModel, probe_power: float,
                off_duration: float, rng: np.random.Generator) -> CellState:
    """Switch the probe off for ``off_duration`` seconds, then back on at ``probe_power``."""
    if off_duration < 0:
        raise ValueError("off_duration must be >= 0")
    if off_duration == 0:
        return hold(state, probe_power, 0.0)
    strength = model.strength(probe_power)
    step = strength * model.relaxation_magnitude
    if step > 0 and model.relaxation_sd > 0:
        step *= 1.0 + rng.normal(0.0, model.relaxation_sd)
    level = cal.t_baseline + state.t_prog
    offset = model.direction * step * level
    # keep the physical transmittance inside (0, 1)
    offset = float(np.clip(offset, -level * (1 - 1e-9), (1 - 1e-9) - level))
    return replace(state, drift_offset=offset, probe_power=probe_power, probe_on=True)


def relative_shift(state: CellState, cal: CellCalibration) -> float:
    """Drift offset relative to the programmed (undrifted) transmittance."""
    return state.drift_offset / (cal.t_baseline + state.t_prog)


def correct_drift(state: CellState, cal: CellCalibration, noise: NoiseModel,
                  rng: np.random.Generator) -> CellState:
    """Re-issue the last Write so the cell returns to its programmed level."""
    if state.last_write_energy is None:
        raise ProtocolError("no recorded write energy; cannot correct drift")
    width = cal.width_reference if state.last_write_width is None else state.last_write_width
    new, _ = write(state, cal, state.last_write_energy, width, noise, rng)
    return new
