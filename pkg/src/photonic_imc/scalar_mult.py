"""Direct scalar multiplication on one cell.

The multiplicand ``a`` is stored as the cell's programmed level (Write
energy), the multiplier ``b`` is the energy of a sub-threshold read pulse.
The read output is ``T * E_in``; subtracting the baseline part
``t_baseline * E_in`` and normalizing by ``t_prog_max * e_in_max`` yields
``c = a * b``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .device_cell import CellCalibration, PhotonicCell
from .errors import ProtocolError


@dataclass(frozen=True)
class OperandMapping:
    """Affine maps from ``[0, 1]`` operands to pulse energies (pJ)."""

    e_write_min: float = 180.0
    e_write_max: float = 354.0
    e_in_max: float = 112.8

    def __post_init__(self):
        if not self.e_write_min < self.e_write_max:
            raise ValueError("need e_write_min < e_write_max")
        if not 0 < self.e_in_max < self.e_write_min:
            raise ValueError("read range must stay below the write threshold")

    @classmethod
    def for_calibration(cls, cal: CellCalibration, e_in_max: float = 112.8) -> "OperandMapping":
        if e_in_max >= cal.e_threshold:
            raise ValueError("e_in_max must be below the switching threshold")
        return cls(cal.e_threshold, cal.e_linear_max, e_in_max)


def _check_unit(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def encode_multiplicand(mapping: OperandMapping, a: float) -> float:
    _check_unit("a", a)
    return mapping.e_write_min + a * (mapping.e_write_max - mapping.e_write_min)


def encode_multiplier(mapping: OperandMapping, b: float) -> float:
    _check_unit("b", b)
    return b * mapping.e_in_max


def decode_product(cal: CellCalibration, mapping: OperandMapping, e_out: float,
                   offset: float) -> float:
    return (e_out - offset) / (cal.t_prog_max * mapping.e_in_max)


@dataclass(frozen=True)
class MultiplicationRecord:
    a: float
    b: float
    e_write: float
    e_in: float
    raw_output_energy: float
    offset_energy: float
    c_measured: float
    c_exact: float

    @property
    def error(self) -> float:
        return self.c_exact - self.c_measured


def _measure_baseline(cell: PhotonicCell, mapping: OperandMapping) -> float:
    """Transmittance of the erased cell, measured with a full-scale read."""
    return cell.read(mapping.e_in_max) / mapping.e_in_max


def _product(cell, mapping, a, b, e_write, t0) -> MultiplicationRecord:
    e_in = encode_multiplier(mapping, b)
    out = cell.read(e_in)
    offset = t0 * e_in
    c = decode_product(cell.cal, mapping, out, offset)
    return MultiplicationRecord(a, b, e_write, e_in, out, offset, c, a * b)


def multiply(cell: PhotonicCell, mapping: OperandMapping, a: float, b: float, *,
             measured_offset: bool = False, auto_erase: bool = False) -> MultiplicationRecord:
    """Write ``a`` into an erased cell, read with ``b``, decode ``c``.

    The cell keeps ``a`` afterwards unless ``auto_erase`` is set.
    """
    if not cell.state.at_baseline():
        raise ProtocolError("cell must be erased to baseline before a multiplication")
    _check_unit("a", a)
    _check_unit("b", b)
    t0 = _measure_baseline(cell, mapping) if measured_offset else cell.cal.t_baseline
    e_write = encode_multiplicand(mapping, a)
    cell.write(e_write)
    rec = _product(cell, mapping, a, b, e_write, t0)
    if auto_erase:
        cell.erase()
    return rec


def grid_values(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("grid size must be >= 1")
    return np.array([1.0]) if n == 1 else np.linspace(0.0, 1.0, n)


def run_grid(cell: PhotonicCell, mapping: OperandMapping, n_a: int, n_b: int, *,
             write_per_op: bool = False, measured_offset: bool = False) -> list:
    """``n_a * n_b`` products: one Write per ``a`` level, then every ``b`` read, then Erase.

    With ``write_per_op`` every product gets its own Erase/Write.
    """
    a_values, b_values = grid_values(n_a), grid_values(n_b)
    records = []
    if not cell.state.at_baseline():
        cell.erase()
    for a in a_values:
        a = float(a)
        if write_per_op:
            for b in b_values:
                records.append(multiply(cell, mapping, a, float(b),
                                        measured_offset=measured_offset, auto_erase=True))
            continue
        t0 = _measure_baseline(cell, mapping) if measured_offset else cell.cal.t_baseline
        e_write = encode_multiplicand(mapping, a)
        cell.write(e_write)
        for b in b_values:
            records.append(_product(cell, mapping, a, float(b), e_write, t0))
        cell.erase()
    return records


@dataclass(frozen=True)
class ErrorStats:
    mean: float
    sd: float
    counts: np.ndarray
    edges: np.ndarray
    n: int


def error_stats(errors, bins: int = 41, span: float | None = None) -> ErrorStats:
    """Sample mean, sample SD (ddof=1) and a fixed-bin histogram of errors.

    Accepts a sequence of :class:`MultiplicationRecord` or plain numbers.
    Bins are symmetric about zero over ``[-span, span]``; ``span`` defaults
    to the largest absolute error.
    """
    values = np.array([e.error if isinstance(e, MultiplicationRecord) else e for e in errors],
                      dtype=float)
    if values.size == 0:
        raise ValueError("error_stats needs at least one value")
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    if span is None:
        span = float(np.max(np.abs(values)))
        if span == 0.0:
            span = 1e-12
    counts, edges = np.histogram(values, bins=bins, range=(-span, span))
    return ErrorStats(mean, sd, counts, edges, int(values.size))


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a", "b", "e_write_pJ", "e_in_pJ", "e_out_pJ", "c_measured", "c_exact", "error"])
    for r in records:
        w.writerow([f"{v:.12g}" for v in (r.a, r.b, r.e_write, r.e_in, r.raw_output_energy,
                                          r.c_measured, r.c_exact, r.error)])
    return buf.getvalue()
