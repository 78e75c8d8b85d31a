"""Arrays of photonic cells for analog matrix-vector products.

A real matrix ``A`` is stored differentially in two cell arrays, ``A+`` and
``A-``, each holding values in ``[0, 1]`` after division by ``max|A|``. The
input vector is split the same way and sent as read-pulse energies; four
read passes give ``A x = s_A s_x [(A+ x+ + A- x-) - (A+ x- + A- x+)]``.
Within a pass all reads are independent (one wavelength channel per cell)
and per-row sums are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import noise as _noise
from .device_cell import CellCalibration, target_level
from .errors import DimensionError
from .noise import NoiseModel
from .pulses import EnergyLedger, make_erase_pulse
from .scalar_mult import OperandMapping


@dataclass
class CellArray:
    """``rows x cols`` cells sharing one calibration. Levels live in ``t_prog``."""

    rows: int
    cols: int
    cal: CellCalibration
    mapping: OperandMapping
    ledger: EnergyLedger = field(default_factory=EnergyLedger)
    t_prog: np.ndarray = None
    drift_offset: np.ndarray = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array dimensions must be >= 1")
        if self.t_prog is None:
            self.t_prog = np.zeros((self.rows, self.cols))
        if self.drift_offset is None:
            self.drift_offset = np.zeros((self.rows, self.cols))

    def transmittance(self) -> np.ndarray:
        return self.cal.t_baseline + self.t_prog + self.drift_offset

    def erase(self, rows: slice | int = slice(None), cols: slice = slice(None)) -> None:
        pulse = make_erase_pulse(self.cal)
        t = self.transmittance()[rows, cols]
        self.ledger.record("erase", pulse.energy * t.size, float(np.sum(pulse.energy * (1 - t))),
                           count=t.size)
        self.t_prog[rows, cols] = 0.0
        self.drift_offset[rows, cols] = 0.0

    def write_values(self, values: np.ndarray, noise: NoiseModel, rng: np.random.Generator,
                     rows: slice | int = slice(None), cols: slice = slice(None)) -> None:
        """Program operand values in ``[0, 1]`` into the selected block, one Write per cell."""
        values = np.asarray(values, dtype=float)
        energy = (self.mapping.e_write_min
                  + values * (self.mapping.e_write_max - self.mapping.e_write_min))
        delivered = energy * _noise.sample_pump_factor(noise, rng, size=energy.shape)
        level = target_level(self.cal, delivered, self.cal.width_reference)
        level = level + _noise.sample_write_noise(noise, rng, self.cal.t_prog_max, size=energy.shape)
        t_before = self.transmittance()[rows, cols]
        self.ledger.record("write", float(np.sum(delivered)),
                           float(np.sum(delivered * (1 - t_before))), count=energy.size)
        self.t_prog[rows, cols] = np.clip(level, 0.0, self.cal.t_prog_max)
        self.drift_offset[rows, cols] = 0.0

    def read_pass(self, inputs: np.ndarray, noise: NoiseModel, rng: np.random.Generator,
                  shape: tuple | None = None) -> np.ndarray:
        """One concurrent read of every cell in the ``shape`` block; returns decoded row sums.

        ``inputs`` holds one operand in ``[0, 1]`` per column.
        """
        r, c = (self.rows, self.cols) if shape is None else shape
        e_in = np.broadcast_to(np.asarray(inputs, dtype=float) * self.mapping.e_in_max, (r, c))
        delivered = e_in * _noise.sample_pump_factor(noise, rng, size=(r, c))
        t = self.transmittance()[:r, :c]
        out = delivered * t + _noise.sample_detector_noise(noise, rng, size=(r, c))
        self.ledger.record("read", float(np.sum(delivered)), float(np.sum(delivered * (1 - t))),
                           count=r * c)
        products = (out - self.cal.t_baseline * e_in) / (self.cal.t_prog_max * self.mapping.e_in_max)
        return products.sum(axis=1)


@dataclass
class DifferentialArray:
    """The ``A+`` / ``A-`` array pair behind a signed matrix. Both share one ledger."""

    pos: CellArray
    neg: CellArray

    @classmethod
    def create(cls, rows: int, cols: int, cal: CellCalibration,
               mapping: OperandMapping | None = None) -> "DifferentialArray":
        mapping = OperandMapping.for_calibration(cal) if mapping is None else mapping
        ledger = EnergyLedger()
        return cls(CellArray(rows, cols, cal, mapping, ledger), CellArray(rows, cols, cal, mapping, ledger))

    @property
    def ledger(self) -> EnergyLedger:
        return self.pos.ledger

    @property
    def cal(self) -> CellCalibration:
        return self.pos.cal

    @property
    def capacity(self) -> tuple:
        return self.pos.rows, self.pos.cols


@dataclass
class SignedMatrixEncoding:
    positive: np.ndarray
    negative: np.ndarray
    scale: float
    shape: tuple
    array: DifferentialArray

    def target(self) -> np.ndarray:
        """The matrix the encoding was asked to hold."""
        return self.scale * (self.positive - self.negative)

    def decode(self) -> np.ndarray:
        """The matrix the cells actually hold (programming noise included)."""
        r, c = self.shape
        t_max = self.array.cal.t_prog_max
        return self.scale * (self.array.pos.t_prog[:r, :c] - self.array.neg.t_prog[:r, :c]) / t_max


def split_signed(values: np.ndarray) -> tuple:
    """``values = scale * (pos - neg)`` with ``pos, neg`` in ``[0, 1]``; zero input gets scale 1."""
    values = np.asarray(values, dtype=float)
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if scale == 0.0:
        scale = 1.0
    return np.maximum(values, 0.0) / scale, np.maximum(-values, 0.0) / scale, scale


def _check_finite(name, values):
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{name} has non-finite entries")


def program_matrix(array: DifferentialArray, A, noise: NoiseModel,
                   rng: np.random.Generator) -> SignedMatrixEncoding:
    """Erase the target block and Write ``A+`` and ``A-`` cell by cell."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.size == 0:
        raise DimensionError("A must be a non-empty 2-D matrix")
    _check_finite("A", A)
    rows, cols = array.capacity
    if A.shape[0] > rows or A.shape[1] > cols:
        raise DimensionError(f"matrix {A.shape} exceeds array capacity {(rows, cols)}")
    pos, neg, scale = split_signed(A)
    r, c = A.shape
    for half, values in ((array.pos, pos), (array.neg, neg)):
        half.erase(slice(0, r), slice(0, c))
        half.write_values(values, noise, rng, slice(0, r), slice(0, c))
    return SignedMatrixEncoding(pos, neg, scale, (r, c), array)


def matvec(encoding: SignedMatrixEncoding, x, noise: NoiseModel,
           rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r, c = encoding.shape
    if x.ndim != 1 or x.shape[0] != c:
        raise DimensionError(f"vector of length {x.shape} does not match matrix {encoding.shape}")
    _check_finite("x", x)
    xp, xn, sx = split_signed(x)
    if not np.any(x):
        return np.zeros(r)
    pos, neg = encoding.array.pos, encoding.array.neg
    shape = encoding.shape
    same = pos.read_pass(xp, noise, rng, shape) + neg.read_pass(xn, noise, rng, shape)
    cross = pos.read_pass(xn, noise, rng, shape) + neg.read_pass(xp, noise, rng, shape)
    return encoding.scale * sx * (same - cross)


def reprogram_row(encoding: SignedMatrixEncoding, row: int, values, noise: NoiseModel,
                  rng: np.random.Generator) -> SignedMatrixEncoding:
    """Erase and rewrite one matrix row, keeping the encoding's scale."""
    r, c = encoding.shape
    if not 0 <= row < r:
        raise IndexError(f"row {row} out of range for {r} rows")
    values = np.asarray(values, dtype=float)
    if values.shape != (c,):
        raise DimensionError(f"row must have {c} entries")
    _check_finite("values", values)
    if np.max(np.abs(values)) > encoding.scale * (1 + 1e-12):
        raise ValueError("row exceeds the encoding scale; reprogram the whole matrix")
    pos = np.maximum(values, 0.0) / encoding.scale
    neg = np.maximum(-values, 0.0) / encoding.scale
    for half, v in ((encoding.array.pos, pos), (encoding.array.neg, neg)):
        half.erase(row, slice(0, c))
        half.write_values(v, noise, rng, row, slice(0, c))
    encoding.positive[row] = pos
    encoding.negative[row] = neg
    return encoding


def matvec_vector_in_cells(array: DifferentialArray, A, x, noise: NoiseModel,
                           rng: np.random.Generator) -> np.ndarray:
    """Swapped mapping: ``x`` is written into one cell row, rows of ``A`` become pulses.

    Costs one Write per vector entry on every call.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or A.shape[1] != x.shape[0]:
        raise DimensionError("A and x do not match")
    _check_finite("A", A)
    _check_finite("x", x)
    enc = program_matrix(array, x[None, :], noise, rng)
    out = np.empty(A.shape[0])
    for i, a_row in enumerate(A):
        ap, an, sa = split_signed(a_row)
        if not np.any(a_row):
            out[i] = 0.0
            continue
        pos, neg = array.pos, array.neg
        same = pos.read_pass(ap, noise, rng, enc.shape) + neg.read_pass(an, noise, rng, enc.shape)
        cross = pos.read_pass(an, noise, rng, enc.shape) + neg.read_pass(ap, noise, rng, enc.shape)
        out[i] = enc.scale * sa * (same - cross)[0]
    return out


def load_matrix(path) -> np.ndarray:
    """Read a dense matrix: CSV, or text with a ``rows cols`` header then row-major values."""
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    head = lines[0].split()
    if "," not in lines[0] and len(head) == 2 and all(h.isdigit() for h in head):
        rows, cols = int(head[0]), int(head[1])
        values = np.array(" ".join(lines[1:]).split(), dtype=float)
        if values.size != rows * cols:
            raise ValueError(f"{path}: header says {rows}x{cols} but found {values.size} values")
        return values.reshape(rows, cols)
    return np.atleast_2d(np.array([[float(v) for v in ln.split(",")] for ln in lines]))


def load_vector(path) -> np.ndarray:
    return load_matrix(path).ravel()


def save_matrix(path, A, fmt: str = "dense") -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if fmt == "dense":
        body = "\n".join(" ".join(repr(float(v)) for v in row) for row in A)
        Path(path).write_text(f"{A.shape[0]} {A.shape[1]}\n{body}\n")
    elif fmt == "csv":
        Path(path).write_text("\n".join(",".join(repr(float(v)) for v in row) for row in A) + "\n")
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")
