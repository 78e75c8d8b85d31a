"""Device profiles on disk and calibration fits from sweep data."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.optimize import curve_fit

from .device_cell import PROFILES, CellCalibration, CellGeometry
from .drift import DriftModel
from .errors import ProfileError
from .noise import NoiseModel

HEADER = "photonic-imc-cal v1"

TAIL_SLOPE_FRACTION = 0.2
HEAD_LEVEL_FRACTION = 0.05


@dataclass(frozen=True)
class DeviceProfile:
    """Everything needed to simulate one device: geometry, constants, noise, drift."""

    name: str
    calibration: CellCalibration
    geometry: CellGeometry = field(default_factory=CellGeometry)
    noise: NoiseModel = field(default_factory=NoiseModel)
    drift: DriftModel = field(default_factory=DriftModel)


def builtin_profile(name: str) -> DeviceProfile:
    try:
        cal = PROFILES[name]
    except KeyError:
        raise ProfileError(f"unknown built-in profile {name!r}; choose from {sorted(PROFILES)}") from None
    return DeviceProfile(name=name, calibration=cal)


_SECTIONS = (
    ("geometry", "geometry", CellGeometry, False),
    ("cell", "calibration", CellCalibration, True),
    ("noise", "noise", NoiseModel, False),
    ("drift", "drift", DriftModel, False),
)


def dumps_profile(profile: DeviceProfile) -> str:
    if any(c in profile.name for c in "\n=") or profile.name != profile.name.strip():
        raise ProfileError("profile name must be a single trimmed line without '='")
    lines = [HEADER, f"name = {profile.name}"]
    for prefix, attr, cls, _ in _SECTIONS:
        obj = getattr(profile, attr)
        for f in fields(cls):
            lines.append(f"{prefix}.{f.name} = {float(getattr(obj, f.name))!r}")
    return "\n".join(lines) + "\n"


def loads_profile(text: str, source: str = "<string>") -> DeviceProfile:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        got = lines[0].strip() if lines else ""
        raise ProfileError(f"{source}: expected header {HEADER!r}, got {got!r}")
    values = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ProfileError(f"{source}:{lineno}: expected 'key = value'")
        key, value = key.strip(), value.strip()
        if key in values:
            raise ProfileError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    name = values.pop("name", Path(source).stem)
    parts = {}
    for prefix, attr, cls, required in _SECTIONS:
        keys = [f"{prefix}.{f.name}" for f in fields(cls)]
        present = [k for k in keys if k in values]
        if not present and not required:
            parts[attr] = cls()
            continue
        kwargs = {}
        for f, key in zip(fields(cls), keys):
            if key not in values:
                raise ProfileError(f"{source}: missing key {key!r}")
            raw = values.pop(key)
            try:
                kwargs[f.name] = float(raw)
            except ValueError:
                raise ProfileError(f"{source}: key {key!r} has non-numeric value {raw!r}") from None
        try:
            parts[attr] = cls(**kwargs)
        except ValueError as exc:
            raise ProfileError(f"{source}: invalid {prefix} section: {exc}") from None
    if values:
        raise ProfileError(f"{source}: unknown keys {sorted(values)}")
    return DeviceProfile(name=name, **parts)


def save_profile(profile: DeviceProfile, path) -> None:
    Path(path).write_text(dumps_profile(profile))


def load_profile(path) -> DeviceProfile:
    path = Path(path)
    return loads_profile(path.read_text(), source=str(path))


def to_relative_delta(absolute_delta, t_min: float):
    """Absolute transmittance change -> ``(T - T_min) / T_min``."""
    if not t_min > 0:
        raise ValueError("t_min must be > 0")
    return np.asarray(absolute_delta, dtype=float) / t_min


def to_absolute_delta(relative_delta, t_min: float):
    if not t_min > 0:
        raise ValueError("t_min must be > 0")
    return np.asarray(relative_delta, dtype=float) * t_min


@dataclass(frozen=True)
class SweepRecord:
    stimulus: float
    response: float

    def __post_init__(self):
        if not (math.isfinite(self.stimulus) and math.isfinite(self.response)):
            raise ValueError("sweep records must be finite")


def read_sweep_csv(path) -> list:
    """Two-column CSV (stimulus, response); a non-numeric first row is taken as a header."""
    out = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            try:
                out.append(SweepRecord(float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if i == 0:
                    continue
                raise ValueError(f"{path}:{i + 1}: bad sweep row {row!r}") from None
    return out


def write_sweep_csv(path, records, header=("stimulus", "response")) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in records:
            w.writerow([repr(r.stimulus), repr(r.response)])


def _arrays(records):
    x = np.array([r.stimulus for r in records], dtype=float)
    y = np.array([r.response for r in records], dtype=float)
    order = np.argsort(x, kind="stable")
    return x[order], y[order]


@dataclass(frozen=True)
class LinearFit:
    e_threshold: float
    e_linear_max: float
    t_prog_max: float
    residual: float
    slope: float
    intercept: float
    n_linear: int


def fit_linear_response(records) -> LinearFit:
    """Flat / affine / flat fit of level versus Write energy.

    The leading flat part (sub-threshold) is found by level, the trailing
    saturated part by slope: trailing points whose local slope (least
    squares over a window of about a tenth of the sweep) is below 20% of the
    initial ramp slope are dropped. The split is then refined by
    reclassifying points against the fitted breakpoints until stable.
    ``residual`` is the RMS misfit on the affine part.
    """
    if len(records) < 3:
        raise ValueError("need at least 3 sweep records")
    x, y = _arrays(records)
    if np.ptp(x) == 0:
        raise ValueError("degenerate sweep: all stimuli equal")
    span = np.ptp(y)
    if span == 0:
        raise ValueError("degenerate sweep: response is constant")
    n = len(x)

    i0 = 0
    while i0 < n and y[i0] <= y.min() + HEAD_LEVEL_FRACTION * span:
        i0 += 1
    if i0 >= n - 1:
        raise ValueError("no rising segment in sweep data")
    # local slopes come from a least-squares window so single noisy pairs don't stop the walk
    win = max(3, n // 10)
    s0 = np.polyfit(x[i0:i0 + win], y[i0:i0 + win], 1)[0]
    k = n - 1
    while k > i0 + 1:
        lo = max(i0, k - win + 1)
        if np.polyfit(x[lo:k + 1], y[lo:k + 1], 1)[0] >= TAIL_SLOPE_FRACTION * s0:
            break
        k -= 1
    head = np.arange(n) < i0
    tail = np.arange(n) > k

    for _ in range(20):
        ramp = ~(head | tail)
        if ramp.sum() < 2:
            raise ValueError("fewer than two points on the linear part")
        m, q = np.polyfit(x[ramp], y[ramp], 1)
        if not m > 0:
            raise ValueError("linear part does not rise")
        bottom = float(np.mean(y[head])) if head.any() else 0.0
        e_th = (bottom - q) / m
        if tail.any():
            top = float(np.mean(y[tail]))
            e_max = (top - q) / m
        else:
            e_max = float(x[-1])
            top = m * e_max + q
        new_head, new_tail = x < e_th, x > e_max
        if np.array_equal(new_head, head) and np.array_equal(new_tail, tail):
            break
        head, tail = new_head, new_tail

    ramp = ~(head | tail)
    resid = y[ramp] - (m * x[ramp] + q)
    return LinearFit(float(e_th), float(e_max), float(top - bottom),
                     float(np.sqrt(np.mean(resid ** 2))), float(m), float(q), int(ramp.sum()))


@dataclass(frozen=True)
class WidthFit:
    tau: float
    amplitude: float
    saturation_width: float
    residual: float
    ok: bool
    monotone: bool
    warnings: tuple = ()

    def curve(self, width):
        return self.amplitude * -np.expm1(-np.asarray(width, dtype=float) / self.tau)


def _saturating(w, amplitude, tau):
    return amplitude * -np.expm1(-w / tau)


def fit_width_saturation(records) -> WidthFit:
    """Least-squares ``amplitude * (1 - exp(-w / tau))`` through a width sweep.

    ``saturation_width`` is where the curve reaches 99% of its amplitude.
    Unidentifiable input (flat response) returns ``ok=False`` with an
    infinite residual rather than raising.
    """
    if len(records) < 3:
        raise ValueError("need at least 3 sweep records")
    w, y = _arrays(records)
    if np.any(w <= 0):
        raise ValueError("widths must be > 0")
    if np.ptp(y) <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        return WidthFit(math.nan, float(np.mean(y)), math.nan, math.inf, False, True,
                        ("response is flat; time constant not identifiable",))
    amp0 = float(np.max(y)) if np.max(y) > 0 else 1.0
    above = np.nonzero(y >= (1 - math.exp(-1)) * amp0)[0]
    tau0 = float(w[above[0]]) if above.size else float(np.median(w))
    try:
        (amp, tau), _ = curve_fit(_saturating, w, y, p0=(amp0, tau0),
                                  bounds=([0.0, 1e-6 * w.max()], [np.inf, 1e3 * w.max()]),
                                  xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=10000)
    except (RuntimeError, ValueError) as exc:
        return WidthFit(math.nan, math.nan, math.nan, math.inf, False, True, (f"fit failed: {exc}",))
    resid = y - _saturating(w, amp, tau)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    notes = []
    ok = bool(tau > w.min() * 1e-3 and np.isfinite(rms))
    if not ok:
        notes.append("time constant collapsed to the lower bound")
    # robust scale of the residuals, so one bad point cannot hide itself
    mad = 1.4826 * float(np.median(np.abs(resid - np.median(resid))))
    noise_floor = max(mad, 1e-12 * float(np.max(np.abs(y))))
    monotone = bool(np.all(np.diff(y) >= -4 * math.sqrt(2) * noise_floor))
    if not monotone:
        notes.append("response decreases beyond the noise level")
    return WidthFit(float(tau), float(amp), float(tau * math.log(100.0)), rms, ok, monotone,
                    tuple(notes))
