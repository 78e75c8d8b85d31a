"""Optical pulses, Write/Erase/Read scheduling, and energy bookkeeping.

Units throughout: power in mW, time in ns, energy in pJ (mW * ns = pJ).
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import ProtocolError

if TYPE_CHECKING:
    from .device_cell import CellCalibration

FRACTION_TOL = 1e-9


@dataclass(frozen=True)
class PulseSpec:
    """A square optical pulse."""

    power: float
    width: float

    def __post_init__(self):
        if not self.power >= 0:
            raise ValueError(f"pulse power must be >= 0 mW, got {self.power!r}")
        if not self.width > 0:
            raise ValueError(f"pulse width must be > 0 ns, got {self.width!r}")

    @property
    def energy(self) -> float:
        return self.power * self.width


@dataclass(frozen=True)
class DoubleStepPulse:
    """Single-shot Erase: a melt step followed by a longer, weaker anneal step."""

    step1: PulseSpec
    step2: PulseSpec

    def __post_init__(self):
        if not self.step1.width < self.step2.width:
            raise ProtocolError("erase step 1 must be shorter than step 2")
        if not self.step2.power < self.step1.power:
            raise ProtocolError("erase step 2 must have lower power than step 1")

    @property
    def fraction(self) -> float:
        return self.step2.power / self.step1.power

    @property
    def duration(self) -> float:
        return self.step1.width + self.step2.width

    @property
    def energy(self) -> float:
        return self.step1.energy + self.step2.energy

    @property
    def width(self) -> float:
        return self.duration


@dataclass(frozen=True)
class PulseTrain:
    """Legacy Erase: a train of pulses with strictly decreasing power."""

    pulses: tuple

    def __post_init__(self):
        if len(self.pulses) == 0:
            raise ValueError("pulse train must contain at least one pulse")
        powers = [p.power for p in self.pulses]
        if any(b >= a for a, b in zip(powers, powers[1:])):
            raise ProtocolError(f"pulse train powers must strictly decrease, got {powers}")

    @property
    def powers(self) -> list:
        return [p.power for p in self.pulses]

    @property
    def energy(self) -> float:
        return sum(p.energy for p in self.pulses)

    @property
    def duration(self) -> float:
        return sum(p.width for p in self.pulses)

    @property
    def width(self) -> float:
        return self.duration


def make_write_pulse(cal: "CellCalibration", energy: float) -> PulseSpec:
    """Square Write pulse of the calibrated width carrying ``energy`` pJ."""
    if energy < cal.e_threshold:
        raise ProtocolError(
            f"write energy {energy} pJ is below threshold {cal.e_threshold} pJ"
        )
    return PulseSpec(power=energy / cal.width_reference, width=cal.width_reference)


def make_read_pulse(cal: "CellCalibration", energy: float) -> PulseSpec:
    if energy < 0:
        raise ValueError("read energy must be >= 0")
    if energy >= cal.e_threshold:
        raise ProtocolError(
            f"read energy {energy} pJ would switch the cell (threshold {cal.e_threshold} pJ)"
        )
    return PulseSpec(power=energy / cal.width_reference, width=cal.width_reference)


def make_erase_pulse(cal: "CellCalibration") -> DoubleStepPulse:
    peak = cal.erase_peak_power
    return DoubleStepPulse(
        PulseSpec(peak, cal.erase_step1_width),
        PulseSpec(cal.erase_step_fraction * peak, cal.erase_step2_width),
    )


def make_erase_train(start_power: float, count: int, decrement: float, width: float) -> PulseTrain:
    if count < 1:
        raise ValueError("count must be >= 1")
    final = start_power - (count - 1) * decrement
    if final <= 0:
        raise ValueError(f"final pulse power would be {final} mW; must stay > 0")
    if count > 1 and decrement <= 0:
        raise ProtocolError("decrement must be > 0 for trains longer than one pulse")
    return PulseTrain(tuple(PulseSpec(start_power - k * decrement, width) for k in range(count)))


class EventKind(str, enum.Enum):
    WRITE = "write"
    ERASE = "erase"
    READ = "read"

    @property
    def changes_state(self) -> bool:
        return self is not EventKind.READ


@dataclass(frozen=True)
class ScheduledEvent:
    start: float
    kind: EventKind
    pulse: object

    @property
    def end(self) -> float:
        return self.start + self.pulse.width

    @property
    def power(self) -> float:
        if isinstance(self.pulse, PulseSpec):
            return self.pulse.power
        if isinstance(self.pulse, DoubleStepPulse):
            return self.pulse.step1.power
        return self.pulse.pulses[0].power


@dataclass(frozen=True)
class Schedule:
    """Time-ordered pulse events plus the repeat period of the cycle.

    A state-changing event (Write or Erase) holds the cell for
    ``settle_time`` ns measured from its start, pulse duration included;
    nothing else may start inside that window. Reads only occupy their own
    duration.
    """

    events: tuple
    settle_time: float
    period: float

    @property
    def rate_mhz(self) -> float:
        return 1e3 / self.period

    @property
    def total_energy(self) -> float:
        return sum(e.pulse.energy for e in self.events)

    def validate(self) -> None:
        for prev, nxt in zip(self.events, self.events[1:]):
            if nxt.start < prev.end:
                raise ProtocolError(f"events overlap at t={nxt.start} ns")
            if prev.kind.changes_state and nxt.start < prev.start + self.settle_time:
                raise ProtocolError(
                    f"{nxt.kind.value} at t={nxt.start} ns starts inside the settle window "
                    f"of the {prev.kind.value} at t={prev.start} ns"
                )
        if self.events:
            last = self.events[-1]
            if self.period < _release_time(last, self.settle_time) - self.events[0].start:
                raise ProtocolError("period shorter than the last event's settle window")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["start_ns", "kind", "power_mW", "width_ns", "energy_pJ"])
        for e in self.events:
            writer.writerow([_fmt(e.start), e.kind.value, _fmt(e.power), _fmt(e.pulse.width), _fmt(e.pulse.energy)])
        return buf.getvalue()


def _release_time(event: ScheduledEvent, settle_time: float) -> float:
    if event.kind.changes_state:
        return max(event.end, event.start + settle_time)
    return event.end


def schedule_cycle(events: Sequence, settle_time: float = 200.0) -> Schedule:
    """Assign earliest-feasible start times to ``(kind, pulse)`` pairs.

    The returned period is the earliest time the first event of the next
    repetition could start.
    """
    if not events:
        raise ValueError("event list must be non-empty")
    t = 0.0
    placed = []
    for kind, pulse in events:
        ev = ScheduledEvent(t, EventKind(kind), pulse)
        placed.append(ev)
        t = _release_time(ev, settle_time)
    sched = Schedule(tuple(placed), settle_time, period=t)
    sched.validate()
    return sched


@dataclass(frozen=True)
class LedgerEntry:
    kind: str
    count: int
    delivered: float
    absorbed: float


@dataclass
class EnergyLedger:
    """Per-event delivered/absorbed energies with running totals.

    One entry may stand for a batch of concurrent pulses (``count`` > 1),
    e.g. all reads of one array pass.
    """

    entries: list = field(default_factory=list)
    delivered_total: float = 0.0
    absorbed_total: float = 0.0

    def record(self, kind: str, delivered: float, absorbed: float, count: int = 1) -> None:
        entry = LedgerEntry(kind, int(count), float(delivered), float(absorbed))
        self.entries.append(entry)
        self.delivered_total += entry.delivered
        self.absorbed_total += entry.absorbed

    def count(self, kind: str | None = None) -> int:
        return sum(e.count for e in self.entries if kind is None or e.kind == kind)

    def delivered(self, kind: str | None = None) -> float:
        total = 0.0
        for e in self.entries:
            if kind is None or e.kind == kind:
                total += e.delivered
        return total

    def recompute(self) -> tuple:
        delivered = absorbed = 0.0
        for e in self.entries:
            delivered += e.delivered
            absorbed += e.absorbed
        return delivered, absorbed

    def extend(self, entries: Iterable[LedgerEntry]) -> None:
        for e in entries:
            self.record(e.kind, e.delivered, e.absorbed, e.count)


def _fmt(value: float) -> str:
    return f"{value:.10g}"
