"""Core containers: time series, event sets, and scored detections.

Conventions used throughout the package:

* A series holds one or more equally long float64 channels sampled on a
  shared integer step axis ``0 .. num_steps - 1``.
* Interval events are half-open: the event covers ``[onset, offset)`` so
  ``offset`` is the first step after the event.  ``offset == num_steps`` is
  legal (the event runs to the end of the series); zero-duration intervals
  are not.
* Point events mark a single step in ``[0, num_steps)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    EmptySeries,
    EventOutOfRange,
    InvalidEvents,
    InvalidSeries,
    LengthMismatch,
    NonFiniteValue,
)

INTERVAL = "interval"
POINT = "point"


@dataclass(frozen=True)
class TimeSeries:
    """A named multichannel series on a shared step axis.

    channels maps channel name to a float64 array of length num_steps;
    insertion order is the canonical channel order.  step_seconds records
    the physical duration of one step and is carried around purely as
    metadata (all algorithms work in steps).
    """

    series_id: str
    num_steps: int
    channels: Mapping[str, np.ndarray]
    step_seconds: float = 1.0

    @classmethod
    def build(
        cls,
        series_id: str,
        channels: Mapping[str, Iterable[float]],
        step_seconds: float = 1.0,
    ) -> "TimeSeries":
        """Construct from raw channel data, deriving num_steps and validating."""
        converted = {
            name: np.asarray(values, dtype=np.float64)
            for name, values in channels.items()
        }
        if not converted:
            raise EmptySeries(f"series {series_id!r} has no channels")
        num_steps = len(next(iter(converted.values())))
        series = cls(series_id, num_steps, converted, step_seconds)
        validate_series(series)
        return series

    @property
    def channel_names(self) -> tuple[str, ...]:
        return tuple(self.channels)

    def as_array(self) -> np.ndarray:
        """Stack channels into a (num_channels, num_steps) float64 array."""
        return np.stack(
            [np.asarray(self.channels[name], dtype=np.float64) for name in self.channels]
        )


def validate_series(series: TimeSeries) -> None:
    """Check the TimeSeries invariants, raising on the first violation.

    Check order: emptiness, channel lengths, finiteness, step_seconds.
    """
    if not series.channels or series.num_steps < 1:
        raise EmptySeries(
            f"series {series.series_id!r} is empty "
            f"(num_steps={series.num_steps}, channels={len(series.channels)})"
        )
    for name, values in series.channels.items():
        arr = np.asarray(values)
        if arr.ndim != 1 or len(arr) != series.num_steps:
            raise LengthMismatch(
                f"channel {name!r} of series {series.series_id!r} has length "
                f"{arr.shape}, expected ({series.num_steps},)"
            )
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise NonFiniteValue(
                f"channel {name!r} of series {series.series_id!r} is non-finite "
                f"at step {bad}"
            )
    if not (np.isfinite(series.step_seconds) and series.step_seconds > 0):
        raise InvalidSeries(
            f"series {series.series_id!r} has step_seconds={series.step_seconds}, "
            "expected a positive real"
        )


@dataclass(frozen=True)
class IntervalEvent:
    """One half-open event [onset, offset); score is optional metadata."""

    onset: int
    offset: int
    score: float | None = None


@dataclass(frozen=True)
class PointEvent:
    """One instantaneous event at a single step."""

    step: int
    score: float | None = None


@dataclass(frozen=True)
class EventSet:
    """All ground-truth events of one series, either interval or point kind."""

    series_id: str
    kind: str
    events: tuple = ()

    def __post_init__(self):
        if self.kind not in (INTERVAL, POINT):
            raise InvalidEvents(f"unknown event kind {self.kind!r}")
        object.__setattr__(self, "events", tuple(self.events))

    def __len__(self) -> int:
        return len(self.events)

    def onsets(self) -> np.ndarray:
        if self.kind != INTERVAL:
            raise InvalidEvents("onsets() requires interval events")
        return np.array([e.onset for e in self.events], dtype=np.int64)

    def offsets(self) -> np.ndarray:
        if self.kind != INTERVAL:
            raise InvalidEvents("offsets() requires interval events")
        return np.array([e.offset for e in self.events], dtype=np.int64)

    def steps(self) -> np.ndarray:
        if self.kind != POINT:
            raise InvalidEvents("steps() requires point events")
        return np.array([e.step for e in self.events], dtype=np.int64)


def validate_events(events: EventSet, num_steps: int) -> None:
    """Check event invariants against a series of the given length.

    Interval events must satisfy 0 <= onset < offset <= num_steps, be sorted
    by onset, and be non-overlapping (touching is allowed).  Point events
    must satisfy 0 <= step < num_steps and be sorted.
    """
    if num_steps < 1:
        raise EventOutOfRange(f"num_steps={num_steps} must be positive")
    if events.kind == INTERVAL:
        prev_offset = None
        for ev in events.events:
            if not isinstance(ev, IntervalEvent):
                raise InvalidEvents(f"expected IntervalEvent, got {type(ev).__name__}")
            if not (0 <= ev.onset and ev.offset <= num_steps):
                raise EventOutOfRange(
                    f"event [{ev.onset}, {ev.offset}) outside [0, {num_steps}]"
                )
            if ev.onset >= ev.offset:
                raise InvalidEvents(
                    f"event [{ev.onset}, {ev.offset}) has no positive duration"
                )
            if prev_offset is not None and ev.onset < prev_offset:
                raise InvalidEvents(
                    f"event at onset {ev.onset} overlaps or precedes the previous "
                    f"event ending at {prev_offset}"
                )
            prev_offset = ev.offset
    else:
        prev_step = None
        for ev in events.events:
            if not isinstance(ev, PointEvent):
                raise InvalidEvents(f"expected PointEvent, got {type(ev).__name__}")
            if not (0 <= ev.step < num_steps):
                raise EventOutOfRange(f"point {ev.step} outside [0, {num_steps})")
            if prev_step is not None and ev.step < prev_step:
                raise InvalidEvents(f"point {ev.step} precedes previous {prev_step}")
            prev_step = ev.step


def derive_state_labels(events: EventSet, num_steps: int) -> np.ndarray:
    """Binary per-step labels: 1 inside any [onset, offset), else 0."""
    validate_events(events, num_steps)
    if events.kind != INTERVAL:
        raise InvalidEvents("state labels are defined for interval events only")
    labels = np.zeros(num_steps, dtype=np.int64)
    for ev in events.events:
        labels[ev.onset : ev.offset] = 1
    return labels


def points_from_intervals(events: EventSet, which: str = "onset") -> EventSet:
    """Collapse interval events to point events at their onset or offset."""
    if events.kind != INTERVAL:
        raise InvalidEvents("points_from_intervals requires interval events")
    if which not in ("onset", "offset"):
        raise InvalidEvents(f"which={which!r}, expected 'onset' or 'offset'")
    points = tuple(
        PointEvent(ev.onset if which == "onset" else ev.offset, ev.score)
        for ev in events.events
    )
    return EventSet(events.series_id, POINT, points)


@dataclass(frozen=True)
class ScoredEvents:
    """Decoded detections for one series: (step, score) pairs per boundary class.

    onsets and offsets are tuples of (step, score) sorted by step.  Point
    detections use the onsets slot and leave offsets empty.
    """

    onsets: tuple[tuple[int, float], ...] = ()
    offsets: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "onsets", tuple((int(s), float(v)) for s, v in self.onsets)
        )
        object.__setattr__(
            self, "offsets", tuple((int(s), float(v)) for s, v in self.offsets)
        )
        for name in ("onsets", "offsets"):
            pairs = getattr(self, name)
            steps = [s for s, _ in pairs]
            if steps != sorted(steps):
                raise InvalidEvents(f"{name} must be sorted by step")
            if any(not np.isfinite(v) for _, v in pairs):
                raise InvalidEvents(f"{name} contain a non-finite score")

    def __len__(self) -> int:
        return len(self.onsets) + len(self.offsets)

    def by_class(self, cls: str) -> tuple[tuple[int, float], ...]:
        """Detections for one boundary class name ('onset', 'offset', 'point')."""
        if cls in ("onset", "point"):
            return self.onsets
        if cls == "offset":
            return self.offsets
        raise InvalidEvents(f"unknown event class {cls!r}")
