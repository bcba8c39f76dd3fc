"""Synthetic data generation, window downsampling, and CSV persistence.

The generator produces a two-state latent process (alternating gaps and
events) observed through two channels: a mean-shifted noisy copy of the
state and a state-dependent variance proxy.  Downsampling summarizes each
length-D window with mean/std/max/min per channel, matching the feature
expansion applied before modeling.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Collection, Iterable, Mapping

import numpy as np

from .errors import InvalidConfig, InvalidFactor, IoError, ParseError
from .types import (
    INTERVAL,
    POINT,
    EventSet,
    IntervalEvent,
    PointEvent,
    ScoredEvents,
    TimeSeries,
    validate_events,
)

# %.17g round-trips IEEE float64 exactly through decimal text
_FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the two-state synthetic generator."""

    num_series: int
    length: int
    mean_event_duration: int
    mean_gap: int
    noise_std: float
    signal_shift: float = 1.0
    drift_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.num_series < 1:
            raise InvalidConfig(f"num_series={self.num_series}, expected >= 1")
        if self.mean_event_duration < 1 or self.mean_gap < 1:
            raise InvalidConfig("mean_event_duration and mean_gap must be >= 1")
        if self.length < self.mean_event_duration + self.mean_gap:
            raise InvalidConfig(
                f"length={self.length} shorter than one mean gap+event cycle"
            )
        if not (np.isfinite(self.noise_std) and self.noise_std >= 0):
            raise InvalidConfig(f"noise_std={self.noise_std}, expected >= 0")
        if not (np.isfinite(self.drift_std) and self.drift_std >= 0):
            raise InvalidConfig(f"drift_std={self.drift_std}, expected >= 0")
        if not np.isfinite(self.signal_shift):
            raise InvalidConfig("signal_shift must be finite")


def _draw_duration(rng: np.random.Generator, mean: int) -> int:
    """Geometric-like duration with the given mean, support >= 1.

    Sum of two geometric phases (a negative binomial) plus one: keeps the
    memoryless flavor but roughly halves the variance of a plain geometric,
    so run counts per series concentrate near length / (mean_gap +
    mean_event_duration).
    """
    p = 2.0 / (mean + 1.0)
    return int(rng.negative_binomial(2, p)) + 1


def synth_generate(config: SynthConfig) -> list[tuple[TimeSeries, EventSet]]:
    """Generate num_series independent (series, events) pairs, seeded."""
    rng = np.random.default_rng(config.seed)
    out: list[tuple[TimeSeries, EventSet]] = []
    for idx in range(config.num_series):
        sid = f"s{idx:03d}"
        state = np.zeros(config.length, dtype=np.float64)
        events: list[IntervalEvent] = []
        t = 0
        in_event = False
        while t < config.length:
            mean = config.mean_event_duration if in_event else config.mean_gap
            run = _draw_duration(rng, mean)
            end = min(t + run, config.length)
            if in_event:
                state[t:end] = 1.0
                events.append(IntervalEvent(t, end))
            t = end
            in_event = not in_event

        noise = rng.normal(0.0, 1.0, config.length) * config.noise_std
        drift = np.cumsum(rng.normal(0.0, 1.0, config.length) * config.drift_std)
        chan_a = state * config.signal_shift + noise + drift
        # variance proxy: noise amplitude doubles inside events
        chan_b = rng.normal(0.0, 1.0, config.length) * (
            config.noise_std * (1.0 + state)
        )
        series = TimeSeries.build(sid, {"a": chan_a, "b": chan_b})
        event_set = EventSet(sid, INTERVAL, tuple(events))
        validate_events(event_set, config.length)
        out.append((series, event_set))
    return out


def _downsample_events(events: EventSet, factor: int, new_len: int) -> EventSet:
    """Map event steps t -> floor(t/D), dropping events past the cropped end.

    Interval offsets are clipped to the new length and kept at least one
    step past the mapped onset so no event collapses to zero duration.
    """
    if events.kind == INTERVAL:
        mapped = []
        for ev in events.events:
            onset = ev.onset // factor
            if onset >= new_len:
                continue
            offset = min(ev.offset // factor, new_len)
            offset = max(offset, onset + 1)
            mapped.append(IntervalEvent(onset, offset, ev.score))
        return EventSet(events.series_id, INTERVAL, tuple(mapped))
    mapped = [
        PointEvent(ev.step // factor, ev.score)
        for ev in events.events
        if ev.step // factor < new_len
    ]
    return EventSet(events.series_id, POINT, tuple(mapped))


def downsample(
    series: TimeSeries,
    factor_D: int,
    events: EventSet | None = None,
    categorical: Collection[str] = (),
) -> tuple[TimeSeries, EventSet | None]:
    """Summarize length-D windows: mean/std/max/min per continuous channel.

    Output length is floor(T/D); the trailing partial window is dropped.
    Std is the population standard deviation (zero for D=1).  Channels named
    in `categorical` instead keep their name and take the last value of each
    window.  Event steps map t -> floor(t/D).
    """
    if factor_D < 1:
        raise InvalidFactor(f"factor_D={factor_D}, expected >= 1")
    if series.num_steps < factor_D:
        raise InvalidFactor(
            f"factor_D={factor_D} exceeds series length {series.num_steps}"
        )
    new_len = series.num_steps // factor_D
    channels: dict[str, np.ndarray] = {}
    for name, values in series.channels.items():
        arr = np.asarray(values, dtype=np.float64)[: new_len * factor_D]
        windows = arr.reshape(new_len, factor_D)
        if name in categorical:
            channels[name] = windows[:, -1].copy()
        else:
            channels[f"{name}_mean"] = windows.mean(axis=1)
            channels[f"{name}_std"] = windows.std(axis=1)
            channels[f"{name}_max"] = windows.max(axis=1)
            channels[f"{name}_min"] = windows.min(axis=1)
    new_series = TimeSeries.build(
        series.series_id, channels, series.step_seconds * factor_D
    )
    new_events = (
        _downsample_events(events, factor_D, new_len) if events is not None else None
    )
    return new_series, new_events


# -- CSV persistence --------------------------------------------------------


def save_series(path: str | Path, series: TimeSeries) -> None:
    """Write `step,<channel>...` rows with full-precision decimal values."""
    path = Path(path)
    names = series.channel_names
    arrays = [np.asarray(series.channels[n], dtype=np.float64) for n in names]
    lines = ["step," + ",".join(names)]
    for t in range(series.num_steps):
        lines.append(
            f"{t}," + ",".join(_FLOAT_FMT % arr[t] for arr in arrays)
        )
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_series(
    path: str | Path, step_seconds: float = 1.0, series_id: str | None = None
) -> TimeSeries:
    """Read a series CSV; the series id defaults to the file stem."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise ParseError("empty file", line=1)
    header = rows[0]
    if not header or header[0] != "step" or len(header) < 2:
        raise ParseError("expected header 'step,<channel>...'", line=1, column=1)
    names = header[1:]
    if len(set(names)) != len(names):
        raise ParseError("duplicate channel names", line=1, column=2)
    columns: list[list[float]] = [[] for _ in names]
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} fields, found {len(row)}", line=i
            )
        for j, cell in enumerate(row[1:], start=2):
            try:
                columns[j - 2].append(float(cell))
            except ValueError:
                raise ParseError(f"bad number {cell!r}", line=i, column=j) from None
    channels = {
        name: np.asarray(col, dtype=np.float64) for name, col in zip(names, columns)
    }
    return TimeSeries.build(
        series_id if series_id is not None else path.stem, channels, step_seconds
    )


_EVENT_HEADER = ["series_id", "event", "step", "score"]


def _event_rows(sid: str, obj: EventSet | ScoredEvents) -> Iterable[list[str]]:
    if isinstance(obj, EventSet):
        if obj.kind == INTERVAL:
            for ev in obj.events:
                score = "" if ev.score is None else _FLOAT_FMT % ev.score
                yield [sid, "onset", str(ev.onset), score]
                yield [sid, "offset", str(ev.offset), score]
        else:
            for ev in obj.events:
                score = "" if ev.score is None else _FLOAT_FMT % ev.score
                yield [sid, "point", str(ev.step), score]
    else:
        for step, score in obj.onsets:
            yield [sid, "onset", str(step), _FLOAT_FMT % score]
        for step, score in obj.offsets:
            yield [sid, "offset", str(step), _FLOAT_FMT % score]


def save_events(
    path: str | Path, events: Mapping[str, EventSet | ScoredEvents]
) -> None:
    """Write a long-form events CSV covering one or more series.

    Interval ground truth emits alternating onset/offset rows per event;
    decoded ScoredEvents emit their onset rows then offset rows.  The score
    column is left empty for unscored ground truth.
    """
    path = Path(path)
    lines = [",".join(_EVENT_HEADER)]
    for sid in sorted(events):
        for row in _event_rows(sid, events[sid]):
            lines.append(",".join(row))
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _read_event_rows(path: str | Path) -> list[tuple[str, str, int, float | None, int]]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != _EVENT_HEADER:
        raise ParseError(
            f"expected header {','.join(_EVENT_HEADER)!r}", line=1, column=1
        )
    parsed = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, found {len(row)}", line=i)
        sid, kind, step_text, score_text = row
        if kind not in ("onset", "offset", "point"):
            raise ParseError(f"bad event type {kind!r}", line=i, column=2)
        try:
            step = int(step_text)
        except ValueError:
            raise ParseError(f"bad step {step_text!r}", line=i, column=3) from None
        score: float | None = None
        if score_text != "":
            try:
                score = float(score_text)
            except ValueError:
                raise ParseError(
                    f"bad score {score_text!r}", line=i, column=4
                ) from None
        parsed.append((sid, kind, step, score, i))
    return parsed


def load_events(path: str | Path) -> dict[str, EventSet]:
    """Read ground-truth events back into typed EventSets per series.

    A series whose rows are all 'point' becomes a point EventSet; otherwise
    rows must alternate onset/offset in file order (as save_events writes
    them) and are paired into intervals.
    """
    by_series: dict[str, list[tuple[str, int, float | None, int]]] = {}
    for sid, kind, step, score, line in _read_event_rows(path):
        by_series.setdefault(sid, []).append((kind, step, score, line))
    out: dict[str, EventSet] = {}
    for sid, rows in by_series.items():
        kinds = {kind for kind, _, _, _ in rows}
        if kinds == {"point"}:
            points = tuple(PointEvent(step, score) for _, step, score, _ in rows)
            out[sid] = EventSet(sid, POINT, points)
            continue
        if "point" in kinds:
            line = next(l for k, _, _, l in rows if k == "point")
            raise ParseError(
                f"series {sid!r} mixes point and interval rows", line=line, column=2
            )
        intervals = []
        pending: tuple[int, float | None, int] | None = None
        for kind, step, score, line in rows:
            if kind == "onset":
                if pending is not None:
                    raise ParseError(
                        f"series {sid!r}: onset without preceding offset",
                        line=line,
                        column=2,
                    )
                pending = (step, score, line)
            else:
                if pending is None:
                    raise ParseError(
                        f"series {sid!r}: offset without preceding onset",
                        line=line,
                        column=2,
                    )
                intervals.append(IntervalEvent(pending[0], step, pending[1]))
                pending = None
        if pending is not None:
            raise ParseError(
                f"series {sid!r}: unpaired trailing onset", line=pending[2], column=2
            )
        out[sid] = EventSet(sid, INTERVAL, tuple(intervals))
    return out


def load_scored_events(path: str | Path) -> dict[str, ScoredEvents]:
    """Read decoded detections: onset/point rows and offset rows with scores."""
    by_series: dict[str, dict[str, list[tuple[int, float]]]] = {}
    for sid, kind, step, score, line in _read_event_rows(path):
        if score is None:
            raise ParseError(
                f"series {sid!r}: detection rows need a score", line=line, column=4
            )
        slot = "onsets" if kind in ("onset", "point") else "offsets"
        by_series.setdefault(sid, {"onsets": [], "offsets": []})[slot].append(
            (step, score)
        )
    return {
        sid: ScoredEvents(
            onsets=tuple(sorted(slots["onsets"])),
            offsets=tuple(sorted(slots["offsets"])),
        )
        for sid, slots in by_series.items()
    }
