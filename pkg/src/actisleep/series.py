"""Core time-series data model and file formats.

An actigraphy recording is an ordered sequence of non-negative activity
counts, one per fixed-length epoch (30 s by default).  Counts are modeled
on the log scale, log(count + 1), so a zero count maps bit-exactly to a
zero log value.  Sleep/wake labels and analysis windows (lights out/on,
go-to-bed, get-up) are carried alongside as epoch indices.

File formats:
  - epoch CSV: header ``timestamp,count``; ISO-8601 UTC timestamps at a
    constant spacing; base-10 integer counts.
  - label CSV: header ``epoch_index,state``; state ``S`` or ``W``.
  - window sidecar: ``key=value`` lines with ISO-8601 timestamps for
    ``lights_out``, ``lights_on``, ``go_to_bed``, ``get_up``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import IntEnum

import numpy as np

from .errors import EmptyInputError, FormatError, InputError

_SUPPORTED_EPOCH_SECONDS_MSG = "epoch_seconds must divide 60 or be a multiple of 60"


class State(IntEnum):
    """Sleep/wake label; the integer value is the HMM state index."""

    SLEEP = 0
    WAKE = 1


_STATE_LETTERS = {State.SLEEP: "S", State.WAKE: "W"}
_LETTER_STATES = {"S": State.SLEEP, "W": State.WAKE}


def _valid_epoch_seconds(epoch_seconds: int) -> bool:
    if epoch_seconds <= 0:
        return False
    return 60 % epoch_seconds == 0 or epoch_seconds % 60 == 0


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EpochSeries:
    """Ordered non-negative activity counts at a fixed epoch length."""

    start_time: datetime
    epoch_seconds: int
    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size == 0:
            raise InputError("counts must be a non-empty 1-d sequence")
        if np.any(counts < 0):
            raise InputError("activity counts must be non-negative")
        if not _valid_epoch_seconds(self.epoch_seconds):
            raise InputError(_SUPPORTED_EPOCH_SECONDS_MSG)
        object.__setattr__(self, "counts", _freeze(counts))

    def __len__(self) -> int:
        return int(self.counts.size)

    def timestamp(self, index: int) -> datetime:
        return self.start_time + timedelta(seconds=index * self.epoch_seconds)


@dataclass(frozen=True)
class LogSeries:
    """log(count + 1) per epoch; zero iff the source count was zero."""

    values: np.ndarray
    epoch_seconds: int

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise InputError("values must be a non-empty 1-d sequence")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InputError("log values must be finite and non-negative")
        object.__setattr__(self, "values", _freeze(values))

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class StateSequence:
    """Per-epoch sleep/wake labels, stored as HMM state indices."""

    states: np.ndarray
    epoch_seconds: int

    def __post_init__(self) -> None:
        states = np.asarray(self.states, dtype=np.int8)
        if states.ndim != 1 or states.size == 0:
            raise InputError("states must be a non-empty 1-d sequence")
        if not np.all((states == State.SLEEP) | (states == State.WAKE)):
            raise InputError("states must be Sleep (0) or Wake (1)")
        object.__setattr__(self, "states", _freeze(states))

    def __len__(self) -> int:
        return int(self.states.size)

    def to_letters(self) -> list[str]:
        return [_STATE_LETTERS[State(s)] for s in self.states]

    @classmethod
    def from_letters(cls, letters, epoch_seconds: int) -> "StateSequence":
        try:
            states = [_LETTER_STATES[s] for s in letters]
        except KeyError as exc:
            raise FormatError(f"unknown state token {exc.args[0]!r}") from None
        return cls(np.array(states, dtype=np.int8), epoch_seconds)


@dataclass(frozen=True)
class StudyWindow:
    """Epoch-index analysis window: lights_out inclusive, lights_on exclusive."""

    lights_out: int
    lights_on: int
    go_to_bed: int
    get_up: int

    def __post_init__(self) -> None:
        if not 0 <= self.lights_out < self.lights_on:
            raise InputError("require 0 <= lights_out < lights_on")
        if not 0 <= self.go_to_bed <= self.get_up:
            raise InputError("require 0 <= go_to_bed <= get_up")

    def check_bounds(self, n_epochs: int) -> None:
        if self.lights_on > n_epochs or self.get_up >= n_epochs:
            raise InputError(
                f"study window exceeds series length {n_epochs}: {self}"
            )


_TS_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 UTC timestamp at second resolution."""
    try:
        ts = datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    except ValueError as exc:
        raise FormatError(f"bad timestamp {text!r}: {exc}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(_TS_FORMAT)


def read_epoch_csv(path) -> EpochSeries:
    """Read an epoch CSV, inferring epoch_seconds from row spacing.

    Raises FormatError for a malformed header, non-constant spacing
    (naming the first offending row), or bad counts; EmptyInputError if
    fewer than two data rows are present (spacing cannot be inferred).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["timestamp", "count"]:
            raise FormatError(f"{path}: expected header 'timestamp,count', got {header}")
        timestamps: list[datetime] = []
        counts: list[int] = []
        # rows are numbered 1-based over data rows (header excluded)
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{path}: row {row_no}: expected 2 fields")
            timestamps.append(parse_timestamp(row[0]))
            try:
                count = int(row[1])
            except ValueError:
                raise FormatError(
                    f"{path}: row {row_no}: count {row[1]!r} is not an integer"
                ) from None
            if count < 0:
                raise FormatError(f"{path}: row {row_no}: negative count {count}")
            counts.append(count)
    if not counts:
        raise EmptyInputError(f"{path}: no data rows")
    if len(counts) == 1:
        raise EmptyInputError(f"{path}: one data row; epoch spacing cannot be inferred")
    spacing = (timestamps[1] - timestamps[0]).total_seconds()
    if spacing <= 0 or spacing != int(spacing):
        raise FormatError(f"{path}: row 2: non-positive or fractional epoch spacing")
    epoch_seconds = int(spacing)
    for i in range(1, len(timestamps)):
        step = (timestamps[i] - timestamps[i - 1]).total_seconds()
        if step != spacing:
            raise FormatError(
                f"{path}: row {i + 1}: spacing {step:g} s differs from {epoch_seconds} s"
            )
    return EpochSeries(timestamps[0], epoch_seconds, np.array(counts, dtype=np.int64))


def write_epoch_csv(series: EpochSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("timestamp,count\n")
        for i, count in enumerate(series.counts):
            fh.write(f"{format_timestamp(series.timestamp(i))},{count}\n")


def read_label_csv(path, expected_len: int, epoch_seconds: int = 30) -> StateSequence:
    """Read a label CSV covering indices 0..expected_len-1 exactly once."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["epoch_index", "state"]:
            raise FormatError(
                f"{path}: expected header 'epoch_index,state', got {header}"
            )
        seen = np.zeros(expected_len, dtype=bool)
        states = np.zeros(expected_len, dtype=np.int8)
        n_rows = 0
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{path}: row {row_no}: expected 2 fields")
            try:
                idx = int(row[0])
            except ValueError:
                raise FormatError(
                    f"{path}: row {row_no}: bad epoch index {row[0]!r}"
                ) from None
            if not 0 <= idx < expected_len:
                raise FormatError(
                    f"{path}: row {row_no}: index {idx} outside 0..{expected_len - 1}"
                )
            if seen[idx]:
                raise FormatError(f"{path}: row {row_no}: duplicate index {idx}")
            token = row[1].strip()
            if token not in _LETTER_STATES:
                raise FormatError(f"{path}: row {row_no}: unknown state token {token!r}")
            seen[idx] = True
            states[idx] = _LETTER_STATES[token]
            n_rows += 1
    if n_rows != expected_len:
        raise FormatError(
            f"{path}: {n_rows} labeled epochs, expected {expected_len}"
        )
    return StateSequence(states, epoch_seconds)


def write_label_csv(states: StateSequence, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("epoch_index,state\n")
        for i, letter in enumerate(states.to_letters()):
            fh.write(f"{i},{letter}\n")


_WINDOW_KEYS = ("lights_out", "lights_on", "go_to_bed", "get_up")


def read_window_file(path, series: EpochSeries) -> StudyWindow:
    """Read a key=value window sidecar and convert timestamps to indices.

    Timestamps are floored to the containing epoch.
    """
    values: dict[str, datetime] = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(f"{path}: line {line_no}: expected key=value")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in _WINDOW_KEYS:
                raise FormatError(f"{path}: line {line_no}: unknown key {key!r}")
            values[key] = parse_timestamp(raw)
    missing = [k for k in _WINDOW_KEYS if k not in values]
    if missing:
        raise FormatError(f"{path}: missing keys {missing}")

    def to_index(ts: datetime) -> int:
        offset = (ts - series.start_time).total_seconds()
        return int(offset // series.epoch_seconds)

    window = StudyWindow(
        lights_out=to_index(values["lights_out"]),
        lights_on=to_index(values["lights_on"]),
        go_to_bed=to_index(values["go_to_bed"]),
        get_up=to_index(values["get_up"]),
    )
    window.check_bounds(len(series))
    return window


def log_transform(series: EpochSeries) -> LogSeries:
    """Natural-log transform: values[t] = ln(counts[t] + 1).

    A zero count maps to a bit-exact zero log value, which is what lets
    the sleep emission detect the zero-inflation point mass exactly.
    """
    return LogSeries(np.log1p(series.counts.astype(np.float64)), series.epoch_seconds)
