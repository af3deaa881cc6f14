"""Reading and writing signature capture files and dataset directories.

A signature file is line-oriented text. The first line holds the number of
samples; each following line is one sample with seven whitespace-separated
fields, in this order:

    x y t button azimuth altitude pressure

x and y are integer tablet units, t is milliseconds (may be fractional on
read, written as integer milliseconds), button is 0 for pen-up and 1 for
pen-down, azimuth/altitude are 0 when the device does not report them, and
pressure is an integer in [0, 255].

Reads are tolerant (runs of spaces or tabs, fractional t, integer fields
written with a trailing ``.0``); writes are strict (single spaces, one
trailing newline, t rounded to integer milliseconds exactly once).

A dataset directory has one subdirectory per user::

    <root>/user<NNN>/session<k>/g<i>.svc     genuine signatures
    <root>/user<NNN>/forgeries/f<jj>.svc     skilled forgeries of that user

``scan_dataset`` indexes whatever is present and flags deviations from the
expected 3 sessions x 5 genuine + 15 forgeries shape without failing.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path


class SvcError(Exception):
    """Base class for signature file and dataset errors."""


class MalformedHeaderError(SvcError):
    """Header line missing, non-numeric, or inconsistent with the body."""


class FieldCountError(SvcError):
    """A sample line does not have exactly seven fields."""


class FieldValueError(SvcError):
    """A field cannot be parsed or is outside its legal domain."""


class NonMonotonicTimeError(SvcError):
    """Timestamps are not strictly increasing."""


class PressureOutOfRangeError(SvcError):
    """Pressure value outside [0, 255]."""


class MissingRootError(SvcError):
    """Dataset root directory does not exist."""


def _iround(value: float) -> int:
    # Half-up rounding, stable across languages (unlike round-half-even).
    return int(math.floor(value + 0.5))


@dataclass(frozen=True)
class RawSample:
    """One pen sample as captured.

    x/y are integer tablet units in files; in memory they may carry real
    values (the preprocessing pipeline treats them as reals and serialization
    rounds once, at write time).
    """

    x: int
    y: int
    t: float
    button: int
    azimuth: int = 0
    altitude: int = 0
    pressure: int = 0


@dataclass(frozen=True)
class RawSignature:
    """An ordered pen-sample sequence with strictly increasing timestamps."""

    samples: tuple[RawSample, ...]
    source: str = ""

    def __post_init__(self) -> None:
        if len(self.samples) < 2:
            raise MalformedHeaderError(
                f"a signature needs at least 2 samples, got {len(self.samples)}"
            )
        prev = None
        for i, s in enumerate(self.samples):
            if s.button not in (0, 1):
                raise FieldValueError(f"sample {i}: button must be 0 or 1, got {s.button}")
            if not 0 <= s.pressure <= 255:
                raise PressureOutOfRangeError(
                    f"sample {i}: pressure {s.pressure} outside [0, 255]"
                )
            if s.t < 0:
                raise FieldValueError(f"sample {i}: negative timestamp {s.t}")
            if prev is not None and s.t <= prev:
                raise NonMonotonicTimeError(
                    f"sample {i}: t={s.t} does not increase past t={prev}"
                )
            prev = s.t

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def duration_ms(self) -> float:
        return self.samples[-1].t - self.samples[0].t


def _int_field(token: str, name: str, line_no: int) -> int:
    try:
        value = float(token)
    except ValueError:
        raise FieldValueError(f"line {line_no}: {name} field {token!r} is not numeric")
    if not value.is_integer():
        raise FieldValueError(f"line {line_no}: {name} field {token!r} is not an integer")
    return int(value)


def _float_field(token: str, name: str, line_no: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise FieldValueError(f"line {line_no}: {name} field {token!r} is not numeric")


def parse_svc(data: bytes | str, source: str = "") -> RawSignature:
    """Parse signature file contents into a RawSignature.

    Raises MalformedHeaderError, FieldCountError, FieldValueError,
    NonMonotonicTimeError, or PressureOutOfRangeError on invalid input.
    """
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MalformedHeaderError("empty input")
    header = lines[0].strip()
    if not header.isdigit():
        raise MalformedHeaderError(f"header {header!r} is not a non-negative integer")
    count = int(header)
    body = lines[1:]
    if len(body) != count:
        raise MalformedHeaderError(
            f"header declares {count} samples but file has {len(body)} sample lines"
        )
    if count < 2:
        raise MalformedHeaderError(f"a signature needs at least 2 samples, got {count}")

    samples = []
    prev_t = None
    for line_no, line in enumerate(body, start=2):
        tokens = line.split()
        if len(tokens) != 7:
            raise FieldCountError(f"line {line_no}: expected 7 fields, got {len(tokens)}")
        x = _int_field(tokens[0], "x", line_no)
        y = _int_field(tokens[1], "y", line_no)
        t = _float_field(tokens[2], "t", line_no)
        button = _int_field(tokens[3], "button", line_no)
        azimuth = _int_field(tokens[4], "azimuth", line_no)
        altitude = _int_field(tokens[5], "altitude", line_no)
        pressure = _int_field(tokens[6], "pressure", line_no)
        if t < 0:
            raise FieldValueError(f"line {line_no}: negative timestamp {t}")
        if button not in (0, 1):
            raise FieldValueError(f"line {line_no}: button must be 0 or 1, got {button}")
        if not 0 <= pressure <= 255:
            raise PressureOutOfRangeError(
                f"line {line_no}: pressure {pressure} outside [0, 255]"
            )
        if prev_t is not None and t <= prev_t:
            raise NonMonotonicTimeError(
                f"line {line_no}: t={t} does not increase past t={prev_t}"
            )
        prev_t = t
        samples.append(RawSample(x, y, t, button, azimuth, altitude, pressure))
    return RawSignature(tuple(samples), source=source)


def write_svc(sig: RawSignature) -> str:
    """Serialize a RawSignature to canonical file text.

    Timestamps are rounded to the nearest integer millisecond (half up);
    this is the only place rounding happens. The in-memory ``source`` tag is
    carrier metadata and is not serialized.
    """
    lines = [str(len(sig.samples))]
    prev_t = None
    for i, s in enumerate(sig.samples):
        t_ms = _iround(s.t)
        if prev_t is not None and t_ms <= prev_t:
            raise NonMonotonicTimeError(
                f"sample {i}: timestamps collide after millisecond rounding ({t_ms})"
            )
        prev_t = t_ms
        lines.append(
            f"{_iround(s.x)} {_iround(s.y)} {t_ms} {int(s.button)}"
            f" {_iround(s.azimuth)} {_iround(s.altitude)} {int(s.pressure)}"
        )
    return "\n".join(lines) + "\n"


def summarize(sig: RawSignature) -> dict:
    """Capture statistics: sample count, duration, sampling period, pressure.

    ``pressure_band_90`` is the width (max minus min) of the narrowest
    pressure window containing at least 90% of the samples.
    """
    times = [s.t for s in sig.samples]
    pressures = sorted(s.pressure for s in sig.samples)
    n = len(pressures)
    k = max(1, math.ceil(0.9 * n))
    band = min(pressures[i + k - 1] - pressures[i] for i in range(n - k + 1))
    duration = times[-1] - times[0]
    mean_period = duration / (len(times) - 1)
    return {
        "n_samples": sig.n_samples,
        "duration_ms": duration,
        "mean_period_ms": mean_period,
        "mean_rate_hz": 1000.0 / mean_period if mean_period > 0 else float("inf"),
        "pressure_min": pressures[0],
        "pressure_max": pressures[-1],
        "pressure_band_90": band,
        "pen_down_fraction": sum(s.button for s in sig.samples) / n,
    }


@dataclass(frozen=True)
class SessionFiles:
    session_id: int
    genuine: tuple[Path, ...]


@dataclass(frozen=True)
class UserFiles:
    user_id: str
    sessions: tuple[SessionFiles, ...]
    forgeries: tuple[Path, ...]

    def session(self, session_id: int) -> SessionFiles | None:
        for s in self.sessions:
            if s.session_id == session_id:
                return s
        return None

    @property
    def n_genuine(self) -> int:
        return sum(len(s.genuine) for s in self.sessions)


@dataclass
class DatasetIndex:
    root: Path
    users: tuple[UserFiles, ...]
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def user(self, user_id: str) -> UserFiles:
        for u in self.users:
            if u.user_id == user_id:
                return u
        raise KeyError(user_id)

    @property
    def n_genuine(self) -> int:
        return sum(u.n_genuine for u in self.users)

    @property
    def n_forgeries(self) -> int:
        return sum(len(u.forgeries) for u in self.users)


def scan_dataset(root: str | Path) -> DatasetIndex:
    """Index a dataset directory.

    Structural deviations from the 3 sessions x 5 genuine + 15 forgeries
    shape are reported in ``warnings``, never raised; unreadable files are
    excluded and flagged. Results are sorted by path, so the index is
    deterministic regardless of filesystem enumeration order.
    """
    root = Path(root)
    if not root.is_dir():
        raise MissingRootError(f"dataset root {root} is not a directory")

    warnings: list[str] = []
    users: list[UserFiles] = []

    def readable(files: list[Path], owner: str) -> tuple[Path, ...]:
        kept = []
        for f in files:
            if os.access(f, os.R_OK):
                kept.append(f)
            else:
                warnings.append(f"{owner}: unreadable file {f}")
        return tuple(kept)

    user_dirs = sorted(d for d in root.iterdir() if d.is_dir() and d.name.startswith("user"))
    if not user_dirs:
        warnings.append(f"no user directories found under {root}")

    for udir in user_dirs:
        uid = udir.name
        sessions: list[SessionFiles] = []
        for sdir in sorted(d for d in udir.iterdir() if d.is_dir() and d.name.startswith("session")):
            suffix = sdir.name[len("session"):]
            if not suffix.isdigit():
                warnings.append(f"{uid}: skipping session directory with non-numeric id {sdir.name!r}")
                continue
            genuine = readable(sorted(sdir.glob("*.svc")), uid)
            sessions.append(SessionFiles(int(suffix), genuine))
        forgery_dir = udir / "forgeries"
        forgeries: tuple[Path, ...] = ()
        if forgery_dir.is_dir():
            forgeries = readable(sorted(forgery_dir.glob("*.svc")), uid)

        session_ids = [s.session_id for s in sessions]
        if session_ids != [1, 2, 3]:
            warnings.append(f"{uid}: expected sessions 1-3, found {session_ids}")
        for s in sessions:
            if len(s.genuine) != 5:
                warnings.append(
                    f"{uid}: session {s.session_id} has {len(s.genuine)} genuine files, expected 5"
                )
        if len(forgeries) != 15:
            warnings.append(f"{uid}: {len(forgeries)} forgery files, expected 15")

        users.append(UserFiles(uid, tuple(sessions), forgeries))

    return DatasetIndex(root=root, users=tuple(users), warnings=tuple(warnings))
