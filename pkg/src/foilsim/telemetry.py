"""Telemetry records and their CSV persistence.

The file format is UTF-8, comma-separated, '.' decimal, one comment line
``# <schema-version>`` first, then a header row, then one row per control
tick. Floats are written with ``repr`` so re-reading reproduces every
value bit-exactly; missing measurements are empty fields; booleans are
0/1.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path
from typing import IO, Iterator

SCHEMA_VERSION = "foilsim-telemetry-v1"

COLUMNS: tuple[str, ...] = (
    "t", "mode",
    "x", "y", "z", "roll", "pitch", "yaw",
    "u", "v", "w", "p", "q", "r",
    "depth", "speed", "airspeed",
    "thrust_left", "thrust_right", "delta_left", "delta_right",
    "elevator", "aileron_left", "aileron_right", "flaps",
    "aerial_throttle", "wings_folded", "fold_fraction",
    "f_xd", "f_zd", "tau_xd", "tau_yd", "tau_zd",
    "residual_left", "residual_right",
    "iterations_left", "iterations_right",
    "converged_left", "converged_right",
    "saturated_left", "saturated_right",
    "imm_fuselage", "imm_aileron_left", "imm_aileron_right",
    "imm_prop_left", "imm_prop_right", "imm_tail",
    "uw_enabled", "aerial_enabled",
)

_BOOL_COLUMNS = frozenset({
    "wings_folded", "converged_left", "converged_right",
    "saturated_left", "saturated_right", "uw_enabled", "aerial_enabled",
})
_INT_COLUMNS = frozenset({"iterations_left", "iterations_right"})
_STR_COLUMNS = frozenset({"mode"})


@dataclass(frozen=True)
class TelemetryRecord:
    t: float
    mode: str
    x: float
    y: float
    z: float
    roll: float
    pitch: float
    yaw: float
    u: float
    v: float
    w: float
    p: float
    q: float
    r: float
    depth: float | None
    speed: float
    airspeed: float | None
    thrust_left: float
    thrust_right: float
    delta_left: float
    delta_right: float
    elevator: float
    aileron_left: float
    aileron_right: float
    flaps: float
    aerial_throttle: float
    wings_folded: bool
    fold_fraction: float
    f_xd: float
    f_zd: float
    tau_xd: float
    tau_yd: float
    tau_zd: float
    residual_left: float
    residual_right: float
    iterations_left: int
    iterations_right: int
    converged_left: bool
    converged_right: bool
    saturated_left: bool
    saturated_right: bool
    imm_fuselage: float
    imm_aileron_left: float
    imm_aileron_right: float
    imm_prop_left: float
    imm_prop_right: float
    imm_tail: float
    uw_enabled: bool
    aerial_enabled: bool


assert tuple(f.name for f in fields(TelemetryRecord)) == COLUMNS


def _format(column: str, value) -> str:
    if value is None:
        return ""
    if column in _STR_COLUMNS:
        return str(value)
    if column in _BOOL_COLUMNS:
        return "1" if value else "0"
    if column in _INT_COLUMNS:
        return str(int(value))
    return repr(float(value))


class TelemetryWriter:
    """Streams records to a CSV file; owns the file handle."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh: IO[str] = open(self.path, "w", encoding="utf-8", newline="\n")
        self._fh.write(f"# {SCHEMA_VERSION}\n")
        self._fh.write(",".join(COLUMNS) + "\n")
        self.count = 0

    def write(self, record: TelemetryRecord):
        row = ",".join(
            _format(col, getattr(record, col)) for col in COLUMNS)
        self._fh.write(row + "\n")
        self.count += 1

    def close(self):
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self) -> "TelemetryWriter":
        return self

    def __exit__(self, *exc):
        self.close()


def read_telemetry(path: str | Path) -> tuple[str, list[TelemetryRecord]]:
    """Load a telemetry CSV back into records, bit-exactly."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if not first.startswith("# "):
            raise ValueError("missing schema comment line")
        version = first[2:]
        header = fh.readline().rstrip("\n").split(",")
        if tuple(header) != COLUMNS:
            raise ValueError("telemetry header does not match schema")
        records = []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            kwargs = {}
            for col, raw in zip(COLUMNS, parts):
                if raw == "":
                    kwargs[col] = None
                elif col in _STR_COLUMNS:
                    kwargs[col] = raw
                elif col in _BOOL_COLUMNS:
                    kwargs[col] = raw == "1"
                elif col in _INT_COLUMNS:
                    kwargs[col] = int(raw)
                else:
                    kwargs[col] = float(raw)
            records.append(TelemetryRecord(**kwargs))
    return version, records


def iter_column(records: list[TelemetryRecord], column: str) -> Iterator:
    for rec in records:
        yield getattr(rec, column)
