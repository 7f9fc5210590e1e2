"""Mission scripts: the scripted stand-in for a human pilot.

A mission is a YAML document with an ordered event list (setpoint changes
and phase requests), a duration, and an optional initial condition. Angles
in mission files are degrees, matching the config format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import yaml

from .errors import MissionError
from .modes import Phase

DEG = math.pi / 180.0

COMMANDS = frozenset({
    "set_depth", "set_speed", "set_attitude",
    "request_takeoff", "request_landing", "end",
})


@dataclass(frozen=True)
class MissionEvent:
    t: float
    command: str
    value: Any = None


@dataclass(frozen=True)
class InitialCondition:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0
    u: float = 0.0
    phase: Phase = Phase.UNDERWATER_NAV


@dataclass(frozen=True)
class MissionScript:
    events: tuple[MissionEvent, ...]
    duration: float
    initial: InitialCondition = field(default_factory=InitialCondition)

    @property
    def end_time(self) -> float:
        for ev in self.events:
            if ev.command == "end":
                return ev.t
        return self.duration


def _parse_attitude_value(raw, t: float) -> dict:
    if not isinstance(raw, dict):
        raise MissionError(
            f"set_attitude at t={t} needs a mapping value "
            "(roll_deg/pitch_deg/yaw_rate_deg)")
    known = {"roll_deg", "pitch_deg", "yaw_rate_deg"}
    unknown = set(raw) - known
    if unknown:
        raise MissionError(
            f"set_attitude at t={t}: unknown keys {sorted(unknown)}")
    out = {}
    for key in known:
        if key in raw:
            out[key.removesuffix("_deg")] = float(raw[key]) * DEG
    return out


def _parse_event(raw, index: int) -> MissionEvent:
    if not isinstance(raw, dict):
        raise MissionError(f"event #{index} must be a mapping")
    try:
        t = float(raw["t"])
        command = str(raw["command"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MissionError(f"event #{index} needs 't' and 'command': {exc}") \
            from exc
    if t < 0.0:
        raise MissionError(f"event #{index}: negative time {t}")
    if command not in COMMANDS:
        raise MissionError(f"event #{index}: unknown command '{command}'")

    value = raw.get("value")
    if command in ("set_depth", "set_speed"):
        if value is None:
            raise MissionError(f"{command} at t={t} needs a value")
        value = float(value)
    elif command == "set_attitude":
        value = _parse_attitude_value(value, t)
    elif value is not None:
        raise MissionError(f"{command} at t={t} takes no value")

    extra = set(raw) - {"t", "command", "value"}
    if extra:
        raise MissionError(f"event #{index}: unknown keys {sorted(extra)}")
    return MissionEvent(t=t, command=command, value=value)


def _parse_initial(raw) -> InitialCondition:
    if raw is None:
        return InitialCondition()
    if not isinstance(raw, dict):
        raise MissionError("'initial' must be a mapping")
    data = dict(raw)
    phase_name = data.pop("mode", Phase.UNDERWATER_NAV.value)
    try:
        phase = Phase(phase_name)
    except ValueError as exc:
        raise MissionError(f"initial.mode: unknown phase '{phase_name}'") \
            from exc
    kwargs = {}
    for key in ("x", "y", "z", "u"):
        if key in data:
            kwargs[key] = float(data.pop(key))
    for key in ("roll_deg", "pitch_deg", "yaw_deg"):
        if key in data:
            kwargs[key.removesuffix("_deg")] = float(data.pop(key)) * DEG
    if data:
        raise MissionError(f"initial: unknown keys {sorted(data)}")
    return InitialCondition(phase=phase, **kwargs)


def validate_mission(mission_text: str) -> MissionScript:
    """Parse and invariant-check a mission document.

    Rejects decreasing timestamps, unknown commands, missing or duplicate
    end events, and negative times. Whether a phase request is legal for
    the phase the craft is actually in is decided at runtime by the mode
    manager, not here.
    """
    try:
        raw = yaml.safe_load(mission_text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise MissionError(f"mission parse error{where}: {exc}") from exc
    if not isinstance(raw, dict):
        raise MissionError("mission document must be a mapping")

    data = dict(raw)
    raw_events = data.pop("events", None)
    if not isinstance(raw_events, list) or not raw_events:
        raise MissionError("mission needs a non-empty 'events' list")
    events = tuple(_parse_event(ev, i) for i, ev in enumerate(raw_events))

    for prev, cur in zip(events, events[1:]):
        if cur.t < prev.t:
            raise MissionError(
                f"event times must be non-decreasing "
                f"({cur.t} after {prev.t})")

    ends = [ev for ev in events if ev.command == "end"]
    if len(ends) != 1:
        raise MissionError(f"mission needs exactly one end event, got "
                           f"{len(ends)}")
    if events[-1].command != "end":
        raise MissionError("the end event must be last")

    duration = data.pop("duration", None)
    duration = ends[0].t if duration is None else float(duration)
    if duration < 0.0:
        raise MissionError("duration must be non-negative")

    initial = _parse_initial(data.pop("initial", None))
    if data:
        raise MissionError(f"mission: unknown keys {sorted(data)}")
    return MissionScript(events=events, duration=duration, initial=initial)
