"""Five-phase mode supervision and the takeoff throttle sequencer.

The mission profile runs underwater navigation -> surface glide -> takeoff
-> flight -> landing approach, with guarded transitions driven by depth,
speed, immersion, and mission commands. The supervisor also gates which
actuators are live in each phase and commands the wing fold state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum

from .frames import clamp
from .hydro import ImmersionState
from .state import RigidBodyState

log = logging.getLogger(__name__)


class Phase(Enum):
    UNDERWATER_NAV = "underwater_nav"
    SURFACE_GLIDE = "surface_glide"
    TAKEOFF = "takeoff"
    FLIGHT = "flight"
    LANDING = "landing"


# Legal transition edges; anything else is a bug.
ALLOWED_TRANSITIONS: frozenset[tuple[Phase, Phase]] = frozenset({
    (Phase.UNDERWATER_NAV, Phase.SURFACE_GLIDE),
    (Phase.SURFACE_GLIDE, Phase.TAKEOFF),
    (Phase.TAKEOFF, Phase.FLIGHT),
    (Phase.FLIGHT, Phase.LANDING),
    (Phase.LANDING, Phase.SURFACE_GLIDE),
})


@dataclass(frozen=True)
class Mode:
    phase: Phase = Phase.UNDERWATER_NAV
    entry_time: float = 0.0


@dataclass(frozen=True)
class ModeConfig:
    v_aerial_on: float = 3.0        # m/s, aerial motor engagement speed
    v_takeoff_min: float = 6.0      # m/s, minimum speed to enter flight
    emergence_hold: float = 0.5     # s props must stay dry before cutoff
    surface_band: float = 0.03      # m, depth band counting as "surfaced"
    ramp_time: float = 2.0          # s for a 0 -> 1 throttle ramp

    def __post_init__(self):
        if not 0.0 < self.v_aerial_on < self.v_takeoff_min:
            raise ValueError("need 0 < v_aerial_on < v_takeoff_min")
        if self.emergence_hold < 0.0 or self.surface_band <= 0.0:
            raise ValueError("emergence_hold/surface_band out of range")


@dataclass(frozen=True)
class ActuatorEnables:
    underwater_thrusters: bool = True
    underwater_servos: bool = True
    aerial_motor: bool = False
    control_surfaces: bool = True


@dataclass(frozen=True)
class TakeoffState:
    """Phase-internal throttle ramps and the propeller-emergence timer."""

    uw_directive: float = 0.0
    aerial_directive: float = 0.0
    aerial_engaged: bool = False
    airborne_since: float | None = None
    uw_cut: bool = False


def props_airborne(immersion: ImmersionState) -> bool:
    return immersion.prop_left.depth <= 0.0 and immersion.prop_right.depth <= 0.0


def takeoff_sequencer(seq: TakeoffState, t: float, dt: float, speed: float,
                      immersion: ImmersionState, cfg: ModeConfig
                      ) -> tuple[tuple[float, float], TakeoffState]:
    """Throttle directives for the takeoff run.

    The underwater throttle ramps to maximum immediately; the aerial
    throttle stays at zero until the glide speed reaches the engagement
    threshold, then ramps to maximum as well. Once both propellers have
    been clear of the water for the emergence hold, the underwater
    directive drops to zero for good.
    """
    ramp = dt / cfg.ramp_time
    engaged = seq.aerial_engaged or speed >= cfg.v_aerial_on

    if props_airborne(immersion):
        airborne_since = seq.airborne_since if seq.airborne_since is not None else t
    else:
        airborne_since = None
    uw_cut = seq.uw_cut or (
        airborne_since is not None and t - airborne_since >= cfg.emergence_hold)

    uw = 0.0 if uw_cut else clamp(seq.uw_directive + ramp, 0.0, 1.0)
    aerial = clamp(seq.aerial_directive + ramp, 0.0, 1.0) if engaged else 0.0

    new_state = TakeoffState(
        uw_directive=uw,
        aerial_directive=aerial,
        aerial_engaged=engaged,
        airborne_since=airborne_since,
        uw_cut=uw_cut,
    )
    return (uw, aerial), new_state


def _enables_for(phase: Phase, aerial_engaged: bool, uw_cut: bool,
                 hull_dry: bool) -> ActuatorEnables:
    if phase == Phase.UNDERWATER_NAV:
        return ActuatorEnables(True, True, False, True)
    if phase == Phase.SURFACE_GLIDE:
        return ActuatorEnables(True, True, False, True)
    if phase == Phase.TAKEOFF:
        return ActuatorEnables(not uw_cut, True, aerial_engaged and hull_dry,
                               True)
    if phase == Phase.FLIGHT:
        return ActuatorEnables(False, False, hull_dry, True)
    return ActuatorEnables(False, False, hull_dry, True)  # LANDING


def step_mode(mode: Mode, t: float, state: RigidBodyState,
              immersion: ImmersionState, speed: float,
              cmd_events: tuple[str, ...], cfg: ModeConfig,
              takeoff: TakeoffState | None = None
              ) -> tuple[Mode, ActuatorEnables, bool]:
    """Advance the phase machine one tick.

    Returns the (possibly new) mode, the per-actuator enable set, and the
    wing-fold command (folded only during underwater navigation). Illegal
    mission commands for the current phase are logged and dropped.
    """
    phase = mode.phase
    next_phase = phase

    for event in cmd_events:
        if event == "takeoff":
            if phase == Phase.SURFACE_GLIDE:
                next_phase = Phase.TAKEOFF
            else:
                log.warning("takeoff request ignored in phase %s at t=%.3f",
                            phase.value, t)
        elif event == "landing":
            if phase == Phase.FLIGHT:
                next_phase = Phase.LANDING
            else:
                log.warning("landing request ignored in phase %s at t=%.3f",
                            phase.value, t)
        else:
            log.warning("unknown mission event %r at t=%.3f", event, t)

    if next_phase == phase:
        if phase == Phase.UNDERWATER_NAV:
            if state.position[2] <= cfg.surface_band:
                next_phase = Phase.SURFACE_GLIDE
        elif phase == Phase.TAKEOFF:
            lowest_dry = _lowest_point_dry(immersion)
            if speed >= cfg.v_takeoff_min and lowest_dry:
                next_phase = Phase.FLIGHT
        elif phase == Phase.LANDING:
            if immersion.tail.depth > 0.0:
                next_phase = Phase.SURFACE_GLIDE

    if next_phase != phase:
        assert (phase, next_phase) in ALLOWED_TRANSITIONS
        mode = Mode(phase=next_phase, entry_time=t)

    aerial_engaged = takeoff.aerial_engaged if takeoff is not None else False
    uw_cut = takeoff.uw_cut if takeoff is not None else False
    # The aerial propeller must never spin with the hull in the water.
    hull_dry = immersion.fuselage.fraction < 0.5
    enables = _enables_for(next_phase, aerial_engaged, uw_cut, hull_dry)
    fold_cmd = next_phase == Phase.UNDERWATER_NAV
    return mode, enables, fold_cmd


def _lowest_point_dry(immersion: ImmersionState) -> bool:
    return all(c.depth <= 0.0 for c in immersion)
