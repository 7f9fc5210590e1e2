"""Environment-dependent forces: air loads, foil hydrodynamics, buoyancy,
per-component immersion, and near-surface thrust derating.

All functions are pure. Forces follow the body frame (x forward, z down),
so lift that pushes the craft up comes out negative in z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ConfigError
from .frames import Quat, Vec3, clamp, quat_rotate, quat_rotate_inverse
from .state import ActuatorCommand, BodyWrench, RigidBodyState
from .vehicle import CoefficientTable, VehicleParams, interpolate_coefficients


@dataclass(frozen=True)
class FluidEnvironment:
    """Densities, gravity, and the free-surface height (z down, so
    submerged means z > surface_height)."""

    water_density: float = 1000.0   # kg/m^3
    air_density: float = 1.225      # kg/m^3
    gravity: float = 9.81           # m/s^2
    surface_height: float = 0.0     # m

    def __post_init__(self):
        if self.water_density <= 0.0 or self.air_density <= 0.0:
            raise ConfigError("densities must be positive")
        if self.water_density <= self.air_density:
            raise ConfigError("water density must exceed air density")
        if self.gravity <= 0.0:
            raise ConfigError("gravity must be positive")


class ComponentImmersion(NamedTuple):
    depth: float      # m, submerged depth of the component's lowest point
    fraction: float   # wetted fraction in [0, 1]


DRY = ComponentImmersion(0.0, 0.0)


class ImmersionState(NamedTuple):
    """Wetting of each force-producing component."""

    fuselage: ComponentImmersion
    aileron_left: ComponentImmersion
    aileron_right: ComponentImmersion
    prop_left: ComponentImmersion
    prop_right: ComponentImmersion
    tail: ComponentImmersion


FULLY_DRY = ImmersionState(DRY, DRY, DRY, DRY, DRY, DRY)


def _component_immersion(attitude: Quat, position: Vec3, low_point: Vec3,
                         height: float, surface: float) -> ComponentImmersion:
    world = quat_rotate(attitude, low_point)
    z_low = position[2] + world[2]
    depth = z_low - surface
    if depth <= 0.0:
        return DRY
    return ComponentImmersion(depth, clamp(depth / height, 0.0, 1.0))


def compute_immersion(state: RigidBodyState, params: VehicleParams,
                      env: FluidEnvironment) -> ImmersionState:
    """Per-component submerged depth and wetted fraction.

    Each component is reduced to its lowest body-frame point plus a fixed
    vertical extent; the fraction ramps linearly from dry (lowest point at
    the surface) to fully wet (submerged by at least the extent). This
    keeps every fraction continuous in the pose.
    """
    q = state.attitude
    p = state.position
    s = env.surface_height
    d_f = params.d_f
    strut = params.strut_height
    return ImmersionState(
        fuselage=_component_immersion(
            q, p, (0.0, 0.0, params.fuselage_keel_z), params.fuselage_height, s),
        aileron_left=_component_immersion(
            q, p, (0.0, -d_f, strut), params.aileron_height, s),
        aileron_right=_component_immersion(
            q, p, (0.0, d_f, strut), params.aileron_height, s),
        prop_left=_component_immersion(
            q, p, (0.0, -d_f, strut), params.prop_height, s),
        prop_right=_component_immersion(
            q, p, (0.0, d_f, strut), params.prop_height, s),
        tail=_component_immersion(
            q, p, (-params.tail_arm, 0.0, params.tail_keel_z),
            params.tail_height, s),
    )


def aileron_hydro_forces(alpha_eff: float, speed: float,
                         env: FluidEnvironment,
                         params: VehicleParams) -> tuple[float, float]:
    """Lift and drag on one underwater aileron at effective incidence
    ``alpha_eff`` (vehicle AoA plus servo deflection) and flow speed.

    The symmetric profile gives zero lift at zero incidence; the lift
    slope is thin-airfoil 2*pi corrected for aspect ratio and clamped at
    the stall incidence. Drag is parasitic plus induced.
    """
    q = 0.5 * env.water_density * speed * speed * params.aileron_area
    c_l = params.aileron_lift_slope * params.clamped_aileron_incidence(alpha_eff)
    f_l = q * c_l
    f_d = q * (params.aileron_cd0 + params.aileron_induced_k * c_l * c_l)
    return f_l, f_d


def thrust_derating(nominal_thrust: float, prop_depth: float,
                    params: VehicleParams) -> float:
    """Near-surface thrust loss: a propeller working close to the free
    surface draws in air, so output ramps linearly from zero at the
    surface to full at ``derate_depth`` of submergence."""
    factor = clamp(prop_depth / params.derate_depth, 0.0, 1.0)
    return nominal_thrust * factor


def buoyancy_wrench(immersion: ImmersionState, params: VehicleParams,
                    env: FluidEnvironment,
                    attitude: Quat = (1.0, 0.0, 0.0, 0.0)) -> BodyWrench:
    """Hydrostatic force scaled by the fuselage wetted fraction, applied at
    the center of buoyancy; the moment comes from its offset to the CoM."""
    fraction = immersion.fuselage.fraction
    if fraction <= 0.0:
        return BodyWrench((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
    magnitude = env.water_density * env.gravity * params.buoyancy_volume * fraction
    force = quat_rotate_inverse(attitude, (0.0, 0.0, -magnitude))
    r = params.center_of_buoyancy
    moment = (
        r[1] * force[2] - r[2] * force[1],
        r[2] * force[0] - r[0] * force[2],
        r[0] * force[1] - r[1] * force[0],
    )
    return BodyWrench(force, moment)


def plane_forces(lift: float, drag: float, u: float, w: float,
                 speed: float) -> tuple[float, float]:
    """Decompose lift (perpendicular to the local flow, positive up) and
    drag (anti-parallel) into body x/z components for in-plane flow
    (u, w) with magnitude ``speed``.

    Equivalent to F_x = L sin(a) - D cos(a), F_z = -L cos(a) - D sin(a)
    with a = atan2(w, u), but valid in every flow quadrant and exactly
    work-free for the lift part.
    """
    if speed <= 0.0:
        return 0.0, 0.0
    return (
        (lift * w - drag * u) / speed,
        (-lift * u - drag * w) / speed,
    )


def aero_wrench(state: RigidBodyState, cmd: ActuatorCommand,
                env: FluidEnvironment, table: CoefficientTable,
                params: VehicleParams,
                fold_fraction: float | None = None) -> BodyWrench:
    """Whole-airframe aerodynamic wrench in the body frame.

    Lift and drag act in the longitudinal plane, perpendicular and
    parallel to the air-relative velocity, scaled by dynamic pressure and
    the effective lifting area (folded wings keep only a residual
    fraction). The pitch moment combines the airframe C_m with elevator
    and flap increments; differential wing ailerons add roll.
    """
    u, v_lat, w = state.velocity
    speed = math.hypot(u, w)
    if speed == 0.0:
        return BodyWrench((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))

    if fold_fraction is None:
        fold_fraction = 1.0 if cmd.wings_folded else 0.0
    area_scale = params.folded_lift_residual + (
        1.0 - params.folded_lift_residual) * (1.0 - fold_fraction)

    alpha = math.atan2(w, u)
    coeffs = interpolate_coefficients(table, alpha)
    q = 0.5 * env.air_density * speed * speed
    s_eff = table.reference_area * area_scale

    c_l = coeffs.c_l + params.flap_lift_slope * cmd.flaps
    lift = q * s_eff * c_l
    drag = q * s_eff * coeffs.c_d
    f_x, f_z = plane_forces(lift, drag, u, w, speed)

    c_m = coeffs.c_m + params.flap_moment_slope * cmd.flaps
    pitch = q * s_eff * table.reference_chord * c_m
    pitch += q * params.tail_area * params.tail_arm * params.tail_lift_slope \
        * cmd.elevator
    span = table.reference_area / table.reference_chord
    roll = q * s_eff * span * params.wing_aileron_roll_slope \
        * (cmd.aileron_right - cmd.aileron_left)

    return BodyWrench((f_x, 0.0, f_z), (roll, pitch, 0.0))
