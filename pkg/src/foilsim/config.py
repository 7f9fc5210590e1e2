"""Configuration ingestion: one YAML document covering vehicle parameters,
coefficient tables, environment, controller gains, mode thresholds, and
sensor noise.

Every key is optional and falls back to the documented default; unknown
keys are rejected so typos fail loudly. Angles are written in degrees in
the file (keys suffixed ``_deg``) and converted to radians on load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from .control import AttitudeGains, DepthControllerState, SpeedControllerState
from .errors import ConfigError
from .hydro import FluidEnvironment
from .modes import ModeConfig
from .simulator import NoiseModel
from .vehicle import (
    DEFAULT_COEFFICIENT_ROWS,
    CoefficientTable,
    VehicleParams,
)

DEG = math.pi / 180.0


@dataclass(frozen=True)
class ControlConfig:
    """Gains plus the per-phase setpoints the mission logic defaults to."""

    depth_k_p: float = 25.0
    depth_k_i: float = 5.0
    depth_integral_limit: float = 1.0
    f_g: float | None = None            # None: computed from mass/buoyancy
    attitude: AttitudeGains = AttitudeGains()
    speed_k_p: float = 15.0
    speed_k_i: float = 5.0
    speed_integral_limit: float = 2.0
    speed_output_max: float | None = None   # None: 2x one thruster's max
    glide_height: float = 0.066         # m above surface for the CoM
    glide_pitch: float = 4.0 * DEG
    takeoff_pitch: float = 12.4 * DEG
    flight_pitch: float = 6.0 * DEG
    flight_speed: float = 9.0           # m/s
    landing_pitch: float = -4.0 * DEG
    landing_speed: float = 5.0          # m/s
    elevator_q_floor: float = 1.0       # Pa


@dataclass(frozen=True)
class SimConfig:
    params: VehicleParams = field(default_factory=VehicleParams)
    table: CoefficientTable = field(
        default_factory=lambda: CoefficientTable(DEFAULT_COEFFICIENT_ROWS))
    env: FluidEnvironment = field(default_factory=FluidEnvironment)
    control: ControlConfig = field(default_factory=ControlConfig)
    modes: ModeConfig = field(default_factory=ModeConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)

    def depth_controller(self, f_g: float | None = None) -> DepthControllerState:
        if f_g is None:
            f_g = self.control.f_g
        if f_g is None:
            f_g = -self.params.net_weight(self.env.water_density,
                                          self.env.gravity)
        return DepthControllerState(
            k_p=self.control.depth_k_p,
            k_i=self.control.depth_k_i,
            integral_limit=self.control.depth_integral_limit,
            f_g=f_g,
        )

    def speed_controller(self) -> SpeedControllerState:
        out_max = self.control.speed_output_max
        if out_max is None:
            out_max = 2.0 * self.params.thrust_max_underwater
        return SpeedControllerState(
            k_p=self.control.speed_k_p,
            k_i=self.control.speed_k_i,
            integral_limit=self.control.speed_integral_limit,
            output_max=out_max,
        )


class _Section:
    """Dict wrapper tracking consumed keys so leftovers can be rejected."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"section '{path}' must be a mapping")
        self.data = dict(data)
        self.path = path

    def take(self, key: str, default, kind=float):
        if key not in self.data:
            return default
        raw = self.data.pop(key)
        if raw is None:
            return default
        try:
            if kind is float:
                return float(raw)
            if kind is bool:
                return bool(raw)
            if kind == "vec3":
                vec = tuple(float(x) for x in raw)
                if len(vec) != 3:
                    raise ValueError("expected 3 values")
                return vec
            return raw
        except (TypeError, ValueError) as exc:
            raise ConfigError(
                f"invalid value for '{self.path}.{key}': {exc}") from exc

    def take_deg(self, key: str, default_rad: float) -> float:
        value = self.take(key, None)
        return default_rad if value is None else value * DEG

    def subsection(self, key: str) -> "_Section":
        raw = self.data.pop(key, {}) or {}
        return _Section(raw, f"{self.path}.{key}")

    def finish(self):
        if self.data:
            unknown = ", ".join(sorted(self.data))
            raise ConfigError(f"unknown keys in '{self.path}': {unknown}")


def _parse_inertia(raw, path: str):
    if raw is None:
        return VehicleParams().inertia
    try:
        rows = [list(map(float, row)) for row in raw]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{path}': {exc}") from exc
    if len(rows) == 1 and len(rows[0]) == 3:
        d = rows[0]
        return ((d[0], 0.0, 0.0), (0.0, d[1], 0.0), (0.0, 0.0, d[2]))
    if len(rows) == 3 and all(len(r) == 3 for r in rows):
        return tuple(tuple(r) for r in rows)
    raise ConfigError(f"'{path}' must be a 3x3 matrix or [diag] of 3")


def _parse_vehicle(section: _Section) -> VehicleParams:
    d = VehicleParams()
    kwargs = dict(
        mass=section.take("mass", d.mass),
        inertia=_parse_inertia(section.data.pop("inertia", None),
                               f"{section.path}.inertia"),
        center_of_mass=section.take("center_of_mass", d.center_of_mass, "vec3"),
        center_of_buoyancy=section.take(
            "center_of_buoyancy", d.center_of_buoyancy, "vec3"),
        d_f=section.take("d_f", d.d_f),
        h_s=section.take("h_s", d.h_s),
        strut_height=section.take("strut_height", d.strut_height),
        design_pitch=section.take_deg("design_pitch_deg", d.design_pitch),
        buoyancy_volume=section.take("buoyancy_volume", d.buoyancy_volume),
        wing_area=section.take("wing_area", d.wing_area),
        aileron_area=section.take("aileron_area", d.aileron_area),
        aileron_aspect_ratio=section.take(
            "aileron_aspect_ratio", d.aileron_aspect_ratio),
        aileron_stall=section.take_deg("aileron_stall_deg", d.aileron_stall),
        aileron_cd0=section.take("aileron_cd0", d.aileron_cd0),
        aileron_induced_k=section.take("aileron_induced_k", d.aileron_induced_k),
        tail_area=section.take("tail_area", d.tail_area),
        tail_arm=section.take("tail_arm", d.tail_arm),
        tail_lift_slope=section.take("tail_lift_slope", d.tail_lift_slope),
        tail_water_lift_slope=section.take(
            "tail_water_lift_slope", d.tail_water_lift_slope),
        flap_bias=section.take_deg("flap_bias_deg", d.flap_bias),
        flap_lift_slope=section.take("flap_lift_slope", d.flap_lift_slope),
        flap_moment_slope=section.take(
            "flap_moment_slope", d.flap_moment_slope),
        wing_aileron_roll_slope=section.take(
            "wing_aileron_roll_slope", d.wing_aileron_roll_slope),
        thrust_max_underwater=section.take(
            "thrust_max_underwater", d.thrust_max_underwater),
        thrust_max_aerial=section.take("thrust_max_aerial", d.thrust_max_aerial),
        deflection_limit=section.take_deg(
            "deflection_limit_deg", d.deflection_limit),
        surface_deflection_limit=section.take_deg(
            "surface_deflection_limit_deg", d.surface_deflection_limit),
        fold_duration=section.take("fold_duration", d.fold_duration),
        derate_depth=section.take("derate_depth", d.derate_depth),
        folded_lift_residual=section.take(
            "folded_lift_residual", d.folded_lift_residual),
        fuselage_keel_z=section.take("fuselage_keel_z", d.fuselage_keel_z),
        fuselage_height=section.take("fuselage_height", d.fuselage_height),
        aileron_height=section.take("aileron_height", d.aileron_height),
        prop_height=section.take("prop_height", d.prop_height),
        tail_keel_z=section.take("tail_keel_z", d.tail_keel_z),
        tail_height=section.take("tail_height", d.tail_height),
        drag_area=section.take("drag_area", d.drag_area, "vec3"),
        rot_drag=section.take("rot_drag", d.rot_drag, "vec3"),
        servo_tau=section.take("servo_tau", d.servo_tau),
        thruster_tau=section.take("thruster_tau", d.thruster_tau),
    )
    section.finish()
    return VehicleParams(**kwargs)


def _parse_table(section: _Section, wing_area: float) -> CoefficientTable:
    reference_area = section.take("reference_area", wing_area)
    reference_chord = section.take("reference_chord", 0.30)
    raw_entries = section.data.pop("entries", None)
    if raw_entries is None:
        entries = DEFAULT_COEFFICIENT_ROWS
    else:
        try:
            entries = tuple(
                (float(r[0]) * DEG, float(r[1]), float(r[2]), float(r[3]))
                for r in raw_entries
            )
        except (TypeError, ValueError, IndexError) as exc:
            raise ConfigError(
                f"invalid '{section.path}.entries' rows "
                f"(need [alpha_deg, c_l, c_d, c_m]): {exc}") from exc
    section.finish()
    return CoefficientTable(entries=entries, reference_area=reference_area,
                            reference_chord=reference_chord)


def _parse_environment(section: _Section) -> FluidEnvironment:
    d = FluidEnvironment()
    env = FluidEnvironment(
        water_density=section.take("water_density", d.water_density),
        air_density=section.take("air_density", d.air_density),
        gravity=section.take("gravity", d.gravity),
        surface_height=section.take("surface_height", d.surface_height),
    )
    section.finish()
    return env


def _parse_control(section: _Section) -> ControlConfig:
    d = ControlConfig()
    depth = section.subsection("depth")
    attitude = section.subsection("attitude")
    speed = section.subsection("speed")

    ag = AttitudeGains()
    gains = AttitudeGains(
        angle_p_roll=attitude.take("angle_p_roll", ag.angle_p_roll),
        angle_p_pitch=attitude.take("angle_p_pitch", ag.angle_p_pitch),
        rate_p=attitude.take("rate_p", ag.rate_p, "vec3"),
        rate_i=attitude.take("rate_i", ag.rate_i, "vec3"),
        integral_limit=attitude.take("integral_limit", ag.integral_limit),
        rate_limit=attitude.take("rate_limit", ag.rate_limit),
    )
    attitude.finish()

    f_g_raw = depth.data.pop("f_g", None)
    cfg = ControlConfig(
        depth_k_p=depth.take("k_p", d.depth_k_p),
        depth_k_i=depth.take("k_i", d.depth_k_i),
        depth_integral_limit=depth.take("integral_limit",
                                        d.depth_integral_limit),
        f_g=None if f_g_raw is None else float(f_g_raw),
        attitude=gains,
        speed_k_p=speed.take("k_p", d.speed_k_p),
        speed_k_i=speed.take("k_i", d.speed_k_i),
        speed_integral_limit=speed.take("integral_limit",
                                        d.speed_integral_limit),
        speed_output_max=speed.take("output_max", None),
        glide_height=section.take("glide_height", d.glide_height),
        glide_pitch=section.take_deg("glide_pitch_deg", d.glide_pitch),
        takeoff_pitch=section.take_deg("takeoff_pitch_deg", d.takeoff_pitch),
        flight_pitch=section.take_deg("flight_pitch_deg", d.flight_pitch),
        flight_speed=section.take("flight_speed", d.flight_speed),
        landing_pitch=section.take_deg("landing_pitch_deg", d.landing_pitch),
        landing_speed=section.take("landing_speed", d.landing_speed),
        elevator_q_floor=section.take("elevator_q_floor", d.elevator_q_floor),
    )
    depth.finish()
    speed.finish()
    section.finish()
    return cfg


def _parse_modes(section: _Section) -> ModeConfig:
    d = ModeConfig()
    try:
        cfg = ModeConfig(
            v_aerial_on=section.take("v_aerial_on", d.v_aerial_on),
            v_takeoff_min=section.take("v_takeoff_min", d.v_takeoff_min),
            emergence_hold=section.take("emergence_hold", d.emergence_hold),
            surface_band=section.take("surface_band", d.surface_band),
            ramp_time=section.take("ramp_time", d.ramp_time),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid '{section.path}': {exc}") from exc
    section.finish()
    return cfg


def _parse_noise(section: _Section) -> NoiseModel:
    d = NoiseModel()
    noise = NoiseModel(
        depth_std=section.take("depth_std", d.depth_std),
        attitude_std=section.take("attitude_std", d.attitude_std),
        rate_std=section.take("rate_std", d.rate_std),
        airspeed_std=section.take("airspeed_std", d.airspeed_std),
        water_speed_std=section.take("water_speed_std", d.water_speed_std),
        position_std=section.take("position_std", d.position_std),
    )
    section.finish()
    return noise


def load_config(config_text: str) -> SimConfig:
    """Parse and validate a full simulation configuration document."""
    try:
        raw = yaml.safe_load(config_text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"config parse error{where}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a mapping")
    if "vehicle" not in raw:
        raise ConfigError("missing required section 'vehicle'")

    root = _Section(raw, "config")
    vehicle = _parse_vehicle(root.subsection("vehicle"))
    table = _parse_table(root.subsection("coefficients"), vehicle.wing_area)
    env = _parse_environment(root.subsection("environment"))
    control = _parse_control(root.subsection("control"))
    modes = _parse_modes(root.subsection("modes"))
    noise = _parse_noise(root.subsection("sensors"))
    root.finish()
    return SimConfig(params=vehicle, table=table, env=env, control=control,
                     modes=modes, noise=noise)


def load_params(config_text: str) -> tuple[VehicleParams, CoefficientTable]:
    """Vehicle parameters and coefficient table from a config document."""
    cfg = load_config(config_text)
    return cfg.params, cfg.table
