"""6-DOF Newton-Euler rigid-body simulation with fixed-step RK4.

Force aggregation blends media per component through the immersion
fractions, so nothing jumps discontinuously as the craft crosses the
surface. Hydrodynamic surface forces are evaluated against the local flow
at each application point (including the rotational contribution), which
makes lift exactly work-free and drag strictly dissipative.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace

from .errors import SimulationHalt
from .frames import (
    Quat,
    Vec3,
    clamp,
    mat3_inverse,
    mat3_vec,
    quat_derivative,
    quat_normalize,
    quat_rotate,
    quat_rotate_inverse,
    vec_cross,
)
from .hydro import (
    FluidEnvironment,
    ImmersionState,
    aero_wrench,
    buoyancy_wrench,
    compute_immersion,
    plane_forces,
    thrust_derating,
)
from .state import ActuatorCommand, BodyWrench, RigidBodyState
from .vehicle import CoefficientTable, VehicleParams

AERIAL_THRUST_POINT: Vec3 = (0.30, 0.0, 0.0)


def _surface_force(u_loc: float, w_loc: float, area: float, lift_slope: float,
                   incidence_offset: float, stall: float, cd0: float,
                   induced_k: float, rho: float) -> tuple[float, float]:
    """In-plane (x, z) force of a small lifting surface against its local
    flow. Lift is perpendicular to the flow, drag anti-parallel."""
    speed = math.hypot(u_loc, w_loc)
    if speed <= 0.0:
        return 0.0, 0.0
    alpha = math.atan2(w_loc, u_loc)
    a_eff = clamp(alpha + incidence_offset, -stall, stall)
    q = 0.5 * rho * speed * speed * area
    c_l = lift_slope * a_eff
    lift = q * c_l
    drag = q * (cd0 + induced_k * c_l * c_l)
    return plane_forces(lift, drag, u_loc, w_loc, speed)


def total_wrench(state: RigidBodyState, cmd: ActuatorCommand,
                 immersion: ImmersionState, env: FluidEnvironment,
                 params: VehicleParams, table: CoefficientTable,
                 fold_fraction: float | None = None) -> BodyWrench:
    """Sum of every force and moment acting on the craft, body frame,
    about the center of mass.

    Gravity, buoyancy (by fuselage wetted fraction), airframe aerodynamics
    (weighted by the dry fraction), per-aileron thrust-vector plus
    hydrodynamic forces at (0, +/-d_f, h_s) with near-surface thrust
    derating, the wetted tail surface, quadratic fuselage drag in the
    blended medium, and aerial thrust along body x.
    """
    q_att = state.attitude
    vel = state.velocity
    omega = state.angular_rate

    fx, fy, fz = quat_rotate_inverse(
        q_att, (0.0, 0.0, params.mass * env.gravity))
    mx = my = mz = 0.0

    b_force, b_moment = buoyancy_wrench(immersion, params, env, q_att)
    fx += b_force[0]
    fy += b_force[1]
    fz += b_force[2]
    mx += b_moment[0]
    my += b_moment[1]
    mz += b_moment[2]

    air_weight = 1.0 - immersion.fuselage.fraction
    if air_weight > 0.0:
        a_force, a_moment = aero_wrench(state, cmd, env, table, params,
                                        fold_fraction)
        fx += air_weight * a_force[0]
        fy += air_weight * a_force[1]
        fz += air_weight * a_force[2]
        mx += air_weight * a_moment[0]
        my += air_weight * a_moment[1]
        mz += air_weight * a_moment[2]

    rho_w = env.water_density
    for side, thrust, delta, ail_imm, prop_imm in (
        (1.0, cmd.thrust_right, cmd.delta_right,
         immersion.aileron_right, immersion.prop_right),
        (-1.0, cmd.thrust_left, cmd.delta_left,
         immersion.aileron_left, immersion.prop_left),
    ):
        r = (0.0, side * params.d_f, params.h_s)
        om_x_r = vec_cross(omega, r)
        u_loc = vel[0] + om_x_r[0]
        w_loc = vel[2] + om_x_r[2]

        f_t = thrust_derating(thrust, prop_imm.depth, params)
        s_fx = f_t * math.cos(delta)
        s_fz = f_t * math.sin(delta)
        if ail_imm.fraction > 0.0:
            h_fx, h_fz = _surface_force(
                u_loc, w_loc, params.aileron_area,
                params.aileron_lift_slope, delta, params.aileron_stall,
                params.aileron_cd0, params.aileron_induced_k, rho_w)
            s_fx += ail_imm.fraction * h_fx
            s_fz += ail_imm.fraction * h_fz
        fx += s_fx
        fz += s_fz
        mx += r[1] * s_fz
        my += r[2] * s_fx - r[0] * s_fz
        mz += -r[1] * s_fx

    if immersion.tail.fraction > 0.0:
        r_t = (-params.tail_arm, 0.0, params.tail_keel_z)
        om_x_rt = vec_cross(omega, r_t)
        u_t = vel[0] + om_x_rt[0]
        w_t = vel[2] + om_x_rt[2]
        # Positive elevator pitches the nose up, i.e. pushes the tail down,
        # so it subtracts from the tail's effective incidence. The wetted
        # tail skims the surface, so it carries the ventilated-planing lift
        # slope rather than the fully-wetted airfoil one.
        t_fx, t_fz = _surface_force(
            u_t, w_t, params.tail_area, params.tail_water_lift_slope,
            -cmd.elevator, params.aileron_stall, params.aileron_cd0,
            params.aileron_induced_k, rho_w)
        t_fx *= immersion.tail.fraction
        t_fz *= immersion.tail.fraction
        fx += t_fx
        fz += t_fz
        mx += r_t[1] * t_fz
        my += r_t[2] * t_fx - r_t[0] * t_fz
        mz += -r_t[1] * t_fx

    rho_eff = immersion.fuselage.fraction * rho_w \
        + (1.0 - immersion.fuselage.fraction) * env.air_density
    da = params.drag_area
    fx -= 0.5 * rho_eff * da[0] * vel[0] * abs(vel[0])
    fy -= 0.5 * rho_eff * da[1] * vel[1] * abs(vel[1])
    fz -= 0.5 * rho_eff * da[2] * vel[2] * abs(vel[2])
    rd = params.rot_drag
    mx -= 0.5 * rho_eff * rd[0] * omega[0] * abs(omega[0])
    my -= 0.5 * rho_eff * rd[1] * omega[1] * abs(omega[1])
    mz -= 0.5 * rho_eff * rd[2] * omega[2] * abs(omega[2])

    if cmd.aerial_throttle > 0.0:
        thrust_air = cmd.aerial_throttle * params.thrust_max_aerial
        r_a = AERIAL_THRUST_POINT
        fx += thrust_air
        my += r_a[2] * thrust_air
        mz += -r_a[1] * thrust_air

    return BodyWrench((fx, fy, fz), (mx, my, mz))


def _derivative(state: RigidBodyState, cmd: ActuatorCommand,
                env: FluidEnvironment, params: VehicleParams,
                table: CoefficientTable, inertia_inv,
                fold_fraction: float | None):
    immersion = compute_immersion(state, params, env)
    force, moment = total_wrench(state, cmd, immersion, env, params, table,
                                 fold_fraction)
    vel = state.velocity
    omega = state.angular_rate
    inv_m = 1.0 / params.mass
    cor = vec_cross(omega, vel)
    accel = (force[0] * inv_m - cor[0],
             force[1] * inv_m - cor[1],
             force[2] * inv_m - cor[2])
    i_omega = mat3_vec(params.inertia, omega)
    gyro = vec_cross(omega, i_omega)
    alpha = mat3_vec(inertia_inv, (moment[0] - gyro[0],
                                   moment[1] - gyro[1],
                                   moment[2] - gyro[2]))
    p_dot = quat_rotate(state.attitude, vel)
    q_dot = quat_derivative(state.attitude, omega)
    return p_dot, q_dot, accel, alpha


def integrate_step(state: RigidBodyState, cmd: ActuatorCommand, dt: float,
                   env: FluidEnvironment, params: VehicleParams,
                   table: CoefficientTable,
                   fold_fraction: float | None = None,
                   wrench_override=None) -> RigidBodyState:
    """One classical RK4 step of the rigid-body equations.

    ``cmd`` is held constant over the step (lag filtering happens in the
    :class:`Simulator`); the wrench is re-evaluated at every substage.
    ``wrench_override`` replaces the force model with a callable
    state -> BodyWrench, which the tests use to drive analytic scenarios.
    """
    if not 0.0 < dt <= 0.01:
        raise ValueError("dt must be in (0, 0.01] s")

    inertia_inv = mat3_inverse(params.inertia)

    if wrench_override is None:
        def deriv(s: RigidBodyState):
            return _derivative(s, cmd, env, params, table, inertia_inv,
                               fold_fraction)
    else:
        def deriv(s: RigidBodyState):
            force, moment = wrench_override(s)
            vel = s.velocity
            omega = s.angular_rate
            inv_m = 1.0 / params.mass
            cor = vec_cross(omega, vel)
            accel = (force[0] * inv_m - cor[0],
                     force[1] * inv_m - cor[1],
                     force[2] * inv_m - cor[2])
            i_omega = mat3_vec(params.inertia, omega)
            gyro = vec_cross(omega, i_omega)
            alpha = mat3_vec(inertia_inv, (moment[0] - gyro[0],
                                           moment[1] - gyro[1],
                                           moment[2] - gyro[2]))
            return (quat_rotate(s.attitude, vel),
                    quat_derivative(s.attitude, omega),
                    accel, alpha)

    def advance(s: RigidBodyState, k, h: float) -> RigidBodyState:
        dp, dq, dv, dw = k
        return RigidBodyState(
            position=(s.position[0] + dp[0] * h,
                      s.position[1] + dp[1] * h,
                      s.position[2] + dp[2] * h),
            attitude=(s.attitude[0] + dq[0] * h,
                      s.attitude[1] + dq[1] * h,
                      s.attitude[2] + dq[2] * h,
                      s.attitude[3] + dq[3] * h),
            velocity=(s.velocity[0] + dv[0] * h,
                      s.velocity[1] + dv[1] * h,
                      s.velocity[2] + dv[2] * h),
            angular_rate=(s.angular_rate[0] + dw[0] * h,
                          s.angular_rate[1] + dw[1] * h,
                          s.angular_rate[2] + dw[2] * h),
        )

    k1 = deriv(state)
    k2 = deriv(advance(state, k1, 0.5 * dt))
    k3 = deriv(advance(state, k2, 0.5 * dt))
    k4 = deriv(advance(state, k3, dt))

    sixth = dt / 6.0
    combined = tuple(
        tuple(a + 2.0 * b + 2.0 * c + d
              for a, b, c, d in zip(k1[i], k2[i], k3[i], k4[i]))
        for i in range(4)
    )
    new_state = advance(state, combined, sixth)
    return replace(new_state, attitude=quat_normalize(new_state.attitude))


def mechanical_energy(state: RigidBodyState, params: VehicleParams,
                      env: FluidEnvironment) -> float:
    """Kinetic plus potential energy, valid while fully submerged (the
    buoyancy potential assumes constant displaced volume)."""
    u, v, w = state.velocity
    omega = state.angular_rate
    i_omega = mat3_vec(params.inertia, omega)
    ke = 0.5 * params.mass * (u * u + v * v + w * w) \
        + 0.5 * (omega[0] * i_omega[0] + omega[1] * i_omega[1]
                 + omega[2] * i_omega[2])
    z_com = state.position[2]
    cob_world = quat_rotate(state.attitude, params.center_of_buoyancy)
    z_cob = state.position[2] + cob_world[2]
    buoyancy = env.water_density * env.gravity * params.buoyancy_volume
    pe = -params.mass * env.gravity * z_com + buoyancy * z_cob
    return ke + pe


@dataclass(frozen=True)
class NoiseModel:
    """Additive Gaussian sensor noise, one standard deviation each."""

    depth_std: float = 0.002        # m (pressure sensor)
    attitude_std: float = 0.005     # rad
    rate_std: float = 0.005         # rad/s
    airspeed_std: float = 0.10      # m/s (pitot)
    water_speed_std: float = 0.02   # m/s
    position_std: float = 0.05      # m (fused satellite/barometric estimate)


QUIET = NoiseModel(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class SensorReadings:
    """Measurements with per-medium availability: the depth cell only
    reads while submerged; satellite position and the pitot only work
    out of the water. water_speed is a simulation convenience standing in
    for the flow sensing the hardware lacks."""

    timestamp: float
    roll: float
    pitch: float
    yaw: float
    rates: Vec3
    depth: float | None = None
    airspeed: float | None = None
    water_speed: float | None = None
    position: Vec3 | None = None


def sense(state: RigidBodyState, t: float, env: FluidEnvironment,
          noise: NoiseModel, rng: random.Random,
          params: VehicleParams) -> tuple[SensorReadings, random.Random]:
    """Ground truth plus seeded Gaussian noise, with availability rules.

    Draws a fixed number of samples per call so the stream position never
    depends on which sensors happen to be valid.
    """
    draws = [rng.gauss(0.0, 1.0) for _ in range(12)]
    roll, pitch, yaw = state.euler()
    u, v, w = state.velocity
    z = state.position[2] - env.surface_height

    depth = None
    if z >= 0.0:
        depth = z + draws[0] * noise.depth_std

    airspeed = None
    position = None
    if z <= 0.0:
        airspeed = max(0.0, math.hypot(u, w) + draws[1] * noise.airspeed_std)
        position = (state.position[0] + draws[2] * noise.position_std,
                    state.position[1] + draws[3] * noise.position_std,
                    state.position[2] + draws[4] * noise.position_std)

    water_speed = None
    if z >= -params.strut_height:
        water_speed = max(0.0, state.speed + draws[5] * noise.water_speed_std)

    readings = SensorReadings(
        timestamp=t,
        roll=roll + draws[6] * noise.attitude_std,
        pitch=pitch + draws[7] * noise.attitude_std,
        yaw=yaw + draws[8] * noise.attitude_std,
        rates=(state.angular_rate[0] + draws[9] * noise.rate_std,
               state.angular_rate[1] + draws[10] * noise.rate_std,
               state.angular_rate[2] + draws[11] * noise.rate_std),
        depth=depth,
        airspeed=airspeed,
        water_speed=water_speed,
        position=position,
    )
    return readings, rng


class Simulator:
    """Owns one craft's physical state, actuator lag filters, and wing
    fold dynamics. Strictly single-threaded; run independent instances
    for sweeps."""

    def __init__(self, params: VehicleParams, env: FluidEnvironment,
                 table: CoefficientTable,
                 initial_state: RigidBodyState | None = None,
                 wings_folded: bool = False):
        self.params = params
        self.env = env
        self.table = table
        self.state = initial_state if initial_state is not None \
            else RigidBodyState()
        self.t = 0.0
        self.fold_fraction = 1.0 if wings_folded else 0.0
        self._lagged = ActuatorCommand(wings_folded=wings_folded)

    @property
    def lagged_command(self) -> ActuatorCommand:
        return self._lagged

    def immersion(self) -> ImmersionState:
        return compute_immersion(self.state, self.params, self.env)

    def _apply_limits(self, cmd: ActuatorCommand) -> ActuatorCommand:
        p = self.params
        lim = p.deflection_limit
        s_lim = p.surface_deflection_limit
        return ActuatorCommand(
            thrust_left=clamp(cmd.thrust_left, 0.0, p.thrust_max_underwater),
            thrust_right=clamp(cmd.thrust_right, 0.0, p.thrust_max_underwater),
            delta_left=clamp(cmd.delta_left, -lim, lim),
            delta_right=clamp(cmd.delta_right, -lim, lim),
            elevator=clamp(cmd.elevator, -s_lim, s_lim),
            aileron_left=clamp(cmd.aileron_left, -s_lim, s_lim),
            aileron_right=clamp(cmd.aileron_right, -s_lim, s_lim),
            flaps=clamp(cmd.flaps, -s_lim, s_lim),
            aerial_throttle=clamp(cmd.aerial_throttle, 0.0, 1.0),
            wings_folded=cmd.wings_folded,
        )

    def _lag(self, cmd: ActuatorCommand, dt: float) -> ActuatorCommand:
        p = self.params
        a_servo = 1.0 - math.exp(-dt / p.servo_tau)
        a_thrust = 1.0 - math.exp(-dt / p.thruster_tau)
        prev = self._lagged

        def mix(old: float, new: float, a: float) -> float:
            return old + a * (new - old)

        lagged = ActuatorCommand(
            thrust_left=mix(prev.thrust_left, cmd.thrust_left, a_thrust),
            thrust_right=mix(prev.thrust_right, cmd.thrust_right, a_thrust),
            delta_left=mix(prev.delta_left, cmd.delta_left, a_servo),
            delta_right=mix(prev.delta_right, cmd.delta_right, a_servo),
            elevator=mix(prev.elevator, cmd.elevator, a_servo),
            aileron_left=mix(prev.aileron_left, cmd.aileron_left, a_servo),
            aileron_right=mix(prev.aileron_right, cmd.aileron_right, a_servo),
            flaps=mix(prev.flaps, cmd.flaps, a_servo),
            aerial_throttle=mix(prev.aerial_throttle, cmd.aerial_throttle,
                                a_thrust),
            wings_folded=cmd.wings_folded,
        )
        self._lagged = lagged

        target = 1.0 if cmd.wings_folded else 0.0
        step = dt / p.fold_duration
        if self.fold_fraction < target:
            self.fold_fraction = min(target, self.fold_fraction + step)
        elif self.fold_fraction > target:
            self.fold_fraction = max(target, self.fold_fraction - step)
        return lagged

    def step(self, cmd: ActuatorCommand, dt: float) -> RigidBodyState:
        """Advance the craft by dt under ``cmd`` (limit-clamped, then lag
        filtered). Raises :class:`SimulationHalt` on non-finite states."""
        limited = self._apply_limits(cmd)
        lagged = self._lag(limited, dt)
        new_state = integrate_step(self.state, lagged, dt, self.env,
                                   self.params, self.table,
                                   self.fold_fraction)
        if not new_state.is_finite():
            raise SimulationHalt(
                "non-finite state during integration",
                t=self.t,
                state_dump={
                    "t": self.t,
                    "position": self.state.position,
                    "attitude": self.state.attitude,
                    "velocity": self.state.velocity,
                    "angular_rate": self.state.angular_rate,
                    "command": lagged,
                },
            )
        self.state = new_state
        self.t += dt
        return new_state
