"""Closed-loop mission orchestration.

One control tick: sense -> mode supervision -> outer-loop control ->
wrench allocation -> actuator command -> several physics substeps. The
loop streams one telemetry record per tick and reports a process-style
exit status (0 completed, 2 invalid input, 3 numerical halt).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from pathlib import Path

from .allocation import (
    ActuatorSolution,
    Wrench5,
    allocate_wrench,
    elevator_from_moment,
    solve_actuator,
)
from .config import SimConfig, load_config
from .control import (
    AttitudeControllerState,
    AttitudeSetpoint,
    DepthControllerState,
    SpeedControllerState,
    assemble_wrench,
    attitude_control_step,
    depth_control_step,
    speed_control_step,
)
from .errors import ConfigError, MissionError, SimulationHalt
from .frames import clamp
from .hydro import ImmersionState
from .mission import MissionScript, validate_mission
from .modes import Mode, Phase, TakeoffState, step_mode, takeoff_sequencer
from .simulator import SensorReadings, Simulator, sense
from .state import ActuatorCommand, RigidBodyState
from .telemetry import TelemetryRecord, TelemetryWriter

CONTROL_PERIOD = 0.004  # s, controller schedule independent of sim dt

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERIC = 3


@dataclass
class MissionOutcome:
    exit_code: int
    records: int
    final_mode: str
    max_speed: float
    message: str = ""


@dataclass
class _Setpoints:
    h_d: float = 0.0
    v_d: float = 0.0
    attitude: AttitudeSetpoint = AttitudeSetpoint()


_IDLE_SOLUTION = ActuatorSolution()


class MissionRunner:
    """Runs one mission against one configuration, deterministically."""

    def __init__(self, cfg: SimConfig, mission: MissionScript,
                 seed: int = 0, dt: float = 0.001,
                 duration: float | None = None):
        if not 0.0 < dt <= 0.01:
            raise ConfigError("dt must be in (0, 0.01] s")
        self.cfg = cfg
        self.mission = mission
        self.dt = dt
        self.steps_per_tick = max(1, round(CONTROL_PERIOD / dt))
        self.t_end = mission.end_time
        if duration is not None:
            self.t_end = min(self.t_end, duration)
        self.rng = random.Random(seed)

        init = mission.initial
        state = RigidBodyState.from_euler(
            position=(init.x, init.y, init.z),
            roll=init.roll, pitch=init.pitch, yaw=init.yaw,
            velocity=(init.u, 0.0, 0.0),
        )
        folded = init.phase == Phase.UNDERWATER_NAV
        self.sim = Simulator(cfg.params, cfg.env, cfg.table,
                             initial_state=state, wings_folded=folded)
        self.mode = Mode(phase=init.phase, entry_time=0.0)
        self.takeoff = TakeoffState()
        self.setpoints = _Setpoints(
            h_d=max(init.z, 0.0),
            attitude=AttitudeSetpoint(pitch_d=init.pitch),
        )
        self._apply_phase_defaults(init.phase)

        self.depth_state = cfg.depth_controller()
        self.att_state = AttitudeControllerState(gains=cfg.control.attitude)
        self.speed_state = cfg.speed_controller()
        self.air_speed_state = SpeedControllerState(
            k_p=cfg.control.speed_k_p, k_i=cfg.control.speed_k_i,
            integral_limit=cfg.control.speed_integral_limit,
            output_max=cfg.params.thrust_max_aerial)
        self.warm_left: ActuatorSolution | None = None
        self.warm_right: ActuatorSolution | None = None
        self._pending = list(mission.events)
        self._last_depth = max(init.z, 0.0)
        self._ended = False
        self._aerial_throttle = 0.0
        self.max_speed = 0.0

    # -- setpoint management ----------------------------------------------

    def _apply_phase_defaults(self, phase: Phase):
        c = self.cfg.control
        sp = self.setpoints
        self._flaps = 0.0
        if phase == Phase.SURFACE_GLIDE:
            sp.h_d = -c.glide_height
            sp.attitude = replace(sp.attitude, pitch_d=c.glide_pitch)
        elif phase == Phase.TAKEOFF:
            # Ride high: enough pitch room before the tail skims, at the
            # cost of some propeller derating near the surface. High-lift
            # flaps shave the liftoff speed.
            sp.h_d = -(self.cfg.params.strut_height
                       - 0.75 * self.cfg.params.derate_depth)
            sp.attitude = replace(sp.attitude, pitch_d=c.takeoff_pitch)
            self._flaps = self.cfg.params.flap_bias
        elif phase == Phase.FLIGHT:
            sp.v_d = c.flight_speed
            sp.attitude = replace(sp.attitude, pitch_d=c.flight_pitch)
        elif phase == Phase.LANDING:
            sp.v_d = c.landing_speed
            sp.attitude = replace(sp.attitude, pitch_d=c.landing_pitch)
            self._flaps = self.cfg.params.flap_bias

    def _consume_events(self, t: float) -> tuple[str, ...]:
        requests = []
        while self._pending and self._pending[0].t <= t + 1e-12:
            ev = self._pending.pop(0)
            if ev.command == "set_depth":
                self.setpoints.h_d = ev.value
            elif ev.command == "set_speed":
                self.setpoints.v_d = ev.value
            elif ev.command == "set_attitude":
                sp = self.setpoints.attitude
                self.setpoints.attitude = AttitudeSetpoint(
                    roll_d=ev.value.get("roll", sp.roll_d),
                    pitch_d=ev.value.get("pitch", sp.pitch_d),
                    yaw_rate_d=ev.value.get("yaw_rate", sp.yaw_rate_d),
                )
            elif ev.command == "request_takeoff":
                requests.append("takeoff")
            elif ev.command == "request_landing":
                requests.append("landing")
            elif ev.command == "end":
                self._ended = True
        return tuple(requests)

    # -- measurement selection --------------------------------------------

    def _tail_strike_pitch_limit(self) -> float:
        """Largest nose-up pitch before the tail would dig into the water
        at the current estimated ride height, minus a degree of margin."""
        params = self.cfg.params
        room = (-self._last_depth - params.tail_keel_z) / params.tail_arm
        if room <= 0.0:
            return 0.0
        return max(0.0, math.asin(clamp(room, 0.0, 1.0)) - 0.017)

    def _measured_depth(self, readings: SensorReadings) -> float:
        if readings.depth is not None:
            self._last_depth = readings.depth
        elif readings.position is not None:
            self._last_depth = readings.position[2]
        return self._last_depth

    def _measured_speed(self, readings: SensorReadings) -> float:
        if readings.water_speed is not None:
            return readings.water_speed
        if readings.airspeed is not None:
            return readings.airspeed
        return 0.0

    # -- control law per phase --------------------------------------------

    def _control_tick(self, t: float, readings: SensorReadings,
                      immersion: ImmersionState, enables, fold_cmd: bool
                      ) -> tuple[ActuatorCommand, Wrench5,
                                 ActuatorSolution, ActuatorSolution]:
        cfg = self.cfg
        phase = self.mode.phase
        dtc = self.dt * self.steps_per_tick
        sp = self.setpoints
        attitude_meas = (readings.roll, readings.pitch, readings.yaw)

        attitude_sp = sp.attitude
        if phase in (Phase.SURFACE_GLIDE, Phase.TAKEOFF):
            attitude_sp = replace(
                attitude_sp,
                pitch_d=min(attitude_sp.pitch_d,
                            self._tail_strike_pitch_limit()))
        torques, self.att_state = attitude_control_step(
            attitude_sp, attitude_meas, readings.rates, dtc, self.att_state)

        if phase in (Phase.FLIGHT, Phase.LANDING):
            if phase == Phase.FLIGHT:
                # Flaps stay out until the climb has bought some margin.
                altitude = -self._measured_depth(readings)
                self._flaps = self.cfg.params.flap_bias if altitude < 1.0 \
                    else 0.0
            wrench = self._fly(torques, readings, dtc)
            cmd = self._air_command(wrench, readings, enables, fold_cmd)
            return cmd, wrench, _IDLE_SOLUTION, _IDLE_SOLUTION

        depth_meas = self._measured_depth(readings)
        speed_meas = self._measured_speed(readings)

        if phase == Phase.UNDERWATER_NAV:
            f_zd, self.depth_state = depth_control_step(
                sp.h_d, depth_meas, dtc, self.depth_state)
            f_xd, self.speed_state = speed_control_step(
                sp.v_d, speed_meas, dtc, self.speed_state)
            self._aerial_throttle = 0.0
        else:
            # Glide and takeoff ride on the foil: the height loop carries
            # the craft's full weight as feedforward and trims about the
            # ride-height setpoint.
            if phase == Phase.TAKEOFF:
                (uw, aerial), self.takeoff = takeoff_sequencer(
                    self.takeoff, t, dtc, speed_meas, immersion, cfg.modes)
                f_xd = uw * 2.0 * cfg.params.thrust_max_underwater
                self._aerial_throttle = aerial
                if self.takeoff.aerial_engaged \
                        and speed_meas >= 0.9 * cfg.modes.v_takeoff_min:
                    # Climb-out: an unreachable height target keeps the
                    # foil at maximum lift while aero lift takes over.
                    sp.h_d = -(cfg.params.strut_height + 0.10)
            else:
                f_xd, self.speed_state = speed_control_step(
                    sp.v_d, speed_meas, dtc, self.speed_state)
                self._aerial_throttle = 0.0
            f_zd, self.depth_state = depth_control_step(
                sp.h_d, depth_meas, dtc, self.depth_state)

        wrench = assemble_wrench(f_xd, f_zd, torques)
        cmd, sol_l, sol_r = self._allocate(wrench, readings, speed_meas,
                                           immersion, enables, fold_cmd)
        return cmd, wrench, sol_l, sol_r

    def _fly(self, torques, readings: SensorReadings, dtc: float) -> Wrench5:
        speed = readings.airspeed if readings.airspeed is not None else 0.0
        f_xd, self.air_speed_state = speed_control_step(
            self.setpoints.v_d, speed, dtc, self.air_speed_state)
        self._aerial_throttle = clamp(
            f_xd / self.cfg.params.thrust_max_aerial, 0.0, 1.0)
        return assemble_wrench(f_xd, 0.0, torques)

    def _air_command(self, wrench: Wrench5, readings, enables,
                     fold_cmd: bool) -> ActuatorCommand:
        cfg = self.cfg
        speed = readings.airspeed if readings.airspeed is not None else 0.0
        elevator, _ = elevator_from_moment(
            wrench.tau_yd, speed, cfg.env, cfg.params,
            density=cfg.env.air_density,
            lift_slope=cfg.params.tail_lift_slope,
            q_floor=cfg.control.elevator_q_floor)
        q_dyn = 0.5 * cfg.env.air_density * speed * speed
        span = cfg.table.reference_area / cfg.table.reference_chord
        authority = q_dyn * cfg.table.reference_area * span \
            * cfg.params.wing_aileron_roll_slope
        if authority > 1e-6:
            aileron = clamp(0.5 * wrench.tau_xd / authority,
                            -cfg.params.surface_deflection_limit,
                            cfg.params.surface_deflection_limit)
        else:
            aileron = 0.0
        return ActuatorCommand(
            elevator=elevator,
            aileron_left=-aileron,
            aileron_right=aileron,
            flaps=self._flaps,
            aerial_throttle=(self._aerial_throttle
                             if enables.aerial_motor else 0.0),
            wings_folded=fold_cmd,
        )

    def _allocate(self, wrench: Wrench5, readings: SensorReadings,
                  speed_meas: float, immersion: ImmersionState,
                  enables, fold_cmd: bool
                  ) -> tuple[ActuatorCommand, ActuatorSolution,
                             ActuatorSolution]:
        cfg = self.cfg
        params = cfg.params
        virtual = allocate_wrench(wrench, params.d_f, params.h_s)

        # Flow incidence as the flight computer can estimate it: measured
        # pitch against a nominally horizontal water flow. Using anything
        # better (true flow angle with heave velocity) would cancel the
        # foil's natural heave damping through the inversion.
        alpha = readings.pitch
        flow_speed = speed_meas

        sol_r = solve_actuator((virtual.f_xbr, virtual.f_zbr), alpha,
                               flow_speed, cfg.env, params,
                               guess=self.warm_right)
        sol_l = solve_actuator((virtual.f_xbl, virtual.f_zbl), alpha,
                               flow_speed, cfg.env, params,
                               guess=self.warm_left)
        self.warm_right = sol_r
        self.warm_left = sol_l

        tail_frac = immersion.tail.fraction
        rho_tail = tail_frac * cfg.env.water_density \
            + (1.0 - tail_frac) * cfg.env.air_density
        slope = tail_frac * params.tail_water_lift_slope \
            + (1.0 - tail_frac) * params.tail_lift_slope
        elevator, _ = elevator_from_moment(
            virtual.m_e, flow_speed, cfg.env, params, density=rho_tail,
            lift_slope=slope, q_floor=cfg.control.elevator_q_floor)

        uw_on = enables.underwater_thrusters
        servo_on = enables.underwater_servos
        return ActuatorCommand(
            thrust_left=sol_l.f_t if uw_on else 0.0,
            thrust_right=sol_r.f_t if uw_on else 0.0,
            delta_left=sol_l.delta if servo_on else 0.0,
            delta_right=sol_r.delta if servo_on else 0.0,
            elevator=elevator if enables.control_surfaces else 0.0,
            flaps=self._flaps if enables.control_surfaces else 0.0,
            aerial_throttle=(self._aerial_throttle
                             if enables.aerial_motor else 0.0),
            wings_folded=fold_cmd,
        ), sol_l, sol_r

    # -- main loop ----------------------------------------------------------

    def run(self, sink=None) -> MissionOutcome:
        """Execute the mission; ``sink`` receives each TelemetryRecord."""
        records = 0
        t = 0.0
        message = ""
        exit_code = EXIT_OK
        try:
            while t < self.t_end - 1e-12 and not self._ended:
                requests = self._consume_events(t)
                immersion = self.sim.immersion()
                readings, self.rng = sense(
                    self.sim.state, t, self.cfg.env, self.cfg.noise,
                    self.rng, self.cfg.params)
                speed_meas = self._measured_speed(readings)

                prev_phase = self.mode.phase
                self.mode, enables, fold_cmd = step_mode(
                    self.mode, t, self.sim.state, immersion, speed_meas,
                    requests, self.cfg.modes, self.takeoff)
                if self.mode.phase != prev_phase:
                    self._on_phase_change(prev_phase, self.mode.phase)
                if not enables.aerial_motor:
                    self._aerial_throttle = 0.0

                cmd, wrench, sol_l, sol_r = self._control_tick(
                    t, readings, immersion, enables, fold_cmd)

                if sink is not None:
                    sink(self._record(t, readings, immersion, cmd, wrench,
                                      sol_l, sol_r, enables))
                records += 1

                for _ in range(self.steps_per_tick):
                    self.sim.step(cmd, self.dt)
                t = self.sim.t
                self.max_speed = max(self.max_speed, self.sim.state.speed)
        except SimulationHalt as halt:
            exit_code = EXIT_NUMERIC
            message = f"simulation halted at t={halt.t:.4f}: {halt} " \
                      f"state={halt.state_dump}"
        return MissionOutcome(
            exit_code=exit_code,
            records=records,
            final_mode=self.mode.phase.value,
            max_speed=self.max_speed,
            message=message,
        )

    def _on_phase_change(self, old: Phase, new: Phase):
        self._apply_phase_defaults(new)
        # Fresh integrators per phase: the force balance changes regime.
        f_g = None
        if new in (Phase.SURFACE_GLIDE, Phase.TAKEOFF):
            f_g = -self.cfg.params.mass * self.cfg.env.gravity
        self.depth_state = self.cfg.depth_controller(f_g=f_g)
        self.att_state = AttitudeControllerState(
            gains=self.cfg.control.attitude)
        self.speed_state = self.cfg.speed_controller()
        if new == Phase.TAKEOFF:
            self.takeoff = TakeoffState()

    def _record(self, t: float, readings: SensorReadings,
                immersion: ImmersionState, cmd: ActuatorCommand,
                wrench: Wrench5, sol_l: ActuatorSolution,
                sol_r: ActuatorSolution, enables) -> TelemetryRecord:
        state = self.sim.state
        roll, pitch, yaw = state.euler()
        return TelemetryRecord(
            t=t, mode=self.mode.phase.value,
            x=state.position[0], y=state.position[1], z=state.position[2],
            roll=roll, pitch=pitch, yaw=yaw,
            u=state.velocity[0], v=state.velocity[1], w=state.velocity[2],
            p=state.angular_rate[0], q=state.angular_rate[1],
            r=state.angular_rate[2],
            depth=readings.depth, speed=state.speed,
            airspeed=readings.airspeed,
            thrust_left=cmd.thrust_left, thrust_right=cmd.thrust_right,
            delta_left=cmd.delta_left, delta_right=cmd.delta_right,
            elevator=cmd.elevator, aileron_left=cmd.aileron_left,
            aileron_right=cmd.aileron_right, flaps=cmd.flaps,
            aerial_throttle=cmd.aerial_throttle,
            wings_folded=cmd.wings_folded,
            fold_fraction=self.sim.fold_fraction,
            f_xd=wrench.f_xd, f_zd=wrench.f_zd, tau_xd=wrench.tau_xd,
            tau_yd=wrench.tau_yd, tau_zd=wrench.tau_zd,
            residual_left=sol_l.residual, residual_right=sol_r.residual,
            iterations_left=sol_l.iterations,
            iterations_right=sol_r.iterations,
            converged_left=sol_l.converged, converged_right=sol_r.converged,
            saturated_left=sol_l.saturated, saturated_right=sol_r.saturated,
            imm_fuselage=immersion.fuselage.fraction,
            imm_aileron_left=immersion.aileron_left.fraction,
            imm_aileron_right=immersion.aileron_right.fraction,
            imm_prop_left=immersion.prop_left.fraction,
            imm_prop_right=immersion.prop_right.fraction,
            imm_tail=immersion.tail.fraction,
            uw_enabled=enables.underwater_thrusters,
            aerial_enabled=enables.aerial_motor,
        )


def run_mission(config_path: str | Path, mission_path: str | Path,
                out_path: str | Path, seed: int = 0, dt: float = 0.001,
                duration: float | None = None) -> MissionOutcome:
    """File-based entry point: load, validate, run, and persist telemetry.

    Exit codes: 0 completed, 2 invalid config/mission, 3 numerical halt.
    """
    try:
        config_text = Path(config_path).read_text(encoding="utf-8")
        mission_text = Path(mission_path).read_text(encoding="utf-8")
    except OSError as exc:
        return MissionOutcome(EXIT_INVALID, 0, "", 0.0, f"cannot read: {exc}")
    try:
        cfg = load_config(config_text)
        mission = validate_mission(mission_text)
        runner = MissionRunner(cfg, mission, seed=seed, dt=dt,
                               duration=duration)
    except (ConfigError, MissionError) as exc:
        return MissionOutcome(EXIT_INVALID, 0, "", 0.0, str(exc))

    with TelemetryWriter(out_path) as writer:
        outcome = runner.run(sink=writer.write)
    return outcome
