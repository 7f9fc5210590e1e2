"""Outer-loop controllers that produce the desired body wrench.

Depth holding uses a PI law on depth error plus a gravity-compensation
feedforward; attitude uses cascaded angle->rate->torque loops (yaw is
rate-only); speed uses a clamped PI. All controllers are deterministic
pure steps: state goes in, (output, new state) comes out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .allocation import Wrench5
from .frames import Vec3, clamp


@dataclass(frozen=True)
class DepthControllerState:
    """Gains and integral state of the depth/height PI loop.

    f_g is the gravity-compensation feedforward: the actuator force that
    cancels the craft's net in-fluid weight (negative of weight minus
    buoyancy), so the integral only has to absorb modeling error.
    """

    k_p: float = 25.0               # N per m of depth error
    k_i: float = 5.0                # N per (m s)
    integral: float = 0.0           # m s
    integral_limit: float = 1.0     # m s
    f_g: float = 0.0                # N feedforward

    def __post_init__(self):
        if self.k_p < 0.0 or self.k_i < 0.0:
            raise ValueError("depth gains must be non-negative")
        if abs(self.integral) > self.integral_limit:
            raise ValueError("integral outside its limit")


def depth_control_step(h_d: float, h: float, dt: float,
                       state: DepthControllerState
                       ) -> tuple[float, DepthControllerState]:
    """One PI step: f_zd = k_p e + k_i int(e) + f_g with e = h_d - h.

    Depth is positive down, so a positive error (too shallow) commands a
    positive (downward) force. The integral is clamped for anti-windup.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    e_h = h_d - h
    integral = clamp(state.integral + e_h * dt,
                     -state.integral_limit, state.integral_limit)
    f_zd = state.k_p * e_h + state.k_i * integral + state.f_g
    return f_zd, replace(state, integral=integral)


@dataclass(frozen=True)
class AttitudeSetpoint:
    roll_d: float = 0.0         # rad
    pitch_d: float = 0.0        # rad
    yaw_rate_d: float = 0.0     # rad/s


@dataclass(frozen=True)
class AttitudeGains:
    angle_p_roll: float = 3.0
    angle_p_pitch: float = 5.0
    rate_p: Vec3 = (0.40, 1.20, 0.30)
    rate_i: Vec3 = (0.20, 0.60, 0.10)
    integral_limit: float = 0.5
    rate_limit: float = 1.5     # rad/s cap on commanded rates


@dataclass(frozen=True)
class AttitudeControllerState:
    gains: AttitudeGains = AttitudeGains()
    integrals: Vec3 = (0.0, 0.0, 0.0)


def attitude_control_step(setpoint: AttitudeSetpoint, attitude: Vec3,
                          rates: Vec3, dt: float,
                          state: AttitudeControllerState
                          ) -> tuple[Vec3, AttitudeControllerState]:
    """Cascaded attitude loops: angle error -> desired rate (P), then rate
    error -> torque (PI with clamped integrals). Yaw tracks a rate setpoint
    directly. Returns (tau_xd, tau_yd, tau_zd).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    g = state.gains
    roll, pitch, _ = attitude
    rate_d = (
        clamp(g.angle_p_roll * (setpoint.roll_d - roll),
              -g.rate_limit, g.rate_limit),
        clamp(g.angle_p_pitch * (setpoint.pitch_d - pitch),
              -g.rate_limit, g.rate_limit),
        setpoint.yaw_rate_d,
    )
    torques = []
    integrals = []
    for axis in range(3):
        err = rate_d[axis] - rates[axis]
        integral = clamp(state.integrals[axis] + err * dt,
                         -g.integral_limit, g.integral_limit)
        torques.append(g.rate_p[axis] * err + g.rate_i[axis] * integral)
        integrals.append(integral)
    new_state = replace(state, integrals=(integrals[0], integrals[1],
                                          integrals[2]))
    return (torques[0], torques[1], torques[2]), new_state


@dataclass(frozen=True)
class SpeedControllerState:
    k_p: float = 15.0
    k_i: float = 5.0
    integral: float = 0.0
    integral_limit: float = 2.0
    output_max: float = 16.0    # N, defaults to twice one thruster's max


def speed_control_step(v_d: float, v: float, dt: float,
                       state: SpeedControllerState
                       ) -> tuple[float, SpeedControllerState]:
    """PI on speed error producing the desired surge force, clamped to
    [0, output_max]. The integral freezes while the output is pinned at a
    clamp and the error keeps pushing the same way (anti-windup)."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    err = v_d - v
    raw = state.k_p * err + state.k_i * state.integral
    integral = state.integral
    if (raw >= state.output_max and err > 0.0) or (raw <= 0.0 and err < 0.0):
        pass  # pinned at a clamp: freeze the integral
    else:
        integral = clamp(integral + err * dt,
                         -state.integral_limit, state.integral_limit)
    f_xd = clamp(state.k_p * err + state.k_i * integral, 0.0, state.output_max)
    return f_xd, replace(state, integral=integral)


def assemble_wrench(f_xd: float, f_zd: float, torques: Vec3) -> Wrench5:
    """Pack controller outputs into the 5-component desired wrench."""
    values = (f_xd, f_zd, torques[0], torques[1], torques[2])
    if not all(math.isfinite(v) for v in values):
        raise ValueError("wrench components must be finite")
    return Wrench5(*values)
