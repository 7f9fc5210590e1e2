"""Wrench allocation for the differential thrust-vectoring hydrofoil.

The desired 5-component wrench (surge force, heave force, roll, pitch, yaw
moments) maps linearly to per-aileron virtual force components plus an
elevator pitch moment. Each aileron's virtual force pair is then inverted
into a thruster force and a servo deflection by a damped Newton iteration
on the nonlinear thrust + hydrodynamics decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import SingularAllocationError
from .frames import clamp
from .hydro import FluidEnvironment, aileron_hydro_forces
from .vehicle import VehicleParams


class Wrench5(NamedTuple):
    """Desired force/moment set: no sway authority exists, so f_y is absent."""

    f_xd: float
    f_zd: float
    tau_xd: float
    tau_yd: float
    tau_zd: float


class VirtualForces(NamedTuple):
    """Per-aileron body-frame force components plus the elevator moment."""

    f_xbr: float
    f_zbr: float
    f_xbl: float
    f_zbl: float
    m_e: float


ZERO_WRENCH5 = Wrench5(0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ActuatorSolution:
    """Result of one aileron inversion."""

    f_t: float = 0.0
    delta: float = 0.0
    residual: float = 0.0
    iterations: int = 0
    converged: bool = False
    saturated: bool = False


def compose_wrench(v: VirtualForces, d_f: float, h_s: float) -> Wrench5:
    """Forward allocation map: virtual forces to the body wrench.

    Row by row: surge and heave sum left+right, roll comes from the heave
    difference across the d_f arms, pitch from both surge components acting
    h_s below the origin plus the elevator moment, and yaw from the surge
    difference.
    """
    return Wrench5(
        f_xd=v.f_xbr + v.f_xbl,
        f_zd=v.f_zbr + v.f_zbl,
        tau_xd=d_f * (v.f_zbr - v.f_zbl),
        tau_yd=h_s * (v.f_xbr + v.f_xbl) + v.m_e,
        tau_zd=d_f * (v.f_xbl - v.f_xbr),
    )


def allocate_wrench(w: Wrench5, d_f: float, h_s: float) -> VirtualForces:
    """Closed-form inverse of :func:`compose_wrench`.

    Exists whenever d_f > 0; the elevator column makes the pitch row
    solvable unconditionally.
    """
    if d_f <= 0.0:
        raise SingularAllocationError(
            "allocation matrix singular: d_f must be > 0")
    f_xbr = 0.5 * (w.f_xd - w.tau_zd / d_f)
    f_xbl = 0.5 * (w.f_xd + w.tau_zd / d_f)
    f_zbr = 0.5 * (w.f_zd + w.tau_xd / d_f)
    f_zbl = 0.5 * (w.f_zd - w.tau_xd / d_f)
    m_e = w.tau_yd - h_s * w.f_xd
    return VirtualForces(f_xbr, f_zbr, f_xbl, f_zbl, m_e)


def aileron_forward(f_t: float, delta: float, alpha: float, speed: float,
                    env: FluidEnvironment,
                    params: VehicleParams) -> tuple[float, float]:
    """Body-frame force produced by one aileron unit.

    Thrust acts along the deflected aileron chord; hydrodynamic lift and
    drag (evaluated at the effective incidence alpha + delta) act
    perpendicular and parallel to the oncoming flow:

        F_xb = F_T cos(d) + F_L sin(a) - F_D cos(a)
        F_zb = F_T sin(d) - F_L cos(a) - F_D sin(a)
    """
    f_l, f_d = aileron_hydro_forces(alpha + delta, speed, env, params)
    ca = math.cos(alpha)
    sa = math.sin(alpha)
    return (
        f_t * math.cos(delta) + f_l * sa - f_d * ca,
        f_t * math.sin(delta) - f_l * ca - f_d * sa,
    )


def _initial_guess(target: tuple[float, float], f_max: float,
                   delta_lim: float) -> tuple[float, float]:
    """Zero-speed closed form: thrust magnitude along the target direction."""
    tx, tz = target
    f_t = clamp(math.hypot(tx, tz), 0.0, f_max)
    delta = clamp(math.atan2(tz, tx), -delta_lim, delta_lim) if f_t > 0.0 else 0.0
    return f_t, delta


def solve_actuator(target: tuple[float, float], alpha: float, speed: float,
                   env: FluidEnvironment, params: VehicleParams,
                   guess: ActuatorSolution | None = None,
                   tolerance: float = 1e-6,
                   max_iterations: int = 50) -> ActuatorSolution:
    """Invert :func:`aileron_forward` for one aileron: find thrust and
    deflection whose body-frame force matches ``target``.

    Two-dimensional Newton iteration with a central finite-difference
    Jacobian; each iterate is projected into the actuator box
    [0, thrust max] x [-deflection limit, +deflection limit]. Warm-start
    from ``guess`` when given, otherwise from the zero-speed closed form.
    Unreachable targets come back with converged=False and the best
    projected solution; wrench scaling is the caller's policy.
    """
    tx, tz = target
    if not (math.isfinite(tx) and math.isfinite(tz)):
        raise ValueError("actuator target must be finite")
    if tolerance <= 0.0:
        raise ValueError("tolerance must be positive")

    f_max = params.thrust_max_underwater
    d_lim = params.deflection_limit

    starts: list[tuple[float, float]] = []
    if guess is not None:
        starts.append((clamp(guess.f_t, 0.0, f_max),
                       clamp(guess.delta, -d_lim, d_lim)))
    starts.append(_initial_guess(target, f_max, d_lim))
    # Fallback starts help when the primary one lands on a poor basin.
    starts.append((0.5 * f_max, 0.0))
    starts.append((0.25 * f_max, 0.5 * d_lim if tz > 0 else -0.5 * d_lim))

    best: ActuatorSolution | None = None
    total_iters = 0
    for f_t, delta in starts:
        sol, iters = _newton_from(
            f_t, delta, tx, tz, alpha, speed, env, params,
            f_max, d_lim, tolerance, max_iterations)
        total_iters += iters
        if best is None or sol.residual < best.residual:
            best = sol
        if best.converged:
            break

    assert best is not None
    saturated = best.f_t >= f_max or abs(best.delta) >= d_lim - 1e-12
    return ActuatorSolution(
        f_t=best.f_t, delta=best.delta, residual=best.residual,
        iterations=total_iters, converged=best.converged,
        saturated=saturated,
    )


_FD_STEP = 1e-6


def _newton_from(f_t: float, delta: float, tx: float, tz: float,
                 alpha: float, speed: float, env: FluidEnvironment,
                 params: VehicleParams, f_max: float, d_lim: float,
                 tolerance: float, max_iterations: int
                 ) -> tuple[ActuatorSolution, int]:
    def residual(ft: float, d: float) -> tuple[float, float]:
        fx, fz = aileron_forward(ft, d, alpha, speed, env, params)
        return fx - tx, fz - tz

    rx, rz = residual(f_t, delta)
    best_norm = math.hypot(rx, rz)
    best = (f_t, delta, best_norm)
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        if best_norm <= tolerance:
            break
        # Central-difference Jacobian in both unknowns.
        h = _FD_STEP
        rxp, rzp = residual(f_t + h, delta)
        rxm, rzm = residual(f_t - h, delta)
        j00 = (rxp - rxm) / (2.0 * h)
        j10 = (rzp - rzm) / (2.0 * h)
        rxp, rzp = residual(f_t, delta + h)
        rxm, rzm = residual(f_t, delta - h)
        j01 = (rxp - rxm) / (2.0 * h)
        j11 = (rzp - rzm) / (2.0 * h)

        det = j00 * j11 - j01 * j10
        if abs(det) < 1e-12:
            # Degenerate Jacobian: nudge along the steepest descent of |r|^2.
            gx = 2.0 * (rx * j00 + rz * j10)
            gd = 2.0 * (rx * j01 + rz * j11)
            gn = math.hypot(gx, gd)
            if gn < 1e-15:
                break
            step_f, step_d = -0.1 * gx / gn, -0.1 * gd / gn
        else:
            step_f = -(j11 * rx - j01 * rz) / det
            step_d = -(-j10 * rx + j00 * rz) / det

        # Backtracking keeps the iteration from overshooting the basin.
        scale = 1.0
        improved = False
        for _ in range(8):
            cand_f = clamp(f_t + scale * step_f, 0.0, f_max)
            cand_d = clamp(delta + scale * step_d, -d_lim, d_lim)
            crx, crz = residual(cand_f, cand_d)
            cnorm = math.hypot(crx, crz)
            if cnorm < best_norm:
                f_t, delta, rx, rz, best_norm = cand_f, cand_d, crx, crz, cnorm
                improved = True
                break
            scale *= 0.5
        if not improved:
            break
        if best_norm < best[2]:
            best = (f_t, delta, best_norm)

    converged = best[2] <= tolerance
    return ActuatorSolution(
        f_t=best[0], delta=best[1], residual=best[2],
        iterations=iterations, converged=converged,
    ), iterations


def elevator_from_moment(m_e: float, airspeed: float, env: FluidEnvironment,
                         params: VehicleParams,
                         density: float | None = None,
                         lift_slope: float | None = None,
                         q_floor: float = 1.0) -> tuple[float, bool]:
    """Deflection realizing pitch moment ``m_e`` through the tail.

    delta_e = m_e / (q * S_t * l_t * dC_L/d(delta)) clamped to the surface
    servo limit. Below the dynamic-pressure floor the elevator has no
    usable authority: returns (0, True). ``density`` and ``lift_slope``
    default to water and the ventilated water slope, the medium the
    hydrofoil controller operates in.
    """
    rho = env.water_density if density is None else density
    slope = params.tail_water_lift_slope if lift_slope is None else lift_slope
    q = 0.5 * rho * airspeed * airspeed
    if q < q_floor:
        return 0.0, m_e != 0.0
    authority = q * params.tail_area * params.tail_arm * slope
    delta = m_e / authority
    limited = clamp(delta, -params.surface_deflection_limit,
                    params.surface_deflection_limit)
    return limited, limited != delta
