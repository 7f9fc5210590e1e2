"""Vehicle constants, geometry, and aero/hydro coefficient tables.

All angles are stored in radians and all other quantities in SI units.
Configuration files use degrees for angles; the conversion happens at load
time in :mod:`foilsim.config`.

The default parameter set describes a ~1.4 kg desk-scale craft: a foam
fixed-wing airframe riding on a pair of thruster-carrying underwater
ailerons at the bottom of a 12.62 cm strut, with a low-set horizontal tail
aft. Mass, inertia, areas and thrust limits are documented estimates sized
so the whole mission envelope (cruise, glide, takeoff, flight) closes at
sane speeds; the strut height, gliding trim pitch, flap bias, and the
coefficient-table anchor values at 10 deg are fixed by the design being
modeled.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import ConfigError
from .frames import Vec3, clamp

DEG = math.pi / 180.0

# Geometry anchors of the modeled craft.
STRUT_HEIGHT_DEFAULT = 0.1262       # m, vertical strut carrying the ailerons
DESIGN_PITCH_DEFAULT = 12.4 * DEG   # rad, nose-up trim while foil-borne
FLAP_BIAS_DEFAULT = 15.0 * DEG      # rad, flap rigging angle


class AeroCoefficients(NamedTuple):
    """Interpolated (C_L, C_D, C_m) plus a range-clamp flag."""

    c_l: float
    c_d: float
    c_m: float
    clamped: bool


@dataclass(frozen=True)
class CoefficientTable:
    """Whole-airframe lift/drag/pitch-moment coefficients vs angle of attack.

    ``entries`` rows are (alpha_rad, C_L, C_D, C_m) with strictly increasing
    alpha. The reference area and chord turn coefficients into dimensional
    forces and moments.
    """

    entries: tuple[tuple[float, float, float, float], ...]
    reference_area: float = 0.45    # m^2
    reference_chord: float = 0.30   # m

    def __post_init__(self):
        if len(self.entries) < 2:
            raise ConfigError("coefficient table needs at least two entries")
        alphas = [row[0] for row in self.entries]
        for a, b in zip(alphas, alphas[1:]):
            if b <= a:
                raise ConfigError("coefficient table alpha not increasing")
        if alphas[0] > -10.0 * DEG + 1e-12 or alphas[-1] < 20.0 * DEG - 1e-12:
            raise ConfigError(
                "coefficient table must cover at least -10 deg to +20 deg"
            )
        for row in self.entries:
            if row[2] <= 0.0:
                raise ConfigError("coefficient table C_D must be positive")
        if self.reference_area <= 0.0 or self.reference_chord <= 0.0:
            raise ConfigError("reference area and chord must be positive")

    @property
    def alpha_min(self) -> float:
        return self.entries[0][0]

    @property
    def alpha_max(self) -> float:
        return self.entries[-1][0]


# Only the 10 deg node carries values measured on the actual airframe
# (C_L 1.221, C_D 0.174, best L/D 7.02, stall onset). The other nodes are
# estimates shaped to the documented qualitative behaviour: negative lift
# at negative incidence, lift peaking at 10 deg then falling, drag growing
# fast past stall, and the pitch-moment slope turning positive after 10 deg.
DEFAULT_COEFFICIENT_ROWS: tuple[tuple[float, float, float, float], ...] = (
    (-10.0 * DEG, -0.550, 0.085, 0.085),
    (0.0, 0.320, 0.045, 0.060),
    (5.0 * DEG, 0.800, 0.092, 0.010),
    (10.0 * DEG, 1.221, 0.174, -0.052),
    (15.0 * DEG, 1.050, 0.320, -0.045),
    (20.0 * DEG, 0.880, 0.450, -0.058),
)


def default_coefficient_table(reference_area: float = 0.45,
                              reference_chord: float = 0.30) -> CoefficientTable:
    return CoefficientTable(
        entries=DEFAULT_COEFFICIENT_ROWS,
        reference_area=reference_area,
        reference_chord=reference_chord,
    )


def interpolate_coefficients(table: CoefficientTable,
                             alpha: float) -> AeroCoefficients:
    """Piecewise-linear lookup of (C_L, C_D, C_m) at ``alpha`` radians.

    Out-of-range angles are clamped to the table ends and flagged.
    """
    clamped = False
    if alpha <= table.alpha_min:
        clamped = alpha < table.alpha_min
        row = table.entries[0]
        return AeroCoefficients(row[1], row[2], row[3], clamped)
    if alpha >= table.alpha_max:
        clamped = alpha > table.alpha_max
        row = table.entries[-1]
        return AeroCoefficients(row[1], row[2], row[3], clamped)

    alphas = [row[0] for row in table.entries]
    i = bisect.bisect_right(alphas, alpha) - 1
    a0, cl0, cd0, cm0 = table.entries[i]
    a1, cl1, cd1, cm1 = table.entries[i + 1]
    t = (alpha - a0) / (a1 - a0)
    return AeroCoefficients(
        cl0 + t * (cl1 - cl0),
        cd0 + t * (cd1 - cd0),
        cm0 + t * (cm1 - cm0),
        False,
    )


@dataclass(frozen=True)
class VehicleParams:
    """Mass properties, geometry, actuator limits, and drag model knobs.

    Body frame: x forward, y right, z down, origin at the center of mass.
    The hydrofoil force application points sit at (0, +/-d_f, h_s): d_f is
    the lateral offset of each aileron from the centerline and h_s the
    strut depth of the force point below the origin. Component "keel"
    coordinates are the body-frame z of each component's lowest point,
    used by the immersion model together with a vertical extent.
    """

    mass: float = 1.4                               # kg
    inertia: tuple[Vec3, Vec3, Vec3] = (
        (0.090, 0.0, 0.0),
        (0.0, 0.120, 0.0),
        (0.0, 0.0, 0.200),
    )                                               # kg m^2, body frame
    center_of_mass: Vec3 = (0.0, 0.0, 0.0)          # m (geometry is CoM-relative)
    center_of_buoyancy: Vec3 = (0.0, 0.0, -0.020)   # m, above CoM for righting
    d_f: float = 0.20                               # m, aileron lateral offset
    h_s: float = STRUT_HEIGHT_DEFAULT               # m, force point below origin
    strut_height: float = STRUT_HEIGHT_DEFAULT      # m, strut tip below origin
    design_pitch: float = DESIGN_PITCH_DEFAULT      # rad, foil-borne trim
    buoyancy_volume: float = 0.001428               # m^3 (~2% positive)
    wing_area: float = 0.45                         # m^2
    wing_chord: float = 0.30                        # m
    aileron_area: float = 0.010                     # m^2 per side
    aileron_aspect_ratio: float = 2.5
    aileron_stall: float = 15.0 * DEG               # rad, effective-incidence clamp
    aileron_cd0: float = 0.010
    aileron_induced_k: float = 0.15
    tail_area: float = 0.050                        # m^2
    tail_arm: float = 0.574                         # m, tail aft of CoM
    tail_lift_slope: float = 3.0                    # 1/rad, in air
    tail_water_lift_slope: float = 1.0              # 1/rad, ventilated skim
    flap_bias: float = FLAP_BIAS_DEFAULT            # rad, rigging angle
    flap_lift_slope: float = 0.9                    # dC_L per rad of flap
    flap_moment_slope: float = -0.25                # dC_m per rad of flap
    wing_aileron_roll_slope: float = 0.10           # roll-moment coeff per rad
    thrust_max_underwater: float = 8.0              # N per thruster
    thrust_max_aerial: float = 12.0                 # N
    deflection_limit: float = 60.0 * DEG            # rad, vectoring servos
    surface_deflection_limit: float = 25.0 * DEG    # rad, air surfaces
    fold_duration: float = 2.0                      # s, wing fold/unfold ramp
    derate_depth: float = 0.05                      # m, near-surface thrust loss
    folded_lift_residual: float = 0.25              # lifting area left when folded
    # Immersion geometry: lowest-point body z and vertical extent per component.
    fuselage_keel_z: float = 0.060                  # m
    fuselage_height: float = 0.120                  # m
    aileron_height: float = 0.040                   # m
    prop_height: float = 0.060                      # m (propeller disc diameter)
    tail_keel_z: float = 0.0                        # m (level with the CoM)
    tail_height: float = 0.050                      # m
    # Quadratic fuselage drag: F_i = -0.5 rho (CdA)_i v_i |v_i| per body axis,
    # and the rotational equivalent for angular rates. Stand-in for all
    # fuselage hydro/aero drag.
    drag_area: Vec3 = (0.0025, 0.086, 0.086)        # m^2 (Cd*A per axis)
    rot_drag: Vec3 = (0.0010, 0.0040, 0.0040)       # m^5-equivalent per axis
    servo_tau: float = 0.05                         # s, deflection lag
    thruster_tau: float = 0.10                      # s, thrust lag

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ConfigError("mass must be positive")
        self._check_inertia()
        if self.d_f <= 0.0:
            raise ConfigError("allocation matrix singular: d_f must be > 0")
        if self.h_s <= 0.0:
            raise ConfigError("h_s must be > 0")
        if self.derate_depth <= 0.0:
            raise ConfigError("derate_depth must be > 0")
        if not 0.0 < self.deflection_limit < math.pi / 2:
            raise ConfigError("deflection_limit must be in (0, pi/2)")
        if not 0.0 < self.surface_deflection_limit < math.pi / 2:
            raise ConfigError("surface_deflection_limit must be in (0, pi/2)")
        for name in ("buoyancy_volume", "wing_area", "aileron_area",
                     "tail_area", "tail_arm", "thrust_max_underwater",
                     "thrust_max_aerial", "fold_duration", "strut_height"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 <= self.folded_lift_residual <= 1.0:
            raise ConfigError("folded_lift_residual must be within [0, 1]")

    def _check_inertia(self):
        m = self.inertia
        for i in range(3):
            for j in range(3):
                if abs(m[i][j] - m[j][i]) > 1e-12:
                    raise ConfigError("inertia tensor must be symmetric")
        # Positive definiteness via leading principal minors.
        d1 = m[0][0]
        d2 = m[0][0] * m[1][1] - m[0][1] * m[1][0]
        d3 = (
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        )
        if d1 <= 0.0 or d2 <= 0.0 or d3 <= 0.0:
            raise ConfigError("inertia tensor must be positive definite")

    @property
    def aileron_lift_slope(self) -> float:
        """Thin-airfoil 2*pi slope with a finite-span correction."""
        ar = self.aileron_aspect_ratio
        return 2.0 * math.pi * ar / (ar + 2.0)

    def clamped_aileron_incidence(self, alpha_eff: float) -> float:
        return clamp(alpha_eff, -self.aileron_stall, self.aileron_stall)

    def net_weight(self, water_density: float, gravity: float) -> float:
        """Fully-submerged in-water weight: m*g minus full buoyancy, in N
        (positive means the craft sinks)."""
        return self.mass * gravity - water_density * gravity * self.buoyancy_volume
