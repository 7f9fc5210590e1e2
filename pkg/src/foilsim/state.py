"""Core state and command types shared by the physics and control layers."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

from .frames import (
    IDENTITY_QUAT,
    Quat,
    Vec3,
    euler_from_quat,
    quat_from_euler,
    quat_normalize,
)


class BodyWrench(NamedTuple):
    """Force and moment in the body frame, about the center of mass."""

    force: Vec3
    moment: Vec3


ZERO_WRENCH = BodyWrench((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))


@dataclass
class RigidBodyState:
    """World position, attitude, and body-frame velocities of the craft.

    position is in the world frame with z down and the water surface at
    z = 0, so ``position[2]`` is the (signed) depth of the center of mass.
    attitude is a scalar-first unit quaternion mapping body to world.
    velocity and angular_rate are body-frame.
    """

    position: Vec3 = (0.0, 0.0, 0.0)
    attitude: Quat = IDENTITY_QUAT
    velocity: Vec3 = (0.0, 0.0, 0.0)
    angular_rate: Vec3 = (0.0, 0.0, 0.0)

    def normalized(self) -> "RigidBodyState":
        return replace(self, attitude=quat_normalize(self.attitude))

    def euler(self) -> Vec3:
        return euler_from_quat(self.attitude)

    @property
    def depth(self) -> float:
        return self.position[2]

    @property
    def speed(self) -> float:
        u, v, w = self.velocity
        return math.sqrt(u * u + v * v + w * w)

    def is_finite(self) -> bool:
        values = (*self.position, *self.attitude, *self.velocity,
                  *self.angular_rate)
        return all(math.isfinite(v) for v in values)

    @classmethod
    def from_euler(cls, position: Vec3 = (0.0, 0.0, 0.0),
                   roll: float = 0.0, pitch: float = 0.0, yaw: float = 0.0,
                   velocity: Vec3 = (0.0, 0.0, 0.0),
                   angular_rate: Vec3 = (0.0, 0.0, 0.0)) -> "RigidBodyState":
        return cls(position=position,
                   attitude=quat_from_euler(roll, pitch, yaw),
                   velocity=velocity,
                   angular_rate=angular_rate)


@dataclass
class ActuatorCommand:
    """Setpoints for every actuator, before lag filtering and limits.

    thrust_* are underwater thruster forces in N, delta_* the underwater
    aileron servo angles. elevator/aileron_*/flaps are air control-surface
    deflections (flaps relative to the rigging bias). Positive elevator is
    defined to produce a nose-up pitch moment.
    """

    thrust_left: float = 0.0
    thrust_right: float = 0.0
    delta_left: float = 0.0
    delta_right: float = 0.0
    elevator: float = 0.0
    aileron_left: float = 0.0
    aileron_right: float = 0.0
    flaps: float = 0.0
    aerial_throttle: float = 0.0
    wings_folded: bool = False

    def copy(self) -> "ActuatorCommand":
        return replace(self)
