"""Spring contact between the probe face and the back surface."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .phantom import PhantomModel, surface_height, surface_slope_y


@dataclass(frozen=True)
class ForceScrew:
    """Contact wrench in the TCP frame (N and N*m)."""

    fx: float = 0.0
    fy: float = 0.0
    fz: float = 0.0
    mx: float = 0.0
    my: float = 0.0
    mz: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.fx, self.fy, self.fz, self.mx, self.my, self.mz])

    @property
    def in_contact(self) -> bool:
        return self.fz > 0.0


ZERO_SCREW = ForceScrew()


@dataclass(frozen=True)
class ContactParams:
    # N*m per (m of penetration * rad of pitch mismatch)
    k_moment: float = 800.0
    damping: float = 0.0


def penetration(phantom: PhantomModel, pose) -> float:
    if not 0.0 <= pose.y <= phantom.scan_span:
        return 0.0
    return max(0.0, float(surface_height(phantom, pose.x, pose.y)) - pose.z)


def pitch_mismatch(phantom: PhantomModel, pose) -> float:
    """Probe pitch minus the sagittal inclination of the skin under it."""
    return pose.r_x - math.atan(float(surface_slope_y(phantom, pose.x, pose.y)))


def compute_force_screw(phantom: PhantomModel, pose, params: ContactParams = ContactParams(),
                        penetration_rate: float = 0.0) -> ForceScrew:
    """Force screw for a probe at ``pose`` pressed against the phantom.

    ``penetration_rate`` (m/s) feeds the optional viscous term; it is ignored
    when ``params.damping`` is zero.
    """
    d = penetration(phantom, pose)
    if d <= 0.0:
        return ZERO_SCREW
    fz = phantom.stiffness_at(pose.y) * d + params.damping * penetration_rate
    fz = max(fz, 0.0)
    mx = params.k_moment * d * pitch_mismatch(phantom, pose)
    return ForceScrew(fz=fz, mx=mx)
