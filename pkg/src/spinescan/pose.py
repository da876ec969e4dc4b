from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class ProbePose:
    """TCP pose in the Init frame.

    Init axes: x lateral, y caudo-cranial (scan direction), z up out of the
    back. The TCP frame is right-handed with z along the probe axis into the
    back and y along the scan direction, so its x axis is Init -x. ``r_x`` is
    the pitch about the lateral axis; ``r_y``/``r_z`` are carried but never
    commanded.
    """

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    r_x: float = 0.0
    r_y: float = 0.0
    r_z: float = 0.0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def axes(self):
        """World directions of the TCP x (lateral), y (advance) and z (into skin) axes."""
        c, s = math.cos(self.r_x), math.sin(self.r_x)
        return (np.array([-1.0, 0.0, 0.0]),
                np.array([0.0, c, s]),
                np.array([0.0, s, -c]))

    def moved(self, command, dt: float) -> "ProbePose":
        """Explicit Euler step of a TCP-frame velocity command."""
        c, s = math.cos(self.r_x), math.sin(self.r_x)
        return replace(
            self,
            x=self.x - command.v_x * dt,
            y=self.y + (command.v_y * c + command.v_z * s) * dt,
            z=self.z + (command.v_y * s - command.v_z * c) * dt,
            r_x=self.r_x + command.r_x_rate * dt,
            r_y=self.r_y + command.r_y_rate * dt,
            r_z=self.r_z + command.r_z_rate * dt,
        )
