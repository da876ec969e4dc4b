"""Parametric scoliotic spine and back surface.

Every quantity here is analytic, so the phantom doubles as ground truth for
the detector, the tracker and the angle measurement.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


class Region(enum.Enum):
    SACRUM = "Sacrum"
    LUMBAR = "Lumbar"
    THORACIC = "Thoracic"

    @property
    def index(self) -> int:
        return REGIONS.index(self)


REGIONS = (Region.SACRUM, Region.LUMBAR, Region.THORACIC)


@dataclass(frozen=True)
class PhantomModel:
    curve_amplitude: float = 0.010
    curve_length: float = 0.200
    scan_span: float = 0.40
    region_bounds: tuple = (0.06, 0.20)
    vertebra_pitch: float = 0.030
    vertebra_fraction: float = 0.6
    # Sacrum, Lumbar, Thoracic
    sp_depth_per_region: tuple = (0.030, 0.035, 0.022)
    sagittal_amplitude: float = -0.005
    lateral_rounding: float = 2.0
    skin_stiffness: float = 2000.0
    second_amplitude: float = 0.0
    second_length: float = 0.100
    # (y_start, y_stop, factor): a stiff patch on the back, used to script force spikes
    stiffness_patch: tuple | None = field(default=None)

    def __post_init__(self):
        if not 0.0 < self.vertebra_fraction < 1.0:
            raise DomainError("vertebra_fraction must lie in (0, 1)")
        if self.scan_span <= 0:
            raise DomainError("scan_span must be positive")
        b = tuple(float(v) for v in self.region_bounds)
        if len(b) != 2 or not (0.0 < b[0] < b[1] < self.scan_span):
            raise DomainError("region_bounds must be two increasing values inside (0, scan_span)")
        object.__setattr__(self, "region_bounds", b)
        depths = tuple(float(v) for v in self.sp_depth_per_region)
        if len(depths) != 3 or any(not 0.0 < d <= 0.060 for d in depths):
            raise DomainError("sp_depth_per_region must hold three depths in (0, 0.06]")
        object.__setattr__(self, "sp_depth_per_region", depths)
        if self.curve_length <= 0:
            raise DomainError("curve_length must be positive")
        if self.second_length <= 0:
            raise DomainError("second_length must be positive")
        if self.vertebra_pitch <= 0:
            raise DomainError("vertebra_pitch must be positive")
        if self.skin_stiffness <= 0:
            raise DomainError("skin_stiffness must be positive")
        if self.stiffness_patch is not None:
            y0, y1, factor = (float(v) for v in self.stiffness_patch)
            if y1 <= y0 or factor <= 0:
                raise DomainError("stiffness_patch must be (y_start < y_stop, factor > 0)")
            object.__setattr__(self, "stiffness_patch", (y0, y1, factor))

    @property
    def y_end(self) -> float:
        return self.scan_span

    def sp_depth(self, region: Region) -> float:
        return self.sp_depth_per_region[region.index]

    def stiffness_at(self, y: float) -> float:
        if self.stiffness_patch is not None:
            y0, y1, factor = self.stiffness_patch
            if y0 <= y < y1:
                return self.skin_stiffness * factor
        return self.skin_stiffness


def _check_span(phantom: PhantomModel, y) -> None:
    if np.any(np.asarray(y) < 0.0) or np.any(np.asarray(y) > phantom.scan_span):
        raise DomainError(f"y={y} outside scan span [0, {phantom.scan_span}]")


def _offset(phantom, y):
    return (phantom.curve_amplitude * np.sin(2 * np.pi * y / phantom.curve_length)
            + phantom.second_amplitude * np.sin(2 * np.pi * y / phantom.second_length))


def _offset_slope(phantom, y):
    return (2 * np.pi * phantom.curve_amplitude / phantom.curve_length
            * np.cos(2 * np.pi * y / phantom.curve_length)
            + 2 * np.pi * phantom.second_amplitude / phantom.second_length
            * np.cos(2 * np.pi * y / phantom.second_length))


def spine_lateral_offset(phantom: PhantomModel, y):
    """Lateral position of the spine midline at longitudinal position ``y``."""
    _check_span(phantom, y)
    return _offset(phantom, y)


def spine_slope(phantom: PhantomModel, y):
    """d(offset)/dy, analytic."""
    _check_span(phantom, y)
    return _offset_slope(phantom, y)


def surface_height(phantom: PhantomModel, x, y):
    _check_span(phantom, y)
    sagittal = phantom.sagittal_amplitude * np.sin(2 * np.pi * y / phantom.y_end)
    return sagittal - 0.5 * phantom.lateral_rounding * (x - _offset(phantom, y)) ** 2


def surface_slope_y(phantom: PhantomModel, x, y):
    """Partial derivative of the surface height along the scan direction."""
    _check_span(phantom, y)
    w = 2 * np.pi / phantom.y_end
    return (phantom.sagittal_amplitude * w * np.cos(w * y)
            + phantom.lateral_rounding * (x - _offset(phantom, y)) * _offset_slope(phantom, y))


def region_at(phantom: PhantomModel, y: float) -> Region:
    lo, hi = phantom.region_bounds
    if y < lo:
        return Region.SACRUM
    if y < hi:
        return Region.LUMBAR
    return Region.THORACIC


def vertebra_at(phantom: PhantomModel, y: float):
    """Region and spinous-process position under ``y``, or None in a gap.

    The position is a world point (x, y, z) with z below the skin by the
    region's spinous-process depth.
    """
    _check_span(phantom, y)
    phase = math.fmod(y, phantom.vertebra_pitch) / phantom.vertebra_pitch
    if phase >= phantom.vertebra_fraction:
        return None
    region = region_at(phantom, y)
    x = float(_offset(phantom, y))
    z = float(surface_height(phantom, x, y)) - phantom.sp_depth(region)
    return region, np.array([x, float(y), z])


def ground_truth_angle(phantom: PhantomModel, samples: int = 20001) -> float:
    """Spread between the most tilted tangents of the spine, in degrees."""
    if phantom.curve_length <= 0:
        raise DomainError("curve_length must be positive")
    y = np.linspace(0.0, phantom.scan_span, samples)
    theta = np.degrees(np.arctan(_offset_slope(phantom, y)))
    return float(theta.max() - theta.min())
