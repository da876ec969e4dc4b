"""Velocity laws for the probe: lateral image servo, force PID, pitch, safety."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import DomainError
from .imaging import CENTER_X, pixels_to_meters
from .phantom import REGIONS, Region


class Safety(enum.Enum):
    PROCEED = "proceed"
    STOP = "emergency_stop"


@dataclass(frozen=True)
class ControlConfig:
    v_y: float = 0.004
    K_im_near: float = 0.6
    K_im_far: float = 0.2
    near_far_threshold: float = 0.010
    alpha: float = 0.2
    K_p: float = 0.0003
    K_i: float = 0.00003
    K_d: float = 0.00003
    # Sacrum, Lumbar, Thoracic
    F_ref_per_region: tuple = (15.0, 15.0, 12.0)
    K_pitch_per_region: tuple = (0.03, 0.03, 0.07)
    v_lim: float = 0.002
    F_crit: float = 30.0
    integral_limit: float = 50.0
    v_approach: float = 0.005

    def __post_init__(self):
        for name in ("F_ref_per_region", "K_pitch_per_region"):
            vals = tuple(float(v) for v in getattr(self, name))
            if len(vals) != len(REGIONS):
                raise DomainError(f"{name} needs one value per region")
            object.__setattr__(self, name, vals)
        if self.v_lim <= 0:
            raise DomainError("v_lim must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError("alpha must lie in (0, 1]")
        if self.K_im_far > self.K_im_near:
            raise DomainError("K_im_far must not exceed K_im_near")
        if self.integral_limit <= 0:
            raise DomainError("integral_limit must be positive")
        if self.F_crit <= 0:
            raise DomainError("F_crit must be positive")
        if self.v_approach <= 0:
            raise DomainError("v_approach must be positive")

    def F_ref(self, region: Region) -> float:
        return self.F_ref_per_region[region.index]

    def K_pitch(self, region: Region) -> float:
        return self.K_pitch_per_region[region.index]


@dataclass(frozen=True)
class VelocityCommand:
    v_x: float = 0.0
    v_y: float = 0.0
    v_z: float = 0.0
    r_x_rate: float = 0.0
    r_y_rate: float = 0.0
    r_z_rate: float = 0.0


ZERO_COMMAND = VelocityCommand()


@dataclass
class ControllerState:
    prev_v_x: float = 0.0
    integral_e: float = 0.0
    prev_F: float | None = None
    prev_e: float | None = None
    prev_t: float = 0.0


def _clip(v: float, lim: float) -> float:
    return min(max(v, -lim), lim)


def lateral_velocity(state: ControllerState, x_est: float, cfg: ControlConfig) -> float:
    """Smoothed proportional servo on the estimated spinous-process column."""
    dx = pixels_to_meters(x_est - CENTER_X)
    gain = cfg.K_im_near if abs(dx) < cfg.near_far_threshold else cfg.K_im_far
    v = cfg.alpha * (-gain * dx) + (1.0 - cfg.alpha) * state.prev_v_x
    v = _clip(v, cfg.v_lim)
    state.prev_v_x = v
    return v


def force_velocity(state: ControllerState, F_curr: float, F_ref: float, dt: float,
                   cfg: ControlConfig, derivative: str = "measurement") -> float:
    """PID on the normal force; positive output pushes the probe into the skin.

    ``derivative="measurement"`` differentiates the measured force only, so a
    setpoint change produces no derivative kick. ``"error"`` is the textbook
    form, kept for comparison.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    e = F_ref - F_curr
    lim = cfg.integral_limit
    state.integral_e = min(max(state.integral_e + e * dt, -lim), lim)
    if derivative == "measurement":
        d_term = -cfg.K_d * (0.0 if state.prev_F is None else (F_curr - state.prev_F) / dt)
    elif derivative == "error":
        d_term = cfg.K_d * (0.0 if state.prev_e is None else (e - state.prev_e) / dt)
    else:
        raise ValueError(f"unknown derivative mode {derivative!r}")
    state.prev_F = F_curr
    state.prev_e = e
    state.prev_t += dt
    return _clip(cfg.K_p * e + cfg.K_i * state.integral_e + d_term, cfg.v_lim)


def pitch_rate(m_x: float, K_pitch: float) -> float:
    return -K_pitch * m_x


def safety_check(screw, F_crit: float) -> Safety:
    return Safety.STOP if screw.fz >= F_crit else Safety.PROCEED


def region_settings(region: Region, cfg: ControlConfig):
    """(F_ref, K_pitch) for a spinal region."""
    return cfg.F_ref(region), cfg.K_pitch(region)


def compose_command(lateral: float, advance: float, normal: float, pitch: float,
                    safety: Safety, v_lim: float, clip_lateral: bool = True) -> VelocityCommand:
    if safety is Safety.STOP:
        return ZERO_COMMAND
    v_x = _clip(lateral, v_lim) if clip_lateral else lateral
    return VelocityCommand(v_x, advance, _clip(normal, v_lim), pitch, 0.0, 0.0)
