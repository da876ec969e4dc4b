"""Offline perception metrics on a synthetic sweep of rendered frames."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from .control import ControlConfig
from .errors import DomainError
from .imaging import RenderParams, render_frame
from .perception import (HEATMAP_SIZE, PerceptionConfig, classify_region, confidence_map, detect,
                         gaussian_target, mean_distance_error, multitask_loss, pck_accuracy)
from .phantom import PhantomModel, region_at, spine_lateral_offset, surface_height, surface_slope_y
from .pose import ProbePose
from .scanner import resolve_perception

EVAL_STREAM = 3


@dataclass(frozen=True)
class SweepReport:
    n_frames: int
    n_feature_frames: int
    n_detected: int
    false_positives: int
    pck: float
    pck_threshold_px: float
    mean_error_px: float
    region_accuracy: float
    mean_loss: float
    seconds: float

    def as_dict(self) -> dict:
        return asdict(self)


def sweep_pose(phantom: PhantomModel, cfg: ControlConfig, rng: np.random.Generator,
               lateral_range: float = 0.015) -> ProbePose:
    """A skin-aligned probe pose at the force setpoint, off the midline by up to ``lateral_range``."""
    margin = 0.005
    y = float(rng.uniform(margin, phantom.scan_span - margin))
    x = float(spine_lateral_offset(phantom, y) + rng.uniform(-lateral_range, lateral_range))
    depth = cfg.F_ref(region_at(phantom, y)) / phantom.stiffness_at(y)
    z = float(surface_height(phantom, x, y)) - depth
    return ProbePose(x, y, z, float(np.arctan(surface_slope_y(phantom, x, y))))


def detector_sweep(phantom: PhantomModel = PhantomModel(), n_frames: int = 500, seed: int = 0, *,
                   cfg: ControlConfig = ControlConfig(), render: RenderParams = RenderParams(),
                   perception: PerceptionConfig = PerceptionConfig(),
                   loss_weight: float = 1500.0) -> SweepReport:
    """Render ``n_frames`` random poses and score detector and classifier on them.

    PCK and mean error are computed over frames that contain a spinous
    process; a miss counts against PCK. Gap frames only contribute to the
    false-positive count and the loss (their target heatmap is all zeros).
    """
    if n_frames < 1:
        raise DomainError("n_frames must be at least 1")
    perception = resolve_perception(perception, phantom, cfg, render)
    pose_rng = np.random.default_rng([seed, EVAL_STREAM])
    preds, targets, losses = [], [], []
    correct_region = false_pos = 0
    start = time.perf_counter()
    for i in range(n_frames):
        pose = sweep_pose(phantom, cfg, pose_rng)
        frame = render_frame(phantom, pose, np.random.default_rng([seed, EVAL_STREAM, i]), render,
                             frame_id=i)
        det = detect(frame, params=perception.detector)
        region = region_at(phantom, pose.y)
        cls = classify_region(frame, perception.classifier)
        if frame.feature_px is None:
            false_pos += det is not None
            target_hm = np.zeros((HEATMAP_SIZE, HEATMAP_SIZE))
        else:
            preds.append(det)
            targets.append(frame.feature_px)
            correct_region += cls.label is region
            target_hm = gaussian_target(frame.feature_px, perception.target_sigma)
        heat = confidence_map(frame.intensities, perception.detector)
        losses.append(multitask_loss(heat, target_hm, cls.probabilities, region, loss_weight))
    seconds = time.perf_counter() - start
    if not preds:
        raise DomainError("sweep produced no frames with a spinous process")
    n_det = sum(p is not None for p in preds)
    return SweepReport(
        n_frames=n_frames,
        n_feature_frames=len(preds),
        n_detected=n_det,
        false_positives=int(false_pos),
        pck=pck_accuracy(preds, targets, perception.pck_threshold_px),
        pck_threshold_px=perception.pck_threshold_px,
        mean_error_px=mean_distance_error(preds, targets) if n_det else float("inf"),
        region_accuracy=correct_region / len(preds),
        mean_loss=float(np.mean(losses)),
        seconds=seconds,
    )
