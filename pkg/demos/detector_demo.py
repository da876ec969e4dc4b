#!/usr/bin/env python3
"""
Render a few frames along the spine and show what the detector and the
region classifier make of them.
"""
import numpy as np

from spinescan import ControlConfig, PhantomModel, classify_region, detect, render_frame
from spinescan.evaluation import sweep_pose
from spinescan.perception import PerceptionConfig
from spinescan.scanner import resolve_perception

phantom, cfg = PhantomModel(), ControlConfig()
perception = resolve_perception(PerceptionConfig(), phantom, cfg)
rng = np.random.default_rng(1)

for i in range(12):
    pose = sweep_pose(phantom, cfg, rng, lateral_range=0.01)
    frame = render_frame(phantom, pose, np.random.default_rng([1, i]))
    det = detect(frame, params=perception.detector)
    cls = classify_region(frame, perception.classifier)
    truth = "gap" if frame.feature_px is None else "({:.0f}, {:.0f})".format(*frame.feature_px)
    found = "none" if det is None else f"({det.x_px:.0f}, {det.y_px:.0f}) conf {det.confidence:.2f}"
    region = cls.label.value if cls.has_feature else "-"
    print(f"y={pose.y * 1000:5.0f} mm  truth {truth:>12}  detected {found:>22}  region {region}")
