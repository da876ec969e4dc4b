"""Simulator for robotic ultrasound scans that follow the spinal curvature.

A synthetic back phantom and probe contact model feed a B-mode renderer; a
heatmap-style detector and scalar Kalman filter locate the spinous process;
image, force and pitch servo laws move the probe; the logged scan is turned
into a coronal image, deviation statistics and a curvature angle.
"""
from .config import Scenario, parse_scenario, scenario_from_dict
from .contact import ContactParams, ForceScrew, compute_force_screw
from .control import ControlConfig, VelocityCommand
from .errors import DomainError, ScenarioError
from .evaluation import detector_sweep
from .imaging import RenderParams, UsFrame, render_frame
from .perception import Detection, PerceptionConfig, RegionClass, classify_region, detect
from .phantom import PhantomModel, Region, ground_truth_angle
from .pose import ProbePose
from .reconstruction import build_coronal, deviation_stats, measure_angle, scan_report
from .scanner import Phase, ScanAborted, ScanLog, run_scan
from .tracking import KalmanState, kf_step

__version__ = "0.1.0"

__all__ = [
    "ContactParams", "ControlConfig", "Detection", "DomainError", "ForceScrew", "KalmanState",
    "PerceptionConfig", "Phase", "PhantomModel", "ProbePose", "Region", "RegionClass",
    "RenderParams", "ScanAborted", "ScanLog", "Scenario", "ScenarioError", "UsFrame",
    "VelocityCommand", "build_coronal", "classify_region", "compute_force_screw", "detect",
    "detector_sweep", "deviation_stats", "ground_truth_angle", "kf_step", "measure_angle",
    "parse_scenario", "render_frame", "run_scan", "scan_report", "scenario_from_dict",
]
