"""Closed-loop scan: approach, 30 Hz control with 10 Hz imaging, logging."""
from __future__ import annotations

import csv
import enum
import io
import math
import time
from collections import Counter, deque
from dataclasses import dataclass, field, replace

import numpy as np

from .contact import ContactParams, ForceScrew, compute_force_screw, penetration
from .control import (ControlConfig, ControllerState, Safety, VelocityCommand, ZERO_COMMAND,
                      compose_command, force_velocity, lateral_velocity, pitch_rate,
                      region_settings, safety_check)
from .imaging import METERS_PER_PX, RenderParams, UsFrame, render_frame
from .perception import PerceptionConfig, classify_region, detect
from .phantom import REGIONS, PhantomModel, Region, spine_lateral_offset, surface_height, surface_slope_y
from .pose import ProbePose
from .tracking import KalmanState, kf_step

CONTROL_HZ = 30
FRAME_EVERY = 3
DT = 1.0 / CONTROL_HZ

# seed substreams
RENDER_STREAM = 1
HAND_STREAM = 2

CSV_HEADER = ("t,x,y,z,rx,ry,rz,fx,fy,fz,mx,my,mz,frame_id,det_x,det_y,det_conf,"
              "kf_x,region,vx,vy,vz,rx_rate,phase").split(",")


class Phase(enum.Enum):
    APPROACH = "Approach"
    SCAN = "Scan"
    STOPPED = "Stopped"
    DONE = "Done"


@dataclass(frozen=True)
class ManualParams:
    """Hand model for a simulated manual scan: the spine midline plus OU wander."""

    sigma: float = 0.004
    tau: float = 5.0


@dataclass
class TickRecord:
    t: float
    pose: ProbePose
    screw: ForceScrew
    frame_id: int | None
    detection: object | None
    kf_x: float
    region: Region
    command: VelocityCommand
    phase: Phase
    truth_px: tuple | None = None  # true feature pixel on frame ticks, not serialised


@dataclass
class ScanLog:
    records: list = field(default_factory=list)
    seed: int = 0

    @property
    def phase(self) -> Phase:
        return self.records[-1].phase if self.records else Phase.APPROACH

    def scan_records(self):
        return [r for r in self.records if r.phase is Phase.SCAN]

    def frame_records(self):
        return [r for r in self.records if r.frame_id is not None]

    def contact_loss_ticks(self) -> int:
        return sum(1 for r in self.scan_records() if r.screw.fz <= 0.0)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.records:
            p, s, c, d = r.pose, r.screw, r.command, r.detection
            w.writerow([
                repr(r.t), repr(p.x), repr(p.y), repr(p.z), repr(p.r_x), repr(p.r_y), repr(p.r_z),
                repr(s.fx), repr(s.fy), repr(s.fz), repr(s.mx), repr(s.my), repr(s.mz),
                "" if r.frame_id is None else r.frame_id,
                "" if d is None else repr(d.x_px), "" if d is None else repr(d.y_px),
                "" if d is None else repr(d.confidence),
                repr(r.kf_x), r.region.value,
                repr(c.v_x), repr(c.v_y), repr(c.v_z), repr(c.r_x_rate), r.phase.value,
            ])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


class ScanAborted(RuntimeError):
    def __init__(self, message, log):
        super().__init__(message)
        self.log = log


def frame_rng(seed: int, frame_id: int) -> np.random.Generator:
    return np.random.default_rng([seed, RENDER_STREAM, frame_id])


def start_pose(phantom: PhantomModel, lateral_offset: float = 0.0, clearance: float = 0.005) -> ProbePose:
    """Probe normal to the skin at the sacrum, backed off ``clearance`` along its axis."""
    x = float(spine_lateral_offset(phantom, 0.0)) + lateral_offset
    r_x = math.atan(float(surface_slope_y(phantom, x, 0.0)))
    # a forward-tilted axis walks the descent towards y < 0; leave room for it
    y0 = max(0.0, -math.sin(r_x)) * (clearance + 0.025)
    z0 = float(surface_height(phantom, x, y0))
    return ProbePose(x, y0 - clearance * math.sin(r_x), z0 + clearance * math.cos(r_x), r_x)


def default_prototypes(phantom: PhantomModel, cfg: ControlConfig,
                       render: RenderParams = RenderParams()):
    """Classifier prototypes matching what the renderer draws at the force setpoints."""
    fwhm = 2.0 * math.sqrt(2.0 * math.log(2.0))
    out = []
    for region in REGIONS:
        depth = phantom.sp_depth(region) - cfg.F_ref(region) / phantom.skin_stiffness
        width = render.sacrum_width if region is Region.SACRUM else fwhm * render.blob_sigma_x
        out.append((depth / METERS_PER_PX, width))
    return tuple(out)


def resolve_perception(perception: PerceptionConfig, phantom: PhantomModel, cfg: ControlConfig,
                       render: RenderParams = RenderParams()) -> PerceptionConfig:
    if perception.classifier.prototypes is not None:
        return perception
    classifier = replace(perception.classifier, prototypes=default_prototypes(phantom, cfg, render))
    return replace(perception, classifier=classifier)


def _vote(history) -> Region:
    if not history:
        return Region.SACRUM
    counts = Counter(history)
    best = max(counts.values())
    # ties go to the most recent winner
    for region in reversed(history):
        if counts[region] == best:
            return region


def run_scan(phantom: PhantomModel, cfg: ControlConfig = ControlConfig(), seed: int = 0, *,
             perception: PerceptionConfig = PerceptionConfig(),
             render: RenderParams = RenderParams(),
             contact: ContactParams = ContactParams(),
             mode: str = "robotic",
             manual: ManualParams = ManualParams(),
             initial_offset: float = 0.0,
             max_approach_s: float = 30.0,
             frame_sink=None,
             realtime: bool = False) -> ScanLog:
    """Simulate one autonomous scan and return its log.

    ``mode="manual"`` replaces the lateral servo with a hand that follows
    the true midline plus Ornstein-Uhlenbeck wander; force and pitch laws are
    unchanged. ``frame_sink`` receives every rendered frame.
    """
    if mode not in ("robotic", "manual"):
        raise ValueError(f"unknown mode {mode!r}")
    perception = resolve_perception(perception, phantom, cfg, render)
    log = ScanLog(seed=seed)
    pose = start_pose(phantom, initial_offset)
    ctrl = ControllerState()
    kf = KalmanState()
    cmd = ZERO_COMMAND
    phase = Phase.APPROACH
    history = deque(maxlen=5)
    hand_rng = np.random.default_rng([seed, HAND_STREAM])
    wander = 0.0
    decay = math.exp(-DT / manual.tau)
    kick = manual.sigma * math.sqrt(1.0 - decay * decay)
    tick = 0
    scan_tick = 0
    frame_id = 0
    last_det = None
    prev_pen = penetration(phantom, pose)
    wall0 = time.perf_counter()

    def emit(**kw):
        log.records.append(TickRecord(t=tick * DT, pose=pose, **kw))

    while True:
        if tick > 0:
            pose = pose.moved(cmd, DT)
        if not all(math.isfinite(v) for v in (pose.x, pose.y, pose.z, pose.r_x)):
            raise ScanAborted(f"non-finite pose at tick {tick}: {pose}", log)
        if realtime:
            lag = tick * DT - (time.perf_counter() - wall0)
            if lag > 0:
                time.sleep(lag)
        region = _vote(history)
        pen = penetration(phantom, pose)
        screw = compute_force_screw(phantom, pose, contact, (pen - prev_pen) / DT)
        prev_pen = pen

        if phase is Phase.APPROACH:
            f_target = cfg.F_ref(Region.SACRUM)
            if safety_check(screw, cfg.F_crit) is Safety.STOP:
                emit(screw=screw, frame_id=None, detection=None, kf_x=kf.x_hat, region=region,
                     command=ZERO_COMMAND, phase=Phase.STOPPED)
                return log
            if screw.fz >= f_target:
                cmd = ZERO_COMMAND
                phase = Phase.SCAN
            elif tick * DT > max_approach_s:
                raise ScanAborted("approach never reached the force setpoint", log)
            else:
                cmd = VelocityCommand(v_z=cfg.v_approach)
            emit(screw=screw, frame_id=None, detection=None, kf_x=kf.x_hat, region=region,
                 command=cmd, phase=Phase.APPROACH)
            tick += 1
            continue

        if pose.y >= phantom.scan_span:
            emit(screw=screw, frame_id=None, detection=None, kf_x=kf.x_hat, region=region,
                 command=ZERO_COMMAND, phase=Phase.DONE)
            return log
        if safety_check(screw, cfg.F_crit) is Safety.STOP:
            emit(screw=screw, frame_id=None, detection=None, kf_x=kf.x_hat, region=region,
                 command=ZERO_COMMAND, phase=Phase.STOPPED)
            return log

        fid = det = truth = None
        if scan_tick % FRAME_EVERY == 0:
            fid = frame_id
            frame_id += 1
            frame = render_frame(phantom, pose, frame_rng(seed, fid), render, t=tick * DT, frame_id=fid)
            truth = frame.feature_px
            if frame_sink is not None:
                frame_sink(frame)
            det = detect(frame, params=perception.detector)
            kf, _ = kf_step(kf, None if det is None else det.x_px)
            cls = classify_region(frame, perception.classifier)
            if cls.has_feature:
                history.append(cls.label)
                region = _vote(history)
            last_det = det

        F_ref, K_pitch = region_settings(region, cfg)
        if mode == "robotic":
            v_x = lateral_velocity(ctrl, kf.x_hat, cfg)
        else:
            wander = decay * wander + kick * float(hand_rng.standard_normal())
            target = float(spine_lateral_offset(phantom, min(pose.y, phantom.scan_span))) + wander
            v_x = -(target - pose.x) / DT  # TCP x is Init -x
        v_z = force_velocity(ctrl, screw.fz, F_ref, DT, cfg)
        r_x = pitch_rate(screw.mx, K_pitch)
        cmd = compose_command(v_x, cfg.v_y, v_z, r_x, Safety.PROCEED, cfg.v_lim,
                              clip_lateral=(mode == "robotic"))
        emit(screw=screw, frame_id=fid, detection=det, kf_x=kf.x_hat, region=region,
             command=cmd, phase=Phase.SCAN, truth_px=truth)
        tick += 1
        scan_tick += 1
