"""Post-scan processing: coronal image, path statistics, curvature angle."""
from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d

from .errors import DomainError
from .imaging import (CENTER_X, DEPTH_M, METERS_PER_PX, MM_PER_PX, WIDTH_PX, RenderParams,
                      UsFrame, image_to_world, render_frame)
from .control import ControlConfig
from .phantom import REGIONS, PhantomModel, Region, ground_truth_angle
from .scanner import Phase, ScanLog, frame_rng


@dataclass
class CoronalImage:
    grid: np.ndarray  # rows along world y, columns along world x
    px_scale: float
    origin: tuple  # world (x, y) of grid[0, 0]

    def column_x(self, col) -> np.ndarray:
        return self.origin[0] + np.asarray(col) * self.px_scale

    def row_y(self, row) -> np.ndarray:
        return self.origin[1] + np.asarray(row) * self.px_scale


@dataclass(frozen=True)
class PathStats:
    mean_dev_px: float
    std_px: float
    mean_dev_mm: float
    std_mm: float
    mean_abs_dev_px: float
    mean_abs_dev_mm: float
    n: int

    def as_dict(self) -> dict:
        return asdict(self)


class RenderedFrames(Mapping):
    """Frame store that re-renders frames on demand from the scan seed.

    Frames are a pure function of (phantom, pose, seed, frame_id), so keeping
    ~1000 full-resolution images in memory is unnecessary.
    """

    def __init__(self, log: ScanLog, phantom: PhantomModel, render: RenderParams = RenderParams()):
        self._records = {r.frame_id: r for r in log.frame_records()}
        self._phantom = phantom
        self._render = render
        self._seed = log.seed

    def __getitem__(self, frame_id) -> UsFrame:
        r = self._records[frame_id]
        return render_frame(self._phantom, r.pose, frame_rng(self._seed, frame_id), self._render,
                            t=r.t, frame_id=frame_id)

    def __iter__(self):
        return iter(self._records)

    def __len__(self):
        return len(self._records)


def _depth_profile(img: np.ndarray, depth: float, slab: float) -> np.ndarray:
    row = depth / METERS_PER_PX
    if slab <= 0:
        r0 = int(math.floor(row))
        r1 = min(r0 + 1, img.shape[0] - 1)
        w = row - r0
        return (1.0 - w) * img[r0] + w * img[r1]
    lo = max(int(math.floor((depth - slab / 2) / METERS_PER_PX)), 0)
    hi = min(int(math.ceil((depth + slab / 2) / METERS_PER_PX)), img.shape[0] - 1)
    return img[lo:hi + 1].max(axis=0)


def build_coronal(log: ScanLog, frames, depth: float, out_px_scale: float = 0.0005,
                  slab: float = 0.0, origin=None, shape=None) -> CoronalImage:
    """Stack one depth row of every frame into a world-aligned coronal grid.

    Each row is splatted bilinearly at the world positions of its pixels and
    overlapping contributions are averaged. ``slab`` > 0 takes the maximum
    over a band of rows instead of a single row. ``origin``/``shape`` pin the
    output grid; by default it is fitted to the data.
    """
    if not 0.0 < depth < DEPTH_M:
        raise DomainError(f"depth {depth} outside (0, {DEPTH_M})")
    if out_px_scale <= 0:
        raise DomainError("out_px_scale must be positive")
    recs = [r for r in log.frame_records() if r.frame_id in frames]
    if not recs:
        raise DomainError("no frames to reconstruct from")
    cols = np.arange(WIDTH_PX, dtype=float)
    xs, ys, vals = [], [], []
    row_px = depth / METERS_PER_PX
    for r in recs:
        f = frames[r.frame_id]
        img = f.intensities if isinstance(f, UsFrame) else np.asarray(f)
        pts = image_to_world(r.pose, cols, np.full(WIDTH_PX, row_px))
        xs.append(pts[:, 0])
        ys.append(pts[:, 1])
        vals.append(_depth_profile(np.asarray(img, dtype=float), depth, slab))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    v = np.concatenate(vals)
    if origin is None:
        origin = (x.min(), y.min())
    if shape is None:
        shape = (int(math.ceil((y.max() - origin[1]) / out_px_scale)) + 2,
                 int(math.ceil((x.max() - origin[0]) / out_px_scale)) + 2)
    H, W = shape
    fx = (x - origin[0]) / out_px_scale
    fy = (y - origin[1]) / out_px_scale
    ix = np.floor(fx).astype(int)
    iy = np.floor(fy).astype(int)
    wx = fx - ix
    wy = fy - iy
    acc = np.zeros((H, W))
    wsum = np.zeros((H, W))
    for dy, dx, w in ((0, 0, (1 - wy) * (1 - wx)), (0, 1, (1 - wy) * wx),
                      (1, 0, wy * (1 - wx)), (1, 1, wy * wx)):
        r, c = iy + dy, ix + dx
        ok = (r >= 0) & (r < H) & (c >= 0) & (c < W) & (w > 0)
        np.add.at(acc, (r[ok], c[ok]), w[ok] * v[ok])
        np.add.at(wsum, (r[ok], c[ok]), w[ok])
    grid = np.zeros((H, W))
    hit = wsum > 0
    grid[hit] = acc[hit] / wsum[hit]
    return CoronalImage(np.clip(grid, 0.0, 1.0), out_px_scale, (float(origin[0]), float(origin[1])))


def _path_pixels(log: ScanLog, source: str) -> np.ndarray:
    recs = [r for r in log.frame_records() if r.phase is Phase.SCAN]
    if source == "kalman":
        return np.array([r.kf_x for r in recs])
    if source == "detections":
        return np.array([r.detection.x_px for r in recs if r.detection is not None])
    raise ValueError(f"unknown source {source!r}")


def deviation_stats(log: ScanLog, source: str = "kalman") -> PathStats:
    """Deviation of the spinous-process path from the image centre column.

    The mean is signed; the standard deviation uses the population form.
    """
    x = _path_pixels(log, source)
    if x.size == 0:
        raise DomainError(f"no {source} locations in the log")
    dev = x - CENTER_X
    mean, std, mabs = float(dev.mean()), float(dev.std()), float(np.abs(dev).mean())
    return PathStats(mean, std, mean * MM_PER_PX, std * MM_PER_PX, mabs, mabs * MM_PER_PX, int(x.size))


def spine_path(log: ScanLog, source: str = "detections", exclude_sacrum: bool = True):
    """World (y, x) of the spinous-process path, one point per frame.

    ``source="detections"`` registers raw detections through the probe pose;
    ``"kalman"`` uses the filtered image column instead, which lags while the
    probe is moving laterally. Frames voted Sacrum are dropped by default
    since the sacral plate has no single midline point.
    """
    recs = [r for r in log.frame_records() if r.phase is Phase.SCAN
            and not (exclude_sacrum and r.region is Region.SACRUM)]
    if source == "kalman":
        pts = [(r.pose, r.kf_x) for r in recs]
    elif source == "detections":
        pts = [(r.pose, r.detection.x_px) for r in recs if r.detection is not None]
    else:
        raise ValueError(f"unknown source {source!r}")
    ys = np.array([p.y for p, _ in pts])
    xs = np.array([image_to_world(p, x, 0.0)[0] for p, x in pts])
    return ys, xs


def measure_angle(log: ScanLog, window: float = 0.020, step: float = 0.001,
                  source: str = "detections", exclude_sacrum: bool = True) -> float:
    """Spread of tangent inclinations along the reconstructed spine, degrees.

    The path is resampled on a uniform grid, smoothed with a centred moving
    average of width ``window`` and differentiated with least-squares line
    fits over the same width.
    """
    if window <= 0:
        raise DomainError("window must be positive")
    ys, xs = spine_path(log, source, exclude_sacrum)
    if ys.size < 2:
        raise DomainError("too few path points")
    order = np.argsort(ys, kind="stable")
    ys, xs = ys[order], xs[order]
    keep = np.concatenate(([True], np.diff(ys) > 0))
    ys, xs = ys[keep], xs[keep]
    n = int(round(window / step)) | 1
    grid = np.arange(ys[0], ys[-1], step)
    if grid.size < 2 * n + 1:
        raise DomainError("scan span too short for the angle window")
    path = np.interp(grid, ys, xs)
    half = n // 2
    smooth = uniform_filter1d(path, n, mode="nearest")[half:-half]
    g = grid[half:-half]
    # rolling least-squares slope over n samples
    k = np.ones(n)
    sy = np.convolve(g, k, "valid")
    sx = np.convolve(smooth, k, "valid")
    syy = np.convolve(g * g, k, "valid")
    sxy = np.convolve(g * smooth, k, "valid")
    slope = (n * sxy - sy * sx) / (n * syy - sy * sy)
    theta = np.degrees(np.arctan(slope))
    return float(theta.max() - theta.min())


def default_coronal_depth(phantom: PhantomModel, cfg: ControlConfig = ControlConfig(),
                          margin: float = 0.002):
    """(depth, slab) of a max-slab spanning every region's spinous-process image depth.

    A single row at lumbar depth would miss the shallower thoracic processes.
    """
    depths = [phantom.sp_depth(r) - cfg.F_ref(r) / phantom.skin_stiffness for r in REGIONS]
    lo, hi = min(depths) - margin, max(depths) + margin
    lo = max(lo, METERS_PER_PX)
    hi = min(hi, DEPTH_M - METERS_PER_PX)
    return 0.5 * (lo + hi), hi - lo


def _stats_or_none(log: ScanLog, source: str):
    try:
        return deviation_stats(log, source).as_dict()
    except DomainError:
        return None


def scan_report(log: ScanLog, phantom: PhantomModel, window: float = 0.020) -> dict:
    """JSON-ready summary: Kalman-path deviation at top level plus both stat blocks."""
    kal = _stats_or_none(log, "kalman")
    try:
        angle = measure_angle(log, window)
    except DomainError:
        angle = None
    keys = ("mean_dev_px", "std_px", "mean_dev_mm", "std_mm", "mean_abs_dev_mm")
    report = {k: None if kal is None else kal[k] for k in keys}
    report.update(
        angle_deg=angle,
        gt_angle_deg=ground_truth_angle(phantom),
        phase=log.phase.value,
        kalman=kal,
        detections=_stats_or_none(log, "detections"),
        contact_loss_ticks=log.contact_loss_ticks(),
    )
    return report
