"""Spinous-process localisation and spinal-region classification.

The detector is a matched filter that exposes the same interface as a
heatmap network: a 56x56 confidence map, an argmax location rescaled to the
640x480 frame, and a confidence compared against a threshold.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter, uniform_filter1d
from scipy.signal import fftconvolve

from .errors import DomainError
from .imaging import HEIGHT_PX, WIDTH_PX, UsFrame
from .phantom import REGIONS, Region

HEATMAP_SIZE = 56
CELL_W = WIDTH_PX / HEATMAP_SIZE
CELL_H = HEIGHT_PX / HEATMAP_SIZE


@dataclass(frozen=True)
class Detection:
    x_px: float
    y_px: float
    confidence: float


@dataclass(frozen=True)
class RegionClass:
    label: Region
    probabilities: tuple  # ordered as REGIONS
    has_feature: bool = True

    def probability(self, region: Region) -> float:
        return self.probabilities[region.index]


@dataclass(frozen=True)
class DetectorParams:
    template_sigma: float = 1.0
    threshold: float = 0.5
    # local std (downsampled intensity units) below which a window carries no
    # evidence, and above which NCC is trusted fully
    contrast_low: float = 0.02
    contrast_high: float = 0.05


# (depth_px, width_px) per region for the default phantom and force setpoints
DEFAULT_PROTOTYPES = ((180.0, 160.0), (220.0, 28.3), (128.0, 28.3))


@dataclass(frozen=True)
class ClassifierParams:
    # canonical (depth_px, width_px) per region, ordered as REGIONS; None lets
    # the scanner derive them from the phantom
    prototypes: tuple | None = None
    depth_scale: float = 40.0
    width_scale: float = 40.0
    min_contrast: float = 0.05


@dataclass(frozen=True)
class PerceptionConfig:
    detector: DetectorParams = field(default_factory=DetectorParams)
    classifier: ClassifierParams = field(default_factory=ClassifierParams)
    target_sigma: float = 2.0
    pck_threshold_px: float = 20.0


def _area_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic matrix averaging ``n_in`` samples into ``n_out`` bins by overlap."""
    edges = np.linspace(0.0, n_in, n_out + 1)
    lo = np.arange(n_in)[None, :]
    overlap = np.clip(np.minimum(edges[1:, None], lo + 1) - np.maximum(edges[:-1, None], lo), 0, None)
    return overlap / overlap.sum(axis=1, keepdims=True)


_ROW_AVG = _area_matrix(HEIGHT_PX, HEATMAP_SIZE)
_COL_AVG = _area_matrix(WIDTH_PX, HEATMAP_SIZE)


def downsample(image: np.ndarray) -> np.ndarray:
    """Area-average a 480x640 frame onto the 56x56 heatmap grid."""
    return _ROW_AVG @ np.asarray(image, dtype=float) @ _COL_AVG.T


def cell_to_pixel(ci, cj):
    """Centre of heatmap cell (row ``ci``, column ``cj``) in frame pixels."""
    return (np.asarray(cj) + 0.5) * CELL_W - 0.5, (np.asarray(ci) + 0.5) * CELL_H - 0.5


def gaussian_target(center, sigma: float = 2.0) -> np.ndarray:
    """Training-style target heatmap for a label at ``center`` = (x_px, y_px)."""
    x, y = center
    if not (0 <= x < WIDTH_PX and 0 <= y < HEIGHT_PX):
        raise DomainError(f"center {center} outside the {WIDTH_PX}x{HEIGHT_PX} frame")
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    # labels in the last half cell would round past the grid edge
    cj = min(round(x * HEATMAP_SIZE / WIDTH_PX), HEATMAP_SIZE - 1)
    ci = min(round(y * HEATMAP_SIZE / HEIGHT_PX), HEATMAP_SIZE - 1)
    idx = np.arange(HEATMAP_SIZE)
    return np.exp(-((idx[:, None] - ci) ** 2 + (idx[None, :] - cj) ** 2) / (2.0 * sigma ** 2))


def _template(sigma: float) -> np.ndarray:
    r = max(1, int(np.ceil(2.0 * sigma)))
    k = np.arange(-r, r + 1)
    return np.exp(-(k[:, None] ** 2 + k[None, :] ** 2) / (2.0 * sigma ** 2))


def confidence_map(frame, params: DetectorParams = DetectorParams()) -> np.ndarray:
    """56x56 map of (NCC + 1) / 2 weighted by local contrast.

    The weight ramps linearly from 0 at ``contrast_low`` to 1 at
    ``contrast_high`` local standard deviation, so flat or noise-only windows
    score 0 instead of whatever chance correlation they happen to have.
    """
    img = frame.intensities if isinstance(frame, UsFrame) else np.asarray(frame, dtype=float)
    small = img if img.shape == (HEATMAP_SIZE, HEATMAP_SIZE) else downsample(img)
    tpl = _template(params.template_sigma)
    r = tpl.shape[0] // 2
    n = tpl.size
    tz = tpl - tpl.mean()
    tnorm = np.sqrt(np.sum(tz ** 2))
    padded = np.pad(small, r, mode="reflect")
    num = fftconvolve(padded, tz[::-1, ::-1], mode="valid")
    mean = uniform_filter(padded, size=tpl.shape[0], mode="constant")[r:-r, r:-r]
    sq = uniform_filter(padded ** 2, size=tpl.shape[0], mode="constant")[r:-r, r:-r]
    var = np.clip(sq - mean ** 2, 0.0, None)
    std = np.sqrt(var)
    with np.errstate(divide="ignore", invalid="ignore"):
        ncc = num / (std * np.sqrt(n) * tnorm)
    ncc = np.where(np.isfinite(ncc), np.clip(ncc, -1.0, 1.0), 0.0)
    span = params.contrast_high - params.contrast_low
    weight = np.clip((std - params.contrast_low) / span, 0.0, 1.0)
    return weight * (ncc + 1.0) / 2.0


def _refine(heat: np.ndarray, ci: int, cj: int):
    i0, i1 = max(ci - 1, 0), min(ci + 2, HEATMAP_SIZE)
    j0, j1 = max(cj - 1, 0), min(cj + 2, HEATMAP_SIZE)
    patch = heat[i0:i1, j0:j1]
    w = patch - patch.min()
    total = w.sum()
    if total <= 0:
        return float(ci), float(cj)
    ii, jj = np.mgrid[i0:i1, j0:j1]
    return float((w * ii).sum() / total), float((w * jj).sum() / total)


def _half_max_run(profile: np.ndarray, i: int):
    """Bounds [lo, hi) of the contiguous run above half maximum that contains ``i``."""
    base = np.median(profile)
    half = base + 0.5 * (profile[i] - base)
    lo, hi = i, i + 1
    while lo > 0 and profile[lo - 1] > half:
        lo -= 1
    while hi < profile.size and profile[hi] > half:
        hi += 1
    return lo, hi, half


def _refine_pixels(img: np.ndarray, x: float, y: float, half_h: int = 16, iters: int = 2):
    """Sub-pixel location from full-resolution half-maximum centroids.

    Lateral: centroid of the contiguous above-half-maximum run of the
    smoothed column profile of a row band, so wide structures (the sacral
    plate) resolve to their centre. Axial: the same on the row profile
    restricted to that run.
    """
    h, w = img.shape
    for _ in range(iters):
        yi = int(np.clip(round(y), 0, h - 1))
        r0, r1 = max(yi - half_h, 0), min(yi + half_h + 1, h)
        cols = uniform_filter1d(img[r0:r1].mean(axis=0, dtype=float), 9, mode="nearest")
        xi = int(np.clip(round(x), 0, w - 1))
        # climb to the local maximum so the run is anchored on the peak
        xi = int(max(xi - 8, 0) + np.argmax(cols[max(xi - 8, 0):xi + 9]))
        lo, hi, half = _half_max_run(cols, xi)
        wts = cols[lo:hi] - half
        if wts.sum() > 0:
            x = float((wts * np.arange(lo, hi)).sum() / wts.sum())
        c0, c1 = max(lo, 0), max(hi, lo + 1)
        rows = uniform_filter1d(img[:, c0:c1].mean(axis=1, dtype=float), 5, mode="nearest")
        yi = int(max(yi - 8, 0) + np.argmax(rows[max(yi - 8, 0):yi + 9]))
        lo_r, hi_r, half_r = _half_max_run(rows, yi)
        wts = rows[lo_r:hi_r] - half_r
        if wts.sum() > 0:
            y = float((wts * np.arange(lo_r, hi_r)).sum() / wts.sum())
    return x, y


def detect(frame, template_sigma: float | None = None, threshold: float | None = None,
           params: DetectorParams = DetectorParams()) -> Detection | None:
    """Locate the spinous process; None when confidence falls below threshold."""
    if template_sigma is not None or threshold is not None:
        params = DetectorParams(
            template_sigma=params.template_sigma if template_sigma is None else template_sigma,
            threshold=params.threshold if threshold is None else threshold,
            contrast_low=params.contrast_low, contrast_high=params.contrast_high)
    if not 0.0 <= params.threshold <= 1.0:
        raise DomainError("threshold must lie in [0, 1]")
    img = frame.intensities if isinstance(frame, UsFrame) else np.asarray(frame, dtype=float)
    if img.shape != (HEIGHT_PX, WIDTH_PX):
        raise DomainError(f"expected a {HEIGHT_PX}x{WIDTH_PX} frame, got {img.shape}")
    if np.ptp(img) == 0.0:
        return None
    heat = confidence_map(img, params)
    ci, cj = np.unravel_index(int(np.argmax(heat)), heat.shape)
    conf = float(heat[ci, cj])
    if conf < params.threshold:
        return None
    fi, fj = _refine(heat, ci, cj)
    x, y = _refine_pixels(img, *cell_to_pixel(fi, fj))
    x = float(np.clip(x, 0.0, np.nextafter(WIDTH_PX, 0)))
    y = float(np.clip(y, 0.0, np.nextafter(HEIGHT_PX, 0)))
    return Detection(x, y, conf)


def _fwhm(profile: np.ndarray) -> float:
    peak = int(np.argmax(profile))
    half = profile[peak] / 2.0
    left = peak
    while left > 0 and profile[left - 1] > half:
        left -= 1
    right = peak
    while right < len(profile) - 1 and profile[right + 1] > half:
        right += 1
    # linear interpolation of the half-maximum crossings
    lx = left - 1 + (half - profile[left - 1]) / (profile[left] - profile[left - 1]) if left > 0 else 0.0
    rx = right + (profile[right] - half) / (profile[right] - profile[right + 1]) if right < len(profile) - 1 else len(profile) - 1.0
    return float(rx - lx)


def structure_features(frame, band_px: int = 12):
    """(depth_px, width_px, contrast) of the dominant bright structure."""
    img = frame.intensities if isinstance(frame, UsFrame) else np.asarray(frame, dtype=float)
    base = np.median(downsample(img))
    rows = img.mean(axis=1) - base
    depth = int(np.argmax(rows))
    lo, hi = max(depth - band_px, 0), min(depth + band_px + 1, img.shape[0])
    cols = uniform_filter(img[lo:hi].mean(axis=0) - base, size=9, mode="nearest")
    contrast = float(cols.max())
    if contrast <= 0:
        return float(depth), 0.0, 0.0
    return float(depth), _fwhm(cols), contrast


def classify_region(frame, params: ClassifierParams = ClassifierParams()) -> RegionClass:
    """Gaussian-kernel vote between per-region (depth, width) prototypes."""
    depth, width, contrast = structure_features(frame)
    if contrast < params.min_contrast:
        probs = np.full(len(REGIONS), 1.0 / len(REGIONS))
        return RegionClass(REGIONS[0], tuple(float(p) for p in probs), has_feature=False)
    proto = np.asarray(params.prototypes or DEFAULT_PROTOTYPES, dtype=float)
    d2 = ((proto[:, 0] - depth) / params.depth_scale) ** 2 + ((proto[:, 1] - width) / params.width_scale) ** 2
    logits = -0.5 * d2
    probs = np.exp(logits - logits.max())
    probs /= probs.sum()
    return RegionClass(REGIONS[int(np.argmax(probs))], tuple(float(p) for p in probs))


def pck_accuracy(predictions, targets, dist_threshold_px: float = 20.0) -> float:
    """Fraction of predictions within ``dist_threshold_px`` of their target.

    A missing prediction (None) counts as incorrect.
    """
    if len(predictions) != len(targets):
        raise DomainError("predictions and targets differ in length")
    if not predictions:
        raise DomainError("empty prediction list")
    d = _distances(predictions, targets)
    return float(np.mean(d <= dist_threshold_px))


def mean_distance_error(predictions, targets) -> float:
    """Mean Euclidean error in pixels over the predictions that are present."""
    if len(predictions) != len(targets):
        raise DomainError("predictions and targets differ in length")
    d = _distances(predictions, targets)
    d = d[np.isfinite(d)]
    if d.size == 0:
        raise DomainError("no predictions to score")
    return float(d.mean())


def _distances(predictions, targets) -> np.ndarray:
    nan = (np.nan, np.nan)
    p = np.array([nan if d is None else (d.x_px, d.y_px) if isinstance(d, Detection) else tuple(d)
                  for d in predictions], dtype=float).reshape(-1, 2)
    t = np.asarray(targets, dtype=float).reshape(-1, 2)
    d = np.hypot(p[:, 0] - t[:, 0], p[:, 1] - t[:, 1])
    return np.where(np.isnan(d), np.inf, d)


def multitask_loss(pred_hm, target_hm, pred_probs, target_class, C: float = 1500.0) -> float:
    """Cross-entropy on the region class plus ``C`` times heatmap MSE."""
    probs = np.asarray(pred_probs, dtype=float)
    idx = target_class.index if isinstance(target_class, Region) else int(target_class)
    ce = -np.log(max(probs[idx], 1e-12))
    mse = float(np.mean((np.asarray(pred_hm, dtype=float) - np.asarray(target_hm, dtype=float)) ** 2))
    return float(ce + C * mse)
