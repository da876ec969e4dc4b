"""Image geometry and synthetic B-mode frames."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phantom import PhantomModel, Region, vertebra_at
from .contact import penetration

WIDTH_PX = 640
HEIGHT_PX = 480
APERTURE_M = 0.080
DEPTH_M = 0.060
METERS_PER_PX = APERTURE_M / WIDTH_PX
MM_PER_PX = 80.0 / WIDTH_PX  # 0.125, exact in binary
CENTER_X = WIDTH_PX / 2


@dataclass(frozen=True)
class ImageGeometry:
    width_px: int = WIDTH_PX
    height_px: int = HEIGHT_PX
    aperture: float = APERTURE_M
    depth: float = DEPTH_M

    @property
    def meters_per_px(self) -> float:
        return self.aperture / self.width_px


@dataclass(frozen=True)
class RenderParams:
    speckle_sigma: float = 0.3
    floor_noise: float = 0.02
    background: float = 0.15
    peak: float = 0.9
    blob_sigma_x: float = 12.0
    blob_sigma_y: float = 6.0
    sacrum_width: float = 160.0
    # mean intensity scale for frames taken without skin contact
    noncontact_gain: float = 0.3


@dataclass
class UsFrame:
    intensities: np.ndarray  # (HEIGHT_PX, WIDTH_PX), values in [0, 1]
    t: float = 0.0
    pose: object = None
    frame_id: int = 0
    feature_px: tuple | None = None  # true feature location, simulator-side only


def pixels_to_meters(dx_px):
    return dx_px * APERTURE_M / WIDTH_PX


def world_to_image(pose, p):
    """Project world point ``p`` into image pixel coordinates.

    Columns run along Init x, which is opposite to the TCP x axis; that is
    what makes the lateral servo ``v_x = -K * dx`` converge. Rows count depth
    along the probe axis from the probe face. The elevational component is
    dropped.
    """
    x_axis, _, z_axis = pose.axes()
    rel = np.asarray(p, dtype=float) - pose.position
    lateral = -rel @ x_axis
    depth_below = rel @ z_axis
    return CENTER_X + lateral / METERS_PER_PX, depth_below / METERS_PER_PX


def image_to_world(pose, x_px, y_px):
    """Inverse of :func:`world_to_image` on the image plane. Accepts arrays."""
    x_axis, _, z_axis = pose.axes()
    lateral = (np.asarray(x_px, dtype=float) - CENTER_X) * METERS_PER_PX
    depth_below = np.asarray(y_px, dtype=float) * METERS_PER_PX
    return (pose.position
            - np.multiply.outer(lateral, x_axis)
            + np.multiply.outer(depth_below, z_axis))


_COLS = np.arange(WIDTH_PX, dtype=float)
_ROWS = np.arange(HEIGHT_PX, dtype=float)


def feature_image(phantom: PhantomModel, pose, params: RenderParams = RenderParams()):
    """Noise-free intensity image, plus the pixel location of the feature (or None)."""
    in_contact = penetration(phantom, pose) > 0.0
    base = params.background * (1.0 if in_contact else params.noncontact_gain)
    img = np.full((HEIGHT_PX, WIDTH_PX), base)
    if not in_contact or not 0.0 <= pose.y <= phantom.scan_span:
        return img, None
    hit = vertebra_at(phantom, pose.y)
    if hit is None:
        return img, None
    region, sp = hit
    cx, cy = world_to_image(pose, sp)
    sx = params.blob_sigma_x
    if region is Region.SACRUM:
        sx = params.sacrum_width / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    gx = np.exp(-0.5 * ((_COLS - cx) / sx) ** 2)
    gy = np.exp(-0.5 * ((_ROWS - cy) / params.blob_sigma_y) ** 2)
    blob = np.outer(gy, gx)
    img = base + (params.peak - base) * blob
    return img, (float(cx), float(cy))


def render_frame(phantom: PhantomModel, pose, rng: np.random.Generator,
                 params: RenderParams = RenderParams(), t: float = 0.0,
                 frame_id: int = 0) -> UsFrame:
    clean, feature = feature_image(phantom, pose, params)
    img = clean.astype(np.float32)
    if params.speckle_sigma > 0:
        noise = rng.standard_normal(img.shape, dtype=np.float32)
        noise *= params.speckle_sigma
        noise += 1.0
        img *= noise
    if params.floor_noise > 0:
        noise = rng.standard_normal(img.shape, dtype=np.float32)
        noise *= params.floor_noise
        img += noise
    np.clip(img, 0.0, 1.0, out=img)
    return UsFrame(intensities=img, t=t, pose=pose, frame_id=frame_id, feature_px=feature)


def write_pgm(path, image) -> None:
    """Write a [0, 1] image as binary 8-bit PGM (P5)."""
    data = np.clip(np.rint(np.asarray(image, dtype=float) * 255.0), 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes(order="C"))


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    if tokens[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = (int(t) for t in tokens[1:])
    data = np.frombuffer(raw[pos + 1:pos + 1 + w * h], dtype=np.uint8).reshape(h, w)
    return data.astype(float) / maxval
