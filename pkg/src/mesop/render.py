"""Flat orthographic rasterization of frames to PGM (P5) images.

Particles are filled discs; free particles render white (255), boundary
particles gray (128) on a black background.  For dim=3 the z axis is
dropped (orthographic front view).  Pixels are a pure function of the
frame, bounds and size.
"""

from __future__ import annotations

import numpy as np

from .frames import FrameRecord


def frame_bounds(record: FrameRecord, margin: float = 0.05) -> tuple[float, float, float, float]:
    """Bounding box of the frame (x0, y0, x1, y1) with a relative margin."""
    if record.count == 0:
        return (0.0, 0.0, 1.0, 1.0)
    xs = record.positions[:, 0]
    ys = record.positions[:, 1]
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    dx = max(x1 - x0, 1e-9)
    dy = max(y1 - y0, 1e-9)
    return (x0 - margin * dx, y0 - margin * dy, x1 + margin * dx, y1 + margin * dy)


def render_frame(
    record: FrameRecord,
    size: tuple[int, int] = (640, 480),
    bounds: tuple[float, float, float, float] | None = None,
    radius: float = 0.5,
) -> np.ndarray:
    """Rasterize to a (H, W) uint8 array; world +y runs up the image."""
    width, height = size
    if width <= 0 or height <= 0:
        raise ValueError(f"bad raster size {size}")
    img = np.zeros((height, width), dtype=np.uint8)
    if record.count == 0:
        return img
    if bounds is None:
        bounds = frame_bounds(record)
    x0, y0, x1, y1 = bounds
    scale = min(width / max(x1 - x0, 1e-9), height / max(y1 - y0, 1e-9))
    r_px = max(1, int(round(radius * scale)))
    ky, kx = np.mgrid[-r_px:r_px + 1, -r_px:r_px + 1]
    disc = (kx * kx + ky * ky) <= r_px * r_px

    cols = np.floor((record.positions[:, 0] - x0) * scale).astype(np.int64)
    rows = (height - 1) - np.floor((record.positions[:, 1] - y0) * scale).astype(np.int64)
    # boundary first so free particles draw over them
    for pass_kind, value in ((1, 128), (0, 255)):
        for k in np.nonzero(record.kinds == pass_kind)[0]:
            r, c = int(rows[k]), int(cols[k])
            rlo, rhi = r - r_px, r + r_px + 1
            clo, chi = c - r_px, c + r_px + 1
            if rhi <= 0 or clo >= width or chi <= 0 or rlo >= height:
                continue
            sub = disc[max(0, -rlo):disc.shape[0] - max(0, rhi - height),
                       max(0, -clo):disc.shape[1] - max(0, chi - width)]
            view = img[max(0, rlo):min(height, rhi), max(0, clo):min(width, chi)]
            view[sub] = value
    return img


def write_pgm(img: np.ndarray, path: str):
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode()
    with open(path, "wb") as fh:
        fh.write(header + np.ascontiguousarray(img, dtype=np.uint8).tobytes())


def read_pgm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError("not a P5 PGM file")
    parts = data.split(b"\n", 3)
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8, count=w * h).reshape(h, w).copy()
