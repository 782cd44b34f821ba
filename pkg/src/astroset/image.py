"""Raster image values and the pixel-level helpers shared by all stages.

An :class:`ImageBuffer` is an immutable, 8-bit, row-major, channel-interleaved
pixel block with explicit dimensions. All arithmetic on pixels happens in
float64 and is rounded half-away-from-zero exactly once at the end of each
operation, so independently written oracles can reproduce results bit for bit.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ChannelError, InvalidInput

# ITU-R BT.601 luma weights, fixed for cross-implementation reproducibility.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class ImageBuffer:
    """Decoded raster pixels: 8 bits per channel, 1 or 3 channels."""

    width: int
    height: int
    channels: int
    pixels: bytes

    BIT_DEPTH = 8

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidInput(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        if self.channels not in (1, 3):
            raise ChannelError(f"channels must be 1 or 3, got {self.channels}")
        expected = self.width * self.height * self.channels
        if len(self.pixels) != expected:
            raise InvalidInput(
                f"pixel buffer length {len(self.pixels)} != width*height*channels {expected}"
            )

    @property
    def min_side(self) -> int:
        return min(self.width, self.height)

    def to_array(self) -> np.ndarray:
        """(height, width, channels) uint8 view of the pixels."""
        arr = np.frombuffer(self.pixels, dtype=np.uint8)
        return arr.reshape(self.height, self.width, self.channels)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ImageBuffer":
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.dtype != np.uint8:
            raise InvalidInput(f"expected uint8 array, got {arr.dtype}")
        h, w, c = arr.shape
        return cls(width=w, height=h, channels=c, pixels=arr.tobytes())

    def to_png_bytes(self) -> bytes:
        mode = "L" if self.channels == 1 else "RGB"
        arr = self.to_array()
        if self.channels == 1:
            arr = arr[:, :, 0]
        img = Image.fromarray(arr, mode=mode)
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()

    @classmethod
    def from_png_bytes(cls, data: bytes) -> "ImageBuffer":
        img = Image.open(io.BytesIO(data))
        return cls.from_pil(img)

    @classmethod
    def from_pil(cls, img: Image.Image) -> "ImageBuffer":
        """Decode a PIL image, normalising exotic modes to L or RGB."""
        if img.mode in ("L",):
            pass
        elif img.mode in ("1", "I", "I;16", "F", "LA"):
            img = img.convert("L")
        elif img.mode != "RGB":
            img = img.convert("RGB")
        return cls.from_array(np.asarray(img))


def round_half_away(values: np.ndarray) -> np.ndarray:
    """Round half away from zero; pixel values are non-negative so this is
    floor(x + 0.5)."""
    return np.floor(values + 0.5)


def to_uint8(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255], round half away from zero, cast to uint8."""
    return round_half_away(np.clip(values, 0.0, 255.0)).astype(np.uint8)


def luma(arr: np.ndarray) -> np.ndarray:
    """BT.601 luma of an (H, W, C) float or uint8 array, shape (H, W)."""
    a = arr.astype(np.float64)
    if a.ndim == 3 and a.shape[2] == 3:
        r, g, b = LUMA_WEIGHTS
        return r * a[:, :, 0] + g * a[:, :, 1] + b * a[:, :, 2]
    if a.ndim == 3:
        return a[:, :, 0]
    return a


def _overlap_weights(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) matrix of exact fractional box-overlap weights.

    Output cell i covers [i*n_in/n_out, (i+1)*n_in/n_out); each row sums to 1.
    Works for both down- and upsampling.
    """
    weights = np.zeros((n_out, n_in), dtype=np.float64)
    step = n_in / n_out
    for i in range(n_out):
        start = i * step
        end = start + step
        p0 = int(np.floor(start))
        p1 = min(n_in, int(np.ceil(end)))
        for p in range(p0, p1):
            cover = min(end, p + 1) - max(start, p)
            if cover > 0:
                weights[i, p] = cover
        weights[i] /= step
    return weights


def box_resize(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Area-weighted box resize of an (H, W) or (H, W, C) float array."""
    a = arr.astype(np.float64)
    squeeze = a.ndim == 2
    if squeeze:
        a = a[:, :, None]
    wr = _overlap_weights(a.shape[0], out_h)
    wc = _overlap_weights(a.shape[1], out_w)
    out = np.einsum("ij,jkc,lk->ilc", wr, a, wc)
    return out[:, :, 0] if squeeze else out


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Vectorised RGB -> HSV on float arrays in [0, 1]; h, s, v all in [0, 1]."""
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = np.maximum(np.maximum(r, g), b)
    minc = np.minimum(np.minimum(r, g), b)
    v = maxc
    delta = maxc - minc
    s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)

    safe = np.where(delta > 0, delta, 1.0)
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    h = np.where(r == maxc, bc - gc, np.where(g == maxc, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(delta > 0, (h / 6.0) % 1.0, 0.0)
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    """Vectorised HSV -> RGB inverse of :func:`rgb_to_hsv`."""
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(np.int64) % 6

    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def rotate_hue(arr: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate the hue channel of an (H, W, 3) float array (0..255 scale)."""
    hsv = rgb_to_hsv(np.clip(arr, 0.0, 255.0) / 255.0)
    hsv[..., 0] = (hsv[..., 0] + degrees / 360.0) % 1.0
    return hsv_to_rgb(hsv) * 255.0
