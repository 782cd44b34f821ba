"""Native resampling kernels and the box-average degradation operator.

Upscaling uses standard separable kernels with pixel-centre coordinate
mapping ``src = (dst + 0.5) / factor - 0.5`` and edge-clamp boundary
handling. Weights are normalised per output phase so every kernel is an
exact partition of unity (constant images are fixed points). All arithmetic
stays in float64 across both passes; clamping to [0, 255] and
half-away-from-zero rounding happen once at the end.

Kernel parameters are fixed: bicubic coefficient a = -0.5, lanczos window
a = 3.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError, InvalidInput
from .image import ImageBuffer, round_half_away

KERNELS = ("nearest", "bilinear", "bicubic", "lanczos3")


def degrade(image: ImageBuffer, factor: int) -> ImageBuffer:
    """Non-overlapping factor x factor box average per channel.

    The inverse-direction oracle for upscale quality checks; dimensions must
    be divisible by the factor.
    """
    if factor < 1:
        raise InvalidInput(f"degrade factor must be >= 1, got {factor}")
    if image.width % factor or image.height % factor:
        raise DimensionError(
            f"dimensions {image.width}x{image.height} not divisible by factor {factor}"
        )
    arr = image.to_array().astype(np.float64)
    h, w, c = arr.shape
    blocks = arr.reshape(h // factor, factor, w // factor, factor, c)
    means = blocks.mean(axis=(1, 3))
    return ImageBuffer.from_array(round_half_away(means).astype(np.uint8))


def _kernel_bilinear(t: float) -> float:
    t = abs(t)
    return 1.0 - t if t < 1.0 else 0.0


def _kernel_bicubic(t: float, a: float = -0.5) -> float:
    t = abs(t)
    if t <= 1.0:
        return (a + 2.0) * t**3 - (a + 3.0) * t**2 + 1.0
    if t < 2.0:
        return a * t**3 - 5.0 * a * t**2 + 8.0 * a * t - 4.0 * a
    return 0.0


def _kernel_lanczos3(t: float) -> float:
    if t == 0.0:
        return 1.0
    if abs(t) >= 3.0:
        return 0.0
    x = math.pi * t
    return 3.0 * math.sin(x) * math.sin(x / 3.0) / (x * x)


_KERNEL_FUNCS = {
    "bilinear": (_kernel_bilinear, 1),
    "bicubic": (_kernel_bicubic, 2),
    "lanczos3": (_kernel_lanczos3, 3),
}


def _weight_matrix(n_in: int, factor: int, kernel: str) -> np.ndarray:
    """(n_in * factor, n_in) row-normalised resampling weights, edge-clamped."""
    n_out = n_in * factor
    weights = np.zeros((n_out, n_in), dtype=np.float64)
    if kernel == "nearest":
        for i in range(n_out):
            weights[i, i // factor] = 1.0
        return weights

    func, support = _KERNEL_FUNCS[kernel]
    for i in range(n_out):
        center = (i + 0.5) / factor - 0.5
        lo = int(math.floor(center)) - support + 1
        for tap in range(lo, lo + 2 * support):
            w = func(center - tap)
            if w != 0.0:
                weights[i, min(max(tap, 0), n_in - 1)] += w
        weights[i] /= weights[i].sum()
    return weights


def upscale_native(image: ImageBuffer, factor: int, kernel: str) -> ImageBuffer:
    """Upscale by an integer factor with the named kernel."""
    if factor < 2:
        raise InvalidInput(f"upscale factor must be >= 2, got {factor}")
    if kernel not in KERNELS:
        raise InvalidInput(f"unknown kernel '{kernel}' (expected one of {KERNELS})")
    arr = image.to_array().astype(np.float64)
    wr = _weight_matrix(image.height, factor, kernel)
    wc = _weight_matrix(image.width, factor, kernel)
    out = np.einsum("ij,jkc,lk->ilc", wr, arr, wc)
    out = round_half_away(np.clip(out, 0.0, 255.0)).astype(np.uint8)
    return ImageBuffer.from_array(out)
