"""Quality and distribution statistics.

PSNR and MS-SSIM follow the standard published formulations with every
constant pinned (11x11 Gaussian window sigma 1.5, C1=(0.01*255)^2,
C2=(0.03*255)^2, scale weights 0.0448/0.2856/0.3001/0.2363/0.1333), because
the comparison targets are independent brute-force oracles. MSE of zero maps
to the documented 100 dB cap so identical images stay finite in reports.

Distribution statistics: per-class pixel standard deviation (population,
streamed in float64 in id order so results are run-to-run identical), exact
per-class counts with an expansion ratio against а baseline manifest, and a
centroid-based separation ratio that serves as a scalar proxy for
feature-space class separability.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, InvalidInput, TooSmall
from .image import ImageBuffer, box_resize
from .manifest import DatasetManifest
from .store import ContentStore

log = loggingotallogger = logging.getLogger(__name__)

PSNR_CAP_DB = 100.0
MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
MS_SSIM_WINDOW = 11
MS_SSIM_SIGMA = 1.5
MS_SSIM_C1 = (0.01 * 255.0) ** 2
MS_SSIM_C2 = (0.03 * 255.0) ** 2
SEPARATION_CAP = 1e6


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """Peak signal-to-noise ratio in dB over all channels (identical -> 100.0)."""
    if (a.width, a.height, a.channels) != (b.width, b.height, b.channels):
        raise DimensionError(
            f"psnr needs identical dims/channels, got {a.width}x{a.height}x{a.channels} "
            f"vs {b.width}x{b.height}x{b.channels}"
        )
    xa = a.to_array().astype(np.float64)
    xb = b.to_array().astype(np.float64)
    mse = float(np.mean((xa - xb) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return 10.0 * math.log10(255.0**2 / mse)


def _gaussian_window(size: int = MS_SSIM_WINDOW, sigma: float = MS_SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    x = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    return g / g.sum()


def _filter_valid(plane: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Separable 'valid' convolution with a symmetric 1-D window."""
    rows = np.lib.stride_tricks.sliding_window_view(plane, window.size, axis=0)
    rows = np.tensordot(rows, window, axes=([2], [0]))
    cols = np.lib.stride_tricks.sliding_window_view(rows, window.size, axis=1)
    return np.tensordot(cols, window, axes=([2], [0]))


def _downsample2(plane: np.ndarray) -> np.ndarray:
    """Dyadic low-pass: 2x2 box average, edge-replicating odd dimensions."""
    h, w = plane.shape
    if h % 2:
        plane = np.vstack([plane, plane[-1:, :]])
    if w % 2:
        plane = np.hstack([plane, plane[:, -1:]])
    h, w = plane.shape
    return plane.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def ms_ssim_scales(min_side: int) -> int:
    """Number of reachable scales (dyadic halving, >= 11 px at every scale)."""
    side = min_side
    scales = 0
    while scales < len(MS_SSIM_WEIGHTS) and side >= MS_SSIM_WINDOW:
        scales += 1
        side = (side + 1) // 2
    return scales


def ms_ssim(a: ImageBuffer, b: ImageBuffer) -> float:
    """Multi-scale structural similarity in [0, 1], channels averaged.

    Images narrower than 176 px cannot reach all five scales; the unreachable
    scales are dropped and the remaining weights renormalised to sum 1 (the
    report layer records when this reduced mode was used).
    """
    if (a.width, a.height, a.channels) != (b.width, b.height, b.channels):
        raise DimensionError(
            f"ms_ssim needs identical dims/channels, got {a.width}x{a.height}x{a.channels} "
            f"vs {b.width}x{b.height}x{b.channels}"
        )
    if a.min_side < MS_SSIM_WINDOW:
        raise TooSmall(f"ms_ssim needs min side >= {MS_SSIM_WINDOW}, got {a.min_side}")

    scales = ms_ssim_scales(a.min_side)
    weights = np.array(MS_SSIM_WEIGHTS[:scales], dtype=np.float64)
    weights /= weights.sum()
    window = _gaussian_window()

    xa = a.to_array().astype(np.float64)
    xb = b.to_array().astype(np.float64)

    per_channel = []
    for ch in range(a.channels):
        x, y = xa[:, :, ch], xb[:, :, ch]
        score = 1.0
        for j in range(scales):
            mu_x = _filter_valid(x, window)
            mu_y = _filter_valid(y, window)
            sigma_x = _filter_valid(x * x, window) - mu_x**2
            sigma_y = _filter_valid(y * y, window) - mu_y**2
            sigma_xy = _filter_valid(x * y, window) - mu_x * mu_y

            cs = np.mean((2.0 * sigma_xy + MS_SSIM_C2) / (sigma_x + sigma_y + MS_SSIM_C2))
            cs = max(cs, 0.0)
            if j == scales - 1:
                lum = np.mean(
                    (2.0 * mu_x * mu_y + MS_SSIM_C1) / (mu_x**2 + mu_y**2 + MS_SSIM_C1)
                )
                score *= max(lum, 0.0) ** weights[j]
            score *= cs ** weights[j]
            if j < scales - 1:
                x = _downsample2(x)
                y = _downsample2(y)
        per_channel.append(score)
    return float(np.mean(per_channel))


def class_pixel_stddev(manifest: DatasetManifest, store_root: Path | str) -> dict[str, float]:
    """Population standard deviation of pixel values, per fine class.

    Streamed as count/sum/sum-of-squares in float64, accumulated in id order.
    """
    store = ContentStore(store_root)
    acc: dict[str, list[float]] = {}
    for record in manifest.records:
        arr = store.get_image(record.id).to_array().astype(np.float64)
        bucket = acc.setdefault(record.fine_label, [0.0, 0.0, 0.0])
        bucket[0] += arr.size
        bucket[1] += float(arr.sum())
        bucket[2] += float((arr * arr).sum())
    out = {}
    for cls, (count, total, total_sq) in acc.items():
        mean = total / count
        out[cls] = math.sqrt(max(total_sq / count - mean * mean, 0.0))
    return out


@dataclass
class DistributionReport:
    stage_tag: str
    total: int
    per_class: dict[str, int]
    per_provenance: dict[str, int]
    ratio: float | None = None
    per_class_ratio: dict[str, float] = field(default_factory=dict)


def class_distribution(
    manifest: DatasetManifest, baseline: DatasetManifest | None = None
) -> DistributionReport:
    """Exact per-class / per-provenance counts, plus expansion vs a baseline."""
    per_class: dict[str, int] = {}
    per_prov: dict[str, int] = {}
    for record in manifest.records:
        per_class[record.fine_label] = per_class.get(record.fine_label, 0) + 1
        per_prov[record.provenance.type] = per_prov.get(record.provenance.type, 0) + 1

    report = DistributionReport(
        stage_tag=manifest.stage_tag,
        total=len(manifest),
        per_class=per_class,
        per_provenance=per_prov,
    )
    if baseline is not None and len(baseline) > 0:
        report.ratio = len(manifest) / len(baseline)
        base_counts = baseline.label_histogram()
        for cls, count in per_class.items():
            base = base_counts.get(cls)
            if base:
                report.per_class_ratio[cls] = count / base
    return report


def embed_image(image: ImageBuffer) -> np.ndarray:
    """8x8 per-channel box-averaged means, flattened (grayscale replicated to 3)."""
    arr = image.to_array().astype(np.float64)
    if arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    return box_resize(arr, 8, 8).reshape(-1)


def separation_ratio(manifest: DatasetManifest, store_root: Path | str) -> float:
    """Inter-centroid distance over within-class spread; larger = more separable.

    Degenerate cases: all embeddings identical -> 0.0 with a warning; zero
    within-class spread with distinct centroids -> the 1e6 cap.
    """
    store = ContentStore(store_root)
    by_class: dict[str, list[np.ndarray]] = {}
    for record in manifest.records:
        by_class.setdefault(record.fine_label, []).append(
            embed_image(store.get_image(record.id))
        )
    eligible = {cls: vecs for cls, vecs in by_class.items() if len(vecs) >= 2}
    if len(eligible) < 2:
        raise InvalidInput("separation_ratio needs >= 2 classes with >= 2 samples each")

    centroids = {cls: np.mean(vecs, axis=0) for cls, vecs in eligible.items()}
    names = sorted(centroids)
    inter = [
        float(np.linalg.norm(centroids[a] - centroids[b]))
        for i, a in enumerate(names)
        for b in names[i + 1 :]
    ]
    intra = [
        float(np.linalg.norm(vec - centroids[cls]))
        for cls in names
        for vec in eligible[cls]
    ]
    mean_inter = float(np.mean(inter))
    mean_intra = float(np.mean(intra))
    if mean_intra == 0.0:
        if mean_inter == 0.0:
            log.warning("separation_ratio degenerate: all embeddings identical")
            return 0.0
        log.warning("separation_ratio: zero within-class spread, returning cap")
        return SEPARATION_CAP
    return mean_inter / mean_intra
