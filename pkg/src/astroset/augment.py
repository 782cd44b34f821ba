"""Seeded classical augmentations: flips, colour jitter, and compositions.

A plan holds an ordered list of k-1 kinds; the augmented dataset contains
every input record unchanged plus one record per (input, kind), n*k in total,
with per-class counts scaling uniformly. Each augmented record's seed derives
from its parent's content id, so outputs are independent of worker schedule.

Colour jitter draws its four factors in a fixed order (brightness, contrast,
saturation, hue) from a splitmix64 stream and applies them in that same
order, clamping to [0, 255] after each step and rounding once at the end;
the published order is what makes independent scalar oracles reproduce it
exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ChannelError, InvalidInput, StageError
from .image import ImageBuffer, luma, rotate_hue, to_uint8
from .manifest import DatasetManifest
from .parallel import map_records
from .records import Augmented, SampleRecord, content_hash
from .rng import Splitmix64, derive_seed
from .store import ContentStore

log = logging.getLogger(__name__)

SEED_STAGE_TAG = "aug"

_STAGE_MAP = {
    "Raw_HR": "Raw_Aug_HR",
    "Raw_LR": "Raw_Aug_LR",
}


def _fmt(x: float) -> str:
    return f"{x:g}"


@dataclass(frozen=True)
class HorizontalFlip:
    def label(self) -> str:
        return "hflip"

    def to_dict(self) -> dict:
        return {"kind": "hflip"}


@dataclass(frozen=True)
class VerticalFlip:
    def label(self) -> str:
        return "vflip"

    def to_dict(self) -> dict:
        return {"kind": "vflip"}


@dataclass(frozen=True)
class ColorJitter:
    brightness_delta: float = 0.4
    contrast_delta: float = 0.4
    saturation_delta: float = 0.4
    hue_delta: float = 0.1

    def __post_init__(self):
        for name in ("brightness_delta", "contrast_delta", "saturation_delta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidInput(f"{name} must be in [0, 1], got {v}")
        if not 0.0 <= self.hue_delta <= 0.5:
            raise InvalidInput(f"hue_delta must be in [0, 0.5], got {self.hue_delta}")

    def label(self) -> str:
        return (
            f"jitter({_fmt(self.brightness_delta)},{_fmt(self.contrast_delta)},"
            f"{_fmt(self.saturation_delta)},{_fmt(self.hue_delta)})"
        )

    def to_dict(self) -> dict:
        return {
            "kind": "jitter",
            "brightness": self.brightness_delta,
            "contrast": self.contrast_delta,
            "saturation": self.saturation_delta,
            "hue": self.hue_delta,
        }


@dataclass(frozen=True)
class Compose:
    parts: tuple

    def __post_init__(self):
        if not self.parts:
            raise InvalidInput("compose list must be non-empty")
        if any(isinstance(p, Compose) for p in self.parts):
            raise InvalidInput("compose must not nest another compose")

    def label(self) -> str:
        return "compose(" + ",".join(p.label() for p in self.parts) + ")"

    def to_dict(self) -> dict:
        return {"kind": "compose", "parts": [p.to_dict() for p in self.parts]}


AugmentationKind = HorizontalFlip | VerticalFlip | ColorJitter | Compose


def kind_from_dict(d: dict) -> AugmentationKind:
    kind = d.get("kind")
    if kind == "hflip":
        return HorizontalFlip()
    if kind == "vflip":
        return VerticalFlip()
    if kind == "jitter":
        return ColorJitter(
            brightness_delta=float(d.get("brightness", 0.4)),
            contrast_delta=float(d.get("contrast", 0.4)),
            saturation_delta=float(d.get("saturation", 0.4)),
            hue_delta=float(d.get("hue", 0.1)),
        )
    if kind == "compose":
        return Compose(parts=tuple(kind_from_dict(p) for p in d.get("parts", [])))
    raise InvalidInput(f"unknown augmentation kind '{kind}'")


def default_kinds() -> tuple[AugmentationKind, ...]:
    """Default k-1 = 4 kinds in priority order, giving k = 5."""
    return (
        ColorJitter(),
        HorizontalFlip(),
        VerticalFlip(),
        Compose(parts=(HorizontalFlip(), ColorJitter())),
    )


@dataclass(frozen=True)
class AugmentationPlan:
    kinds: tuple[AugmentationKind, ...] = field(default_factory=default_kinds)
    global_seed: int = 0

    def __post_init__(self):
        if len(self.kinds) < 1:
            raise InvalidInput("plan needs at least one augmentation kind (k >= 2)")

    @property
    def k(self) -> int:
        return len(self.kinds) + 1

    def to_dict(self) -> dict:
        return {"kinds": [kd.to_dict() for kd in self.kinds], "global_seed": self.global_seed}

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentationPlan":
        return cls(
            kinds=tuple(kind_from_dict(p) for p in d["kinds"]),
            global_seed=int(d.get("global_seed", 0)),
        )


def hflip(image: ImageBuffer) -> ImageBuffer:
    """Mirror across the vertical axis."""
    return ImageBuffer.from_array(image.to_array()[:, ::-1, :].copy())


def vflip(image: ImageBuffer) -> ImageBuffer:
    """Mirror across the horizontal axis."""
    return ImageBuffer.from_array(image.to_array()[::-1, :, :].copy())


def _jitter_array(arr: np.ndarray, params: ColorJitter, rng: Splitmix64) -> np.ndarray:
    """Apply the four jitter steps to a float64 (H, W, 3) array in [0, 255]."""
    b = rng.uniform(1.0 - params.brightness_delta, 1.0 + params.brightness_delta)
    c = rng.uniform(1.0 - params.contrast_delta, 1.0 + params.contrast_delta)
    s = rng.uniform(1.0 - params.saturation_delta, 1.0 + params.saturation_delta)
    h = rng.uniform(-params.hue_delta, params.hue_delta)

    arr = np.clip(arr * b, 0.0, 255.0)
    mean_gray = luma(arr).mean()
    arr = np.clip(mean_gray + c * (arr - mean_gray), 0.0, 255.0)
    lum = luma(arr)[:, :, None]
    arr = np.clip(lum + s * (arr - lum), 0.0, 255.0)
    arr = np.clip(rotate_hue(arr, h * 360.0), 0.0, 255.0)
    return arr


def color_jitter(image: ImageBuffer, params: ColorJitter, seed: int) -> ImageBuffer:
    """Seeded brightness/contrast/saturation/hue jitter of a 3-channel image."""
    if image.channels != 3:
        raise ChannelError("color jitter requires a 3-channel image")
    arr = image.to_array().astype(np.float64)
    arr = _jitter_array(arr, params, Splitmix64(seed))
    return ImageBuffer.from_array(to_uint8(arr))


def apply_kind(image: ImageBuffer, kind: AugmentationKind, seed: int) -> ImageBuffer:
    """Apply one augmentation kind; compositions share a single draw stream."""
    if isinstance(kind, HorizontalFlip):
        return hflip(image)
    if isinstance(kind, VerticalFlip):
        return vflip(image)
    if isinstance(kind, ColorJitter):
        return color_jitter(image, kind, seed)
    if isinstance(kind, Compose):
        rng = Splitmix64(seed)
        out = image
        for part in kind.parts:
            if isinstance(part, HorizontalFlip):
                out = hflip(out)
            elif isinstance(part, VerticalFlip):
                out = vflip(out)
            elif isinstance(part, ColorJitter):
                if out.channels != 3:
                    raise ChannelError("color jitter requires a 3-channel image")
                arr = out.to_array().astype(np.float64)
                out = ImageBuffer.from_array(to_uint8(_jitter_array(arr, part, rng)))
        return out
    raise InvalidInput(f"unknown augmentation kind {kind!r}")


def augment_dataset(
    manifest: DatasetManifest,
    plan: AugmentationPlan,
    store_root: Path | str,
    workers: int = 1,
) -> DatasetManifest:
    """Expand a manifest to n*k records: originals plus one record per kind.

    A degenerate augmentation can reproduce its parent's exact bytes (e.g.
    flipping a symmetric image); such records are kept so the n*k count law
    holds, and the duplicate ids are flagged in the stage snapshot and by
    ``verify``.
    """
    out_stage = _STAGE_MAP.get(manifest.stage_tag)
    if out_stage is None:
        raise StageError(
            f"augment expects stage in {sorted(_STAGE_MAP)}, got '{manifest.stage_tag}'"
        )
    store = ContentStore(store_root)

    jobs = [(rec, i, kind) for rec in manifest.records for i, kind in enumerate(plan.kinds, 1)]

    def run(job):
        rec, i, kind = job
        seed = derive_seed(plan.global_seed, rec.id, SEED_STAGE_TAG, i)
        image = store.get_image(rec.id)
        out = apply_kind(image, kind, seed)
        new_id = store.put_image(out)
        return SampleRecord(
            id=new_id,
            fine_label=rec.fine_label,
            tier=rec.tier,
            provenance=Augmented(kind=kind.label(), seed=seed, parent_id=rec.id),
            image_path=store.rel_path(new_id),
            variant_index=i,
        )

    augmented, failures = map_records(run, jobs, workers)
    if failures:
        raise failures[0][1]

    records = tuple(manifest.records) + tuple(augmented)
    ids = [r.id for r in records]
    collisions = len(ids) - len(set(ids))
    if collisions:
        log.warning("augment produced %d duplicate-id records (degenerate transforms)", collisions)

    snapshot = dict(manifest.config_snapshot)
    snapshot["augment"] = plan.to_dict()
    snapshot["augment"]["collisions"] = collisions
    snapshot["source_stage"] = manifest.stage_tag
    return DatasetManifest(stage_tag=out_stage, records=records, config_snapshot=snapshot)


def expand_virtual(manifest: DatasetManifest, plan: AugmentationPlan) -> DatasetManifest:
    """Record-level expansion without pixel work, for count accounting.

    Produces the same record structure as :func:`augment_dataset` but with
    ids derived from the parent id and kind label instead of image content;
    used by ``--dry-run`` style accounting at full corpus scale. Virtual
    manifests are marked in their snapshot and cannot pass ``verify``.
    """
    out_stage = _STAGE_MAP.get(manifest.stage_tag)
    if out_stage is None:
        raise StageError(
            f"augment expects stage in {sorted(_STAGE_MAP)}, got '{manifest.stage_tag}'"
        )
    augmented = []
    for rec in manifest.records:
        for i, kind in enumerate(plan.kinds, 1):
            seed = derive_seed(plan.global_seed, rec.id, SEED_STAGE_TAG, i)
            new_id = content_hash(f"virtual:{rec.id}:{kind.label()}:{i}".encode())
            augmented.append(
                SampleRecord(
                    id=new_id,
                    fine_label=rec.fine_label,
                    tier=rec.tier,
                    provenance=Augmented(kind=kind.label(), seed=seed, parent_id=rec.id),
                    image_path=f"{new_id[:2]}/{new_id}.png",
                    variant_index=i,
                )
            )
    snapshot = dict(manifest.config_snapshot)
    snapshot["augment"] = plan.to_dict()
    snapshot["augment"]["virtual"] = True
    snapshot["source_stage"] = manifest.stage_tag
    return DatasetManifest(
        stage_tag=out_stage,
        records=tuple(manifest.records) + tuple(augmented),
        config_snapshot=snapshot,
    )
