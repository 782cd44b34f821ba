"""Synthetic stream: class-prompted text-to-image bases plus seeded variations.

Generation is delegated to a diffusion service behind a small wire protocol
(``POST /v1/t2i`` and ``POST /v1/i2i`` with JSON bodies, PNG responses). The
bundled mock client implements the same interface offline and fully
deterministically: each class gets a distinct base hue, bases carry seeded
value noise, and variations re-noise the base with a small hue jitter, so
mock datasets are class-separable by construction.

Stage flow: n bases (one manifest per Table stage tag T2I), then k-1
variations per base (I2I, n*k records including the bases), then the restore
module's HR pass over all of it (T2I_Aug_HR).
"""

from __future__ import annotations

import base64
import hashlib
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests

from .errors import (
    InvalidInput,
    PartialFailure,
    ProtocolViolation,
    ServiceUnavailable,
)
from .image import ImageBuffer, box_resize, hsv_to_rgb, rotate_hue, to_uint8
from .manifest import DatasetManifest
from .parallel import map_records
from .records import SampleRecord, SyntheticI2I, SyntheticT2I, TIER_LR
from .restore import RestoreConfig, restore_dataset
from .rng import MASK64, Splitmix64, derive_seed, splitmix64, uniform_block
from .store import ContentStore
from .taxonomy import ClassTaxonomy

log = logging.getLogger(__name__)

T2I_SEED_TAG = "t2i"
I2I_SEED_TAG = "i2i"

MOCK_BASE_SATURATION = 0.6
MOCK_BASE_VALUE = 200.0 / 255.0
MOCK_T2I_NOISE = 32.0
MOCK_I2I_NOISE = 16.0
MOCK_I2I_HUE_JITTER = 5.0


@dataclass(frozen=True)
class PromptTemplate:
    template: str = "A realistic image of {CLS} in space"

    def __post_init__(self):
        if self.template.count("{CLS}") != 1:
            raise InvalidInput("prompt template must contain exactly one {CLS} placeholder")
        if not self.template.replace("{CLS}", "x").strip():
            raise InvalidInput("rendered prompt would be empty")

    def render(self, fine_class: str) -> str:
        return self.template.replace("{CLS}", fine_class)


def build_prompt(fine_class: str, template: PromptTemplate) -> str:
    return template.render(fine_class)


@dataclass(frozen=True)
class SynthConfig:
    per_class_count: int = 202
    variations_k: int = 5
    output_size: int = 256
    endpoint: str = "mock"
    global_seed: int = 0
    template: PromptTemplate = field(default_factory=PromptTemplate)

    def __post_init__(self):
        if self.per_class_count < 1:
            raise InvalidInput(f"per_class_count must be >= 1, got {self.per_class_count}")
        if self.variations_k < 1:
            raise InvalidInput(f"variations_k must be >= 1, got {self.variations_k}")
        if self.output_size < 64:
            raise InvalidInput(f"output_size must be >= 64, got {self.output_size}")

    def to_dict(self) -> dict:
        return {
            "per_class_count": self.per_class_count,
            "variations_k": self.variations_k,
            "output_size": self.output_size,
            "endpoint": self.endpoint,
            "global_seed": self.global_seed,
            "template": self.template.template,
        }


def _seed_from_bytes(seed: int, data: bytes) -> int:
    mixed = int.from_bytes(hashlib.sha256(data).digest()[:8], "big")
    return splitmix64((seed ^ mixed) & MASK64)


class MockDiffusionClient:
    """Deterministic offline stand-in for the diffusion service.

    Class hue is the class index times (360 / number of classes); unknown
    prompts fall back to a hue hashed from the prompt text.
    """

    def __init__(self, taxonomy: ClassTaxonomy, template: PromptTemplate | None = None):
        self.taxonomy = taxonomy
        self.template = template or PromptTemplate()

    def _hue_for_prompt(self, prompt: str) -> float:
        for i, cls in enumerate(self.taxonomy.fine_classes):
            if self.template.render(cls) == prompt:
                return i * 360.0 / len(self.taxonomy.fine_classes)
        digest = hashlib.sha256(prompt.encode("utf-8")).digest()
        return float(int.from_bytes(digest[:8], "big") % 360)

    def t2i(self, prompt: str, seed: int, width: int, height: int) -> ImageBuffer:
        hue = self._hue_for_prompt(prompt)
        base = hsv_to_rgb(np.array([hue / 360.0, MOCK_BASE_SATURATION, MOCK_BASE_VALUE])) * 255.0
        noise = uniform_block(seed, width * height, -MOCK_T2I_NOISE, MOCK_T2I_NOISE)
        arr = base[None, None, :] + noise.reshape(height, width)[:, :, None]
        return ImageBuffer.from_array(to_uint8(arr))

    def i2i(self, image: ImageBuffer, seed: int, width: int, height: int) -> ImageBuffer:
        stream_seed = _seed_from_bytes(seed, image.pixels)
        rng = Splitmix64(stream_seed)
        hue_delta = rng.uniform(-MOCK_I2I_HUE_JITTER, MOCK_I2I_HUE_JITTER)

        arr = image.to_array().astype(np.float64)
        if image.channels == 1:
            arr = np.repeat(arr, 3, axis=2)
        if (image.height, image.width) != (height, width):
            arr = box_resize(arr, height, width)
        arr = rotate_hue(arr, hue_delta)
        noise = uniform_block(stream_seed, width * height, -MOCK_I2I_NOISE, MOCK_I2I_NOISE)
        arr = arr + noise.reshape(height, width)[:, :, None]
        return ImageBuffer.from_array(to_uint8(arr))


class RemoteDiffusionClient:
    """HTTP client for the diffusion wire protocol."""

    def __init__(self, endpoint: str, timeout: float = 60.0, retries: int = 2):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries

    def _post(self, path: str, payload: dict) -> bytes:
        url = f"{self.endpoint}{path}"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = requests.post(url, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = exc
            else:
                if resp.status_code == 200:
                    return resp.content
                last_error = ServiceUnavailable(f"{url} answered {resp.status_code}")
            if attempt < self.retries:
                time.sleep(0.05 * (attempt + 1))
        raise ServiceUnavailable(f"{url} unreachable after {self.retries} retries: {last_error}")

    def t2i(self, prompt: str, seed: int, width: int, height: int) -> ImageBuffer:
        body = self._post(
            "/v1/t2i", {"prompt": prompt, "seed": seed, "width": width, "height": height}
        )
        return _decode_png(body)

    def i2i(self, image: ImageBuffer, seed: int, width: int, height: int) -> ImageBuffer:
        payload = {
            "image_b64": base64.b64encode(image.to_png_bytes()).decode("ascii"),
            "seed": seed,
            "width": width,
            "height": height,
        }
        return _decode_png(self._post("/v1/i2i", payload))


def _decode_png(body: bytes) -> ImageBuffer:
    try:
        return ImageBuffer.from_png_bytes(body)
    except Exception as exc:
        raise ProtocolViolation(f"service returned a non-image body: {exc}") from exc


def make_client(config: SynthConfig, taxonomy: ClassTaxonomy):
    if config.endpoint == "mock":
        return MockDiffusionClient(taxonomy, config.template)
    return RemoteDiffusionClient(config.endpoint)


def t2i_generate(client, prompt: str, seed: int, size: int) -> ImageBuffer:
    """Generate one size x size base image, verifying the dimension contract."""
    out = client.t2i(prompt, seed, size, size)
    if out.width != size or out.height != size:
        raise ProtocolViolation(f"t2i returned {out.width}x{out.height}, expected {size}x{size}")
    return out


def i2i_variation(client, base: ImageBuffer, variation_seed: int, size: int) -> ImageBuffer:
    """Generate one seeded variation of a base image at size x size."""
    out = client.i2i(base, variation_seed, size, size)
    if out.width != size or out.height != size:
        raise ProtocolViolation(f"i2i returned {out.width}x{out.height}, expected {size}x{size}")
    return out


def _base_snapshot(taxonomy: ClassTaxonomy, config: SynthConfig) -> dict:
    return {"taxonomy": taxonomy.to_dict(), "synth": config.to_dict()}


def generate_bases(
    taxonomy: ClassTaxonomy,
    config: SynthConfig,
    store_root: Path | str,
    workers: int = 1,
) -> DatasetManifest:
    """Per fine class, per_class_count prompted bases (stage T2I)."""
    store = ContentStore(store_root)
    client = make_client(config, taxonomy)

    jobs = [
        (cls, j) for cls in taxonomy.fine_classes for j in range(config.per_class_count)
    ]

    def run(job):
        cls, j = job
        seed = derive_base_seed(config.global_seed, cls, j)
        prompt = build_prompt(cls, config.template)
        image = t2i_generate(client, prompt, seed, config.output_size)
        new_id = store.put_image(image)
        return SampleRecord(
            id=new_id,
            fine_label=cls,
            tier=TIER_LR,
            provenance=SyntheticT2I(prompt=prompt, seed=seed),
            image_path=store.rel_path(new_id),
            variant_index=0,
        )

    records, failures = map_records(run, jobs, workers)
    if failures:
        failed = sorted(f"{cls}#{j}" for (cls, j), _ in failures)
        raise PartialFailure(
            f"t2i generation failed for {len(failed)} prompts (first: {failures[0][1]})", failed
        )
    return DatasetManifest(
        stage_tag="T2I", records=tuple(records), config_snapshot=_base_snapshot(taxonomy, config)
    )


def derive_base_seed(global_seed: int, fine_class: str, index: int) -> int:
    """Seed namespace '<class>#<index>' so adding a class never shifts others."""
    return derive_seed(global_seed, f"{fine_class}#{index}", T2I_SEED_TAG, 0)


def generate_variations(
    bases: DatasetManifest,
    taxonomy: ClassTaxonomy,
    config: SynthConfig,
    store_root: Path | str,
    workers: int = 1,
) -> DatasetManifest:
    """k-1 seeded variations per base; output holds bases + variations (stage I2I)."""
    store = ContentStore(store_root)
    client = make_client(config, taxonomy)

    jobs = [
        (rec, i) for rec in bases.records for i in range(1, config.variations_k)
    ]

    def run(job):
        rec, i = job
        seed = derive_seed(config.global_seed, rec.id, I2I_SEED_TAG, i)
        base_image = store.get_image(rec.id)
        image = i2i_variation(client, base_image, seed, config.output_size)
        new_id = store.put_image(image)
        return SampleRecord(
            id=new_id,
            fine_label=rec.fine_label,
            tier=TIER_LR,
            provenance=SyntheticI2I(variation_seed=seed, parent_id=rec.id),
            image_path=store.rel_path(new_id),
            variant_index=i,
        )

    variations, failures = map_records(run, jobs, workers)
    if failures:
        failed = sorted(f"{rec.id}:{i}" for (rec, i), _ in failures)
        raise PartialFailure(
            f"i2i generation failed for {len(failed)} variations (first: {failures[0][1]})",
            failed,
        )
    return DatasetManifest(
        stage_tag="I2I",
        records=tuple(bases.records) + tuple(variations),
        config_snapshot=_base_snapshot(taxonomy, config),
    )


def synth_dataset(
    taxonomy: ClassTaxonomy,
    config: SynthConfig,
    restore_config: RestoreConfig,
    store_root: Path | str,
    workers: int = 1,
) -> DatasetManifest:
    """Full synthetic stream: bases, variations, HR pass (stage T2I_Aug_HR).

    Output holds classes * per_class_count * k records, labels taken from the
    generating prompt's class.
    """
    bases = generate_bases(taxonomy, config, store_root, workers)
    with_variations = generate_variations(bases, taxonomy, config, store_root, workers)
    return restore_dataset(with_variations, restore_config, store_root, workers)
