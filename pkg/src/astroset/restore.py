"""Low-to-high resolution stage: native kernels or a remote SR service.

The remote protocol is ``POST {endpoint}/v1/upscale?scale=<int>`` with PNG
bytes in the body (``Content-Type: image/png``); the service must answer 200
with PNG bytes of exactly ``input dims * scale``. Native kernels provide the
offline path and the contract oracle for the remote one.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import (
    InvalidInput,
    PartialFailure,
    ProtocolViolation,
    ServiceUnavailable,
    StageError,
)
from .image import ImageBuffer
from .manifest import DatasetManifest
from .parallel import map_records
from .records import Restored, SampleRecord, TIER_HR
from .resample import KERNELS, upscale_native
from .store import ContentStore

log = logging.getLogger(__name__)

ALLOWED_SCALES = (2, 3, 4, 8)
RESTORE_METHODS = KERNELS + ("remote",)

# input stage -> output stage for the HR pass
_STAGE_MAP = {
    "Raw_LR": "Raw_HR",
    "T2I": "T2I_Aug_HR",
    "I2I": "T2I_Aug_HR",
}


@dataclass(frozen=True)
class RestoreConfig:
    scale: int = 4
    method: str = "bicubic"
    remote_endpoint: str | None = None
    timeout: float = 60.0
    retries: int = 2

    def __post_init__(self):
        if self.scale not in ALLOWED_SCALES:
            raise InvalidInput(f"scale must be one of {ALLOWED_SCALES}, got {self.scale}")
        if self.method not in RESTORE_METHODS:
            raise InvalidInput(f"method must be one of {RESTORE_METHODS}, got '{self.method}'")
        if self.method == "remote" and not self.remote_endpoint:
            raise InvalidInput("method 'remote' requires remote_endpoint")

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "method": self.method,
            "remote_endpoint": self.remote_endpoint,
            "timeout": self.timeout,
            "retries": self.retries,
        }


class RemoteSRClient:
    """HTTP client for the super-resolution wire protocol."""

    def __init__(self, endpoint: str, timeout: float = 60.0, retries: int = 2):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries

    def upscale(self, png_bytes: bytes, factor: int) -> bytes:
        url = f"{self.endpoint}/v1/upscale"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = requests.post(
                    url,
                    params={"scale": factor},
                    data=png_bytes,
                    headers={"Content-Type": "image/png"},
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_error = exc
            else:
                if resp.status_code == 200:
                    return resp.content
                last_error = ServiceUnavailable(f"{url} answered {resp.status_code}")
            if attempt < self.retries:
                time.sleep(0.05 * (attempt + 1))
        raise ServiceUnavailable(f"{url} unreachable after {self.retries} retries: {last_error}")


def upscale_remote(client: RemoteSRClient, image: ImageBuffer, factor: int) -> ImageBuffer:
    """Upscale through the remote service, verifying the dimension contract."""
    body = client.upscale(image.to_png_bytes(), factor)
    try:
        out = ImageBuffer.from_png_bytes(body)
    except Exception as exc:
        raise ProtocolViolation(f"service returned a non-image body: {exc}") from exc
    if out.width != image.width * factor or out.height != image.height * factor:
        raise ProtocolViolation(
            f"service returned {out.width}x{out.height}, expected "
            f"{image.width * factor}x{image.height * factor}"
        )
    return out


def restore_record(
    record: SampleRecord,
    config: RestoreConfig,
    store: ContentStore,
    client: RemoteSRClient | None = None,
) -> SampleRecord:
    image = store.get_image(record.id)
    if config.method == "remote":
        if client is None:
            client = RemoteSRClient(config.remote_endpoint, config.timeout, config.retries)
        restored = upscale_remote(client, image, config.scale)
    else:
        restored = upscale_native(image, config.scale, config.method)
    new_id = store.put_image(restored)
    return SampleRecord(
        id=new_id,
        fine_label=record.fine_label,
        tier=TIER_HR,
        provenance=Restored(method=config.method, scale=config.scale, parent_id=record.id),
        image_path=store.rel_path(new_id),
        variant_index=record.variant_index,
    )


def restore_dataset(
    manifest: DatasetManifest,
    config: RestoreConfig,
    store_root: Path | str,
    workers: int = 1,
) -> DatasetManifest:
    """Map every record through the HR pass; labels and count are preserved.

    If any sample still fails after retries the stage aborts with a report
    listing the failed ids: silently dropping samples would corrupt the
    cardinality laws every later stage relies on.
    """
    out_stage = _STAGE_MAP.get(manifest.stage_tag)
    if out_stage is None:
        raise StageError(
            f"restore expects stage in {sorted(_STAGE_MAP)}, got '{manifest.stage_tag}'"
        )
    store = ContentStore(store_root)
    client = None
    if config.method == "remote":
        client = RemoteSRClient(config.remote_endpoint, config.timeout, config.retries)

    results, failures = map_records(
        lambda rec: restore_record(rec, config, store, client), manifest.records, workers
    )
    if failures:
        failed_ids = sorted(rec.id for rec, _ in failures)
        first = failures[0][1]
        raise PartialFailure(
            f"restore failed for {len(failed_ids)} of {len(manifest)} records "
            f"(first error: {first})",
            failed_ids,
        )

    snapshot = dict(manifest.config_snapshot)
    snapshot["restore"] = config.to_dict()
    snapshot["source_stage"] = manifest.stage_tag
    return DatasetManifest(stage_tag=out_stage, records=tuple(results), config_snapshot=snapshot)
