"""Content-addressed image store: ``store_root/<first-2-hex>/<id>.png``.

Writes are atomic (temp file + rename) and idempotent, so any number of
workers can store the same content concurrently and reruns leave bytes
untouched.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

from .errors import IoError
from .image import ImageBuffer
from .records import content_hash


class ContentStore:
    def __init__(self, root: Path | str):
        self.root = Path(root)

    def rel_path(self, sample_id: str) -> str:
        return f"{sample_id[:2]}/{sample_id}.png"

    def path_for(self, sample_id: str) -> Path:
        return self.root / self.rel_path(sample_id)

    def exists(self, sample_id: str) -> bool:
        return self.path_for(sample_id).is_file()

    def put_png(self, png_bytes: bytes) -> str:
        """Store encoded PNG bytes, returning the content id."""
        sample_id = content_hash(png_bytes)
        target = self.path_for(sample_id)
        if target.is_file():
            return sample_id
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=target.parent, suffix=".tmp")
            with os.fdopen(fd, "wb") as fh:
                fh.write(png_bytes)
            os.replace(tmp, target)
        except OSError as exc:
            raise IoError(f"cannot write {target}: {exc}") from exc
        return sample_id

    def put_image(self, image: ImageBuffer) -> str:
        return self.put_png(image.to_png_bytes())

    def get_bytes(self, sample_id: str) -> bytes:
        path = self.path_for(sample_id)
        try:
            return path.read_bytes()
        except OSError as exc:
            raise IoError(f"cannot read {path}: {exc}") from exc

    def get_image(self, sample_id: str) -> ImageBuffer:
        return ImageBuffer.from_png_bytes(self.get_bytes(sample_id))
