"""Dataset manifests: the durable, id-sorted record of each pipeline stage.

File format: JSON lines, UTF-8, LF endings. The first line is a header object
``{stage_tag, config_snapshot, created_at, record_count}``; each following
line is one sample record. Records are sorted by id (with the canonical
provenance string as tiebreaker), so manifest bytes are independent of
production order and worker count.

Timestamps honour the ``SOURCE_DATE_EPOCH`` convention (default epoch 0) so
reruns of the same configuration produce byte-identical files.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import InvalidInput, IoError
from .records import SampleRecord, content_hash, parent_of
from .store import ContentStore
from .taxonomy import ClassTaxonomy

STAGE_TAGS = (
    "Raw_LR",
    "Raw_Aug_LR",
    "Raw_HR",
    "Raw_Aug_HR",
    "T2I",
    "I2I",
    "T2I_Aug_HR",
    "Combined",
)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def default_created_at() -> str:
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _record_sort_key(record: SampleRecord) -> tuple[str, str]:
    return (record.id, canonical_json(record.to_dict()))


@dataclass(frozen=True)
class DatasetManifest:
    stage_tag: str
    records: tuple[SampleRecord, ...]
    config_snapshot: dict
    created_at: str = field(default_factory=default_created_at)

    def __post_init__(self):
        if self.stage_tag not in STAGE_TAGS:
            raise InvalidInput(f"unknown stage tag '{self.stage_tag}'")
        ordered = tuple(sorted(self.records, key=_record_sort_key))
        object.__setattr__(self, "records", ordered)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def ids(self) -> set[str]:
        return {r.id for r in self.records}

    def by_id(self) -> dict[str, SampleRecord]:
        return {r.id: r for r in self.records}

    def label_histogram(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.records:
            counts[r.fine_label] = counts.get(r.fine_label, 0) + 1
        return counts

    def taxonomy(self) -> ClassTaxonomy:
        data = self.config_snapshot.get("taxonomy")
        if data is None:
            return ClassTaxonomy()
        return ClassTaxonomy.from_dict(data)

    def to_lines(self) -> str:
        header = {
            "stage_tag": self.stage_tag,
            "config_snapshot": self.config_snapshot,
            "created_at": self.created_at,
            "record_count": len(self.records),
        }
        lines = [canonical_json(header)]
        lines.extend(canonical_json(r.to_dict()) for r in self.records)
        return "\n".join(lines) + "\n"

    def write(self, path: Path | str) -> None:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(self.to_lines().encode("utf-8"))
        except OSError as exc:
            raise IoError(f"cannot write manifest {path}: {exc}") from exc

    @classmethod
    def read(cls, path: Path | str) -> "DatasetManifest":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot read manifest {path}: {exc}") from exc
        lines = [ln for ln in text.split("\n") if ln]
        if not lines:
            raise InvalidInput(f"manifest {path} is empty")
        header = json.loads(lines[0])
        records = tuple(SampleRecord.from_dict(json.loads(ln)) for ln in lines[1:])
        if header.get("record_count") != len(records):
            raise InvalidInput(
                f"manifest {path}: header record_count {header.get('record_count')} "
                f"!= {len(records)} records"
            )
        return cls(
            stage_tag=header["stage_tag"],
            records=records,
            config_snapshot=header["config_snapshot"],
            created_at=header["created_at"],
        )


@dataclass
class Violation:
    record_id: str
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.record_id}: {self.detail}"


@dataclass
class ValidationReport:
    checked: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations


def validate_manifest(
    manifest: DatasetManifest,
    store_root: Path | str,
    taxonomy: ClassTaxonomy | None = None,
) -> ValidationReport:
    """Check id integrity, file existence, parent resolution, and label validity.

    Parents must resolve within this manifest or be present in the content
    store (written there by the ancestor stage). Duplicate ids are reported:
    they normally indicate a labelling conflict or a degenerate augmentation.
    """
    store_root = Path(store_root)
    if not store_root.is_dir():
        raise IoError(f"store root {store_root} does not exist")
    store = ContentStore(store_root)
    if taxonomy is None:
        taxonomy = manifest.taxonomy()

    report = ValidationReport()
    ids = manifest.ids
    seen: set[str] = set()
    for record in manifest.records:
        report.checked += 1
        if record.id in seen:
            report.violations.append(Violation(record.id, "duplicate-id", "id appears more than once"))
        seen.add(record.id)

        path = store_root / record.image_path
        if not path.is_file():
            report.violations.append(Violation(record.id, "missing-file", str(path)))
        else:
            data = path.read_bytes()
            if not data or content_hash(data) != record.id:
                report.violations.append(
                    Violation(record.id, "hash-mismatch", f"{path} does not re-hash to id")
                )

        parent = parent_of(record.provenance)
        if parent is not None and parent not in ids and not store.exists(parent):
            report.violations.append(
                Violation(record.id, "dangling-parent", f"parent {parent} not in manifest or store")
            )

        if record.fine_label not in taxonomy.fine_classes:
            report.violations.append(
                Violation(record.id, "unknown-label", f"'{record.fine_label}' not in taxonomy")
            )
    return report
