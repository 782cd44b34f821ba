"""Sample identity and provenance.

Every stored image is addressed by the SHA-256 of its encoded bytes, and every
record carries the provenance variant that produced it. ``variant_index``
orders each record inside its augmentation/variation family (0 = original or
text-to-image base, i >= 1 = the i-th augmentation kind or variation) and is
what the mixing stage selects on.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Union

from .errors import InvalidInput

TIER_LR = "LR"
TIER_HR = "HR"


def content_hash(image_bytes: bytes) -> str:
    """SHA-256 of the stored image bytes, lowercase hex (the sample id)."""
    if not image_bytes:
        raise InvalidInput("content_hash of empty byte sequence")
    return hashlib.sha256(image_bytes).hexdigest()


@dataclass(frozen=True)
class RawIngested:
    source_path: str
    type = "raw_ingested"


@dataclass(frozen=True)
class Restored:
    method: str
    scale: int
    parent_id: str
    type = "restored"


@dataclass(frozen=True)
class Augmented:
    kind: str
    seed: int
    parent_id: str
    type = "augmented"


@dataclass(frozen=True)
class SyntheticT2I:
    prompt: str
    seed: int
    type = "synthetic_t2i"


@dataclass(frozen=True)
class SyntheticI2I:
    variation_seed: int
    parent_id: str
    type = "synthetic_i2i"


Provenance = Union[RawIngested, Restored, Augmented, SyntheticT2I, SyntheticI2I]

_PROVENANCE_TYPES = {
    "raw_ingested": RawIngested,
    "restored": Restored,
    "augmented": Augmented,
    "synthetic_t2i": SyntheticT2I,
    "synthetic_i2i": SyntheticI2I,
}


def provenance_to_dict(p: Provenance) -> dict:
    d = {"type": p.type}
    for name in p.__dataclass_fields__:
        d[name] = getattr(p, name)
    return d


def provenance_from_dict(d: dict) -> Provenance:
    kind = d.get("type")
    cls = _PROVENANCE_TYPES.get(kind)
    if cls is None:
        raise InvalidInput(f"unknown provenance type '{kind}'")
    fields = {k: v for k, v in d.items() if k != "type"}
    return cls(**fields)


def parent_of(p: Provenance) -> Optional[str]:
    return getattr(p, "parent_id", None)


@dataclass(frozen=True)
class SampleRecord:
    """One image instance: content id, label, resolution tier, provenance."""

    id: str
    fine_label: str
    tier: str
    provenance: Provenance
    image_path: str
    variant_index: Optional[int] = 0

    def __post_init__(self):
        if len(self.id) != 64 or any(c not in "0123456789abcdef" for c in self.id):
            raise InvalidInput(f"sample id must be 64 lowercase hex chars, got '{self.id}'")
        if self.tier not in (TIER_LR, TIER_HR):
            raise InvalidInput(f"tier must be LR or HR, got '{self.tier}'")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "fine_label": self.fine_label,
            "tier": self.tier,
            "variant_index": self.variant_index,
            "provenance": provenance_to_dict(self.provenance),
            "image_path": self.image_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SampleRecord":
        return cls(
            id=d["id"],
            fine_label=d["fine_label"],
            tier=d["tier"],
            variant_index=d.get("variant_index"),
            provenance=provenance_from_dict(d["provenance"]),
            image_path=d["image_path"],
        )
