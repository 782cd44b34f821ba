"""Weighted-percentile selection over augmentation variants, and the final merge.

Each augmented/synthetic manifest holds k copy-groups per original: group 0
is the original (or text-to-image base) and groups 1..k-1 are the
augmentation kinds / variations in plan priority order. ``select`` keeps a
weight-controlled prefix of those groups; ``combine`` concatenates the two
selected streams into the final mixed dataset.

Two count rules are provided because the published arithmetic is not
self-consistent (see README):

- ``original_plus_floor`` (default): always keep group 0, plus the first
  floor(weight * (k-1)) kinds; n * (1 + floor(weight * (k-1))) records.
  With k=5, weight 0.5 this keeps the first two kinds and reproduces the
  1,616 -> 4,848 -> 12,928 totals.
- ``strict_percentile``: keep exactly round(weight * k * n) records in
  (group, id) order, i.e. the literal "weight percentile of k groups"
  reading, fractional last group included; with alpha=0.5, beta=1.0, k=5 the
  combined count is (0.5+1.0)*5*n = 12,120.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .errors import InvalidInput, InvalidWeight, StageError, TaxonomyError
from .manifest import DatasetManifest, canonical_json
from .records import TIER_HR

log = logging.getLogger(__name__)

COUNT_RULES = ("original_plus_floor", "strict_percentile")
SELECTABLE_STAGES = ("Raw_Aug_HR", "T2I_Aug_HR")


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class MixParams:
    alpha: float = 0.5
    beta: float = 1.0
    count_rule: str = "original_plus_floor"
    kind_priority: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for name, value in (("alpha", self.alpha), ("beta", self.beta)):
            if not 0.0 < value <= 1.0:
                raise InvalidInput(f"{name} must be in (0, 1], got {value}")
        if self.count_rule not in COUNT_RULES:
            raise InvalidInput(f"count_rule must be one of {COUNT_RULES}, got '{self.count_rule}'")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "count_rule": self.count_rule,
            "kind_priority": list(self.kind_priority),
        }


def _check_selectable(manifest: DatasetManifest, kind_priority: tuple[str, ...]) -> None:
    if manifest.stage_tag not in SELECTABLE_STAGES:
        raise StageError(
            f"select expects stage in {SELECTABLE_STAGES}, got '{manifest.stage_tag}'"
        )
    for record in manifest.records:
        if record.variant_index is None:
            raise StageError(f"record {record.id} lacks a variant index")
        if (
            kind_priority
            and record.provenance.type == "augmented"
            and 1 <= record.variant_index <= len(kind_priority)
            and record.provenance.kind != kind_priority[record.variant_index - 1]
        ):
            raise StageError(
                f"record {record.id}: kind '{record.provenance.kind}' does not match "
                f"priority position {record.variant_index} ('{kind_priority[record.variant_index - 1]}')"
            )


def select(
    weight: float,
    k: int,
    manifest: DatasetManifest,
    count_rule: str = "original_plus_floor",
    kind_priority: tuple[str, ...] = (),
) -> DatasetManifest:
    """Keep the weight-percentile prefix of the k copy-groups."""
    if not 0.0 < weight <= 1.0:
        raise InvalidWeight(f"selection weight must be in (0, 1], got {weight}")
    if k < 1:
        raise InvalidInput(f"k must be >= 1, got {k}")
    if count_rule not in COUNT_RULES:
        raise InvalidInput(f"count_rule must be one of {COUNT_RULES}, got '{count_rule}'")
    _check_selectable(manifest, kind_priority)

    if count_rule == "original_plus_floor":
        keep_kinds = math.floor(weight * (k - 1))
        kept = tuple(r for r in manifest.records if r.variant_index <= keep_kinds)
    else:
        n_bases = sum(1 for r in manifest.records if r.variant_index == 0)
        target = min(round_half_up(weight * k * n_bases), len(manifest.records))
        ordered = sorted(manifest.records, key=lambda r: (r.variant_index, r.id))
        kept = tuple(ordered[:target])

    snapshot = dict(manifest.config_snapshot)
    snapshot["select"] = {"weight": weight, "k": k, "count_rule": count_rule}
    return DatasetManifest(
        stage_tag=manifest.stage_tag, records=kept, config_snapshot=snapshot
    )


def combine(selected_aug: DatasetManifest, selected_synth: DatasetManifest) -> DatasetManifest:
    """Concatenate the two selected streams (stage Combined), deduping ids.

    Both inputs must be HR-tier and share a taxonomy. Id collisions keep the
    first (augmented-stream) record and are reported, so the count equals
    |aug| + |synth| exactly when ids are disjoint.
    """
    tax_a = selected_aug.config_snapshot.get("taxonomy")
    tax_b = selected_synth.config_snapshot.get("taxonomy")
    if tax_a is not None and tax_b is not None and canonical_json(tax_a) != canonical_json(tax_b):
        raise TaxonomyError("inputs were built with different taxonomies")
    for manifest in (selected_aug, selected_synth):
        non_hr = [r.id for r in manifest.records if r.tier != TIER_HR]
        if non_hr:
            raise StageError(
                f"combine expects HR-tier inputs; {manifest.stage_tag} has "
                f"{len(non_hr)} non-HR records (first: {non_hr[0]})"
            )

    seen: dict[str, bool] = {}
    records = []
    collisions = []
    for record in tuple(selected_aug.records) + tuple(selected_synth.records):
        if record.id in seen:
            collisions.append(record.id)
            continue
        seen[record.id] = True
        records.append(record)
    if collisions:
        log.warning("combine dropped %d id collisions (first: %s)", len(collisions), collisions[0])

    sel_a = selected_aug.config_snapshot.get("select", {})
    sel_b = selected_synth.config_snapshot.get("select", {})
    snapshot = {
        "taxonomy": tax_a if tax_a is not None else tax_b,
        "mix": {
            "alpha": sel_a.get("weight"),
            "beta": sel_b.get("weight"),
            "k": sel_a.get("k", sel_b.get("k")),
            "count_rule": sel_a.get("count_rule"),
            "collisions": sorted(collisions),
        },
        "aug_snapshot": selected_aug.config_snapshot,
        "synth_snapshot": selected_synth.config_snapshot,
    }
    return DatasetManifest(stage_tag="Combined", records=tuple(records), config_snapshot=snapshot)


def mix_datasets(
    aug_manifest: DatasetManifest,
    synth_manifest: DatasetManifest,
    k: int,
    params: MixParams,
) -> DatasetManifest:
    """select(alpha) + select(beta) + combine in one call."""
    selected_aug = select(params.alpha, k, aug_manifest, params.count_rule, params.kind_priority)
    selected_synth = select(params.beta, k, synth_manifest, params.count_rule)
    return combine(selected_aug, selected_synth)
