"""Class taxonomy: eight fine-grained astronomy classes under four umbrella classes.

The fine-to-macro mapping is a documented default and can be overridden from
the pipeline config file; everything downstream (ingest layout, prompts,
reports, export) resolves class names through a ClassTaxonomy instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidInput, UnknownClass

DEFAULT_FINE_CLASSES = (
    "planet",
    "galaxy",
    "asteroid",
    "nebula",
    "comet",
    "black hole",
    "star",
    "constellation",
)

DEFAULT_MACRO_CLASSES = (
    "Astronomical Patterns",
    "Celestial Bodies",
    "Cosmic Phenomena",
    "Stellar Objects",
)

DEFAULT_MAPPING = {
    "planet": "Celestial Bodies",
    "asteroid": "Celestial Bodies",
    "comet": "Celestial Bodies",
    "star": "Stellar Objects",
    "galaxy": "Stellar Objects",
    "black hole": "Cosmic Phenomena",
    "nebula": "Cosmic Phenomena",
    "constellation": "Astronomical Patterns",
}


@dataclass(frozen=True)
class ClassTaxonomy:
    fine_classes: tuple[str, ...] = DEFAULT_FINE_CLASSES
    macro_classes: tuple[str, ...] = DEFAULT_MACRO_CLASSES
    mapping: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_MAPPING))

    def __post_init__(self):
        if len(set(self.fine_classes)) != len(self.fine_classes):
            raise InvalidInput("fine class names must be unique")
        if len(set(self.macro_classes)) != len(self.macro_classes):
            raise InvalidInput("macro class names must be unique")
        for fine in self.fine_classes:
            macro = self.mapping.get(fine)
            if macro is None:
                raise InvalidInput(f"fine class '{fine}' has no macro mapping")
            if macro not in self.macro_classes:
                raise InvalidInput(f"fine class '{fine}' maps to unknown macro '{macro}'")

    def class_index(self, fine: str) -> int:
        try:
            return self.fine_classes.index(fine)
        except ValueError:
            raise UnknownClass(f"unknown fine class '{fine}'") from None

    def to_dict(self) -> dict:
        return {
            "fine_classes": list(self.fine_classes),
            "macro_classes": list(self.macro_classes),
            "mapping": dict(self.mapping),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClassTaxonomy":
        return cls(
            fine_classes=tuple(data["fine_classes"]),
            macro_classes=tuple(data["macro_classes"]),
            mapping=dict(data["mapping"]),
        )


def macro_of(fine: str, taxonomy: ClassTaxonomy) -> str:
    """Macro (umbrella) class of a fine class; total over the fine set."""
    if fine not in taxonomy.mapping or fine not in taxonomy.fine_classes:
        raise UnknownClass(f"unknown fine class '{fine}'")
    return taxonomy.mapping[fine]
