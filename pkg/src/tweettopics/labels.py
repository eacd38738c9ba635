"""Canonical topic schema shared across the pipeline.

Every label vector in the system is ordered by TOPICS; serialized forms
always carry the topic names so readers never depend on position alone.
"""
from __future__ import annotations

from dataclasses import dataclass

TOPICS: tuple[str, ...] = (
    "COVID Stats",
    "Vaccination",
    "COVID Politics",
    "Humor",
    "Lockdown",
    "Civic Views",
    "Life During Pandemic",
    "Waves and Variants",
)

N_TOPICS = len(TOPICS)

TOPIC_INDEX: dict[str, int] = {name: k for k, name in enumerate(TOPICS)}


@dataclass(frozen=True)
class TopicLabels:
    """Boolean assignment over the eight canonical topics, in TOPICS order.

    The empty topic set is legal: a tweet may match no topic at all.
    """

    values: tuple[bool, ...]

    def __post_init__(self):
        if len(self.values) != N_TOPICS:
            raise ValueError(f"expected {N_TOPICS} values, got {len(self.values)}")
        object.__setattr__(self, "values", tuple(bool(v) for v in self.values))

    @classmethod
    def from_mapping(cls, mapping: dict[str, bool]) -> "TopicLabels":
        """Build from a name-keyed dict; requires exactly the canonical keys."""
        missing = [t for t in TOPICS if t not in mapping]
        if missing:
            raise KeyError(f"missing topics: {missing}")
        unknown = [t for t in mapping if t not in TOPIC_INDEX]
        if unknown:
            raise KeyError(f"unknown topics: {unknown}")
        return cls(tuple(bool(mapping[t]) for t in TOPICS))

    @classmethod
    def none(cls) -> "TopicLabels":
        return cls((False,) * N_TOPICS)

    def to_mapping(self) -> dict[str, bool]:
        return {name: v for name, v in zip(TOPICS, self.values)}

    def __getitem__(self, k: int) -> bool:
        return self.values[k]

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True)
class LabelStats:
    """Positive/negative counts per topic over a dataset."""

    pos: tuple[int, ...]
    neg: tuple[int, ...]

    def __post_init__(self):
        if len(self.pos) != N_TOPICS or len(self.neg) != N_TOPICS:
            raise ValueError("pos and neg must have one count per topic")
        if any(p < 0 for p in self.pos) or any(n < 0 for n in self.neg):
            raise ValueError("counts must be nonnegative")
        sizes = {p + n for p, n in zip(self.pos, self.neg)}
        if len(sizes) > 1:
            raise ValueError(f"pos[k] + neg[k] must equal the dataset size for every k, got {sizes}")

    @classmethod
    def from_labels(cls, labels: list[TopicLabels]) -> "LabelStats":
        pos = [0] * N_TOPICS
        for lab in labels:
            for k, v in enumerate(lab.values):
                if v:
                    pos[k] += 1
        n = len(labels)
        return cls(tuple(pos), tuple(n - p for p in pos))

    def smoothed(self) -> "LabelStats":
        """Add-one smoothing, the fallback when a count is zero."""
        return LabelStats(tuple(p + 1 for p in self.pos), tuple(n + 1 for n in self.neg))

    @property
    def size(self) -> int:
        return self.pos[0] + self.neg[0]
