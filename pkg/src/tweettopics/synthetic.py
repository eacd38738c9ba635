"""Deterministic synthetic Devanagari corpora with planted topic tokens.

Each topic owns distinctive tokens; a tweet's labels decide which tokens it
carries, so a linear model over character n-grams can separate the topics.
The `noise` knob omits planted tokens / adds distractors to make smaller
training sets strictly worse, which the data-size ablation relies on.
"""
from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np

from .features import ExtractorConfig, extract
from .labels import TOPICS, TopicLabels
from .metrics import LabeledDataset, LabeledExample

TOPIC_TOKENS: dict[str, tuple[str, ...]] = {
    "COVID Stats": ("तथ्याङ्क", "संक्रमित"),
    "Vaccination": ("खोप", "भ्याक्सिन"),
    "COVID Politics": ("सरकार", "राजनीति"),
    "Humor": ("हाँसो", "जोक"),
    "Lockdown": ("लकडाउन", "निषेधाज्ञा"),
    "Civic Views": ("सचेतना", "मास्क"),
    "Life During Pandemic": ("जनजीवन", "दैनिकी"),
    "Waves and Variants": ("लहर", "भेरियन्ट"),
}

# Imbalanced prevalences, most-common topic near one third.
PREVALENCES = (0.30, 0.33, 0.12, 0.08, 0.20, 0.15, 0.06, 0.10)

FILLERS = (
    "कोरोना", "आज", "समाचार", "नेपालमा", "अपडेट", "भएको", "नयाँ",
    "जानकारी", "सबैलाई", "हेर्नुहोस्", "विषयमा", "फेरि",
)

_EPOCH = datetime(2021, 6, 1, tzinfo=timezone.utc)


def _timestamp(rng: np.random.Generator) -> datetime:
    # spread over roughly nine months at second precision
    seconds = int(rng.integers(0, 270 * 24 * 3600))
    return _EPOCH + timedelta(seconds=seconds)


def _labels(rng: np.random.Generator) -> TopicLabels:
    return TopicLabels(tuple(bool(rng.random() < p) for p in PREVALENCES))


def _text(labels: TopicLabels, rng: np.random.Generator, noise: float) -> str:
    words: list[str] = ["कोरोना"]  # keyword filter anchor
    for k, topic in enumerate(TOPICS):
        tokens = TOPIC_TOKENS[topic]
        if labels[k]:
            if rng.random() >= noise:
                words.append(tokens[int(rng.integers(len(tokens)))])
        elif noise > 0.0 and rng.random() < noise * 0.25:
            words.append(tokens[int(rng.integers(len(tokens)))])  # distractor
    n_fillers = int(rng.integers(4, 8))
    words.extend(FILLERS[int(rng.integers(1, len(FILLERS)))] for _ in range(n_fillers))
    order = rng.permutation(len(words))
    return " ".join(words[i] for i in order)


def make_labeled_dataset(
    n: int,
    extractor: ExtractorConfig,
    seed: int = 0,
    noise: float = 0.0,
) -> LabeledDataset:
    """Clean labeled examples with features already extracted."""
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(n):
        labels = _labels(rng)
        text = _text(labels, rng, noise)
        examples.append(
            LabeledExample(id=f"syn{i:06d}", features=extract(text, extractor), labels=labels)
        )
    return LabeledDataset(examples=tuple(examples), extractor=extractor)


def make_raw_records(n: int, seed: int = 0, noise: float = 0.0) -> list[dict]:
    """Raw JSONL-shaped records for exercising the full CLI pipeline.

    Includes mention/link/via decorations, a few non-Nepali records, a few
    too-short texts, and one duplicated id, so ingest and preprocess both
    have work to do.
    """
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        labels = _labels(rng)
        text = _text(labels, rng, noise)
        deco = rng.random()
        if deco < 0.15:
            text = f"@user{int(rng.integers(1000))} " + text
        elif deco < 0.25:
            text += f" https://t.co/{int(rng.integers(99999))}"
        elif deco < 0.30:
            text += " via onlinekhabar"
        lang = "ne"
        if rng.random() < 0.05:
            lang = "en"  # dropped by the language gate
        if rng.random() < 0.05:
            text = "कोरोना छ आज"  # three words: dropped by the length gate
        created = _timestamp(rng)
        records.append(
            {
                "id": f"raw{i:06d}",
                "created_at": created.strftime("%Y-%m-%dT%H:%M:%S+00:00"),
                "text": text,
                "lang": lang,
                "labels": {t: bool(labels[k]) for k, t in enumerate(TOPICS)},
            }
        )
    if n >= 2:
        dup = dict(records[1])
        dup["id"] = records[0]["id"]  # duplicate id, second occurrence dropped
        records.append(dup)
    return records
