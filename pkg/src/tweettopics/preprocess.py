"""Ordered tweet-cleaning pipeline.

Five steps, applied in this exact order:

  1. remove user mentions and links, lowercase Latin characters
  2. collapse whitespace runs to a single space
  3. drop everything from a standalone "via" token onward
  4. trim and drop tweets with three or fewer words
  5. NFKC-normalize

NFKC runs last by design even though running it first would be more
robust; the keyword filter normalizes its own inputs independently.
"""
from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional

from .ingest import RawTweet

MENTION_RE = re.compile(r"@\w+")
URL_RE = re.compile(r"(?:https?://|www\.)\S*", re.IGNORECASE)
SPACE_RE = re.compile(r"\s+")
# "via" only as a whitespace-delimited token: mid-word Latin ("naviaate")
# and Devanagari-attached sequences must not trigger.
VIA_RE = re.compile(r"(?:^|(?<=\s))via(?=\s|$)", re.IGNORECASE)

MIN_WORDS = 4


@dataclass(frozen=True)
class CleanTweet:
    id: str
    text: str
    word_count: int
    created_at: datetime

    def __post_init__(self):
        if self.word_count < MIN_WORDS:
            raise ValueError(f"clean tweet must have at least {MIN_WORDS} words")


def strip_mentions_links_lowercase(text: str) -> str:
    """Step 1: remove @mentions and links, then lowercase.

    Surrounding spaces are left in place for step 2 to collapse.
    """
    text = MENTION_RE.sub("", text)
    text = URL_RE.sub("", text)
    return text.lower()


def collapse_spaces(text: str) -> str:
    """Step 2: replace every maximal whitespace run with one space."""
    return SPACE_RE.sub(" ", text)


def strip_via_attribution(text: str) -> str:
    """Step 3: cut the first standalone "via" token and everything after it."""
    m = VIA_RE.search(text)
    if m is None:
        return text
    return text[: m.start()]


def trim_and_length_gate(text: str) -> Optional[str]:
    """Step 4: strip edges; drop (return None) when three or fewer words remain."""
    trimmed = text.strip()
    if len(trimmed.split()) <= 3:
        return None
    return trimmed


def nfkc_normalize(text: str) -> str:
    """Step 5: Unicode Normalization Form KC."""
    return unicodedata.normalize("NFKC", text)


@dataclass
class PipelineReport:
    """Per-step modification and drop counters for a preprocessing run."""

    seen: int = 0
    kept: int = 0
    modified: dict[str, int] = field(
        default_factory=lambda: {step: 0 for step in STEP_NAMES}
    )
    dropped: dict[str, int] = field(
        default_factory=lambda: {step: 0 for step in STEP_NAMES}
    )


STEP_NAMES = (
    "strip_mentions_links_lowercase",
    "collapse_spaces",
    "strip_via_attribution",
    "trim_and_length_gate",
    "nfkc_normalize",
)


def clean_text(text: str) -> Optional[str]:
    """Run the five steps over a raw text; None when the length gate drops it."""
    t1 = strip_mentions_links_lowercase(text)
    t2 = collapse_spaces(t1)
    t3 = strip_via_attribution(t2)
    t4 = trim_and_length_gate(t3)
    if t4 is None:
        return None
    return nfkc_normalize(t4)


def preprocess_pipeline(tweet: RawTweet, report: PipelineReport | None = None) -> Optional[CleanTweet]:
    """Apply steps 1-5 to one tweet; None when the length gate drops it."""
    if report is not None:
        report.seen += 1
    steps = (
        strip_mentions_links_lowercase,
        collapse_spaces,
        strip_via_attribution,
    )
    text = tweet.text
    for name, step in zip(STEP_NAMES, steps):
        out = step(text)
        if report is not None and out != text:
            report.modified[name] += 1
        text = out
    gated = trim_and_length_gate(text)
    if gated is None:
        if report is not None:
            report.dropped["trim_and_length_gate"] += 1
        return None
    if report is not None and gated != text:
        report.modified["trim_and_length_gate"] += 1
    final = nfkc_normalize(gated)
    if report is not None:
        if final != gated:
            report.modified["nfkc_normalize"] += 1
        report.kept += 1
    return CleanTweet(
        id=tweet.id,
        text=final,
        word_count=len(final.split()),
        created_at=tweet.created_at,
    )
