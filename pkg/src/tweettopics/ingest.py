"""Tweet ingestion: JSONL loading, keyword/language filtering, dedup.

Input records are JSONL with keys id, created_at (ISO-8601), text, lang.
The keyword list is a plain UTF-8 file, one keyword per line, '#' comments.
"""
from __future__ import annotations

import json
import logging
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Protocol

logger = logging.getLogger(__name__)

DEFAULT_LANG = "ne"


@dataclass(frozen=True)
class RawTweet:
    id: str
    created_at: datetime
    text: str
    lang: str
    source_name: str = "file"

    def __post_init__(self):
        if not self.id:
            raise ValueError("tweet id must be nonempty")
        if not self.text:
            raise ValueError("tweet text must be nonempty")
        if self.created_at.tzinfo is None:
            object.__setattr__(self, "created_at", self.created_at.replace(tzinfo=timezone.utc))
        else:
            object.__setattr__(self, "created_at", self.created_at.astimezone(timezone.utc))


@dataclass(frozen=True)
class KeywordSet:
    """Ordered, NFKC-deduplicated keyword list used for the containment filter."""

    keywords: tuple[str, ...]
    version: str = "unversioned"

    def __post_init__(self):
        normalized = []
        seen = set()
        for kw in self.keywords:
            if not kw:
                raise ValueError("keywords must be nonempty")
            norm = unicodedata.normalize("NFKC", kw)
            if norm in seen:
                raise ValueError(f"duplicate keyword after NFKC normalization: {kw!r}")
            seen.add(norm)
            normalized.append(norm)
        object.__setattr__(self, "keywords", tuple(normalized))

    def __len__(self) -> int:
        return len(self.keywords)


def parse_created_at(value: str) -> datetime:
    """Parse an ISO-8601 timestamp to a UTC datetime at second precision."""
    dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def format_created_at(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S+00:00")


@dataclass
class LoadStats:
    loaded: int = 0
    skipped: int = 0
    bad_lines: list[int] = field(default_factory=list)


def load_jsonl(path: str | Path, stats: LoadStats | None = None) -> Iterator[RawTweet]:
    """Yield RawTweets from a JSONL file in file order.

    Malformed lines are skipped with a warning carrying the line number;
    an unreadable file raises the underlying OSError.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                tweet = RawTweet(
                    id=str(obj["id"]),
                    created_at=parse_created_at(obj["created_at"]),
                    text=obj["text"],
                    lang=obj.get("lang", DEFAULT_LANG),
                    source_name=obj.get("source_name", path.name),
                )
            except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
                logger.warning("%s:%d: skipping malformed line (%s)", path, lineno, exc)
                if stats is not None:
                    stats.skipped += 1
                    stats.bad_lines.append(lineno)
                continue
            if stats is not None:
                stats.loaded += 1
            yield tweet


def load_keywords(path: str | Path, version: str | None = None) -> KeywordSet:
    """Read a keyword file: one keyword per line, '#' starts a comment line."""
    path = Path(path)
    keywords = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        keywords.append(line)
    return KeywordSet(tuple(keywords), version=version or path.stem)


def keyword_filter(tweet: RawTweet, kw: KeywordSet, lang: str = DEFAULT_LANG) -> bool:
    """True iff any keyword occurs in the NFKC-normalized text and the lang tag matches.

    Plain substring containment: Devanagari has no tokenizer-free word
    boundaries, so no word-boundary matching is attempted.
    """
    if tweet.lang != lang:
        return False
    text = unicodedata.normalize("NFKC", tweet.text)
    return any(k in text for k in kw.keywords)


def dedupe(tweets: Iterable[RawTweet], dropped: list[RawTweet] | None = None) -> Iterator[RawTweet]:
    """Keep the first occurrence of each id; later duplicates are dropped."""
    seen: set[str] = set()
    for tweet in tweets:
        if tweet.id in seen:
            if dropped is not None:
                dropped.append(tweet)
            continue
        seen.add(tweet.id)
        yield tweet


class TweetSource(Protocol):
    """Pluggable remote source; a real social-media client is out of scope."""

    def fetch(self, since: datetime) -> Iterator[RawTweet]: ...


class FileTweetSource:
    """File-backed TweetSource: serves records at or after `since`."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def fetch(self, since: datetime) -> Iterator[RawTweet]:
        if since.tzinfo is None:
            since = since.replace(tzinfo=timezone.utc)
        for tweet in load_jsonl(self.path):
            if tweet.created_at >= since:
                yield tweet
