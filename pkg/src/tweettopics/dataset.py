"""Labeled dataset CSV: tweet_id, created_at, text, topic_1..topic_8.

Topic columns are 0/1 in canonical order; the topic -> column mapping is
emitted to a JSON sidecar next to every CSV we write so readers never rely
on position alone.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from .ingest import format_created_at, parse_created_at
from .labels import N_TOPICS, TOPICS, TopicLabels

DATASET_COLUMNS = ["tweet_id", "created_at", "text"] + [f"topic_{k + 1}" for k in range(N_TOPICS)]


@dataclass(frozen=True)
class DatasetRow:
    tweet_id: str
    created_at: datetime
    text: str
    labels: TopicLabels


def sidecar_path(csv_path: str | Path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.name + ".columns.json")


def write_dataset_csv(rows: list[DatasetRow], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATASET_COLUMNS)
        for row in rows:
            w.writerow(
                [row.tweet_id, format_created_at(row.created_at), row.text]
                + [int(v) for v in row.labels]
            )
    mapping = {f"topic_{k + 1}": name for k, name in enumerate(TOPICS)}
    sidecar_path(path).write_text(
        json.dumps({"columns": mapping}, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def read_dataset_csv(path: str | Path) -> list[DatasetRow]:
    """Read a labeled CSV; honors a sidecar column mapping when present."""
    path = Path(path)
    column_topics = _sidecar_topics(path)
    rows = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if [h.strip() for h in header] != DATASET_COLUMNS:
            raise ValueError(f"{path}: expected columns {DATASET_COLUMNS}, got {header}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(DATASET_COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(DATASET_COLUMNS)} cells")
            flags = {}
            for k, cell in enumerate(rec[3:]):
                if cell not in ("0", "1"):
                    raise ValueError(f"{path}:{lineno}: label cells must be 0 or 1")
                flags[column_topics[k]] = cell == "1"
            rows.append(
                DatasetRow(
                    tweet_id=rec[0],
                    created_at=parse_created_at(rec[1]),
                    text=rec[2],
                    labels=TopicLabels.from_mapping(flags),
                )
            )
    return rows


def _sidecar_topics(path: Path) -> list[str]:
    sp = sidecar_path(path)
    if not sp.exists():
        return list(TOPICS)
    mapping = json.loads(sp.read_text(encoding="utf-8"))["columns"]
    topics = [mapping[f"topic_{k + 1}"] for k in range(N_TOPICS)]
    if sorted(topics) != sorted(TOPICS):
        raise ValueError(f"{sp}: sidecar topics do not match the canonical set")
    return topics
