"""Durable persistence: tweets, append-only annotation history, model
snapshots, reports, and trend aggregation.

The current annotation view is a deterministic function of the history;
effective labels prefer the latest human record over model predictions.
Readers never observe a partially applied write: every mutation runs in
one SQLite transaction.
"""
from __future__ import annotations

import csv
import io
import json
import sqlite3
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Optional

from .ingest import RawTweet, format_created_at, parse_created_at
from .labels import TOPIC_INDEX, TOPICS, TopicLabels

STATUS_ORDER = {"model_predicted": 0, "human_validated": 1, "proofread": 2}
STATUSES = tuple(STATUS_ORDER)

_SCHEMA = """
CREATE TABLE IF NOT EXISTS tweets (
    id TEXT PRIMARY KEY,
    created_at TEXT NOT NULL,
    text TEXT NOT NULL,
    lang TEXT NOT NULL,
    source_name TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS annotations (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    tweet_id TEXT NOT NULL REFERENCES tweets(id),
    rater_id TEXT NOT NULL,
    labels TEXT NOT NULL,
    status TEXT NOT NULL,
    updated_at TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_ann_pair ON annotations(tweet_id, rater_id, seq);
CREATE TABLE IF NOT EXISTS snapshots (
    version TEXT PRIMARY KEY,
    created_at TEXT NOT NULL,
    data BLOB NOT NULL,
    is_current INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS reports (
    kind TEXT PRIMARY KEY,
    payload TEXT NOT NULL,
    updated_at TEXT NOT NULL
);
"""


class TweetNotFound(KeyError):
    pass


@dataclass(frozen=True)
class AnnotationRecord:
    tweet_id: str
    rater_id: str
    labels: TopicLabels
    status: str
    updated_at: datetime
    seq: int = 0

    @property
    def is_human(self) -> bool:
        return self.status != "model_predicted"


@dataclass(frozen=True)
class TrendBucket:
    window_start: datetime
    granularity: str  # "day" or "week"
    topic: str
    count: int


@dataclass(frozen=True)
class TweetView:
    tweet: RawTweet
    labels: Optional[TopicLabels]
    status: Optional[str]
    rater_id: Optional[str]


@dataclass(frozen=True)
class TweetPage:
    items: tuple[TweetView, ...]
    total: int
    limit: int
    offset: int


def _now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def _labels_to_json(labels: TopicLabels) -> str:
    return json.dumps(labels.to_mapping(), ensure_ascii=False, sort_keys=True)


def _labels_from_json(payload: str) -> TopicLabels:
    return TopicLabels.from_mapping(json.loads(payload))


def day_start(ts: datetime) -> datetime:
    ts = ts.astimezone(timezone.utc)
    return ts.replace(hour=0, minute=0, second=0, microsecond=0)


def week_start(ts: datetime) -> datetime:
    d = day_start(ts)
    return d - timedelta(days=d.weekday())  # ISO week starts Monday


class Store:
    """Single-file store; every public method is one transaction."""

    def __init__(self, path: str | Path):
        self.path = str(path)
        with self._connect() as conn:
            conn.executescript(_SCHEMA)

    def _connect(self) -> sqlite3.Connection:
        conn = sqlite3.connect(self.path, timeout=30.0)
        conn.execute("PRAGMA journal_mode=WAL")
        conn.execute("PRAGMA foreign_keys=ON")
        return conn

    # -- tweets ---------------------------------------------------------

    def upsert_tweet(self, tweet: RawTweet) -> None:
        with self._connect() as conn:
            conn.execute(
                "INSERT INTO tweets(id, created_at, text, lang, source_name) "
                "VALUES (?, ?, ?, ?, ?) "
                "ON CONFLICT(id) DO UPDATE SET created_at=excluded.created_at, "
                "text=excluded.text, lang=excluded.lang, source_name=excluded.source_name",
                (tweet.id, format_created_at(tweet.created_at), tweet.text,
                 tweet.lang, tweet.source_name),
            )

    def upsert_tweets(self, tweets: list[RawTweet]) -> None:
        with self._connect() as conn:
            conn.executemany(
                "INSERT INTO tweets(id, created_at, text, lang, source_name) "
                "VALUES (?, ?, ?, ?, ?) "
                "ON CONFLICT(id) DO UPDATE SET created_at=excluded.created_at, "
                "text=excluded.text, lang=excluded.lang, source_name=excluded.source_name",
                [(t.id, format_created_at(t.created_at), t.text, t.lang, t.source_name)
                 for t in tweets],
            )

    def get_tweet(self, tweet_id: str) -> Optional[RawTweet]:
        with self._connect() as conn:
            row = conn.execute(
                "SELECT id, created_at, text, lang, source_name FROM tweets WHERE id=?",
                (tweet_id,),
            ).fetchone()
        if row is None:
            return None
        return RawTweet(id=row[0], created_at=parse_created_at(row[1]),
                        text=row[2], lang=row[3], source_name=row[4])

    def count_tweets(self) -> int:
        with self._connect() as conn:
            return conn.execute("SELECT COUNT(*) FROM tweets").fetchone()[0]

    # -- annotations ----------------------------------------------------

    def record_correction(
        self,
        tweet_id: str,
        rater_id: str,
        labels: TopicLabels,
        status: str = "human_validated",
        now: Optional[datetime] = None,
    ) -> AnnotationRecord:
        """Supersede the (tweet, rater) record; history rows are never rewritten.

        Status never moves backward: a correction to a proofread record keeps
        proofread. A payload identical to the current record adds no history.
        """
        if status not in STATUS_ORDER:
            raise ValueError(f"unknown status {status!r}, expected one of {STATUSES}")
        with self._connect() as conn:
            if conn.execute("SELECT 1 FROM tweets WHERE id=?", (tweet_id,)).fetchone() is None:
                raise TweetNotFound(tweet_id)
            current = self._current_pair(conn, tweet_id, rater_id)
            effective_status = status
            if current is not None and STATUS_ORDER[current.status] > STATUS_ORDER[status]:
                effective_status = current.status
            if (current is not None and current.labels == labels
                    and current.status == effective_status):
                return current
            ts = now or _now()
            cur = conn.execute(
                "INSERT INTO annotations(tweet_id, rater_id, labels, status, updated_at) "
                "VALUES (?, ?, ?, ?, ?)",
                (tweet_id, rater_id, _labels_to_json(labels), effective_status,
                 format_created_at(ts)),
            )
            return AnnotationRecord(tweet_id=tweet_id, rater_id=rater_id, labels=labels,
                                    status=effective_status, updated_at=ts,
                                    seq=cur.lastrowid)

    def record_predictions(
        self,
        predictions: list[tuple[str, TopicLabels]],
        model_version: str,
        now: Optional[datetime] = None,
    ) -> None:
        """Write model-predicted records for many tweets in one transaction."""
        ts = format_created_at(now or _now())
        rater = f"model:{model_version}"
        with self._connect() as conn:
            conn.executemany(
                "INSERT INTO annotations(tweet_id, rater_id, labels, status, updated_at) "
                "VALUES (?, ?, ?, 'model_predicted', ?)",
                [(tweet_id, rater, _labels_to_json(labels), ts)
                 for tweet_id, labels in predictions],
            )

    @staticmethod
    def _row_to_record(row) -> AnnotationRecord:
        return AnnotationRecord(
            tweet_id=row[0], rater_id=row[1], labels=_labels_from_json(row[2]),
            status=row[3], updated_at=parse_created_at(row[4]), seq=row[5],
        )

    def _current_pair(self, conn, tweet_id: str, rater_id: str) -> Optional[AnnotationRecord]:
        row = conn.execute(
            "SELECT tweet_id, rater_id, labels, status, updated_at, seq FROM annotations "
            "WHERE tweet_id=? AND rater_id=? ORDER BY seq DESC LIMIT 1",
            (tweet_id, rater_id),
        ).fetchone()
        return self._row_to_record(row) if row else None

    def history(self, tweet_id: str) -> list[AnnotationRecord]:
        with self._connect() as conn:
            rows = conn.execute(
                "SELECT tweet_id, rater_id, labels, status, updated_at, seq "
                "FROM annotations WHERE tweet_id=? ORDER BY seq",
                (tweet_id,),
            ).fetchall()
        return [self._row_to_record(r) for r in rows]

    def _current_records(self, conn) -> list[AnnotationRecord]:
        rows = conn.execute(
            "SELECT a.tweet_id, a.rater_id, a.labels, a.status, a.updated_at, a.seq "
            "FROM annotations a JOIN ("
            "  SELECT tweet_id, rater_id, MAX(seq) AS mseq FROM annotations "
            "  GROUP BY tweet_id, rater_id"
            ") b ON a.seq = b.mseq",
        ).fetchall()
        return [self._row_to_record(r) for r in rows]

    @staticmethod
    def _effective_of(records: list[AnnotationRecord]) -> Optional[AnnotationRecord]:
        human = [r for r in records if r.is_human]
        pool = human if human else records
        return max(pool, key=lambda r: r.seq) if pool else None

    def effective_map(self) -> dict[str, AnnotationRecord]:
        """tweet id -> effective record (latest human, else latest prediction)."""
        with self._connect() as conn:
            current = self._current_records(conn)
        by_tweet: dict[str, list[AnnotationRecord]] = {}
        for rec in current:
            by_tweet.setdefault(rec.tweet_id, []).append(rec)
        return {tid: self._effective_of(recs) for tid, recs in by_tweet.items()}

    def effective_annotation(self, tweet_id: str) -> Optional[AnnotationRecord]:
        with self._connect() as conn:
            rows = conn.execute(
                "SELECT a.tweet_id, a.rater_id, a.labels, a.status, a.updated_at, a.seq "
                "FROM annotations a JOIN ("
                "  SELECT rater_id, MAX(seq) AS mseq FROM annotations WHERE tweet_id=? "
                "  GROUP BY rater_id"
                ") b ON a.seq = b.mseq",
                (tweet_id,),
            ).fetchall()
        return self._effective_of([self._row_to_record(r) for r in rows])

    def supervision_records(self) -> list[AnnotationRecord]:
        """Current human_validated and proofread records; model rows excluded."""
        with self._connect() as conn:
            current = self._current_records(conn)
        return [r for r in current if r.is_human]

    def tweets_without_human_labels(self) -> list[str]:
        with self._connect() as conn:
            rows = conn.execute(
                "SELECT id FROM tweets WHERE id NOT IN ("
                "  SELECT DISTINCT tweet_id FROM annotations WHERE status != 'model_predicted'"
                ") ORDER BY id",
            ).fetchall()
        return [r[0] for r in rows]

    # -- queries --------------------------------------------------------

    def query_tweets(
        self,
        topic: Optional[str] = None,
        time_from: Optional[datetime] = None,
        time_to: Optional[datetime] = None,
        status: Optional[str] = None,
        limit: int = 50,
        offset: int = 0,
    ) -> TweetPage:
        """Filtered page ordered by created_at descending.

        The topic filter matches tweets whose effective labels mark that
        topic positive; the status filter matches the effective record.
        """
        if topic is not None and topic not in TOPIC_INDEX:
            raise ValueError(f"unknown topic {topic!r}; allowed: {list(TOPICS)}")
        if status is not None and status not in STATUS_ORDER:
            raise ValueError(f"unknown status {status!r}; allowed: {list(STATUSES)}")
        if time_from is not None and time_to is not None and time_from > time_to:
            raise ValueError("'from' must not be after 'to'")
        if limit < 1 or offset < 0:
            raise ValueError("require limit >= 1 and offset >= 0")

        with self._connect() as conn:
            rows = conn.execute(
                "SELECT id, created_at, text, lang, source_name FROM tweets "
                "ORDER BY created_at DESC, id DESC",
            ).fetchall()
        effective = self.effective_map()

        views = []
        for row in rows:
            tweet = RawTweet(id=row[0], created_at=parse_created_at(row[1]),
                             text=row[2], lang=row[3], source_name=row[4])
            rec = effective.get(tweet.id)
            if time_from is not None and tweet.created_at < time_from:
                continue
            if time_to is not None and tweet.created_at > time_to:
                continue
            if topic is not None:
                if rec is None or not rec.labels[TOPIC_INDEX[topic]]:
                    continue
            if status is not None:
                if rec is None or rec.status != status:
                    continue
            views.append(TweetView(
                tweet=tweet,
                labels=rec.labels if rec else None,
                status=rec.status if rec else None,
                rater_id=rec.rater_id if rec else None,
            ))
        return TweetPage(
            items=tuple(views[offset : offset + limit]),
            total=len(views),
            limit=limit,
            offset=offset,
        )

    # -- trends ---------------------------------------------------------

    def trend_series(
        self,
        granularity: str,
        topic: Optional[str] = None,
        time_from: Optional[datetime] = None,
        time_to: Optional[datetime] = None,
    ) -> list[TrendBucket]:
        """Per-topic effective-label counts in aligned UTC day/ISO-week windows.

        Buckets are zero-filled across the window (clamped to the data range
        when unbounded); one bucket per (window, topic).
        """
        if granularity not in ("day", "week"):
            raise ValueError("granularity must be 'day' or 'week'")
        if topic is not None and topic not in TOPIC_INDEX:
            raise ValueError(f"unknown topic {topic!r}; allowed: {list(TOPICS)}")
        if time_from is not None and time_to is not None and time_from > time_to:
            raise ValueError("'from' must not be after 'to'")

        align = day_start if granularity == "day" else week_start
        step = timedelta(days=1 if granularity == "day" else 7)
        topics = [topic] if topic else list(TOPICS)

        with self._connect() as conn:
            rows = conn.execute("SELECT id, created_at FROM tweets").fetchall()
        effective = self.effective_map()

        stamped = []
        for tweet_id, created in rows:
            ts = parse_created_at(created)
            if time_from is not None and ts < time_from:
                continue
            if time_to is not None and ts > time_to:
                continue
            stamped.append((tweet_id, ts))
        if not stamped:
            return []

        lo = align(time_from) if time_from else align(min(ts for _, ts in stamped))
        hi = align(time_to) if time_to else align(max(ts for _, ts in stamped))
        counts: dict[tuple[datetime, str], int] = {}
        window = lo
        while window <= hi:
            for t in topics:
                counts[(window, t)] = 0
            window += step
        for tweet_id, ts in stamped:
            rec = effective.get(tweet_id)
            if rec is None:
                continue
            w = align(ts)
            for t in topics:
                if rec.labels[TOPIC_INDEX[t]]:
                    counts[(w, t)] += 1
        return [
            TrendBucket(window_start=w, granularity=granularity, topic=t, count=c)
            for (w, t), c in sorted(counts.items(), key=lambda kv: (kv[0][0], TOPIC_INDEX[kv[0][1]]))
        ]

    # -- snapshots ------------------------------------------------------

    def put_snapshot(self, version: str, data: bytes, set_current: bool = True,
                     now: Optional[datetime] = None) -> None:
        with self._connect() as conn:
            if set_current:
                conn.execute("UPDATE snapshots SET is_current=0")
            conn.execute(
                "INSERT INTO snapshots(version, created_at, data, is_current) VALUES (?, ?, ?, ?)",
                (version, format_created_at(now or _now()), data, 1 if set_current else 0),
            )

    def current_snapshot(self) -> Optional[tuple[str, bytes]]:
        with self._connect() as conn:
            row = conn.execute(
                "SELECT version, data FROM snapshots WHERE is_current=1 "
                "ORDER BY created_at DESC LIMIT 1",
            ).fetchone()
        return (row[0], row[1]) if row else None

    def count_snapshots(self) -> int:
        with self._connect() as conn:
            return conn.execute("SELECT COUNT(*) FROM snapshots").fetchone()[0]

    # -- reports --------------------------------------------------------

    def put_report(self, kind: str, payload: dict, now: Optional[datetime] = None) -> None:
        with self._connect() as conn:
            conn.execute(
                "INSERT INTO reports(kind, payload, updated_at) VALUES (?, ?, ?) "
                "ON CONFLICT(kind) DO UPDATE SET payload=excluded.payload, "
                "updated_at=excluded.updated_at",
                (kind, json.dumps(payload, ensure_ascii=False), format_created_at(now or _now())),
            )

    def get_report(self, kind: str) -> Optional[dict]:
        with self._connect() as conn:
            row = conn.execute("SELECT payload FROM reports WHERE kind=?", (kind,)).fetchone()
        return json.loads(row[0]) if row else None

    # -- export ---------------------------------------------------------

    def export_corpus_csv(self) -> str:
        """Release-shaped export: tweet_id, created_at, text, topic_1..topic_8, status."""
        with self._connect() as conn:
            rows = conn.execute(
                "SELECT id, created_at, text FROM tweets ORDER BY created_at, id",
            ).fetchall()
        effective = self.effective_map()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tweet_id", "created_at", "text"]
                   + [f"topic_{k + 1}" for k in range(len(TOPICS))] + ["status"])
        for tweet_id, created, text in rows:
            rec = effective.get(tweet_id)
            labels = [int(v) for v in rec.labels] if rec else [0] * len(TOPICS)
            w.writerow([tweet_id, created, text] + labels + [rec.status if rec else ""])
        return buf.getvalue()
