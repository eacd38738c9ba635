"""Inter-annotator agreement: per-topic binary Fleiss' kappa over a fixed
rater panel, plus the seeded agreement-subset sampler.

Multi-label agreement decomposes into eight independent binary computations
(rated-positive vs rated-negative per topic); no multi-label generalization
is attempted.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .labels import N_TOPICS, TOPICS, TopicLabels


class DegenerateAgreement(ValueError):
    """All raters always chose one category: chance agreement is 1, kappa undefined."""


@dataclass(frozen=True)
class RatingMatrix:
    """One label's ratings: per item, (n_pos, n_neg) counts summing to r raters."""

    counts: tuple[tuple[int, int], ...]
    r: int

    def __post_init__(self):
        if self.r < 2:
            raise ValueError("need at least 2 raters")
        if len(self.counts) < 2:
            raise ValueError("need at least 2 items")
        for i, (pos, neg) in enumerate(self.counts):
            if pos < 0 or neg < 0 or pos + neg != self.r:
                raise ValueError(f"item {i}: counts {pos},{neg} must be nonnegative and sum to r={self.r}")

    @property
    def n_items(self) -> int:
        return len(self.counts)


def fleiss_kappa(m: RatingMatrix) -> float:
    """Chance-corrected agreement for a fixed panel of r raters.

    P_i = sum_j n_ij (n_ij - 1) / (r (r - 1)); kappa = (mean_i P_i - P_e) / (1 - P_e)
    with P_e = sum_j (column share)^2. Raises DegenerateAgreement when P_e = 1.
    """
    table = np.asarray(m.counts, dtype=np.float64)
    r = m.r
    p_i = (table * (table - 1.0)).sum(axis=1) / (r * (r - 1.0))
    p_bar = float(p_i.mean())
    p_j = table.sum(axis=0) / (m.n_items * r)
    p_e = float((p_j * p_j).sum())
    if p_e >= 1.0:
        raise DegenerateAgreement(
            "all ratings fell in a single category; kappa is undefined"
        )
    return (p_bar - p_e) / (1.0 - p_e)


def agreement_subset(ids: Sequence[str], n: int, seed: int) -> list[str]:
    """Seeded uniform sample of ids without replacement.

    Persist the returned list so every rater annotates the same subset.
    """
    if n > len(ids):
        raise ValueError(f"cannot sample {n} from {len(ids)} ids")
    rng = np.random.default_rng(seed)
    return [str(x) for x in rng.choice(list(ids), size=n, replace=False)]


@dataclass(frozen=True)
class Rating:
    """One rater's label assignment for one tweet in the agreement subset."""

    tweet_id: str
    rater_id: str
    labels: TopicLabels


@dataclass(frozen=True)
class KappaReport:
    per_label: dict[str, float | None]  # None marks a degenerate label
    mean_kappa: float
    r: int
    n_items: int
    degenerate: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "per_label": dict(self.per_label),
            "mean_kappa": self.mean_kappa,
            "raters": self.r,
            "items": self.n_items,
            "degenerate": list(self.degenerate),
        }


def kappa_report(ratings: Sequence[Rating]) -> KappaReport:
    """Eight per-topic kappas plus their mean over a complete rating grid.

    Every tweet must be rated exactly once by every rater seen in the input;
    missing (tweet, rater) pairs are an error. Degenerate labels are flagged
    and excluded from the mean rather than silently zeroed.
    """
    if not ratings:
        raise ValueError("no ratings given")
    raters = sorted({rt.rater_id for rt in ratings})
    tweets = sorted({rt.tweet_id for rt in ratings})
    seen: dict[tuple[str, str], TopicLabels] = {}
    for rt in ratings:
        key = (rt.tweet_id, rt.rater_id)
        if key in seen:
            raise ValueError(f"duplicate rating for tweet {rt.tweet_id!r} by {rt.rater_id!r}")
        seen[key] = rt.labels
    missing = [(t, r) for t in tweets for r in raters if (t, r) not in seen]
    if missing:
        raise ValueError(f"incomplete rating coverage; missing (tweet, rater) pairs: {missing}")

    r = len(raters)
    per_label: dict[str, float | None] = {}
    degenerate: list[str] = []
    for k, topic in enumerate(TOPICS):
        counts = []
        for t in tweets:
            pos = sum(1 for rater in raters if seen[(t, rater)][k])
            counts.append((pos, r - pos))
        try:
            per_label[topic] = fleiss_kappa(RatingMatrix(tuple(counts), r=r))
        except DegenerateAgreement:
            per_label[topic] = None
            degenerate.append(topic)
    defined = [v for v in per_label.values() if v is not None]
    if not defined:
        raise DegenerateAgreement("every label is degenerate; no kappa defined")
    return KappaReport(
        per_label=per_label,
        mean_kappa=float(np.mean(defined)),
        r=r,
        n_items=len(tweets),
        degenerate=tuple(degenerate),
    )


def read_annotations_csv(path: str | Path) -> list[Rating]:
    """Annotation export: tweet_id, rater_id, topic_1..topic_8 with 0/1 cells.

    topic_k columns follow the canonical topic order.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty annotations file")
        header = [h.strip() for h in header]
        expected = ["tweet_id", "rater_id"] + [f"topic_{k + 1}" for k in range(N_TOPICS)]
        if header != expected:
            raise ValueError(f"{path}: expected header {expected}, got {header}")
        ratings = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 + N_TOPICS:
                raise ValueError(f"{path}:{lineno}: expected {2 + N_TOPICS} cells, got {len(row)}")
            values = []
            for cell in row[2:]:
                cell = cell.strip()
                if cell not in ("0", "1"):
                    raise ValueError(f"{path}:{lineno}: label cells must be 0 or 1, got {cell!r}")
                values.append(cell == "1")
            ratings.append(Rating(tweet_id=row[0], rater_id=row[1], labels=TopicLabels(tuple(values))))
    return ratings


def kappa_report_to_csv(report: KappaReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "fleiss_kappa"])
    for topic in TOPICS:
        v = report.per_label[topic]
        w.writerow([topic, repr(v) if v is not None else "degenerate"])
    w.writerow(["mean", repr(report.mean_kappa)])
    w.writerow(["raters", report.r])
    w.writerow(["items", report.n_items])
    return buf.getvalue()
