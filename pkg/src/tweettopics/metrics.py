"""Evaluation: per-label F1 and AUPR, averaged scores, k-fold CV, size ablation.

AUPR uses the average-precision step rule sum((R_n - R_{n-1}) * P_n); linear
interpolation between PR points is known to overestimate and is not used.
Micro AUPR is deliberately not reported.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .classifier import ModelSnapshot, densify, forward_infer, init_bias
from .features import ExtractorConfig, FeatureVector
from .labels import TOPICS, LabelStats, TopicLabels
from .optim import TrainConfig, train


@dataclass(frozen=True)
class PRCurve:
    """(recall, precision) points ordered by increasing recall, plus step-rule area."""

    points: tuple[tuple[float, float], ...]
    aupr: float


def pr_curve(scores: Sequence[float], truth: Sequence[bool]) -> PRCurve:
    """Precision-recall sweep over distinct score values, descending.

    Tied scores are processed as a single group. Requires at least one
    positive; AUPR is undefined otherwise.
    """
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(truth, dtype=bool)
    if s.shape != t.shape or s.ndim != 1 or len(s) == 0:
        raise ValueError("scores and truth must be equal-length nonempty 1-d sequences")
    n_pos = int(t.sum())
    if n_pos == 0:
        raise ValueError("AUPR undefined: no positives in truth")
    order = np.argsort(-s, kind="stable")
    s, t = s[order], t[order]
    points: list[tuple[float, float]] = []
    aupr = 0.0
    tp = fp = 0
    prev_recall = 0.0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j < n and s[j] == s[i]:
            j += 1
        tp += int(t[i:j].sum())
        fp += (j - i) - int(t[i:j].sum())
        precision = tp / (tp + fp)
        recall = tp / n_pos
        aupr += (recall - prev_recall) * precision
        points.append((recall, precision))
        prev_recall = recall
        i = j
    return PRCurve(points=tuple(points), aupr=aupr)


@dataclass(frozen=True)
class LabelMetrics:
    label: str
    f1: float
    support: int
    aupr: float | None = None


@dataclass(frozen=True)
class EvalReport:
    per_label: tuple[LabelMetrics, ...]
    micro_f1: float
    macro_f1: float
    weighted_f1: float
    macro_aupr: float | None = None
    weighted_aupr: float | None = None
    fold_id: int | None = None
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "per_label": [
                {"label": m.label, "f1": m.f1, "aupr": m.aupr, "support": m.support}
                for m in self.per_label
            ],
            "averaged": {
                "micro_f1": self.micro_f1,
                "macro_f1": self.macro_f1,
                "weighted_f1": self.weighted_f1,
                "macro_aupr": self.macro_aupr,
                "weighted_aupr": self.weighted_aupr,
            },
            "fold_id": self.fold_id,
            "flags": list(self.flags),
        }


def _f1(tp: int, fp: int, fn: int) -> float:
    # F1 = 0 when precision + recall degenerates to 0
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 0.0
    return 2 * tp / denom


def f1_scores(
    pred: Sequence[Sequence[bool]],
    truth: Sequence[Sequence[bool]],
    labels: Sequence[str] = TOPICS,
) -> EvalReport:
    """Per-label, micro (pooled), macro, and support-weighted F1."""
    P = np.asarray([tuple(p) for p in pred], dtype=bool)
    T = np.asarray([tuple(t) for t in truth], dtype=bool)
    if P.shape != T.shape or P.ndim != 2 or P.shape[0] == 0:
        raise ValueError("pred and truth must be equal-shape nonempty label matrices")
    n_labels = P.shape[1]
    tp = (P & T).sum(axis=0)
    fp = (P & ~T).sum(axis=0)
    fn = (~P & T).sum(axis=0)
    support = T.sum(axis=0)
    per = tuple(
        LabelMetrics(label=labels[k], f1=_f1(int(tp[k]), int(fp[k]), int(fn[k])),
                     support=int(support[k]))
        for k in range(n_labels)
    )
    micro = _f1(int(tp.sum()), int(fp.sum()), int(fn.sum()))
    macro = float(np.mean([m.f1 for m in per]))
    total_support = int(support.sum())
    weighted = (
        sum(m.f1 * m.support for m in per) / total_support if total_support else 0.0
    )
    return EvalReport(per_label=per, micro_f1=micro, macro_f1=macro, weighted_f1=weighted)


@dataclass(frozen=True)
class LabeledExample:
    id: str
    features: FeatureVector
    labels: TopicLabels


@dataclass(frozen=True)
class LabeledDataset:
    examples: tuple[LabeledExample, ...]
    extractor: ExtractorConfig

    def __len__(self) -> int:
        return len(self.examples)

    def ids(self) -> list[str]:
        return [ex.id for ex in self.examples]


def evaluate_model(snap: ModelSnapshot, examples: Sequence[LabeledExample],
                   fold_id: int | None = None, chunk: int = 256) -> EvalReport:
    """Score a snapshot: thresholded F1 plus per-label AUPR from probabilities.

    Labels with no positive truth get no AUPR; they are flagged and excluded
    from the AUPR averages.
    """
    if not examples:
        raise ValueError("cannot evaluate on an empty example list")
    probs_rows = []
    for start in range(0, len(examples), chunk):
        X = densify([ex.features for ex in examples[start : start + chunk]], snap.dim)
        probs_rows.append(forward_infer(X, snap))
    probs = np.vstack(probs_rows)
    truth = np.asarray([tuple(ex.labels) for ex in examples], dtype=bool)
    pred = probs >= snap.threshold

    base = f1_scores(pred, truth)
    flags: list[str] = []
    per: list[LabelMetrics] = []
    auprs: list[float | None] = []
    for k, m in enumerate(base.per_label):
        if truth[:, k].any():
            aupr = pr_curve(probs[:, k], truth[:, k]).aupr
        else:
            aupr = None
            flags.append(f"no positives for {m.label}; AUPR absent")
        auprs.append(aupr)
        per.append(replace(m, aupr=aupr))
    defined = [(m.support, a) for m, a in zip(per, auprs) if a is not None]
    macro_aupr = float(np.mean([a for _, a in defined])) if defined else None
    wsum = sum(s for s, _ in defined)
    weighted_aupr = (sum(s * a for s, a in defined) / wsum) if wsum else None
    return EvalReport(
        per_label=tuple(per),
        micro_f1=base.micro_f1, macro_f1=base.macro_f1, weighted_f1=base.weighted_f1,
        macro_aupr=macro_aupr, weighted_aupr=weighted_aupr,
        fold_id=fold_id, flags=tuple(flags),
    )


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: dict[str, int]
    seed: int

    def __post_init__(self):
        sizes = self.fold_sizes()
        if max(sizes) - min(sizes) > 1:
            raise ValueError(f"fold sizes must differ by at most 1, got {sizes}")

    def fold_sizes(self) -> list[int]:
        sizes = [0] * self.k
        for fold in self.assignments.values():
            sizes[fold] += 1
        return sizes


def make_fold_plan(ids: Sequence[str], k: int = 5, seed: int = 0) -> FoldPlan:
    """Seeded uniform shuffle into k folds whose sizes differ by at most one.

    Depends only on the id set (ids are sorted before shuffling), so the
    same collection always yields the same plan. No stratification.
    """
    unique = sorted(set(ids))
    if len(unique) != len(ids):
        raise ValueError("ids must be unique")
    if k < 2 or k > len(unique):
        raise ValueError("require 2 <= k <= number of ids")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(unique))
    n, rem = divmod(len(unique), k)
    assignments: dict[str, int] = {}
    pos = 0
    for fold in range(k):
        size = n + (1 if fold < rem else 0)
        for idx in order[pos : pos + size]:
            assignments[unique[idx]] = fold
        pos += size
    return FoldPlan(k=k, assignments=assignments, seed=seed)


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float  # sample std (ddof=1); 0 for a single fold
    n: int

    def formatted(self, digits: int = 3) -> str:
        return f"{self.mean:.{digits}f} ± {self.std:.{digits}f}"


@dataclass(frozen=True)
class CVSummary:
    """Per-metric mean and sample std across folds, Table-style."""

    plan: FoldPlan
    fold_reports: tuple[EvalReport, ...]
    per_label_f1: dict[str, MetricSummary]
    per_label_aupr: dict[str, MetricSummary | None]
    micro_f1: MetricSummary
    macro_f1: MetricSummary
    weighted_f1: MetricSummary
    macro_aupr: MetricSummary | None
    weighted_aupr: MetricSummary | None
    flags: tuple[str, ...] = ()


def _summarize(values: list[float]) -> MetricSummary:
    arr = np.asarray(values, dtype=np.float64)
    std = float(np.std(arr, ddof=1)) if len(arr) > 1 else 0.0
    return MetricSummary(mean=float(arr.mean()), std=std, n=len(arr))


def _smoothed_bias(labels: list[TopicLabels]) -> tuple[np.ndarray, bool]:
    stats = LabelStats.from_labels(labels)
    if any(p == 0 or n == 0 for p, n in zip(stats.pos, stats.neg)):
        return init_bias(stats.smoothed()), True
    return init_bias(stats), False


def cross_validate(dataset: LabeledDataset, plan: FoldPlan, cfg: TrainConfig) -> CVSummary:
    """Train on k-1 folds, evaluate on the held-out fold, aggregate mean +- std.

    Bias init falls back to add-one smoothing (flagged) when a training fold
    has a label with no positives or no negatives.
    """
    ids = set(dataset.ids())
    if ids != set(plan.assignments):
        raise ValueError("fold plan does not cover exactly the dataset ids")
    flags: list[str] = []
    reports: list[EvalReport] = []
    for fold in range(plan.k):
        train_ex = [ex for ex in dataset.examples if plan.assignments[ex.id] != fold]
        test_ex = [ex for ex in dataset.examples if plan.assignments[ex.id] == fold]
        bias, smoothed = _smoothed_bias([ex.labels for ex in train_ex])
        if smoothed:
            flags.append(f"fold {fold}: add-one smoothing applied to bias init")
        init = ModelSnapshot.initial(dataset.extractor, bias)
        result = train([(ex.features, ex.labels) for ex in train_ex], cfg, init)
        report = evaluate_model(result.snapshot, test_ex, fold_id=fold)
        flags.extend(f"fold {fold}: {f}" for f in report.flags)
        reports.append(report)

    per_label_f1 = {}
    per_label_aupr: dict[str, MetricSummary | None] = {}
    for k, label in enumerate(TOPICS):
        per_label_f1[label] = _summarize([r.per_label[k].f1 for r in reports])
        defined = [r.per_label[k].aupr for r in reports if r.per_label[k].aupr is not None]
        per_label_aupr[label] = _summarize(defined) if defined else None

    def avg(attr: str) -> MetricSummary | None:
        vals = [getattr(r, attr) for r in reports if getattr(r, attr) is not None]
        return _summarize(vals) if vals else None

    return CVSummary(
        plan=plan,
        fold_reports=tuple(reports),
        per_label_f1=per_label_f1,
        per_label_aupr=per_label_aupr,
        micro_f1=_summarize([r.micro_f1 for r in reports]),
        macro_f1=_summarize([r.macro_f1 for r in reports]),
        weighted_f1=_summarize([r.weighted_f1 for r in reports]),
        macro_aupr=avg("macro_aupr"),
        weighted_aupr=avg("weighted_aupr"),
        flags=tuple(flags),
    )


def ablate_data_size(
    dataset: LabeledDataset,
    sizes: Sequence[int],
    cfg: TrainConfig,
    k: int = 5,
    seed: int = 0,
) -> dict[int, float]:
    """Mean macro AUPR of k-fold CV at each subsampled dataset size.

    The subsample for a given (seed, size) is fixed, so repeating a size
    reproduces its result, and size == len(dataset) equals plain CV.
    """
    out: dict[int, float] = {}
    for size in sizes:
        if size > len(dataset):
            raise ValueError(f"size {size} exceeds dataset size {len(dataset)}")
        rng = np.random.default_rng([seed, size])
        chosen = set(rng.choice(dataset.ids(), size=size, replace=False))
        sub = LabeledDataset(
            examples=tuple(ex for ex in dataset.examples if ex.id in chosen),
            extractor=dataset.extractor,
        )
        plan = make_fold_plan(sub.ids(), k=k, seed=seed)
        summary = cross_validate(sub, plan, cfg)
        out[size] = summary.macro_aupr.mean if summary.macro_aupr else float("nan")
    return out


ABSENT_CELL = "-"


def render_cv_tables(summary: CVSummary) -> str:
    """Human-readable per-label and averaged tables; micro AUPR renders absent."""
    lines = ["Labels\tF1 Score\tArea under PR Curve"]
    for label in TOPICS:
        f1 = summary.per_label_f1[label].formatted()
        aupr = summary.per_label_aupr[label]
        lines.append(f"{label}\t{f1}\t{aupr.formatted() if aupr else ABSENT_CELL}")
    lines.append("")
    lines.append("Avg. Type\tF1 Score\tAUPR")
    lines.append(f"Micro\t{summary.micro_f1.formatted()}\t{ABSENT_CELL}")
    lines.append(
        f"Macro\t{summary.macro_f1.formatted()}\t"
        f"{summary.macro_aupr.formatted() if summary.macro_aupr else ABSENT_CELL}"
    )
    lines.append(
        f"Weighted\t{summary.weighted_f1.formatted()}\t"
        f"{summary.weighted_aupr.formatted() if summary.weighted_aupr else ABSENT_CELL}"
    )
    return "\n".join(lines)


def render_report_tables(report: EvalReport) -> str:
    lines = ["Labels\tF1 Score\tArea under PR Curve"]
    for m in report.per_label:
        aupr = f"{m.aupr:.3f}" if m.aupr is not None else ABSENT_CELL
        lines.append(f"{m.label}\t{m.f1:.3f}\t{aupr}")
    lines.append("")
    lines.append("Avg. Type\tF1 Score\tAUPR")
    lines.append(f"Micro\t{report.micro_f1:.3f}\t{ABSENT_CELL}")
    macro_aupr = f"{report.macro_aupr:.3f}" if report.macro_aupr is not None else ABSENT_CELL
    weighted_aupr = (
        f"{report.weighted_aupr:.3f}" if report.weighted_aupr is not None else ABSENT_CELL
    )
    lines.append(f"Macro\t{report.macro_f1:.3f}\t{macro_aupr}")
    lines.append(f"Weighted\t{report.weighted_f1:.3f}\t{weighted_aupr}")
    return "\n".join(lines)


def report_to_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row_type", "label", "f1", "aupr", "support"])
    for m in report.per_label:
        w.writerow(["label", m.label, repr(m.f1),
                    repr(m.aupr) if m.aupr is not None else ABSENT_CELL, m.support])
    w.writerow(["averaged", "micro", repr(report.micro_f1), ABSENT_CELL, ""])
    w.writerow(["averaged", "macro", repr(report.macro_f1),
                repr(report.macro_aupr) if report.macro_aupr is not None else ABSENT_CELL, ""])
    w.writerow(["averaged", "weighted", repr(report.weighted_f1),
                repr(report.weighted_aupr) if report.weighted_aupr is not None else ABSENT_CELL, ""])
    return buf.getvalue()


def cv_summary_to_csv(summary: CVSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row_type", "label", "metric", "mean", "std_sample", "formatted"])
    for label in TOPICS:
        s = summary.per_label_f1[label]
        w.writerow(["label", label, "f1", repr(s.mean), repr(s.std), s.formatted()])
        a = summary.per_label_aupr[label]
        if a is not None:
            w.writerow(["label", label, "aupr", repr(a.mean), repr(a.std), a.formatted()])
        else:
            w.writerow(["label", label, "aupr", ABSENT_CELL, ABSENT_CELL, ABSENT_CELL])
    w.writerow(["averaged", "", "micro_f1", repr(summary.micro_f1.mean),
                repr(summary.micro_f1.std), summary.micro_f1.formatted()])
    w.writerow(["averaged", "", "micro_aupr", ABSENT_CELL, ABSENT_CELL, ABSENT_CELL])
    for name in ("macro_f1", "weighted_f1", "macro_aupr", "weighted_aupr"):
        s = getattr(summary, name)
        if s is None:
            w.writerow(["averaged", "", name, ABSENT_CELL, ABSENT_CELL, ABSENT_CELL])
        else:
            w.writerow(["averaged", "", name, repr(s.mean), repr(s.std), s.formatted()])
    return buf.getvalue()
