"""HTTP JSON API backing the dashboard: browse, trends, corrections,
retrain trigger, model/metrics/kappa info.

All endpoints live under /api/v1; admin endpoints require the
X-Admin-Token header. Retrain is single-flight: a second trigger while a
job is queued or running gets 409. The serving snapshot is swapped only
after the new predictions are committed, so every response is attributable
to exactly one model version.
"""
from __future__ import annotations

import hashlib
import itertools
import logging
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import classifier
from .classifier import ModelSnapshot, init_bias, predict_batch
from .config import extractor_from_values, read_config_file, train_config_from_values
from .features import ExtractorConfig, extract
from .ingest import format_created_at, parse_created_at
from .labels import TOPIC_INDEX, TOPICS, LabelStats, TopicLabels
from .metrics import LabeledExample, evaluate_model
from .optim import TrainConfig, train
from .store import STATUS_ORDER, Store, TweetNotFound

logger = logging.getLogger(__name__)

API_PREFIX = "/api/v1"
ADMIN_HEADER = "X-Admin-Token"


@dataclass(frozen=True)
class ServiceConfig:
    store_path: str
    admin_token: str
    bind_host: str = "127.0.0.1"
    bind_port: int = 8765
    keyword_file: Optional[str] = None
    model_path: Optional[str] = None
    dashboard_dir: Optional[str] = None
    extractor: ExtractorConfig = ExtractorConfig()
    train: TrainConfig = TrainConfig()


def load_config(path: str | Path) -> ServiceConfig:
    values = read_config_file(path)
    if "store_path" not in values or "admin_token" not in values:
        raise ValueError("config must define store_path and admin_token")
    return ServiceConfig(
        store_path=values["store_path"],
        admin_token=values["admin_token"],
        bind_host=values.get("bind_host", "127.0.0.1"),
        bind_port=int(values.get("bind_port", 8765)),
        keyword_file=values.get("keyword_file"),
        model_path=values.get("model_path"),
        dashboard_dir=values.get("dashboard_dir"),
        extractor=extractor_from_values(values),
        train=train_config_from_values(values),
    )


@dataclass
class RetrainJob:
    job_id: str
    state: str = "queued"  # queued | running | succeeded | failed
    started_at: Optional[datetime] = None
    finished_at: Optional[datetime] = None
    snapshot_version: Optional[str] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "state": self.state,
            "started_at": format_created_at(self.started_at) if self.started_at else None,
            "finished_at": format_created_at(self.finished_at) if self.finished_at else None,
            "snapshot_version": self.snapshot_version,
            "error": self.error,
        }


class ServiceState:
    """Mutable serving state: snapshot, retrain jobs, locks."""

    def __init__(self, store: Store, config: ServiceConfig):
        self.store = store
        self.config = config
        self.snapshot: Optional[ModelSnapshot] = None
        self.snapshot_lock = threading.Lock()
        self.jobs: dict[str, RetrainJob] = {}
        self.active_job: Optional[str] = None
        self.jobs_lock = threading.Lock()
        self._job_counter = itertools.count(1)

    @property
    def model_version(self) -> Optional[str]:
        snap = self.snapshot
        return snap.version if snap else None

    def swap_snapshot(self, snap: ModelSnapshot) -> None:
        with self.snapshot_lock:
            self.snapshot = snap


def _error(status_code: int, detail) -> JSONResponse:
    return JSONResponse(status_code=status_code, content={"detail": detail})


def _parse_when(value: Optional[str], name: str) -> Optional[datetime]:
    if value is None:
        return None
    try:
        return parse_created_at(value)
    except ValueError:
        raise ValueError(f"malformed {name!r}: expected ISO-8601, got {value!r}") from None


def _dataset_fingerprint(pairs: list[tuple[str, TopicLabels]]) -> str:
    h = hashlib.sha256()
    for tweet_id, labels in sorted(pairs, key=lambda p: p[0]):
        h.update(tweet_id.encode("utf-8"))
        h.update(bytes(int(v) for v in labels))
    return h.hexdigest()[:16]


def reconcile_predictions(state: ServiceState) -> int:
    """Predict every tweet lacking both a human label and a current-version
    prediction; one transaction, stamped with the serving version."""
    snap = state.snapshot
    if snap is None:
        return 0
    rater = f"model:{snap.version}"
    candidates = state.store.tweets_without_human_labels()
    todo = []
    for tweet_id in candidates:
        rec = state.store.effective_annotation(tweet_id)
        if rec is not None and rec.rater_id == rater:
            continue
        todo.append(tweet_id)
    if not todo:
        return 0
    feats, ids = [], []
    for tweet_id in todo:
        tweet = state.store.get_tweet(tweet_id)
        if tweet is None:
            continue
        ids.append(tweet_id)
        feats.append(extract(tweet.text, snap.extractor))
    labels = predict_batch(feats, snap)
    state.store.record_predictions(list(zip(ids, labels)), snap.version)
    return len(ids)


def run_retrain(state: ServiceState, job: RetrainJob) -> None:
    """Train on human-approved records, swap the snapshot, re-predict the rest."""
    store = state.store
    try:
        job.state = "running"
        job.started_at = datetime.now(timezone.utc).replace(microsecond=0)
        supervision = store.supervision_records()
        if not supervision:
            raise ValueError("insufficient supervision: no human_validated or proofread records")
        extractor = state.snapshot.extractor if state.snapshot else state.config.extractor
        examples = []
        for rec in supervision:
            tweet = store.get_tweet(rec.tweet_id)
            if tweet is None:
                continue
            examples.append(LabeledExample(
                id=f"{rec.tweet_id}#{rec.rater_id}",
                features=extract(tweet.text, extractor),
                labels=rec.labels,
            ))
        if not examples:
            raise ValueError("insufficient supervision: no labeled tweets found")

        stats = LabelStats.from_labels([ex.labels for ex in examples])
        if any(p == 0 or n == 0 for p, n in zip(stats.pos, stats.neg)):
            stats = stats.smoothed()
        version = f"v{store.count_snapshots() + 1}"
        fingerprint = _dataset_fingerprint([(ex.id, ex.labels) for ex in examples])
        init = ModelSnapshot.initial(extractor, init_bias(stats),
                                     version=version, trained_on=fingerprint)
        result = train([(ex.features, ex.labels) for ex in examples],
                       state.config.train, init)
        snap = result.snapshot.with_version(version, trained_on=fingerprint)

        report = evaluate_model(snap, examples)
        store.put_report("metrics", {**report.to_dict(), "scope": "supervision-set",
                                     "model_version": version})
        store.put_snapshot(version, classifier.snapshot_to_bytes(snap), set_current=True)
        state.swap_snapshot(snap)
        reconcile_predictions(state)
        job.snapshot_version = version
        job.state = "succeeded"
    except Exception as exc:  # job failure leaves the prior snapshot serving
        logger.exception("retrain job %s failed", job.job_id)
        job.error = str(exc)
        job.state = "failed"
    finally:
        job.finished_at = datetime.now(timezone.utc).replace(microsecond=0)
        with state.jobs_lock:
            if state.active_job == job.job_id:
                state.active_job = None


def create_app(config: ServiceConfig, run_jobs_inline: bool = False) -> FastAPI:
    """Build the API app. run_jobs_inline executes retrain synchronously
    (deterministic tests); production uses a background thread."""
    store = Store(config.store_path)
    state = ServiceState(store, config)

    stored = store.current_snapshot()
    if stored is not None:
        state.snapshot = classifier.snapshot_from_bytes(stored[1])
    elif config.model_path and Path(config.model_path).exists():
        snap = classifier.load_snapshot(config.model_path)
        store.put_snapshot(snap.version, classifier.snapshot_to_bytes(snap), set_current=True)
        state.snapshot = snap
    if state.snapshot is not None:
        reconcile_predictions(state)

    app = FastAPI(title="tweettopics", openapi_url=f"{API_PREFIX}/openapi.json")
    app.state.service = state

    def check_admin(request: Request) -> Optional[JSONResponse]:
        token = request.headers.get(ADMIN_HEADER)
        if not token or token != config.admin_token:
            return _error(401, "missing or invalid admin token")
        return None

    # Query params are validated by hand (not via typed signatures) to keep
    # the documented 400-on-malformed-params contract.
    @app.get(f"{API_PREFIX}/tweets")
    async def tweets_endpoint(request: Request):
        q = request.query_params
        topic = q.get("topic")
        status = q.get("status")
        if topic is not None and topic not in TOPIC_INDEX:
            return _error(400, {"message": f"unknown topic {topic!r}",
                                "allowed_topics": list(TOPICS)})
        if status is not None and status not in STATUS_ORDER:
            return _error(400, {"message": f"unknown status {status!r}",
                                "allowed_statuses": list(STATUS_ORDER)})
        try:
            time_from = _parse_when(q.get("from"), "from")
            time_to = _parse_when(q.get("to"), "to")
            limit = int(q.get("limit", "50"))
            offset = int(q.get("offset", "0"))
            page = store.query_tweets(topic=topic, time_from=time_from, time_to=time_to,
                                      status=status, limit=limit, offset=offset)
        except ValueError as exc:
            return _error(400, str(exc))
        return JSONResponse({
            "items": [
                {
                    "id": v.tweet.id,
                    "created_at": format_created_at(v.tweet.created_at),
                    "text": v.tweet.text,
                    "lang": v.tweet.lang,
                    "labels": v.labels.to_mapping() if v.labels else None,
                    "status": v.status,
                    "rater_id": v.rater_id,
                }
                for v in page.items
            ],
            "total": page.total,
            "limit": page.limit,
            "offset": page.offset,
            "model_version": state.model_version,
        })

    @app.get(f"{API_PREFIX}/trends")
    async def trends_endpoint(request: Request):
        q = request.query_params
        granularity = q.get("granularity", "week")
        topic = q.get("topic")
        if granularity not in ("day", "week"):
            return _error(400, {"message": f"unknown granularity {granularity!r}",
                                "allowed": ["day", "week"]})
        if topic is not None and topic not in TOPIC_INDEX:
            return _error(400, {"message": f"unknown topic {topic!r}",
                                "allowed_topics": list(TOPICS)})
        try:
            time_from = _parse_when(q.get("from"), "from")
            time_to = _parse_when(q.get("to"), "to")
            buckets = store.trend_series(granularity, topic=topic,
                                         time_from=time_from, time_to=time_to)
        except ValueError as exc:
            return _error(400, str(exc))
        return JSONResponse({
            "buckets": [
                {
                    "window_start": format_created_at(b.window_start),
                    "granularity": b.granularity,
                    "topic": b.topic,
                    "count": b.count,
                }
                for b in buckets
            ],
            "model_version": state.model_version,
        })

    @app.get(f"{API_PREFIX}/model")
    async def model_endpoint():
        snap = state.snapshot
        if snap is None:
            return _error(404, "no model deployed")
        return JSONResponse({
            "version": snap.version,
            "trained_on": snap.trained_on,
            "extractor": snap.extractor.to_dict(),
            "topics": list(TOPICS),
            "thresholds": {t: snap.threshold[k] for k, t in enumerate(TOPICS)},
        })

    @app.get(f"{API_PREFIX}/metrics")
    async def metrics_endpoint():
        report = store.get_report("metrics")
        if report is None:
            return _error(404, "no evaluation report available")
        return JSONResponse(report)

    @app.get(f"{API_PREFIX}/kappa")
    async def kappa_endpoint():
        report = store.get_report("kappa")
        if report is None:
            return _error(404, "no agreement report available")
        return JSONResponse(report)

    @app.post(f"{API_PREFIX}/annotations")
    async def annotations_endpoint(request: Request):
        denied = check_admin(request)
        if denied:
            return denied
        try:
            body = await request.json()
        except Exception:
            return _error(422, "body must be JSON")
        if not isinstance(body, dict):
            return _error(422, "body must be a JSON object")
        tweet_id = body.get("tweet_id")
        rater_id = body.get("rater_id")
        labels_obj = body.get("labels")
        status = body.get("status", "human_validated")
        if not tweet_id or not isinstance(tweet_id, str):
            return _error(422, "tweet_id is required")
        if not rater_id or not isinstance(rater_id, str):
            return _error(422, "rater_id is required")
        if status not in ("human_validated", "proofread"):
            return _error(422, "status must be human_validated or proofread")
        if not isinstance(labels_obj, dict):
            return _error(422, "labels must be an object keyed by topic name")
        missing = [t for t in TOPICS if t not in labels_obj]
        unknown = [t for t in labels_obj if t not in TOPIC_INDEX]
        if missing or unknown:
            return _error(422, {"message": "labels must contain exactly the eight topics",
                                "missing_topics": missing, "unknown_topics": unknown})
        non_bool = [t for t, v in labels_obj.items() if not isinstance(v, bool)]
        if non_bool:
            return _error(422, {"message": "label values must be booleans",
                                "bad_topics": non_bool})
        try:
            record = store.record_correction(
                tweet_id, rater_id, TopicLabels.from_mapping(labels_obj), status=status)
        except TweetNotFound:
            return _error(404, f"unknown tweet {tweet_id!r}")
        return JSONResponse({
            "tweet_id": record.tweet_id,
            "rater_id": record.rater_id,
            "labels": record.labels.to_mapping(),
            "status": record.status,
            "updated_at": format_created_at(record.updated_at),
            "model_version": state.model_version,
        })

    @app.post(f"{API_PREFIX}/retrain")
    async def retrain_endpoint(request: Request):
        denied = check_admin(request)
        if denied:
            return denied
        with state.jobs_lock:
            if state.active_job is not None:
                active = state.jobs[state.active_job]
                if active.state in ("queued", "running"):
                    return _error(409, {"message": "a retrain job is already active",
                                        "job_id": active.job_id})
                state.active_job = None
            job = RetrainJob(job_id=f"job-{next(state._job_counter)}")
            state.jobs[job.job_id] = job
            state.active_job = job.job_id
        if run_jobs_inline:
            run_retrain(state, job)
        else:
            thread = threading.Thread(target=run_retrain, args=(state, job), daemon=True)
            thread.start()
        return JSONResponse(job.to_dict())

    @app.get(API_PREFIX + "/retrain/{job_id}")
    async def retrain_status_endpoint(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            return _error(404, f"unknown job {job_id!r}")
        return JSONResponse(job.to_dict())

    if config.dashboard_dir and Path(config.dashboard_dir).is_dir():
        from starlette.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=config.dashboard_dir, html=True),
                  name="dashboard")

    return app
