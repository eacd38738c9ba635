"""One entry point for the whole pipeline.

Subcommands: ingest, preprocess, train, evaluate, kappa, ablate, trends,
serve, export. Exit codes: 0 success, 1 user error, 2 internal error.
Every subcommand reads and writes only explicit paths.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import traceback
from pathlib import Path

from . import agreement, classifier, dataset, ingest, metrics, preprocess
from .config import extractor_from_values, read_config_file, train_config_from_values
from .features import extract
from .ingest import LoadStats, RawTweet, format_created_at, parse_created_at
from .labels import TOPICS, LabelStats
from .optim import train as run_train
from .store import Store


class UserError(Exception):
    """Expected failure reported to the user; exits 1 without a traceback."""


class CliParser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; the contract is 1
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UserError(f"{what} not found: {path}")
    return p


def build_parser() -> CliParser:
    parser = CliParser(prog="tweettopics", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=CliParser)

    p = sub.add_parser("ingest", help="filter and dedupe raw tweets")
    p.add_argument("--in", dest="inp", required=True, help="raw JSONL input")
    p.add_argument("--keywords", help="keyword file (one per line, # comments)")
    p.add_argument("--out", help="filtered JSONL output")
    p.add_argument("--store", help="also load retained tweets into this store")
    p.add_argument("--lang", default="ne", help="language tag to keep (default ne)")
    p.add_argument("--no-filter", action="store_true",
                   help="skip keyword/language filtering (still dedupes)")

    p = sub.add_parser("preprocess", help="run the five cleaning steps")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True, help="cleaned JSONL output")
    p.add_argument("--report", required=True, help="per-step drop counts CSV")

    p = sub.add_parser("train", help="train a classifier snapshot")
    p.add_argument("--data", required=True, help="labeled dataset CSV")
    p.add_argument("--config", help="key = value training config")
    p.add_argument("--out", required=True, help="model snapshot output")
    p.add_argument("--log", help="per-step loss CSV")
    p.add_argument("--seed", type=int, help="overrides train_seed from config")

    p = sub.add_parser("evaluate", help="evaluate a snapshot on a labeled CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="report CSV")
    p.add_argument("--store", help="publish the report to this store")

    p = sub.add_parser("kappa", help="inter-annotator agreement report")
    p.add_argument("--annotations", required=True, help="tweet_id,rater_id,topic_1..8 CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--store", help="publish the report to this store")

    p = sub.add_parser("ablate", help="mean macro AUPR at subsampled dataset sizes")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="key = value training config")
    p.add_argument("--sizes", required=True, help="comma-separated sizes, e.g. 300,1000")
    p.add_argument("--out", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("trends", help="trend buckets from a store")
    p.add_argument("--store", required=True)
    p.add_argument("--granularity", choices=["day", "week"], default="week")
    p.add_argument("--topic")
    p.add_argument("--from", dest="time_from")
    p.add_argument("--to", dest="time_to")
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="run the annotation/retrain API")
    p.add_argument("--config", required=True)

    p = sub.add_parser("export", help="export the corpus CSV from a store")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)

    return parser


def cmd_ingest(args) -> int:
    if not args.out and not args.store:
        raise UserError("ingest needs --out and/or --store")
    if not args.no_filter and not args.keywords:
        raise UserError("ingest needs --keywords (or --no-filter)")
    path = _require_file(args.inp, "input file")
    kw = ingest.load_keywords(_require_file(args.keywords, "keyword file")) \
        if not args.no_filter else None

    stats = LoadStats()
    dropped_dupes: list[RawTweet] = []
    kept: list[RawTweet] = []
    filtered_out = 0
    for tweet in ingest.dedupe(ingest.load_jsonl(path, stats), dropped_dupes):
        if kw is not None and not ingest.keyword_filter(tweet, kw, lang=args.lang):
            filtered_out += 1
            continue
        kept.append(tweet)

    if args.out:
        with Path(args.out).open("w", encoding="utf-8") as fh:
            for t in kept:
                fh.write(json.dumps(
                    {"id": t.id, "created_at": format_created_at(t.created_at),
                     "text": t.text, "lang": t.lang},
                    ensure_ascii=False) + "\n")
    if args.store:
        Store(args.store).upsert_tweets(kept)
    print(f"loaded={stats.loaded} malformed={stats.skipped} "
          f"duplicates={len(dropped_dupes)} filtered_out={filtered_out} kept={len(kept)}")
    return 0


def cmd_preprocess(args) -> int:
    path = _require_file(args.inp, "input file")
    report = preprocess.PipelineReport()
    with Path(args.out).open("w", encoding="utf-8") as fh:
        for tweet in ingest.load_jsonl(path):
            clean = preprocess.preprocess_pipeline(tweet, report)
            if clean is None:
                continue
            fh.write(json.dumps(
                {"id": clean.id, "created_at": format_created_at(clean.created_at),
                 "text": clean.text, "word_count": clean.word_count, "lang": tweet.lang},
                ensure_ascii=False) + "\n")
    with Path(args.report).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "modified", "dropped"])
        for step in preprocess.STEP_NAMES:
            w.writerow([step, report.modified[step], report.dropped[step]])
        w.writerow(["total", report.seen, report.seen - report.kept])
    print(f"seen={report.seen} kept={report.kept} "
          f"dropped={report.seen - report.kept}")
    return 0


def _load_examples(data_path: str, extractor) -> list[metrics.LabeledExample]:
    rows = dataset.read_dataset_csv(_require_file(data_path, "dataset"))
    if not rows:
        raise UserError(f"no rows in {data_path}")
    return [
        metrics.LabeledExample(id=r.tweet_id, features=extract(r.text, extractor),
                               labels=r.labels)
        for r in rows
    ]


def cmd_train(args) -> int:
    values = read_config_file(_require_file(args.config, "config")) if args.config else {}
    extractor = extractor_from_values(values)
    cfg = train_config_from_values(values, seed=args.seed)
    examples = _load_examples(args.data, extractor)

    stats = LabelStats.from_labels([ex.labels for ex in examples])
    if any(p == 0 or n == 0 for p, n in zip(stats.pos, stats.neg)):
        print("warning: some labels have zero positives or negatives; "
              "using add-one smoothing for bias init", file=sys.stderr)
        stats = stats.smoothed()
    init = classifier.ModelSnapshot.initial(extractor, classifier.init_bias(stats),
                                            version="v1")
    result = run_train([(ex.features, ex.labels) for ex in examples], cfg, init)
    classifier.save_snapshot(result.snapshot, args.out)
    if args.log:
        with Path(args.log).open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "loss"])
            for i, loss in enumerate(result.losses):
                w.writerow([i, repr(loss)])
    final = result.losses[-1] if result.losses else float("nan")
    print(f"trained on {len(examples)} examples, {len(result.losses)} steps, "
          f"final loss {final:.6f}; snapshot -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    snap = classifier.load_snapshot(_require_file(args.model, "model"))
    examples = _load_examples(args.data, snap.extractor)
    report = metrics.evaluate_model(snap, examples)
    Path(args.out).write_text(metrics.report_to_csv(report), encoding="utf-8")
    print(metrics.render_report_tables(report))
    if args.store:
        Store(args.store).put_report(
            "metrics", {**report.to_dict(), "scope": "evaluate-cli",
                        "model_version": snap.version})
    return 0


def cmd_kappa(args) -> int:
    ratings = agreement.read_annotations_csv(_require_file(args.annotations, "annotations"))
    report = agreement.kappa_report(ratings)
    Path(args.out).write_text(agreement.kappa_report_to_csv(report), encoding="utf-8")
    for topic in TOPICS:
        v = report.per_label[topic]
        print(f"{topic}\t{v:.4f}" if v is not None else f"{topic}\tdegenerate")
    print(f"mean\t{report.mean_kappa:.4f}  (raters={report.r}, items={report.n_items})")
    if args.store:
        Store(args.store).put_report("kappa", report.to_dict())
    return 0


def cmd_ablate(args) -> int:
    values = read_config_file(_require_file(args.config, "config")) if args.config else {}
    extractor = extractor_from_values(values)
    cfg = train_config_from_values(values, seed=args.seed)
    examples = _load_examples(args.data, extractor)
    ds = metrics.LabeledDataset(examples=tuple(examples), extractor=extractor)
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise UserError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
    result = metrics.ablate_data_size(ds, sizes, cfg, k=args.folds, seed=args.seed)
    with Path(args.out).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["size", "mean_macro_aupr"])
        for size in sizes:
            w.writerow([size, repr(result[size])])
    for size in sizes:
        print(f"size={size} mean_macro_aupr={result[size]:.4f}")
    return 0


def cmd_trends(args) -> int:
    store = Store(_require_file(args.store, "store"))
    try:
        time_from = parse_created_at(args.time_from) if args.time_from else None
        time_to = parse_created_at(args.time_to) if args.time_to else None
        buckets = store.trend_series(args.granularity, topic=args.topic,
                                     time_from=time_from, time_to=time_to)
    except ValueError as exc:
        raise UserError(str(exc)) from None
    with Path(args.out).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["window_start", "granularity", "topic", "count"])
        for b in buckets:
            w.writerow([format_created_at(b.window_start), b.granularity, b.topic, b.count])
    print(f"{len(buckets)} buckets -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, load_config

    config = load_config(_require_file(args.config, "config"))
    app = create_app(config)
    uvicorn.run(app, host=config.bind_host, port=config.bind_port, log_level="info")
    return 0


def cmd_export(args) -> int:
    store = Store(_require_file(args.store, "store"))
    out = Path(args.out)
    out.write_text(store.export_corpus_csv(), encoding="utf-8")
    mapping = {f"topic_{k + 1}": name for k, name in enumerate(TOPICS)}
    dataset.sidecar_path(out).write_text(
        json.dumps({"columns": mapping}, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8")
    print(f"exported {store.count_tweets()} tweets -> {args.out}")
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "kappa": cmd_kappa,
    "ablate": cmd_ablate,
    "trends": cmd_trends,
    "serve": cmd_serve,
    "export": cmd_export,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(sys.stderr)
        print("tweettopics: error: a subcommand is required", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UserError as exc:
        print(f"tweettopics {args.command}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"tweettopics {args.command}: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
