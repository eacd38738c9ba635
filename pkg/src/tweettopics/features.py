"""Feature extraction: hashed character n-grams, plus an embedding import path.

The hashed extractor stands in for heavyweight pretrained encoders; externally
computed embeddings can be imported and flow through the same training stack.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from math import sqrt
from pathlib import Path

logger = logging.getLogger(__name__)

HASH_NAME = "fnv1a64"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes, seed: int = 0) -> int:
    """Seeded 64-bit FNV-1a. Stable across platforms and runs."""
    h = _FNV_OFFSET ^ (seed & _MASK64)
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class ExtractorConfig:
    kind: str = "hashed_ngrams"  # or "imported_embeddings"
    ngram_min: int = 1
    ngram_max: int = 4
    dim: int = 2**16
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("hashed_ngrams", "imported_embeddings"):
            raise ValueError(f"unknown extractor kind: {self.kind}")
        if not (1 <= self.ngram_min <= self.ngram_max <= 6):
            raise ValueError("require 1 <= ngram_min <= ngram_max <= 6")
        if self.kind == "hashed_ngrams":
            if self.dim & (self.dim - 1) != 0 or not (2**10 <= self.dim <= 2**20):
                raise ValueError("dim must be a power of two in [2^10, 2^20]")
        elif self.dim < 1:
            raise ValueError("dim must be positive")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "ngram_min": self.ngram_min,
            "ngram_max": self.ngram_max,
            "dim": self.dim,
            "seed": self.seed,
            "hash": HASH_NAME,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExtractorConfig":
        return cls(
            kind=d.get("kind", "hashed_ngrams"),
            ngram_min=int(d["ngram_min"]),
            ngram_max=int(d["ngram_max"]),
            dim=int(d["dim"]),
            seed=int(d.get("seed", 0)),
        )


@dataclass(frozen=True)
class FeatureVector:
    """Sparse vector: index -> value, zero-valued entries never stored."""

    dim: int
    entries: dict[int, float]

    def __post_init__(self):
        for idx, val in self.entries.items():
            if not (0 <= idx < self.dim):
                raise ValueError(f"index {idx} out of range for dim {self.dim}")
            if val == 0.0:
                raise ValueError("zero-valued entries must not be stored")

    def l2_norm(self) -> float:
        return sqrt(sum(v * v for v in self.entries.values()))


def extract(text: str, cfg: ExtractorConfig) -> FeatureVector:
    """Hash every character n-gram of lengths [ngram_min, ngram_max], then L2-normalize.

    Deterministic for a fixed (text, cfg); an empty-after-normalization text
    maps to the zero vector.
    """
    counts: dict[int, float] = {}
    n_chars = len(text)
    for n in range(cfg.ngram_min, cfg.ngram_max + 1):
        for i in range(n_chars - n + 1):
            gram = text[i : i + n]
            idx = fnv1a64(gram.encode("utf-8"), cfg.seed) % cfg.dim
            counts[idx] = counts.get(idx, 0.0) + 1.0
    norm = sqrt(sum(v * v for v in counts.values()))
    if norm > 0.0:
        counts = {i: v / norm for i, v in counts.items()}
    return FeatureVector(dim=cfg.dim, entries=counts)


class EmbeddingImportError(ValueError):
    pass


def import_embeddings(path: str | Path) -> dict[str, FeatureVector]:
    """Load precomputed embeddings keyed by tweet id.

    CSV format: header ``id,<dim>`` then rows ``id,v0,...,v{D-1}``.
    JSONL format (by .jsonl extension): ``{"id": ..., "vector": [...]}`` per line.
    Ragged rows and duplicate ids are fatal.
    """
    path = Path(path)
    if path.suffix == ".jsonl":
        return _import_jsonl(path)
    return _import_csv(path)


def _store(vectors: dict[str, FeatureVector], tweet_id: str, values: list[float], dim: int, row: int):
    if len(values) != dim:
        raise EmbeddingImportError(f"row {row}: expected {dim} floats, got {len(values)}")
    if tweet_id in vectors:
        raise EmbeddingImportError(f"row {row}: duplicate id {tweet_id!r}")
    entries = {i: v for i, v in enumerate(values) if v != 0.0}
    vectors[tweet_id] = FeatureVector(dim=dim, entries=entries)


def _import_csv(path: Path) -> dict[str, FeatureVector]:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        logger.warning("%s: empty embedding file", path)
        return {}
    header = lines[0].split(",")
    if len(header) != 2 or header[0].strip() != "id":
        raise EmbeddingImportError(f"bad header {lines[0]!r}, expected 'id,<dim>'")
    try:
        dim = int(header[1])
    except ValueError:
        raise EmbeddingImportError(f"bad header {lines[0]!r}, dim must be an integer") from None
    vectors: dict[str, FeatureVector] = {}
    for row, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        tweet_id = parts[0]
        try:
            values = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise EmbeddingImportError(f"row {row}: {exc}") from None
        _store(vectors, tweet_id, values, dim, row)
    if not vectors:
        logger.warning("%s: no embedding rows", path)
    return vectors


def _import_jsonl(path: Path) -> dict[str, FeatureVector]:
    vectors: dict[str, FeatureVector] = {}
    dim: int | None = None
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        logger.warning("%s: empty embedding file", path)
        return {}
    for row, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            tweet_id = str(obj["id"])
            values = [float(v) for v in obj["vector"]]
        except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
            raise EmbeddingImportError(f"row {row}: {exc}") from None
        if dim is None:
            dim = len(values)
        _store(vectors, tweet_id, values, dim, row)
    if not vectors:
        logger.warning("%s: no embedding rows", path)
    return vectors
