"""Shared key = value config parsing for the CLI and the service."""
from __future__ import annotations

from pathlib import Path

from .features import ExtractorConfig
from .optim import TrainConfig


def parse_config_text(text: str) -> dict[str, str]:
    """Parse the key = value config format; '#' starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        values[key.strip()] = value
    return values


def read_config_file(path: str | Path) -> dict[str, str]:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def extractor_from_values(values: dict[str, str]) -> ExtractorConfig:
    return ExtractorConfig(
        dim=int(values.get("extractor_dim", 2**16)),
        ngram_min=int(values.get("extractor_ngram_min", 1)),
        ngram_max=int(values.get("extractor_ngram_max", 4)),
        seed=int(values.get("extractor_seed", 0)),
    )


def train_config_from_values(values: dict[str, str], seed: int | None = None) -> TrainConfig:
    return TrainConfig(
        peak_lr=float(values.get("train_peak_lr", 5e-5)),
        weight_decay=float(values.get("train_weight_decay", 0.01)),
        warmup_frac=float(values.get("train_warmup_frac", 0.10)),
        decay_power=float(values.get("train_decay_power", 1.0)),
        end_lr=float(values.get("train_end_lr", 0.0)),
        epochs=int(values.get("train_epochs", 10)),
        batch_size=int(values.get("train_batch_size", 32)),
        seed=int(values.get("train_seed", 0)) if seed is None else seed,
    )
