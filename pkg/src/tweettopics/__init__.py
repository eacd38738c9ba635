"""Devanagari tweet topic classification: ingestion, preprocessing, training
with an imbalance-aware recipe, evaluation, agreement, and the
human-in-the-loop annotation service."""

from .labels import N_TOPICS, TOPICS, TopicLabels

__version__ = "0.1.0"

__all__ = ["TOPICS", "N_TOPICS", "TopicLabels", "__version__"]
