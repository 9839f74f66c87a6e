"""Node speed over cumulative retweet snapshots, topic diversity, and their relation."""

__version__ = "0.1.0"

from .config import AnalysisConfig
from .errors import InputError, NodeSpeedError
from .graph import (
    Snapshot,
    SnapshotSeries,
    batch_distances,
    build_series,
    connected_component,
    shortest_path_length,
)
from .ingest import Corpus, EventKind, InteractionEvent, dedup_for_topics, describe, normalize_text, parse_events
from .speed import NewLinkBatch, UserSpeedRecord, collect_batches, compute_speeds, node_speed_at
from .stats import PairedSample, ols_regression, spearman, summarize, tail_overlap
from .synth import GeneratorConfig, generate
from .topics import TopicProfile, build_profiles, monotonicity, topic_variation

__all__ = [
    "AnalysisConfig",
    "Corpus",
    "EventKind",
    "GeneratorConfig",
    "InputError",
    "InteractionEvent",
    "NewLinkBatch",
    "NodeSpeedError",
    "PairedSample",
    "Snapshot",
    "SnapshotSeries",
    "TopicProfile",
    "UserSpeedRecord",
    "batch_distances",
    "build_profiles",
    "build_series",
    "collect_batches",
    "compute_speeds",
    "connected_component",
    "dedup_for_topics",
    "describe",
    "generate",
    "monotonicity",
    "node_speed_at",
    "normalize_text",
    "ols_regression",
    "parse_events",
    "shortest_path_length",
    "spearman",
    "summarize",
    "tail_overlap",
    "topic_variation",
]
