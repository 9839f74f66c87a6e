"""Node speed: how far, in the previous snapshot, a user's new retweet links reach.

For user ``u`` and bin ``t`` with retweet targets ``v_1..v_n`` (repeats
included)::

    S(u, t) = sum_i d_{t-1}(u, v_i) / n

where ``d_{t-1}`` is the hop distance in snapshot ``t-1``. A target that is
absent from snapshot ``t-1``, disconnected from ``u`` there, or paired with a
``u`` that is itself absent contributes ``fallback_distance`` (1 by default).
Bin 1 has no prior snapshot, so all of its targets take the fallback.

A user's final speed is the mean of ``S(u, t)`` over the bins in which they
retweeted at least once.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .config import AnalysisConfig
from .errors import InputError
from .graph import Snapshot, SnapshotSeries, batch_distances
from .ingest import Corpus, EventKind


@dataclass(frozen=True)
class NewLinkBatch:
    user: str
    snapshot_index: int
    targets: Counter = field(default_factory=Counter)

    @property
    def n(self) -> int:
        return sum(self.targets.values())

    @property
    def support(self) -> list[str]:
        return sorted(self.targets)


@dataclass(frozen=True)
class UserSpeedRecord:
    user: str
    per_snapshot: dict[int, float]
    final_speed: float
    retweet_count: int


def collect_batches(corpus: Corpus, series: SnapshotSeries) -> list[NewLinkBatch]:
    """One batch per (user, bin) with at least one retweet, sorted by user then bin."""
    grouped: dict[tuple[str, int], Counter] = defaultdict(Counter)
    for ev in corpus.events:
        if ev.kind is EventKind.RETWEET:
            grouped[(ev.actor_id, series.bin_of(ev.timestamp))][ev.target_id] += 1
    return [NewLinkBatch(u, t, targets) for (u, t), targets in sorted(grouped.items())]


def node_speed_at(
    batch: NewLinkBatch,
    prior: Optional[Snapshot],
    fallback_distance: float = 1.0,
    summation_mode: str = "multiset",
) -> float:
    """``S(u, t)`` for one batch measured against the prior snapshot.

    ``summation_mode="support"`` sums each distinct target once (still divided
    by the full multiplicity ``n``).
    """
    n = batch.n
    if n == 0:
        raise InputError("empty batch")
    if summation_mode not in ("multiset", "support"):
        raise InputError(f"unknown summation_mode {summation_mode!r}")
    support = batch.support
    dist = batch_distances(prior, batch.user, support) if prior is not None else {}
    terms = []
    for v in support:
        d = dist.get(v)
        eff = fallback_distance if d is None else d
        terms.append(eff * batch.targets[v] if summation_mode == "multiset" else eff)
    return math.fsum(terms) / n


def _speeds_for(
    batches: Sequence[NewLinkBatch], series: SnapshotSeries, config: AnalysisConfig
) -> list[float]:
    return [
        node_speed_at(
            b,
            series[b.snapshot_index - 1] if b.snapshot_index > 1 else None,
            config.fallback_distance,
            config.summation_mode,
        )
        for b in batches
    ]


def retweet_counts(corpus: Corpus) -> Counter:
    return Counter(ev.actor_id for ev in corpus.events if ev.kind is EventKind.RETWEET)


def compute_speeds(
    corpus: Corpus,
    series: SnapshotSeries,
    config: AnalysisConfig = AnalysisConfig(),
    threads: int = 1,
) -> list[UserSpeedRecord]:
    """Final speeds for every user with at least ``config.min_retweets`` retweets.

    Batches are evaluated independently against immutable snapshots, so any
    ``threads`` value gives bit-identical results. Users whose only activity
    falls in an excluded first bin get no record.
    """
    counts = retweet_counts(corpus)
    batches = [
        b
        for b in collect_batches(corpus, series)
        if counts[b.user] >= config.min_retweets
        and (config.include_first_bin or b.snapshot_index > 1)
    ]
    if threads > 1 and len(batches) > 1:
        chunk = math.ceil(len(batches) / (threads * 4))
        chunks = [batches[i : i + chunk] for i in range(0, len(batches), chunk)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = pool.map(lambda c: _speeds_for(c, series, config), chunks)
            speeds = [s for part in parts for s in part]
    else:
        speeds = _speeds_for(batches, series, config)

    per_user: dict[str, dict[int, float]] = defaultdict(dict)
    for b, s in zip(batches, speeds):
        per_user[b.user][b.snapshot_index] = s
    return [
        UserSpeedRecord(
            user=u,
            per_snapshot=per_user[u],
            final_speed=math.fsum(per_user[u].values()) / len(per_user[u]),
            retweet_count=counts[u],
        )
        for u in sorted(per_user)
    ]


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def speeds_to_csv(records: Iterable[UserSpeedRecord], n_snapshots: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["user_id", "retweet_count", "final_speed"] + [f"S_{t}" for t in range(1, n_snapshots + 1)]
    )
    for r in records:
        per = [repr(r.per_snapshot[t]) if t in r.per_snapshot else "" for t in range(1, n_snapshots + 1)]
        writer.writerow([r.user, r.retweet_count, repr(r.final_speed)] + per)
    return buf.getvalue()


def speeds_to_json(records: Iterable[UserSpeedRecord], n_snapshots: int) -> str:
    doc = {
        "n_snapshots": n_snapshots,
        "users": [
            {
                "user_id": r.user,
                "retweet_count": r.retweet_count,
                "final_speed": r.final_speed,
                "per_snapshot": {str(t): s for t, s in sorted(r.per_snapshot.items())},
            }
            for r in records
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def read_speeds_csv(text: str) -> dict[str, float]:
    """``user_id -> final_speed`` from a file written by :func:`speeds_to_csv`."""
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None or not {"user_id", "final_speed"} <= set(reader.fieldnames):
        raise InputError("speed file lacks user_id/final_speed columns")
    return {row["user_id"]: float(row["final_speed"]) for row in reader}
