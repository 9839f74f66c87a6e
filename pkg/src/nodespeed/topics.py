"""Per-user topic diversity: topic variation and topic monotonicity.

Topic labels are consumed as given (``topic_id`` on each event); producing
them is outside this package.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .errors import InputError
from .ingest import Corpus

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TopicProfile:
    user: str
    sequence: tuple[int, ...]

    @property
    def counts(self) -> Counter:
        return Counter(self.sequence)


def build_profiles(corpus: Corpus) -> list[TopicProfile]:
    """Time-ordered topic sequences for each user with a labeled event."""
    seqs: dict[str, list[int]] = defaultdict(list)
    unlabeled = 0
    for ev in corpus.events:
        if ev.topic_id is None:
            unlabeled += 1
        else:
            seqs[ev.actor_id].append(ev.topic_id)
    if not seqs:
        raise InputError("no topic labels present")
    if unlabeled:
        logger.info("excluded %d events without topic labels", unlabeled)
    return [TopicProfile(u, tuple(seqs[u])) for u in sorted(seqs)]


def count_unlabeled(corpus: Corpus) -> int:
    return sum(1 for ev in corpus.events if ev.topic_id is None)


def topic_variation(profile: TopicProfile, smoothing: str = "none") -> Optional[float]:
    """Inverse of the mean share of prior events that share each event's topic.

    The first event has no prior events and is skipped. With
    ``smoothing="none"`` the result is ``None`` for sequences shorter than two
    or when no event ever repeats an earlier topic (the inverse diverges).
    ``smoothing="add_one"`` adds one to both numerator and denominator of
    every share, which keeps the result finite.
    """
    if smoothing not in ("none", "add_one"):
        raise InputError(f"unknown smoothing {smoothing!r}")
    seq = profile.sequence
    if len(seq) < 2:
        return None
    add = 1 if smoothing == "add_one" else 0
    seen: Counter = Counter()
    total = Fraction(0)
    for i, topic in enumerate(seq):
        if i:
            total += Fraction(seen[topic] + add, i + add)
        seen[topic] += 1
    if total == 0:
        return None
    return float((len(seq) - 1) / total)


def monotonicity(profile: TopicProfile) -> float:
    """Largest fraction of the user's events devoted to one topic."""
    if not profile.sequence:
        raise InputError("empty topic sequence")
    return max(profile.counts.values()) / len(profile.sequence)


@dataclass(frozen=True)
class TopicStats:
    user: str
    n_labeled: int
    variation_raw: Optional[float]
    variation_smoothed: Optional[float]
    monotonicity: float


def topic_stats(profiles: Iterable[TopicProfile]) -> list[TopicStats]:
    out = []
    for p in profiles:
        out.append(
            TopicStats(
                user=p.user,
                n_labeled=len(p.sequence),
                variation_raw=topic_variation(p, "none"),
                variation_smoothed=topic_variation(p, "add_one"),
                monotonicity=monotonicity(p),
            )
        )
    return out


TOPIC_COLUMNS = ["user_id", "n_labeled", "variation_raw", "variation_smoothed", "monotonicity"]


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else repr(x)


def topics_to_csv(stats: Iterable[TopicStats]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TOPIC_COLUMNS)
    for s in stats:
        writer.writerow(
            [s.user, s.n_labeled, _fmt(s.variation_raw), _fmt(s.variation_smoothed), repr(s.monotonicity)]
        )
    return buf.getvalue()


def read_topics_csv(text: str) -> list[TopicStats]:
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None or not set(TOPIC_COLUMNS) <= set(reader.fieldnames):
        raise InputError(f"topics file must have columns {TOPIC_COLUMNS}")

    def opt(v: str) -> Optional[float]:
        return float(v) if v != "" else None

    return [
        TopicStats(
            user=row["user_id"],
            n_labeled=int(row["n_labeled"]),
            variation_raw=opt(row["variation_raw"]),
            variation_smoothed=opt(row["variation_smoothed"]),
            monotonicity=float(row["monotonicity"]),
        )
        for row in reader
    ]
