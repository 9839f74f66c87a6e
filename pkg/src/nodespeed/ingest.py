"""Event ingestion: parsing, validation, text normalization and dedup.

Input records carry the fields ``event_id, actor_id, kind, target_id,
timestamp, text, topic_id, topic_category``. JSONL uses one object per line;
CSV uses a header row with the same names and treats an empty cell as an
absent optional field.

Record-level problems never abort a parse on their own. Each bad record is
excluded and reported as a :class:`Diagnostic` carrying its line number; the
parse only fails when the share of bad records exceeds ``max_error_rate``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import IO, Iterable, Iterator, Optional, Union

from .errors import InputError

logger = logging.getLogger(__name__)

FIELDS = (
    "event_id",
    "actor_id",
    "kind",
    "target_id",
    "timestamp",
    "text",
    "topic_id",
    "topic_category",
)

DEFAULT_MAX_ERROR_RATE = 0.01


class EventKind(str, Enum):
    RETWEET = "retweet"
    REPLY = "reply"
    ORIGINAL = "original"
    QUOTE = "quote"


@dataclass(frozen=True)
class InteractionEvent:
    event_id: str
    actor_id: str
    kind: EventKind
    timestamp: datetime
    target_id: Optional[str] = None
    text: Optional[str] = None
    topic_id: Optional[int] = None
    topic_category: Optional[str] = None

    @property
    def sort_key(self) -> tuple[datetime, str]:
        return (self.timestamp, self.event_id)


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str
    event_id: Optional[str] = None

    def __str__(self) -> str:
        where = f"line {self.line}"
        if self.event_id is not None:
            where += f" (event {self.event_id})"
        return f"{where}: {self.message}"


Window = tuple[datetime, datetime]


@dataclass(frozen=True)
class Corpus:
    """Immutable, time-sorted collection of validated events."""

    events: tuple[InteractionEvent, ...]
    window: Optional[Window] = None
    diagnostics: tuple[Diagnostic, ...] = ()
    n_records: int = 0

    @classmethod
    def from_events(
        cls,
        events: Iterable[InteractionEvent],
        window: Optional[Window] = None,
        diagnostics: Iterable[Diagnostic] = (),
        n_records: Optional[int] = None,
    ) -> "Corpus":
        ordered = tuple(sorted(events, key=lambda e: e.sort_key))
        seen: set[str] = set()
        for ev in ordered:
            if ev.event_id in seen:
                raise InputError(f"duplicate event_id {ev.event_id!r}")
            seen.add(ev.event_id)
        if window is None and ordered:
            window = (ordered[0].timestamp, ordered[-1].timestamp)
        if window is not None:
            start, end = window
            if end < start:
                raise InputError("window end precedes window start")
            for ev in ordered:
                if not start <= ev.timestamp <= end:
                    raise InputError(f"event {ev.event_id!r} lies outside the study window")
        return cls(
            events=ordered,
            window=window,
            diagnostics=tuple(diagnostics),
            n_records=len(ordered) if n_records is None else n_records,
        )

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[InteractionEvent]:
        return iter(self.events)

    def replace_events(self, events: Iterable[InteractionEvent]) -> "Corpus":
        """Same window and diagnostics, different (already valid) events."""
        return Corpus(
            events=tuple(sorted(events, key=lambda e: e.sort_key)),
            window=self.window,
            diagnostics=self.diagnostics,
            n_records=self.n_records,
        )


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


class _RecordError(Exception):
    pass


def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339 instant into an aware UTC datetime at second precision."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError:
        raise _RecordError(f"invalid timestamp {value!r}") from None
    if ts.tzinfo is None:
        raise _RecordError(f"timestamp {value!r} has no UTC offset")
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _opt_str(record: dict, name: str, csv_mode: bool) -> Optional[str]:
    value = record.get(name)
    if value is None or (csv_mode and value == ""):
        return None
    if isinstance(value, bool):
        raise _RecordError(f"{name} must be a string")
    if isinstance(value, int) and name.endswith("_id"):
        value = str(value)
    if not isinstance(value, str):
        raise _RecordError(f"{name} must be a string")
    return value


def _record_to_event(record: dict, csv_mode: bool) -> InteractionEvent:
    if not isinstance(record, dict):
        raise _RecordError("record is not an object")
    event_id = _opt_str(record, "event_id", csv_mode)
    if not event_id:
        raise _RecordError("missing event_id")
    actor_id = _opt_str(record, "actor_id", csv_mode)
    if not actor_id:
        raise _RecordError("missing actor_id")
    raw_kind = _opt_str(record, "kind", csv_mode)
    if raw_kind is None:
        raise _RecordError("missing kind")
    try:
        kind = EventKind(raw_kind)
    except ValueError:
        raise _RecordError(f"unknown kind {raw_kind!r}") from None

    target_id = _opt_str(record, "target_id", csv_mode) or None
    if kind is EventKind.ORIGINAL:
        if target_id is not None:
            raise _RecordError("unexpected target_id on original event")
    elif target_id is None:
        raise _RecordError("missing target_id")
    if kind is EventKind.RETWEET and target_id == actor_id:
        raise _RecordError("self-retweet")

    raw_ts = _opt_str(record, "timestamp", csv_mode)
    if raw_ts is None:
        raise _RecordError("missing timestamp")
    timestamp = parse_timestamp(raw_ts)

    topic_id = record.get("topic_id")
    if topic_id is None or (csv_mode and topic_id == ""):
        topic_id = None
    else:
        if isinstance(topic_id, str):
            try:
                topic_id = int(topic_id.strip())
            except ValueError:
                raise _RecordError(f"invalid topic_id {record['topic_id']!r}") from None
        elif isinstance(topic_id, bool) or not isinstance(topic_id, int):
            raise _RecordError(f"invalid topic_id {topic_id!r}")
        if topic_id < 0:
            raise _RecordError("topic_id must be >= 0")

    return InteractionEvent(
        event_id=event_id,
        actor_id=actor_id,
        kind=kind,
        timestamp=timestamp,
        target_id=target_id,
        text=_opt_str(record, "text", csv_mode),
        topic_id=topic_id,
        topic_category=_opt_str(record, "topic_category", csv_mode),
    )


def _iter_jsonl(text: str) -> Iterator[tuple[int, object]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            yield lineno, json.loads(line)
        except json.JSONDecodeError as exc:
            yield lineno, _RecordError(f"invalid JSON: {exc.msg}")


def _iter_csv(text: str) -> Iterator[tuple[int, object]]:
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None:
        return
    missing = {"event_id", "actor_id", "kind", "timestamp"} - set(reader.fieldnames)
    if missing:
        raise InputError(f"CSV header lacks required columns: {sorted(missing)}")
    for row in reader:
        # line_num is the physical line the row ended on
        yield reader.line_num, row


def parse_events(
    source: Union[bytes, IO[bytes]],
    format: str = "jsonl",
    window: Optional[Window] = None,
    max_error_rate: float = DEFAULT_MAX_ERROR_RATE,
) -> Corpus:
    """Parse a UTF-8 byte stream of events into a sorted, validated corpus.

    Bad records are excluded and listed in ``Corpus.diagnostics``. Raises
    :class:`InputError` if the stream cannot be decoded or if the fraction of
    bad records exceeds ``max_error_rate``.
    """
    if format not in ("jsonl", "csv"):
        raise InputError(f"unknown input format {format!r}")
    try:
        data = source if isinstance(source, bytes) else source.read()
        text = data.decode("utf-8-sig")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"unreadable input stream: {exc}") from exc

    records = _iter_jsonl(text) if format == "jsonl" else _iter_csv(text)
    events: list[InteractionEvent] = []
    diagnostics: list[Diagnostic] = []
    seen: set[str] = set()
    n_records = 0
    for lineno, record in records:
        n_records += 1
        event_id = record.get("event_id") if isinstance(record, dict) else None
        try:
            if isinstance(record, _RecordError):
                raise record
            event = _record_to_event(record, csv_mode=format == "csv")
            if event.event_id in seen:
                raise _RecordError("duplicate event_id")
            if window is not None and not window[0] <= event.timestamp <= window[1]:
                raise _RecordError("timestamp outside study window")
        except _RecordError as exc:
            diag = Diagnostic(lineno, str(exc), None if event_id is None else str(event_id))
            logger.warning("%s", diag)
            diagnostics.append(diag)
            continue
        seen.add(event.event_id)
        events.append(event)

    if n_records and len(diagnostics) / n_records > max_error_rate:
        raise InputError(
            f"{len(diagnostics)} of {n_records} records are malformed "
            f"(threshold {max_error_rate:.2%}); first: {diagnostics[0]}"
        )
    return Corpus.from_events(events, window=window, diagnostics=diagnostics, n_records=n_records)


def event_to_record(event: InteractionEvent) -> dict:
    return {
        "event_id": event.event_id,
        "actor_id": event.actor_id,
        "kind": event.kind.value,
        "target_id": event.target_id,
        "timestamp": format_timestamp(event.timestamp),
        "text": event.text,
        "topic_id": event.topic_id,
        "topic_category": event.topic_category,
    }


def dump_jsonl(events: Iterable[InteractionEvent], fh: IO[str]) -> None:
    for event in events:
        fh.write(json.dumps(event_to_record(event), ensure_ascii=False, separators=(",", ":")))
        fh.write("\n")


# ---------------------------------------------------------------------------
# Text normalization and dedup
# ---------------------------------------------------------------------------

MENTION_RE = re.compile(r"@\w+")


def normalize_text(text: str) -> str:
    """Comparison key for duplicate detection.

    Drops @-mentions, whitespace and every character in the Unicode
    punctuation (P*) or symbol (S*) categories, then lowercases.
    """
    text = unicodedata.normalize("NFC", text)
    text = MENTION_RE.sub("", text)
    kept = "".join(
        ch for ch in text if not ch.isspace() and unicodedata.category(ch)[0] not in "PS"
    )
    return unicodedata.normalize("NFC", kept.lower())


def dedup_for_topics(corpus: Corpus) -> Corpus:
    """Drop retweets, then keep only the earliest event per normalized text.

    Events with no text cannot collide and are always kept.
    """
    seen: set[str] = set()
    kept = []
    for event in corpus.events:
        if event.kind is EventKind.RETWEET:
            continue
        if event.text is not None:
            key = normalize_text(event.text)
            if key in seen:
                continue
            seen.add(key)
        kept.append(event)
    return corpus.replace_events(kept)


# ---------------------------------------------------------------------------
# Descriptive statistics
# ---------------------------------------------------------------------------

TWEET_THRESHOLDS = (("=1", 1), ("<=2", 2), ("<=3", 3), ("<=5", 5), ("<=10", 10), ("<=20", 20))


@dataclass(frozen=True)
class DescriptiveReport:
    n_events: int
    kind_percentages: dict[str, float]
    n_users: int
    mean_events_per_user: float
    max_events_per_user: int
    threshold_proportions: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_events": self.n_events,
            "tweet_types": dict(self.kind_percentages),
            "users": {
                "num_users": self.n_users,
                "avg_tweets_per_user": self.mean_events_per_user,
                "max_tweets_per_user": self.max_events_per_user,
            },
            "tweet_thresholds": dict(self.threshold_proportions),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["table", "metric", "value"])
        for kind, pct in self.kind_percentages.items():
            writer.writerow(["tweet_types", kind, repr(pct)])
        writer.writerow(["users", "num_users", self.n_users])
        writer.writerow(["users", "avg_tweets_per_user", repr(self.mean_events_per_user)])
        writer.writerow(["users", "max_tweets_per_user", self.max_events_per_user])
        for label, prop in self.threshold_proportions.items():
            writer.writerow(["tweet_thresholds", label, repr(prop)])
        return buf.getvalue()


def describe(corpus: Corpus) -> DescriptiveReport:
    """Tweet-type shares (percent), per-user volume, and user-count thresholds."""
    n = len(corpus.events)
    if n == 0:
        raise InputError("empty corpus")
    kinds = Counter(e.kind for e in corpus.events)
    per_user = Counter(e.actor_id for e in corpus.events)
    n_users = len(per_user)
    counts = list(per_user.values())
    return DescriptiveReport(
        n_events=n,
        kind_percentages={k.value: 100.0 * kinds.get(k, 0) / n for k in EventKind},
        n_users=n_users,
        mean_events_per_user=n / n_users,
        max_events_per_user=max(counts),
        threshold_proportions={
            label: sum(1 for c in counts if c <= limit) / n_users
            for label, limit in TWEET_THRESHOLDS
        },
    )
