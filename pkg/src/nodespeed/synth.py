"""Seeded synthetic retweet corpora with a per-user exploration knob.

Each user acts ``events_per_user_per_bin`` times per bin. On every action the
user retweets either an existing neighbor (probability ``1 - theta``) or a
uniformly chosen non-neighbor (probability ``theta``). A user with no
neighbor yet who takes the neighbor branch retweets its bootstrap partner
``(i + 1) mod n_users``. Each retweet carries a topic label from a sticky
process: keep the previous topic with probability ``1 - phi``, otherwise
switch to a uniformly chosen different topic.

Randomness comes from the raw 64-bit output of the PCG64 generator
(``numpy.random.PCG64``); bounded integers use rejection sampling and floats
take the top 53 bits, so a seed yields the same corpus on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Sequence

import numpy as np

from .errors import InputError
from .ingest import Corpus, EventKind, InteractionEvent

DEFAULT_START = datetime(2020, 10, 1, tzinfo=timezone.utc)

_TWO64 = 1 << 64


class Pcg64Stream:
    """Buffered raw PCG64 stream with portable bounded-integer and float draws."""

    def __init__(self, seed: int, buffer: int = 4096):
        if not 0 <= seed < _TWO64:
            raise InputError("seed must be an unsigned 64-bit integer")
        self._bits = np.random.PCG64(seed)
        self._bufsize = buffer
        self._buf: list[int] = []
        self._pos = 0

    def next_u64(self) -> int:
        if self._pos == len(self._buf):
            self._buf = self._bits.random_raw(self._bufsize).tolist()
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return x

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, k: int) -> int:
        """Uniform integer in ``range(k)``."""
        if k <= 0:
            raise ValueError("k must be positive")
        limit = _TWO64 - (_TWO64 % k)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % k


@dataclass(frozen=True)
class GeneratorConfig:
    n_users: int
    n_bins: int
    events_per_user_per_bin: int
    exploration: tuple[float, ...]
    topic_flip_prob: tuple[float, ...]
    seed: int = 0
    n_topics: int = 10
    bin_width: timedelta = timedelta(days=14)
    start: datetime = DEFAULT_START

    def __post_init__(self) -> None:
        if self.n_users < 2:
            raise InputError("n_users must be >= 2")
        if self.n_bins < 1 or self.events_per_user_per_bin < 1 or self.n_topics < 1:
            raise InputError("n_bins, events_per_user_per_bin and n_topics must be >= 1")
        for name in ("exploration", "topic_flip_prob"):
            probs = getattr(self, name)
            if len(probs) != self.n_users:
                raise InputError(f"{name} needs one value per user")
            if not all(0.0 <= p <= 1.0 for p in probs):
                raise InputError(f"{name} values must lie in [0, 1]")
        if self.n_topics < 2 and any(self.topic_flip_prob):
            raise InputError("topic switching needs at least 2 topics")
        if self.bin_width <= timedelta(0):
            raise InputError("bin_width must be positive")

    @classmethod
    def from_cohorts(
        cls,
        n_users: int,
        n_bins: int,
        events_per_user_per_bin: int,
        theta_values: Sequence[float],
        phi_values: Sequence[float] = (0.0,),
        **kwargs,
    ) -> "GeneratorConfig":
        """Spread each value list over users in equal contiguous blocks."""
        return cls(
            n_users=n_users,
            n_bins=n_bins,
            events_per_user_per_bin=events_per_user_per_bin,
            exploration=spread(theta_values, n_users),
            topic_flip_prob=spread(phi_values, n_users),
            **kwargs,
        )

    def user_id(self, i: int) -> str:
        return f"u{i:0{max(4, len(str(self.n_users - 1)))}d}"


def spread(values: Sequence[float], n_users: int) -> tuple[float, ...]:
    """User ``i`` gets ``values[i * len(values) // n_users]``."""
    if not values:
        raise InputError("value list is empty")
    k = len(values)
    return tuple(float(values[i * k // n_users]) for i in range(n_users))


def generate(config: GeneratorConfig) -> Corpus:
    """Generate a corpus; identical configs give identical corpora."""
    rng = Pcg64Stream(config.seed)
    n = config.n_users
    ids = [config.user_id(i) for i in range(n)]
    nbr_list: list[list[int]] = [[] for _ in range(n)]
    nbr_set: list[set[int]] = [set() for _ in range(n)]
    topic: list[int] = [-1] * n

    steps = n * config.events_per_user_per_bin
    width_s = int(config.bin_width.total_seconds())
    total = steps * config.n_bins
    id_width = len(str(total - 1))
    events = []
    counter = 0
    for b in range(config.n_bins):
        bin_start = config.start + b * config.bin_width
        for step in range(steps):
            i = step % n
            if rng.random() < config.exploration[i] and len(nbr_set[i]) < n - 1:
                while True:
                    j = rng.below(n)
                    if j != i and j not in nbr_set[i]:
                        break
            elif nbr_list[i]:
                j = nbr_list[i][rng.below(len(nbr_list[i]))]
            else:
                j = (i + 1) % n
            if j not in nbr_set[i]:
                nbr_set[i].add(j)
                nbr_list[i].append(j)
                nbr_set[j].add(i)
                nbr_list[j].append(i)

            if topic[i] < 0:
                topic[i] = rng.below(config.n_topics)
            elif rng.random() < config.topic_flip_prob[i]:
                other = rng.below(config.n_topics - 1)
                topic[i] = other if other < topic[i] else other + 1

            events.append(
                InteractionEvent(
                    event_id=f"e{counter:0{id_width}d}",
                    actor_id=ids[i],
                    kind=EventKind.RETWEET,
                    timestamp=bin_start + timedelta(seconds=step * width_s // steps),
                    target_id=ids[j],
                    topic_id=topic[i],
                )
            )
            counter += 1
    return Corpus.from_events(events)
