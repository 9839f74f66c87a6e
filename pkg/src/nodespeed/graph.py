"""Cumulative temporal snapshots of the undirected retweet graph.

The study window is cut into fixed-width bins anchored at the window start.
Bin ``t`` (1-based) covers ``[start + (t-1)*w, start + t*w)`` and snapshot
``t`` holds every retweet edge whose timestamp is strictly before
``start + t*w``, i.e. the graph as it stands at the end of bin ``t``.

The whole series is stored as a single graph in which every edge remembers
the first bin it appeared in. A :class:`Snapshot` is a read-only view that
ignores edges newer than its index, so holding all T snapshots costs no more
memory than the final graph.
"""

from __future__ import annotations

import csv
import json
import math
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass
from datetime import datetime, timedelta
from itertools import islice
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .errors import InputError
from .ingest import Corpus, EventKind, format_timestamp

DEFAULT_BIN_WIDTH = timedelta(days=14)


class SnapshotSeries:
    def __init__(
        self,
        start: datetime,
        bin_width: timedelta,
        n_bins: int,
        edge_bins: dict[tuple[str, str], int],
    ):
        self.start = start
        self.bin_width = bin_width
        self.n_bins = n_bins
        self._edge_bins = dict(edge_bins)

        staged: dict[str, list[tuple[int, str]]] = {}
        for (a, b), t in self._edge_bins.items():
            staged.setdefault(a, []).append((t, b))
            staged.setdefault(b, []).append((t, a))
        self._nbr_bins: dict[str, list[int]] = {}
        self._nbrs: dict[str, list[str]] = {}
        self._node_bin: dict[str, int] = {}
        for node in sorted(staged):
            entries = sorted(staged[node])
            self._nbr_bins[node] = [t for t, _ in entries]
            self._nbrs[node] = [v for _, v in entries]
            self._node_bin[node] = entries[0][0]
        self._snapshots = tuple(Snapshot(self, t) for t in range(1, n_bins + 1))

    def bin_of(self, ts: datetime) -> int:
        """1-based index of the bin containing ``ts``."""
        return (ts - self.start) // self.bin_width + 1

    def bin_start(self, t: int) -> datetime:
        return self.start + (t - 1) * self.bin_width

    @property
    def snapshots(self) -> tuple["Snapshot", ...]:
        return self._snapshots

    def __len__(self) -> int:
        return self.n_bins

    def __getitem__(self, t: int) -> "Snapshot":
        """Snapshot by its 1-based index."""
        if not 1 <= t <= self.n_bins:
            raise IndexError(f"snapshot index {t} out of range 1..{self.n_bins}")
        return self._snapshots[t - 1]

    def __iter__(self) -> Iterator["Snapshot"]:
        return iter(self._snapshots)


@dataclass(frozen=True, eq=False)
class Snapshot:
    series: SnapshotSeries
    index: int

    @property
    def bin_start(self) -> datetime:
        return self.series.bin_start(self.index)

    def __contains__(self, node: str) -> bool:
        t = self.series._node_bin.get(node)
        return t is not None and t <= self.index

    def neighbors(self, node: str) -> Iterator[str]:
        bins = self.series._nbr_bins.get(node)
        if bins is None:
            return iter(())
        return islice(self.series._nbrs[node], bisect_right(bins, self.index))

    def degree(self, node: str) -> int:
        bins = self.series._nbr_bins.get(node)
        return 0 if bins is None else bisect_right(bins, self.index)

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset(n for n, t in self.series._node_bin.items() if t <= self.index)

    def edges(self) -> list[tuple[str, str]]:
        """Edges as ``(u, v)`` with ``u < v``, lexicographically sorted."""
        return sorted(e for e, t in self.series._edge_bins.items() if t <= self.index)

    def number_of_edges(self) -> int:
        return sum(1 for t in self.series._edge_bins.values() if t <= self.index)

    def has_edge(self, u: str, v: str) -> bool:
        t = self.series._edge_bins.get((u, v) if u < v else (v, u))
        return t is not None and t <= self.index


def bin_count(window: tuple[datetime, datetime], bin_width: timedelta) -> int:
    """Number of bins needed so that every instant of the closed window lands in one."""
    start, end = window
    return (end - start) // bin_width + 1


def build_series(corpus: Corpus, bin_width: timedelta = DEFAULT_BIN_WIDTH) -> SnapshotSeries:
    """Build the cumulative snapshot series from the corpus's retweets.

    Only retweets contribute. A retweet in either direction between two users
    yields one undirected edge, recorded at the earliest bin it occurs in.
    """
    if bin_width <= timedelta(0):
        raise InputError("bin_width must be positive")
    if not corpus.events or corpus.window is None:
        raise InputError("empty corpus")
    start = corpus.window[0]
    edge_bins: dict[tuple[str, str], int] = {}
    for ev in corpus.events:
        if ev.kind is not EventKind.RETWEET:
            continue
        a, b = ev.actor_id, ev.target_id
        key = (a, b) if a < b else (b, a)
        t = (ev.timestamp - start) // bin_width + 1
        if t < edge_bins.get(key, math.inf):
            edge_bins[key] = t
    if not edge_bins:
        raise InputError("no retweet edges")
    return SnapshotSeries(start, bin_width, bin_count(corpus.window, bin_width), edge_bins)


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


def bfs_distances(snapshot: Snapshot, source: str) -> dict[str, int]:
    """Hop distance from ``source`` to every node reachable in the snapshot."""
    if source not in snapshot:
        return {}
    dist = {source: 0}
    queue = deque([source])
    while queue:
        node = queue.popleft()
        d = dist[node] + 1
        for nbr in snapshot.neighbors(node):
            if nbr not in dist:
                dist[nbr] = d
                queue.append(nbr)
    return dist


def batch_distances(
    snapshot: Snapshot, u: str, targets: Iterable[str]
) -> dict[str, Optional[int]]:
    """Distances from ``u`` to each target using one BFS that stops early.

    ``None`` marks a target that is missing from the snapshot or not
    reachable from ``u``.
    """
    result: dict[str, Optional[int]] = {v: None for v in targets}
    if u not in snapshot:
        return result
    pending = {v for v in result if v in snapshot}
    if u in pending:
        result[u] = 0
        pending.discard(u)
    if not pending:
        return result
    seen = {u}
    frontier = [u]
    depth = 0
    while frontier and pending:
        depth += 1
        nxt = []
        for node in frontier:
            for nbr in snapshot.neighbors(node):
                if nbr in seen:
                    continue
                seen.add(nbr)
                nxt.append(nbr)
                if nbr in pending:
                    result[nbr] = depth
                    pending.discard(nbr)
        frontier = nxt
    return result


def shortest_path_length(snapshot: Snapshot, u: str, v: str) -> Optional[int]:
    return batch_distances(snapshot, u, (v,))[v]


def connected_component(snapshot: Snapshot, u: str) -> set[str]:
    if u not in snapshot:
        raise InputError("node not in snapshot")
    return set(bfs_distances(snapshot, u))


def connected_components(snapshot: Snapshot) -> list[set[str]]:
    """All components, largest first (ties broken by smallest member)."""
    remaining = set(snapshot.nodes)
    comps = []
    for node in sorted(snapshot.nodes):
        if node in remaining:
            comp = connected_component(snapshot, node)
            remaining -= comp
            comps.append(comp)
    comps.sort(key=lambda c: (-len(c), min(c)))
    return comps


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def export_series(series: SnapshotSeries, out_dir: Path) -> Path:
    """Write one ``snapshot_XXX.csv`` edge list per snapshot plus ``snapshots.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(series.n_bins)))
    manifest = []
    for snap in series:
        name = f"snapshot_{snap.index:0{width}d}.csv"
        edges = snap.edges()
        with open(out_dir / name, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerows(edges)
        manifest.append(
            {
                "index": snap.index,
                "bin_start": format_timestamp(snap.bin_start),
                "file": name,
                "n_nodes": len(snap.nodes),
                "n_edges": len(edges),
            }
        )
    path = out_dir / "snapshots.json"
    path.write_text(
        json.dumps(
            {"bin_width_seconds": series.bin_width.total_seconds(), "snapshots": manifest},
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return path
