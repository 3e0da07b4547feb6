"""Undirected simple graphs: representation, generation, sampling and file I/O.

Graphs are immutable after construction and node ids are preserved (never
re-indexed) by every operation, so matrices computed over the same node set
by different pipelines stay aligned.
"""

from __future__ import annotations

import hashlib
import logging
import math
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import IO, Iterable, Iterator, NamedTuple

import numpy as np

from .seeds import derive_seed

logger = logging.getLogger(__name__)


class Graph:
    """Immutable undirected, unweighted simple graph over non-negative int ids.

    Invariants: symmetric adjacency, no self-loops, no parallel edges, every
    neighbor id is a node.  Construct via :meth:`from_edges`.
    """

    def __init__(self, adjacency: dict[int, tuple[int, ...]]):
        # Trusted constructor: `adjacency` must already be canonical
        # (sorted neighbor tuples, symmetric, loop-free).
        self._adj = adjacency
        self._nodes = tuple(sorted(adjacency))

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], nodes: Iterable[int] = ()) -> "Graph":
        """Build a graph from an edge iterable plus optional extra node ids.

        Duplicate edges collapse (set semantics); self-loops are rejected.
        """
        adj: dict[int, set[int]] = {int(v): set() for v in nodes}
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if u < 0 or v < 0:
                raise ValueError(f"negative node id in edge ({u}, {v})")
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        if any(v < 0 for v in adj):
            raise ValueError("negative node id")
        return cls({u: tuple(sorted(nbrs)) for u, nbrs in adj.items()})

    @property
    def nodes(self) -> tuple[int, ...]:
        return self._nodes

    @property
    def n_nodes(self) -> int:
        return len(self._nodes)

    @property
    def n_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self._adj.values()) // 2

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def __contains__(self, v: int) -> bool:
        return v in self._adj

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self._adj.get(u, ())
        i = bisect_left(nbrs, v)
        return i < len(nbrs) and nbrs[i] == v

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield each edge once as (u, v) with u < v, in (u, v) order."""
        for u in self._nodes:
            for v in self._adj[u]:
                if v > u:
                    yield (u, v)

    @cached_property
    def node_order(self) -> np.ndarray:
        """Ascending node ids as an int64 array (matrix row/column order)."""
        return np.asarray(self._nodes, dtype=np.int64)

    @cached_property
    def degrees(self) -> np.ndarray:
        """Degrees aligned with :attr:`node_order`."""
        return np.asarray([len(self._adj[v]) for v in self._nodes], dtype=np.int64)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) over positional indices 0..n-1, neighbors sorted."""
        index = {v: i for i, v in enumerate(self._nodes)}
        indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        chunks = []
        for i, v in enumerate(self._nodes):
            row = np.asarray([index[w] for w in self._adj[v]], dtype=np.int64)
            chunks.append(row)
            indptr[i + 1] = indptr[i] + len(row)
        indices = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
        return indptr, indices

    def adjacency_matrix(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency over :attr:`node_order`."""
        n = self.n_nodes
        indptr, indices = self.csr
        a = np.zeros((n, n), dtype=np.float64)
        rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
        a[rows, indices] = 1.0
        return a

    @cached_property
    def content_hash(self) -> str:
        """Hex digest of the node set and edge set (cache key material)."""
        h = hashlib.sha256()
        h.update(np.asarray(self._nodes, dtype=np.int64).tobytes())
        h.update(b"|")
        for u, v in self.edges():
            h.update(u.to_bytes(8, "little"))
            h.update(v.to_bytes(8, "little"))
        return h.hexdigest()

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self._adj == other._adj

    def __hash__(self) -> int:
        return hash(self.content_hash)

    def __repr__(self) -> str:
        return f"Graph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


@dataclass(frozen=True)
class EdgeListStats:
    """Bookkeeping from parsing an edge-list file."""

    n_nodes: int
    n_edges: int
    dropped_self_loops: int
    dropped_duplicates: int

    @property
    def dropped(self) -> int:
        return self.dropped_self_loops + self.dropped_duplicates


def load_edge_list_stats(source: str | Path | IO[str]) -> tuple[Graph, EdgeListStats]:
    """Parse an edge-list stream, returning the graph and drop counts.

    Format: one edge per line, two whitespace-separated decimal node ids.
    Lines starting with '#' or '%' are comments; blank lines are ignored.
    Duplicate edges and self-loops are dropped (counted in the stats).
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_edge_list_stats(fh)

    edges: set[tuple[int, int]] = set()
    nodes: set[int] = set()
    self_loops = 0
    duplicates = 0
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line[0] in "#%":
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ValueError(f"line {lineno}: expected two node ids, got {len(tokens)} tokens")
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise ValueError(f"line {lineno}: malformed node id in {tokens!r}") from None
        if u < 0 or v < 0:
            raise ValueError(f"line {lineno}: negative node id")
        nodes.add(u)
        nodes.add(v)
        if u == v:
            self_loops += 1
            continue
        pair = (u, v) if u < v else (v, u)
        if pair in edges:
            duplicates += 1
        else:
            edges.add(pair)
    if not nodes:
        raise ValueError("empty edge list")
    g = Graph.from_edges(edges, nodes)
    stats = EdgeListStats(g.n_nodes, g.n_edges, self_loops, duplicates)
    if stats.dropped:
        logger.info("edge list: dropped %d self-loop and %d duplicate lines",
                    self_loops, duplicates)
    return g, stats


def load_edge_list(source: str | Path | IO[str]) -> Graph:
    """Parse an edge-list stream into a :class:`Graph`."""
    return load_edge_list_stats(source)[0]


def save_edge_list(g: Graph, sink: str | Path | IO[str]) -> None:
    """Write edges sorted by (min id, max id), one "u v" pair per line.

    The format cannot express isolated nodes; round-tripping is exact only
    for graphs with minimum degree >= 1.
    """
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as fh:
            save_edge_list(g, fh)
        return
    for u, v in sorted(g.edges()):
        sink.write(f"{u} {v}\n")


def generate_barabasi(n: int, m: int, seed: int) -> Graph:
    """Preferential-attachment graph: an m-clique seed, then each new node
    attaches to m distinct existing nodes chosen proportionally to degree.

    Always connected; deterministic in (n, m, seed).
    """
    if m < 1 or n <= m:
        raise ValueError(f"need n > m >= 1, got n={n}, m={m}")
    rng = np.random.default_rng(seed)
    edges: list[tuple[int, int]] = [(i, j) for i in range(m) for j in range(i + 1, m)]
    # One list entry per incident edge end; uniform picks from it realize
    # degree-proportional attachment.  The m=1 seed "clique" has no edges,
    # so the first attachment falls back to node 0.
    repeated: list[int] = [i for i in range(m) for _ in range(m - 1)] or [0]
    for new in range(m, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(repeated[int(rng.integers(0, len(repeated)))])
        for t in sorted(targets):
            edges.append((t, new))
        repeated.extend(sorted(targets))
        repeated.extend([new] * m)
    return Graph.from_edges(edges)


def remove_node(g: Graph, v: int) -> Graph:
    """New graph without node ``v`` and all incident edges; ``g`` unchanged."""
    if v not in g:
        raise ValueError(f"node {v} not in graph")
    adj = {u: tuple(w for w in g.neighbors(u) if w != v) for u in g.nodes if u != v}
    return Graph(adj)


def induced_subgraph(g: Graph, nodes: Iterable[int]) -> Graph:
    """Subgraph on ``nodes`` keeping every edge with both ends inside."""
    keep = set(nodes)
    missing = keep - set(g.nodes)
    if missing:
        raise ValueError(f"nodes not in graph: {sorted(missing)[:5]}")
    adj = {u: tuple(w for w in g.neighbors(u) if w in keep) for u in keep}
    return Graph(adj)


def connected_components(g: Graph) -> list[list[int]]:
    """Components as sorted node lists, largest first (ties: smaller min id)."""
    seen: set[int] = set()
    comps: list[list[int]] = []
    for start in g.nodes:
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in g.neighbors(u):
                if w not in seen:
                    seen.add(w)
                    comp.append(w)
                    queue.append(w)
        comps.append(sorted(comp))
    comps.sort(key=lambda c: (-len(c), c[0]))
    return comps


def is_connected(g: Graph) -> bool:
    return g.n_nodes > 0 and len(connected_components(g)[0]) == g.n_nodes


def largest_connected_component(g: Graph) -> Graph:
    """Induced subgraph on the largest component (ties: smallest contained id)."""
    if g.n_nodes == 0:
        raise ValueError("empty graph has no components")
    return induced_subgraph(g, connected_components(g)[0])


def snowball_sample(g: Graph, target_n: int, seed: int) -> Graph:
    """Breadth-first sample of ``target_n`` nodes from a seeded random start.

    Each BFS level is taken in seeded random order; the level that crosses
    ``target_n`` is truncated.  Returns the induced subgraph (connected by
    construction).
    """
    if target_n < 1 or target_n > g.n_nodes:
        raise ValueError(f"target_n must be in [1, {g.n_nodes}], got {target_n}")
    rng = np.random.default_rng(seed)
    start = g.nodes[int(rng.integers(0, g.n_nodes))]
    collected = [start]
    seen = {start}
    frontier = [start]
    while len(collected) < target_n:
        level = sorted({w for u in frontier for w in g.neighbors(u)} - seen)
        if not level:
            raise ValueError(
                f"reachable component exhausted at {len(collected)} nodes, "
                f"wanted {target_n}")
        order = [level[i] for i in rng.permutation(len(level))]
        take = order[: target_n - len(collected)]
        collected.extend(take)
        seen.update(take)
        frontier = take
    return induced_subgraph(g, collected)


class DegreeSample(NamedTuple):
    low: list[int]
    medium: list[int]
    high: list[int]


def stratified_degree_sample(g: Graph, per_bucket: int, seed: int) -> DegreeSample:
    """Sample ``per_bucket`` nodes each from low/medium/high degree pools.

    Nodes are ranked by (degree, id); the low and high pools are the bottom
    and top deciles restricted to degrees at the pool's boundary degree or
    beyond (so a low pick always has a degree among the per_bucket smallest,
    e.g. degree 1 on a path), the medium pool the middle two deciles around
    the median.  Pools widen to ``per_bucket`` when a decile is too small.
    Buckets draw from independent child seeds, so the medium/high samples
    do not depend on whether the low bucket is also drawn.
    """
    n = g.n_nodes
    if per_bucket < 1:
        raise ValueError("per_bucket must be >= 1")
    if n < 3 * per_bucket:
        raise ValueError(f"need at least {3 * per_bucket} nodes, graph has {n}")
    ranked = sorted(g.nodes, key=lambda v: (g.degree(v), v))
    s_edge = max(math.ceil(n / 10), per_bucket)
    s_mid = max(math.ceil(n / 5), per_bucket)
    mid_lo = max(s_edge, (n - s_mid) // 2)
    mid_hi = mid_lo + s_mid
    if mid_hi > n - s_edge:
        mid_hi = n - s_edge
        mid_lo = mid_hi - s_mid
    if mid_lo < s_edge or mid_hi > n - s_edge:
        raise ValueError(f"graph too small to form disjoint degree pools (n={n})")
    low_cap = g.degree(ranked[per_bucket - 1])
    high_floor = g.degree(ranked[n - per_bucket])
    pools = {
        "low": [v for v in ranked[:s_edge] if g.degree(v) <= low_cap],
        "medium": ranked[mid_lo:mid_hi],
        "high": [v for v in ranked[n - s_edge:] if g.degree(v) >= high_floor],
    }
    picks = {}
    for name, pool in pools.items():
        rng = np.random.default_rng(derive_seed(seed, "degree-bucket", name))
        # permutation prefix: a smaller per_bucket samples a subset of a
        # larger one drawn with the same seed
        chosen = rng.permutation(len(pool))[:per_bucket]
        picks[name] = sorted(pool[i] for i in chosen)
    return DegreeSample(picks["low"], picks["medium"], picks["high"])
