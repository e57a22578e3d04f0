"""Social-graph summary statistics over an edge list."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import kernels

CSV_FIELDS = ["nodes", "edges", "avg_degree", "clustering", "avg_path", "assortativity", "path_sample_size"]
DEFAULT_PATH_SAMPLES = 1000


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """CSR adjacency with sorted neighbour lists.

    For directed graphs ``indptr``/``indices`` hold out-edges and
    ``und_indptr``/``und_indices`` the symmetrised view used for
    clustering and assortativity.
    """

    labels: tuple[str, ...]
    indptr: np.ndarray
    indices: np.ndarray
    directed: bool = False
    und_indptr: Optional[np.ndarray] = None
    und_indices: Optional[np.ndarray] = None
    self_loops_dropped: int = 0
    duplicates_dropped: int = 0

    @property
    def node_count(self) -> int:
        return len(self.labels)

    @property
    def edge_count(self) -> int:
        m = len(self.indices)
        return m if self.directed else m // 2

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def undirected(self) -> tuple[np.ndarray, np.ndarray]:
        if self.directed:
            return self.und_indptr, self.und_indices
        return self.indptr, self.indices


@dataclass(frozen=True)
class GraphStats:
    nodes: int
    edges: int
    avg_degree: float
    clustering: Optional[float]
    avg_path: Optional[float]
    assortativity: Optional[float]
    path_sample_size: int
    clustering_excluded: int = 0
    notes: tuple[str, ...] = field(default=(), compare=False)


def _csr(n: int, pairs: Iterable[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in pairs:
        adj[a].append(b)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(x) for x in adj])
    indices = np.fromiter((v for row in adj for v in sorted(row)), dtype=np.int64, count=int(indptr[-1]))
    return indptr, indices


def from_edges(edges: Iterable[tuple[str, str]], directed: bool = False) -> Graph:
    """Build a graph, dropping self-loops and repeated edges."""
    ids: dict[str, int] = {}
    seen: set[tuple[int, int]] = set()
    loops = dups = 0
    for a, b in edges:
        ia = ids.setdefault(a, len(ids))
        ib = ids.setdefault(b, len(ids))
        if ia == ib:
            loops += 1
            continue
        key = (ia, ib) if directed or ia < ib else (ib, ia)
        if key in seen:
            dups += 1
            continue
        seen.add(key)
    n = len(ids)
    labels = tuple(sorted(ids, key=ids.__getitem__))
    ordered = sorted(seen)
    sym = {(a, b) for a, b in ordered} | {(b, a) for a, b in ordered}
    if directed:
        indptr, indices = _csr(n, ordered)
        uptr, uidx = _csr(n, sorted(sym))
        return Graph(labels, indptr, indices, True, uptr, uidx, loops, dups)
    indptr, indices = _csr(n, sorted(sym))
    return Graph(labels, indptr, indices, False, None, None, loops, dups)


def load_edges(path, directed: bool = False) -> Graph:
    """Read ``src<TAB>dst`` lines."""
    edges = []
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise GraphError(f"{path}:{line_no}: expected src<TAB>dst")
            edges.append((parts[0], parts[1]))
    return from_edges(edges, directed)


def write_edges(edges: Iterable[tuple[str, str]], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for a, b in edges:
            fh.write(f"{a}\t{b}\n")


def degree_assortativity(indptr: np.ndarray, indices: np.ndarray) -> Optional[float]:
    """Pearson correlation of the degrees at either end of every edge.

    Each undirected edge contributes both orientations. ``None`` when all
    endpoint degrees are equal.
    """
    deg = np.diff(indptr)
    src = np.repeat(np.arange(len(deg)), deg)
    x = deg[src].astype(np.float64)
    y = deg[indices].astype(np.float64)
    if len(x) < 2:
        return None
    xm, ym = x - x.mean(), y - y.mean()
    den = math.sqrt(float(np.dot(xm, xm)) * float(np.dot(ym, ym)))
    if den == 0:
        return None
    return max(-1.0, min(1.0, float(np.dot(xm, ym)) / den))


def compute_stats(
    g: Graph,
    path_samples: int = DEFAULT_PATH_SAMPLES,
    seed: int = 0,
    include_low_degree: bool = False,
) -> GraphStats:
    """Average degree, mean local clustering, mean shortest-path length and
    degree assortativity.

    Path length averages BFS distances from ``path_samples`` random sources
    (every node when ``path_samples >= nodes``). Clustering averages over
    nodes of degree >= 2 unless ``include_low_degree`` counts the rest as 0.
    """
    n = g.node_count
    if n < 2:
        raise GraphError(f"graph has {n} node(s); need at least 2")
    notes = []
    avg_degree = (g.edge_count if g.directed else 2 * g.edge_count) / n

    uptr, uidx = g.undirected()
    local = kernels.local_clustering(uptr, uidx)
    eligible = ~np.isnan(local)
    excluded = int(n - eligible.sum())
    if include_low_degree:
        clustering: Optional[float] = float(np.nan_to_num(local, nan=0.0).mean())
    elif eligible.any():
        clustering = float(local[eligible].mean())
    else:
        clustering = None
        notes.append("clustering undefined: no node has degree >= 2")

    if path_samples >= n:
        sources = np.arange(n, dtype=np.int64)
    else:
        rng = np.random.default_rng(seed)
        sources = np.sort(rng.choice(n, size=path_samples, replace=False)).astype(np.int64)
    total, pairs = kernels.bfs_distance_sum(g.indptr, g.indices, sources)
    avg_path = total / pairs if pairs else None
    if avg_path is None:
        notes.append("average path undefined: no reachable pair from sampled sources")

    assort = degree_assortativity(uptr, uidx)
    if assort is None:
        notes.append("assortativity undefined: all endpoint degrees equal")

    return GraphStats(n, g.edge_count, avg_degree, clustering, avg_path, assort, len(sources), excluded, tuple(notes))


def write_stats_csv(stats: GraphStats, path) -> None:
    def fmt(v):
        return "undefined" if v is None else repr(v)

    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        w.writerow(
            [
                stats.nodes,
                stats.edges,
                repr(stats.avg_degree),
                fmt(stats.clustering),
                fmt(stats.avg_path),
                fmt(stats.assortativity),
                stats.path_sample_size,
            ]
        )
