"""Undirected simple graphs in compressed adjacency form.

Vertices are the dense integers ``0..n-1``.  Adjacency is stored CSR style:
the neighbours of ``v`` are ``neighbors[offsets[v]:offsets[v+1]]``, sorted
ascending.  Graphs are immutable once built and safe to share across threads.
"""
from __future__ import annotations

import math
import os
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp
from numba import njit

from ._rng import make_rng


class GraphError(ValueError):
    """Invalid graph parameters, malformed input, or a violated precondition."""


@dataclass(frozen=True, eq=False)
class Graph:
    offsets: np.ndarray
    neighbors: np.ndarray
    degrees: np.ndarray

    def __post_init__(self):
        _check_invariants(self.offsets, self.neighbors, self.degrees)
        for arr in (self.offsets, self.neighbors, self.degrees):
            arr.flags.writeable = False

    @property
    def n(self) -> int:
        return self.offsets.size - 1

    @property
    def m(self) -> int:
        return self.neighbors.size // 2

    def adj(self, v: int) -> np.ndarray:
        return self.neighbors[self.offsets[v]:self.offsets[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.adj(u)
        i = np.searchsorted(row, v)
        return bool(i < row.size and row[i] == v)

    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of edges ``(u, v)`` with ``u < v``, lexicographically sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        dst = self.neighbors.astype(np.int64)
        keep = src < dst
        return np.column_stack([src[keep], dst[keep]])

    def adjacency_matrix(self) -> sp.csr_matrix:
        data = np.ones(self.neighbors.size)
        return sp.csr_matrix((data, self.neighbors, self.offsets), shape=(self.n, self.n))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable) -> "Graph":
        """Build from an edge iterable.  Self-loops and repeated edges are rejected."""
        n = int(n)
        if n < 1:
            raise GraphError("graph needs at least one vertex")
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        if e.size == 0:
            e = e.reshape(0, 2)
        if e.ndim != 2 or e.shape[1] != 2:
            raise GraphError("edges must be pairs")
        if e.size and (e.min() < 0 or e.max() >= n):
            raise GraphError(f"edge endpoint outside 0..{n - 1}")
        if np.any(e[:, 0] == e[:, 1]):
            bad = e[e[:, 0] == e[:, 1]][0]
            raise GraphError(f"self-loop at vertex {bad[0]}")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        key = lo * n + hi
        if np.unique(key).size != key.size:
            raise GraphError("duplicate edge")
        return _csr_from_pairs(n, lo, hi)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def _csr_from_pairs(n: int, lo: np.ndarray, hi: np.ndarray) -> Graph:
    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    degrees = np.bincount(src, minlength=n).astype(np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degrees, out=offsets[1:])
    return Graph(offsets, dst.astype(np.int32), degrees)


def _check_invariants(offsets, neighbors, degrees):
    n = offsets.size - 1
    if n < 1 or offsets[0] != 0 or offsets[-1] != neighbors.size:
        raise GraphError("inconsistent offsets")
    if not np.array_equal(np.diff(offsets), degrees):
        raise GraphError("degree cache disagrees with adjacency")
    if neighbors.size % 2:
        raise GraphError("odd number of adjacency entries")
    if neighbors.size == 0:
        return
    if neighbors.min() < 0 or neighbors.max() >= n:
        raise GraphError("neighbour id out of range")
    src = np.repeat(np.arange(n, dtype=np.int64), degrees)
    dst = neighbors.astype(np.int64)
    if np.any(src == dst):
        raise GraphError(f"self-loop at vertex {src[src == dst][0]}")
    # sorted, duplicate-free rows: strictly increasing within each row
    step = np.diff(dst)
    same_row = np.diff(src) == 0
    if np.any(step[same_row] <= 0):
        raise GraphError("neighbour lists must be sorted without duplicates")
    fwd = np.sort(src * n + dst)
    rev = np.sort(dst * n + src)
    if not np.array_equal(fwd, rev):
        raise GraphError("adjacency is not symmetric")


# ---------------------------------------------------------------------------
# generation


@dataclass(frozen=True)
class GnpParams:
    """``G(n, p)`` with ``p = c * ln(n) / n``."""

    n: int
    c: float
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise GraphError("G(n,p) needs n >= 2")
        if not self.c > 0:
            raise GraphError("c must be positive")
        if self.p > 1:
            raise GraphError(f"p = c*ln(n)/n = {self.p:.4g} exceeds 1")

    @property
    def p(self) -> float:
        return self.c * math.log(self.n) / self.n

    @property
    def omega(self) -> float:
        return (self.c - 1) * math.log(self.n)


@njit(cache=True, nogil=True)
def _gnp_pairs(n, p, rng):
    # Batagelj-Brandes geometric skipping over the pairs (w, v), w < v.
    cap = int(n * (n - 1) / 2 * p + 10 * math.sqrt(n * (n - 1) / 2 * p + 1) + 16)
    lo = np.empty(cap, np.int64)
    hi = np.empty(cap, np.int64)
    k = 0
    log_q = math.log(1.0 - p)
    v = 1
    w = -1
    while v < n:
        r = rng.random()
        w += 1 + int(math.floor(math.log(1.0 - r) / log_q))
        while w >= v and v < n:
            w -= v
            v += 1
        if v < n:
            if k == lo.size:
                lo2 = np.empty(2 * lo.size, np.int64)
                hi2 = np.empty(2 * hi.size, np.int64)
                lo2[:k] = lo
                hi2[:k] = hi
                lo, hi = lo2, hi2
            lo[k] = w
            hi[k] = v
            k += 1
    return lo[:k], hi[:k]


def gnp_sample(params: GnpParams) -> Graph:
    """Sample ``G(n, p)``; every pair is an edge independently with probability ``p``.

    Uses geometric skipping, so the cost is O(n + m) rather than O(n^2).  The
    result may be disconnected; callers that need connectivity must check.
    """
    n, p = params.n, params.p
    if p >= 1.0:
        iu = np.triu_indices(n, 1)
        return _csr_from_pairs(n, iu[0].astype(np.int64), iu[1].astype(np.int64))
    lo, hi = _gnp_pairs(n, p, make_rng(params.seed))
    return _csr_from_pairs(n, lo, hi)


STRUCTURED_KINDS = ("cycle", "path", "complete", "star", "lollipop")


def structured_graph(kind: str, n: int) -> Graph:
    """Deterministic families with fixed labelling.

    * ``cycle``: edges ``(i, i+1 mod n)``, n >= 3.
    * ``path``: edges ``(i, i+1)``, n >= 2.
    * ``complete``: all pairs, n >= 2.
    * ``star``: centre 0, leaves ``1..n-1``, n >= 2.
    * ``lollipop``: clique on ``0..2n/3-1``; path ``2n/3..n-1`` hangs off
      clique vertex ``2n/3-1``; ``n-1`` is the free path end.  n divisible by 3.
    """
    n = int(n)
    if kind == "cycle":
        if n < 3:
            raise GraphError("cycle needs n >= 3")
        i = np.arange(n)
        return Graph.from_edges(n, np.column_stack([i, (i + 1) % n]))
    if kind == "path":
        if n < 2:
            raise GraphError("path needs n >= 2")
        i = np.arange(n - 1)
        return Graph.from_edges(n, np.column_stack([i, i + 1]))
    if kind == "complete":
        if n < 2:
            raise GraphError("complete graph needs n >= 2")
        iu = np.triu_indices(n, 1)
        return Graph.from_edges(n, np.column_stack(iu))
    if kind == "star":
        if n < 2:
            raise GraphError("star needs n >= 2")
        leaves = np.arange(1, n)
        return Graph.from_edges(n, np.column_stack([np.zeros_like(leaves), leaves]))
    if kind == "lollipop":
        if n < 3 or n % 3:
            raise GraphError("lollipop needs n >= 3 divisible by 3")
        k = 2 * n // 3
        iu = np.triu_indices(k, 1)
        clique = np.column_stack(iu)
        tail = np.arange(k - 1, n - 1)
        path = np.column_stack([tail, tail + 1])
        return Graph.from_edges(n, np.vstack([clique, path]))
    raise GraphError(f"unsupported graph kind {kind!r}; choose from {', '.join(STRUCTURED_KINDS)}")


# ---------------------------------------------------------------------------
# structural queries


@njit(cache=True, nogil=True)
def _bfs(offsets, neighbors, source, max_depth):
    n = offsets.size - 1
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    dist[source] = 0
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        x = queue[head]
        head += 1
        dx = dist[x]
        if max_depth >= 0 and dx >= max_depth:
            continue
        for k in range(offsets[x], offsets[x + 1]):
            y = neighbors[k]
            if dist[y] < 0:
                dist[y] = dx + 1
                queue[tail] = y
                tail += 1
    return dist


def bfs_distances(g: Graph, source: int, max_depth: int = -1) -> np.ndarray:
    """Hop distances from ``source``; ``-1`` marks vertices beyond ``max_depth`` or unreachable."""
    _check_vertex(g, source)
    return _bfs(g.offsets, g.neighbors, int(source), int(max_depth))


def is_connected(g: Graph) -> bool:
    return bool(np.all(_bfs(g.offsets, g.neighbors, 0, -1) >= 0))


def components(g: Graph) -> np.ndarray:
    """Component label per vertex."""
    return sp.csgraph.connected_components(g.adjacency_matrix(), directed=False)[1]


def ball(g: Graph, v: int, radius: int) -> np.ndarray:
    """Sorted array of the vertices within ``radius`` hops of ``v`` (``v`` included)."""
    if radius < 0:
        raise GraphError("radius must be non-negative")
    return np.flatnonzero(bfs_distances(g, v, radius) >= 0)


def distance(g: Graph, u: int, v: int) -> int:
    """Hop distance, ``-1`` when disconnected."""
    return int(bfs_distances(g, u)[v])


class Contraction(NamedTuple):
    graph: Graph
    z: int
    mapping: np.ndarray  # old id -> new id; both u and v map to z


def contract_pair(g: Graph, u: int, v: int) -> Contraction:
    """Merge non-adjacent ``u`` and ``v`` with disjoint neighbourhoods into one vertex ``z``.

    The remaining vertices keep their relative order and are renumbered
    ``0..n-3``; ``z`` gets the last id ``n-2``.
    """
    _check_vertex(g, u)
    _check_vertex(g, v)
    if u == v:
        raise GraphError("cannot contract a vertex with itself")
    if g.has_edge(u, v):
        raise GraphError(f"vertices {u} and {v} are adjacent")
    shared = np.intersect1d(g.adj(u), g.adj(v))
    if shared.size:
        raise GraphError(f"vertices {u} and {v} share neighbour {shared[0]}")
    keep = np.ones(g.n, dtype=bool)
    keep[[u, v]] = False
    mapping = np.empty(g.n, dtype=np.int64)
    mapping[keep] = np.arange(g.n - 2)
    z = g.n - 2
    mapping[[u, v]] = z
    e = g.edges()
    e = mapping[e]
    return Contraction(Graph.from_edges(g.n - 1, e), z, mapping)


def cut_and_internal_edges(g: Graph, S) -> tuple[int, int]:
    """``(e(S, S-bar), e(S, S))`` for a vertex set ``S``."""
    S = np.unique(np.asarray(list(S) if not isinstance(S, np.ndarray) else S, dtype=np.int64))
    if S.size == 0:
        return 0, 0
    if S[0] < 0 or S[-1] >= g.n:
        raise GraphError("vertex set outside graph")
    mark = np.zeros(g.n, dtype=bool)
    mark[S] = True
    return _cut_internal(g.offsets, g.neighbors, S, mark)


@njit(cache=True, nogil=True)
def _cut_internal(offsets, neighbors, S, mark):
    cut = 0
    inside = 0
    for i in range(S.size):
        x = S[i]
        for k in range(offsets[x], offsets[x + 1]):
            if mark[neighbors[k]]:
                inside += 1
            else:
                cut += 1
    return cut, inside // 2


def _check_vertex(g: Graph, v) -> None:
    if not 0 <= int(v) < g.n:
        raise GraphError(f"vertex {v} outside 0..{g.n - 1}")


# ---------------------------------------------------------------------------
# edge-list text format: "n m" header then m lines "u v" with u < v


def write_edgelist(g: Graph, path) -> None:
    e = g.edges()
    body = "\n".join(f"{a} {b}" for a, b in e.tolist())
    text = f"{g.n} {g.m}\n" + (body + "\n" if body else "")
    atomic_write_text(path, text)


def read_edgelist(path) -> Graph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise GraphError(f"{path}: header must be 'n m'")
        try:
            n, m = int(header[0]), int(header[1])
        except ValueError:
            raise GraphError(f"{path}: header must be two integers") from None
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)  # an edgeless graph has no edge lines
                data = np.loadtxt(fh, dtype=np.int64, ndmin=2)
        except ValueError as exc:
            raise GraphError(f"{path}: malformed edge line ({exc})") from None
    if data.size == 0:
        data = data.reshape(0, 2)
    if data.shape[1] != 2:
        raise GraphError(f"{path}: every edge line needs exactly two ids")
    if data.shape[0] != m:
        raise GraphError(f"{path}: header announces {m} edges, found {data.shape[0]}")
    if np.any(data[:, 0] >= data[:, 1]):
        raise GraphError(f"{path}: edge lines must have u < v")
    return Graph.from_edges(n, data)


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
