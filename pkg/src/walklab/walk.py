"""Edge-weight policies, transition sampling and walk simulation.

A walk policy assigns a symmetric positive weight to every edge; the walk at
``v`` moves to neighbour ``w`` with probability ``weight(v, w) / Psi(v)`` where
``Psi(v)`` is the total weight at ``v``.  The default policy, ``min_degree``,
uses ``1 / min(d(v), d(w))`` and so prefers low-degree neighbours.

The inner loops are numba kernels compiled with ``nogil=True``; replicas are
fanned out over a thread pool with one Philox stream per replica.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp
from numba import njit

from ._rng import make_rng, parallel_map
from .graph import Graph, GraphError, is_connected

ALIAS_MIN_MEAN_DEGREE = 32
DEFAULT_CAP_MULT = 200.0


class WalkPolicy(str, Enum):
    UNIFORM = "uniform"
    MIN_DEGREE = "min_degree"
    INV_SQRT = "inv_sqrt"

    def edge_weights(self, g: Graph) -> np.ndarray:
        """Weight of each adjacency entry, aligned with ``g.neighbors``."""
        src_deg = np.repeat(g.degrees, g.degrees).astype(np.float64)
        dst_deg = g.degrees[g.neighbors].astype(np.float64)
        if self is WalkPolicy.UNIFORM:
            return np.ones(g.neighbors.size)
        if self is WalkPolicy.MIN_DEGREE:
            return 1.0 / np.minimum(src_deg, dst_deg)
        return 1.0 / np.sqrt(src_deg * dst_deg)


def as_policy(policy) -> WalkPolicy:
    try:
        return WalkPolicy(policy)
    except ValueError:
        names = ", ".join(p.value for p in WalkPolicy)
        raise ValueError(f"unknown policy {policy!r}; choose from {names}") from None


class CapExceeded(RuntimeError):
    """A cover walk hit its step cap before visiting every vertex."""

    def __init__(self, cap: int):
        super().__init__(f"walk not finished after cap of {cap} steps")
        self.cap = cap


@dataclass(frozen=True, eq=False)
class TransitionTable:
    """Row-stochastic transition structure for a (graph, policy) pair.

    ``probs[k]`` is the probability of the move ``v -> neighbors[k]`` for ``k``
    in row ``v``; ``psi[v]`` is the row normaliser Psi(v).
    """

    graph: Graph
    policy: WalkPolicy
    weights: np.ndarray
    psi: np.ndarray
    probs: np.ndarray
    cdf: np.ndarray
    alias_prob: np.ndarray
    alias_idx: np.ndarray
    use_alias: bool = False

    def row(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.graph.offsets[v], self.graph.offsets[v + 1]
        return self.graph.neighbors[lo:hi], self.probs[lo:hi]

    def row_sums(self) -> np.ndarray:
        return np.add.reduceat(self.probs, self.graph.offsets[:-1])

    def matrix(self) -> sp.csr_matrix:
        g = self.graph
        return sp.csr_matrix((self.probs, g.neighbors, g.offsets), shape=(g.n, g.n))

    @property
    def _kernel_args(self):
        g = self.graph
        return (g.offsets, g.neighbors, self.cdf, self.alias_prob, self.alias_idx, self.use_alias)


def build_transitions(g: Graph, policy="min_degree", sampler: str = "auto") -> TransitionTable:
    """Precompute weights, Psi, transition probabilities and sampling tables.

    ``sampler`` is ``"cdf"`` (binary search over cumulative rows), ``"alias"``
    (Vose alias tables, O(1) per draw) or ``"auto"`` which picks alias tables
    only when the mean degree exceeds 32.
    """
    policy = as_policy(policy)
    if g.n > 0 and g.degrees.min() == 0:
        v = int(np.argmin(g.degrees))
        raise GraphError(f"vertex {v} is isolated; the walk cannot leave it")
    w = policy.edge_weights(g)
    starts = g.offsets[:-1]
    psi = np.add.reduceat(w, starts)
    # Normalise by the row maximum first so equal weights give bitwise-equal
    # probabilities regardless of the policy.
    row_max = np.maximum.reduceat(w, starts)
    scaled = w / np.repeat(row_max, g.degrees)
    probs = scaled / np.repeat(np.add.reduceat(scaled, starts), g.degrees)
    cdf = _row_cumsum(g.offsets, probs)
    if sampler == "auto":
        sampler = "alias" if g.degrees.mean() > ALIAS_MIN_MEAN_DEGREE else "cdf"
    if sampler == "alias":
        aprob, aidx = _build_alias(g.offsets, probs)
        use_alias = True
    elif sampler == "cdf":
        aprob, aidx = np.empty(0), np.empty(0, np.int64)
        use_alias = False
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    for arr in (w, psi, probs, cdf, aprob, aidx):
        arr.flags.writeable = False
    return TransitionTable(g, policy, w, psi, probs, cdf, aprob, aidx, use_alias)


@njit(cache=True)
def _row_cumsum(offsets, probs):
    out = np.empty_like(probs)
    for v in range(offsets.size - 1):
        acc = 0.0
        for k in range(offsets[v], offsets[v + 1]):
            acc += probs[k]
            out[k] = acc
        if offsets[v + 1] > offsets[v]:
            out[offsets[v + 1] - 1] = 1.0
    return out


@njit(cache=True)
def _build_alias(offsets, probs):
    prob = np.empty_like(probs)
    alias = np.empty(probs.size, np.int64)
    for v in range(offsets.size - 1):
        lo = offsets[v]
        d = offsets[v + 1] - lo
        scaled = probs[lo:lo + d] * d
        small = np.empty(d, np.int64)
        large = np.empty(d, np.int64)
        ns = 0
        nl = 0
        for i in range(d):
            if scaled[i] < 1.0:
                small[ns] = i
                ns += 1
            else:
                large[nl] = i
                nl += 1
        while ns > 0 and nl > 0:
            ns -= 1
            s = small[ns]
            nl -= 1
            l = large[nl]
            prob[lo + s] = scaled[s]
            alias[lo + s] = l
            scaled[l] = (scaled[l] + scaled[s]) - 1.0
            if scaled[l] < 1.0:
                small[ns] = l
                ns += 1
            else:
                large[nl] = l
                nl += 1
        for i in range(nl):
            prob[lo + large[i]] = 1.0
            alias[lo + large[i]] = large[i]
        for i in range(ns):
            prob[lo + small[i]] = 1.0
            alias[lo + small[i]] = small[i]
    return prob, alias


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True, nogil=True, inline="always")
def _draw(v, offsets, neighbors, cdf, aprob, aidx, use_alias, rng):
    lo = offsets[v]
    hi = offsets[v + 1]
    u = rng.random()
    if use_alias:
        d = hi - lo
        x = u * d
        j = int(x)
        if j >= d:
            j = d - 1
        if x - j < aprob[lo + j]:
            return neighbors[lo + j]
        return neighbors[lo + aidx[lo + j]]
    # first k in [lo, hi) with cdf[k] > u
    a = lo
    b = hi - 1
    while a < b:
        mid = (a + b) >> 1
        if cdf[mid] > u:
            b = mid
        else:
            a = mid + 1
    return neighbors[a]


@njit(cache=True, nogil=True)
def _step_kernel(v, offsets, neighbors, cdf, aprob, aidx, use_alias, rng):
    return _draw(v, offsets, neighbors, cdf, aprob, aidx, use_alias, rng)


@njit(cache=True, nogil=True)
def _cover_kernel(offsets, neighbors, cdf, aprob, aidx, use_alias, start, rng, cap):
    n = offsets.size - 1
    seen = np.zeros(n, np.bool_)
    seen[start] = True
    left = n - 1
    v = start
    t = 0
    while left > 0:
        if t >= cap:
            return -1
        v = _draw(v, offsets, neighbors, cdf, aprob, aidx, use_alias, rng)
        t += 1
        if not seen[v]:
            seen[v] = True
            left -= 1
    return t


@njit(cache=True, nogil=True)
def _trace_kernel(offsets, neighbors, cdf, aprob, aidx, use_alias, start, length, rng):
    out = np.empty(length + 1, np.int64)
    v = start
    out[0] = v
    for t in range(1, length + 1):
        v = _draw(v, offsets, neighbors, cdf, aprob, aidx, use_alias, rng)
        out[t] = v
    return out


@njit(cache=True, nogil=True)
def _occupancy_kernel(offsets, neighbors, cdf, aprob, aidx, use_alias, start, steps, rng):
    counts = np.zeros(offsets.size - 1, np.int64)
    v = start
    for _ in range(steps):
        v = _draw(v, offsets, neighbors, cdf, aprob, aidx, use_alias, rng)
        counts[v] += 1
    return counts


@njit(cache=True, nogil=True)
def _first_hits_kernel(offsets, neighbors, cdf, aprob, aidx, use_alias, start, slot, n_targets,
                       T, t_max, rng):
    # First time s in [T, t_max] at which each target is occupied; t_max + 1 if never.
    hits = np.full(n_targets, t_max + 1, np.int64)
    remaining = n_targets
    v = start
    if T == 0 and slot[v] >= 0:
        hits[slot[v]] = 0
        remaining -= 1
    for s in range(1, t_max + 1):
        if remaining == 0:
            break
        v = _draw(v, offsets, neighbors, cdf, aprob, aidx, use_alias, rng)
        if s >= T:
            k = slot[v]
            if k >= 0 and hits[k] > t_max:
                hits[k] = s
                remaining -= 1
    return hits


@njit(cache=True, nogil=True)
def _return_counts_kernel(offsets, neighbors, cdf, aprob, aidx, use_alias, v, T, reps, rng):
    counts = np.zeros(T, np.int64)
    for _ in range(reps):
        x = v
        counts[0] += 1
        for s in range(1, T):
            x = _draw(x, offsets, neighbors, cdf, aprob, aidx, use_alias, rng)
            if x == v:
                counts[s] += 1
    return counts


# ---------------------------------------------------------------------------
# public operations


def _table(g_or_table, policy) -> TransitionTable:
    if isinstance(g_or_table, TransitionTable):
        return g_or_table
    return build_transitions(g_or_table, policy)


def step(table: TransitionTable, v: int, rng: np.random.Generator) -> int:
    """One move of the walk from ``v``."""
    if not 0 <= v < table.graph.n:
        raise GraphError(f"vertex {v} outside graph")
    return int(_step_kernel(int(v), *table._kernel_args, rng))


def trace(table: TransitionTable, start: int, length: int, rng: np.random.Generator) -> np.ndarray:
    """Positions ``X_0..X_length`` of one walk."""
    return _trace_kernel(*table._kernel_args, int(start), int(length), rng)


def default_cap(n: int, cap_mult: float = DEFAULT_CAP_MULT) -> int:
    return max(int(math.ceil(cap_mult * n * math.log(max(n, 2)))), n)


def cover_time_once(g, policy="min_degree", start: int = 0, rng: np.random.Generator | None = None,
                    cap: int | None = None) -> int:
    """Steps until a single walk from ``start`` has visited every vertex.

    ``g`` may be a Graph or a prebuilt TransitionTable.  Raises
    :class:`CapExceeded` when ``cap`` steps are not enough.
    """
    table = _table(g, policy)
    graph = table.graph
    if not is_connected(graph):
        raise GraphError("graph is disconnected; it cannot be covered")
    if not 0 <= start < graph.n:
        raise GraphError(f"start vertex {start} outside graph")
    if rng is None:
        rng = make_rng(0)
    cap = default_cap(graph.n) if cap is None else int(cap)
    t = _cover_kernel(*table._kernel_args, int(start), rng, cap)
    if t < 0:
        raise CapExceeded(cap)
    return int(t)


@dataclass(frozen=True)
class CoverStats:
    """Cover-time sample.  Censored replicas (cap hit) are excluded from the moments."""

    replicas: int
    times: np.ndarray = field(repr=False)
    censored: int
    mean: float
    std: float
    min: int
    max: int
    start_rule: str
    start: int
    cap: int
    seed: int

    @property
    def censored_fraction(self) -> float:
        return self.censored / self.replicas

    def __eq__(self, other):
        if not isinstance(other, CoverStats):
            return NotImplemented
        return (np.array_equal(self.times, other.times) and self.start == other.start
                and self.cap == other.cap and self.start_rule == other.start_rule)

    def to_dict(self) -> dict:
        return {
            "replicas": self.replicas, "censored": self.censored, "mean": self.mean,
            "std": self.std, "min": self.min, "max": self.max, "start_rule": self.start_rule,
            "start": self.start, "cap": self.cap, "seed": self.seed,
            "times": self.times.tolist(),
        }


def _summarise(times: np.ndarray, rule, start, cap, seed) -> CoverStats:
    ok = times[times >= 0]
    if ok.size:
        mean = float(ok.mean())
        std = float(ok.std(ddof=1)) if ok.size > 1 else 0.0
        lo, hi = int(ok.min()), int(ok.max())
    else:
        mean = std = math.nan
        lo = hi = -1
    return CoverStats(int(times.size), times, int((times < 0).sum()), mean, std, lo, hi,
                      rule, int(start), int(cap), int(seed))


def replica_cover_times(table: TransitionTable, start: int, replicas: int, seed: int, cap: int,
                        key: tuple = (), threads: int | None = None) -> np.ndarray:
    """Cover time for replicas ``0..replicas-1``; replica ``i`` uses stream ``(seed, *key, i)``; -1 = censored."""
    args = table._kernel_args

    def one(i):
        return _cover_kernel(*args, int(start), make_rng(seed, *key, i), cap)

    return np.asarray(parallel_map(one, range(replicas), threads), dtype=np.int64)


def estimate_cover_time(g, policy="min_degree", replicas: int = 10, start_rule: str = "fixed",
                        seed: int = 0, *, start: int = 0, cap: int | None = None,
                        cap_mult: float = DEFAULT_CAP_MULT, n_starts: int = 8,
                        threads: int | None = None) -> CoverStats:
    """Monte Carlo cover time.

    ``start_rule="fixed"`` runs every replica from ``start``.
    ``"worst-of-sampled"`` draws ``n_starts`` start vertices, runs ``replicas``
    walks from each and reports the start with the largest mean, an estimate
    of the max-over-starts cover time.
    """
    table = _table(g, policy)
    graph = table.graph
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if not is_connected(graph):
        raise GraphError("graph is disconnected; it cannot be covered")
    cap = default_cap(graph.n, cap_mult) if cap is None else int(cap)
    if start_rule == "fixed":
        if not 0 <= start < graph.n:
            raise GraphError(f"start vertex {start} outside graph")
        times = replica_cover_times(table, start, replicas, seed, cap, threads=threads)
        return _summarise(times, start_rule, start, cap, seed)
    if start_rule == "worst-of-sampled":
        k = min(n_starts, graph.n)
        starts = np.sort(make_rng(seed, 1 << 40).choice(graph.n, size=k, replace=False))
        best = None
        for slot, s in enumerate(starts):
            times = replica_cover_times(table, int(s), replicas, seed, cap, key=(slot,), threads=threads)
            stats = _summarise(times, start_rule, s, cap, seed)
            if best is None or stats.mean > best.mean:
                best = stats
        return best
    raise ValueError(f"unknown start rule {start_rule!r}")


def first_hit_times(g, policy, u: int, targets, T: int, t_max: int, replicas: int, seed: int = 0,
                    threads: int | None = None) -> np.ndarray:
    """First step ``>= T`` at which each replica walk from ``u`` sits on each target.

    Shape ``(replicas, len(targets))``; a target not reached by ``t_max``
    reads ``t_max + 1``.
    """
    table = _table(g, policy)
    n = table.graph.n
    targets = np.asarray(targets, dtype=np.int64)
    if T < 0 or t_max < 0:
        raise ValueError("need T >= 0 and t_max >= 0")
    if not 0 <= u < n or np.any((targets < 0) | (targets >= n)):
        raise GraphError("vertex outside graph")
    if np.unique(targets).size != targets.size:
        raise ValueError("targets must be distinct")
    if targets.size == 0:
        return np.zeros((replicas, 0), dtype=np.int64)
    slot = np.full(n, -1, np.int64)
    slot[targets] = np.arange(targets.size)
    args = table._kernel_args

    def one(i):
        return _first_hits_kernel(*args, int(u), slot, targets.size, int(T), int(t_max), make_rng(seed, i))

    return np.stack(parallel_map(one, range(replicas), threads))


def first_visit_tails(g, policy, u: int, targets, T: int, t_grid, replicas: int, seed: int = 0,
                      threads: int | None = None) -> np.ndarray:
    """Empirical Pr[walk from ``u`` avoids target during steps ``T..t``].

    Returns an array of shape ``(len(targets), len(t_grid))``.  One walk per
    replica serves every target and every ``t`` at once.  For ``t < T`` the
    window is empty and the tail is 1.
    """
    t_grid = np.asarray(t_grid, dtype=np.int64)
    if np.any(t_grid < 0):
        raise ValueError("t must be >= 0")
    t_max = int(t_grid.max()) if t_grid.size else 0
    hits = first_hit_times(g, policy, u, targets, T, t_max, replicas, seed, threads)
    return (hits[:, :, None] > t_grid[None, None, :]).mean(axis=0)


def first_visit_tail(g, policy, u: int, v: int, T: int, t: int, replicas: int, seed: int = 0,
                     threads: int | None = None) -> float:
    """Fraction of walks from ``u`` that do not visit ``v`` at any step in ``T..t``."""
    if t < T:
        raise ValueError("need t >= T")
    return float(first_visit_tails(g, policy, u, [v], T, [t], replicas, seed, threads)[0, 0])


def occupancy(g, policy, start: int, steps: int, seed: int = 0) -> np.ndarray:
    """Empirical visit frequencies of ``X_1..X_steps``."""
    table = _table(g, policy)
    counts = _occupancy_kernel(*table._kernel_args, int(start), int(steps), make_rng(seed))
    return counts / steps


RETURN_BLOCK = 256


def return_frequencies(g, policy, v: int, T: int, reps: int, seed: int = 0,
                       threads: int | None = None) -> np.ndarray:
    """Monte Carlo ``Pr[X_t = v | X_0 = v]`` for ``t < T``.

    Walks run in blocks of 256, each block on its own stream.
    """
    table = _table(g, policy)
    if not 0 <= v < table.graph.n:
        raise GraphError(f"vertex {v} outside graph")
    if T < 1 or reps < 1:
        raise ValueError("need T >= 1 and reps >= 1")
    args = table._kernel_args
    blocks = [(b, min(RETURN_BLOCK, reps - b * RETURN_BLOCK)) for b in range(-(-reps // RETURN_BLOCK))]

    def one(i):
        b, k = blocks[i]
        return _return_counts_kernel(*args, int(v), int(T), k, make_rng(seed, b))

    return np.sum(parallel_map(one, range(len(blocks)), threads), axis=0) / reps
