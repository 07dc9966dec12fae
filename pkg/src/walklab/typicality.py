"""Typical-graph audit for ``G(n, p)`` with ``p = c ln(n) / n``.

Checks nine structural conditions, labelled ``"a"`` to ``"i"``:

a. connected
b. at most ``n**(1 - eps**2 c / 4)`` vertices of degree below ``(1 - eps) np``
c. the same bound for degree above ``(1 + eps) np``
d. maximum degree at most ``4 np``
e. ``|V_k| <= (3 ln n)**(k + 1)`` for ``k <= Lambda = ceil(ln ln n)``
f. the low-degree set ``A = {d < np/100}``: ``|A| < n**(17/12 - c)``, no ``A``
   vertex within ``Lambda`` of a cycle shorter than ``Lambda``, and ``A``
   vertices pairwise more than ``Lambda`` apart
g. (only when ``np <= n**(1/100)``) no subgraph on ``<= 50`` vertices with
   more edges than vertices plus one
h. ``e(S, S-bar) >= |S| (n - |S|) p / 2`` for ``1/p <= |S| <= n/2``
i. ``e(S, S) < |S| np / 1000`` for ``|S| < 1/p``

Conditions (h) and (i) quantify over all vertex sets; they are exhaustive for
``n <= 20`` and sampled otherwise.  Every failed condition carries a witness
that can be re-checked with :func:`verify_witness`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numba import njit

from ._rng import make_rng
from .graph import Graph, components, cut_and_internal_edges

CONDITIONS = tuple("abcdefghi")
EXHAUSTIVE_SET_LIMIT = 20
DENSE_SUBGRAPH_SIZE = 50
DENSE_SUBGRAPH_DEPTH = 25


@dataclass
class Condition:
    id: str
    passed: bool
    mode: str = "exact"  # exact | sampled | vacuous | local-scan
    witness: object = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        w = self.witness
        if isinstance(w, np.ndarray):
            w = w.tolist()
        elif isinstance(w, dict):
            w = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in w.items()}
        return {"id": self.id, "pass": self.passed, "mode": self.mode, "witness": w, "detail": self.detail}


@dataclass
class TypicalityReport:
    n: int
    c: float
    eps: float
    conditions: dict
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    U: np.ndarray = field(repr=False)
    V_k: dict = field(default_factory=dict)

    @property
    def p(self) -> float:
        return self.c * math.log(self.n) / self.n

    @property
    def np(self) -> float:
        return self.c * math.log(self.n)

    @property
    def Lambda(self) -> int:
        return loglog_radius(self.n)

    @property
    def b1(self) -> float:
        return (1 - self.eps) / (1 + self.eps)

    @property
    def b2(self) -> float:
        return 401 / (1 + self.eps)

    def passed(self, ids=CONDITIONS) -> bool:
        return all(self.conditions[k].passed for k in ids)

    @property
    def typical(self) -> bool:
        return self.passed()

    def failed(self) -> list[str]:
        return [k for k in CONDITIONS if not self.conditions[k].passed]

    def to_dict(self) -> dict:
        out = {k: self.conditions[k].to_dict() for k in CONDITIONS}
        out["params"] = {"n": self.n, "c": self.c, "eps": self.eps, "p": self.p, "np": self.np,
                         "Lambda": self.Lambda, "Lambda_rounding": "ceil"}
        out["sets"] = {"A": self.A.tolist(), "B_size": int(self.B.size), "U_size": int(self.U.size),
                       "V_k": {str(k): v for k, v in self.V_k.items()}}
        out["b1"] = self.b1
        out["b2"] = self.b2
        out["typical"] = self.typical
        return out


def loglog_radius(n: int) -> int:
    """``ceil(ln ln n)``, at least 1."""
    if n < 3:
        return 1
    return max(1, math.ceil(math.log(math.log(n))))


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _multi_bfs(offsets, neighbors, sources, max_depth):
    n = offsets.size - 1
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    tail = 0
    for s in sources:
        if dist[s] < 0:
            dist[s] = 0
            queue[tail] = s
            tail += 1
    head = 0
    while head < tail:
        x = queue[head]
        head += 1
        if dist[x] >= max_depth:
            continue
        for k in range(offsets[x], offsets[x + 1]):
            y = neighbors[k]
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                queue[tail] = y
                tail += 1
    return dist


@njit(cache=True)
def _short_cycle_near(offsets, neighbors, x, max_len, dist, parent, queue):
    # BFS from x to depth max_len // 2; a non-tree edge (a, b) with
    # dist[a] + dist[b] + 1 < max_len closes a closed walk through x's BFS tree
    # that contains a cycle shorter than max_len.
    depth = max_len // 2
    dist[x] = 0
    parent[x] = -1
    queue[0] = x
    nt = 1
    head = 0
    found = False
    while head < nt and not found:
        a = queue[head]
        head += 1
        for k in range(offsets[a], offsets[a + 1]):
            b = neighbors[k]
            if b == parent[a]:
                continue
            if dist[b] >= 0:
                if dist[a] + dist[b] + 1 < max_len:
                    found = True
                    break
            elif dist[a] < depth:
                dist[b] = dist[a] + 1
                parent[b] = a
                queue[nt] = b
                nt += 1
    for i in range(nt):
        dist[queue[i]] = -1
    return found


@njit(cache=True)
def _dense_ball(offsets, neighbors, x, size, depth, dist, queue, mark):
    # First `size` vertices of a BFS from x (depth-capped); returns (count, edges inside).
    dist[x] = 0
    queue[0] = x
    nt = 1
    head = 0
    while head < nt and nt < size:
        a = queue[head]
        head += 1
        if dist[a] >= depth:
            continue
        for k in range(offsets[a], offsets[a + 1]):
            b = neighbors[k]
            if dist[b] < 0 and nt < size:
                dist[b] = dist[a] + 1
                queue[nt] = b
                nt += 1
    for i in range(nt):
        mark[queue[i]] = True
    e = 0
    for i in range(nt):
        a = queue[i]
        for k in range(offsets[a], offsets[a + 1]):
            if mark[neighbors[k]]:
                e += 1
    for i in range(nt):
        mark[queue[i]] = False
        dist[queue[i]] = -1
    return nt, e // 2


@njit(cache=True)
def _first_dense_ball(offsets, neighbors, size, depth):
    n = offsets.size - 1
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    mark = np.zeros(n, np.bool_)
    for x in range(n):
        k, e = _dense_ball(offsets, neighbors, x, size, depth, dist, queue, mark)
        if e >= k + 1:
            return x
    return -1


@njit(cache=True)
def _set_counts(offsets, neighbors, flat, starts):
    n = offsets.size - 1
    mark = np.zeros(n, np.bool_)
    nsets = starts.size - 1
    cut = np.empty(nsets, np.int64)
    inside = np.empty(nsets, np.int64)
    for s in range(nsets):
        lo = starts[s]
        hi = starts[s + 1]
        for i in range(lo, hi):
            mark[flat[i]] = True
        c = 0
        e = 0
        for i in range(lo, hi):
            x = flat[i]
            for k in range(offsets[x], offsets[x + 1]):
                if mark[neighbors[k]]:
                    e += 1
                else:
                    c += 1
        for i in range(lo, hi):
            mark[flat[i]] = False
        cut[s] = c
        inside[s] = e // 2
    return cut, inside


@njit(cache=True)
def _exhaustive_sets(n, eu, ev, p, np_):
    # returns (mask violating h or 0, mask violating i or 0)
    bad_h = 0
    bad_i = 0
    for mask in range(1, 1 << n):
        s = 0
        for x in range(n):
            s += (mask >> x) & 1
        cut = 0
        inside = 0
        for e in range(eu.size):
            a = (mask >> eu[e]) & 1
            b = (mask >> ev[e]) & 1
            if a != b:
                cut += 1
            elif a == 1:
                inside += 1
        if bad_h == 0 and s * p >= 1.0 and 2 * s <= n:
            if cut < 0.5 * s * (n - s) * p:
                bad_h = mask
        if bad_i == 0 and s * p < 1.0:
            if inside >= s * np_ / 1000.0:
                bad_i = mask
        if bad_h and bad_i:
            break
    return bad_h, bad_i


# ---------------------------------------------------------------------------
# per-condition predicates (also used to re-verify witnesses)


def h_holds(g: Graph, S, p: float) -> bool:
    """Condition (h) on one set; sets outside the size window hold vacuously."""
    S = np.unique(np.asarray(S, dtype=np.int64))
    s = S.size
    if not (s * p >= 1 and 2 * s <= g.n):
        return True
    cut, _ = cut_and_internal_edges(g, S)
    return cut >= 0.5 * s * (g.n - s) * p


def i_holds(g: Graph, S, p: float) -> bool:
    """Condition (i) on one set; sets with ``|S| >= 1/p`` hold vacuously."""
    S = np.unique(np.asarray(S, dtype=np.int64))
    s = S.size
    if not s * p < 1:
        return True
    _, inside = cut_and_internal_edges(g, S)
    return inside < s * (g.n * p) / 1000.0


def dense_subgraph_free(g: Graph, S) -> bool:
    """True unless ``S`` has at most 50 vertices and induces at least ``|S| + 1`` edges."""
    S = np.unique(np.asarray(S, dtype=np.int64))
    if S.size > DENSE_SUBGRAPH_SIZE:
        return True
    _, inside = cut_and_internal_edges(g, S)
    return inside < S.size + 1


def verify_witness(g: Graph, report: TypicalityReport, cid: str) -> bool:
    """Re-evaluate condition ``cid`` on its witness; ``False`` confirms the violation."""
    cond = report.conditions[cid]
    w = cond.witness
    n, np_ = g.n, report.np
    eps = report.eps
    if cid == "a":
        S = np.asarray(w)
        cut, _ = cut_and_internal_edges(g, S)
        return not (cut == 0 and 0 < S.size < n)
    if cid in ("b", "c"):
        verts = np.asarray(w["vertices"])
        if cid == "b":
            low = np.all(g.degrees[verts] < (1 - eps) * np_)
        else:
            low = np.all(g.degrees[verts] > (1 + eps) * np_)
        return not (low and verts.size > cond.detail["bound"])
    if cid == "d":
        return not g.degrees[int(w)] > 4 * np_
    if cid == "e":
        k = int(w["k"])
        return not (np.count_nonzero(g.degrees == k) > (3 * math.log(n)) ** (k + 1))
    if cid == "f":
        part = w["part"]
        lam = report.Lambda
        if part == "size":
            A = np.flatnonzero(g.degrees < np_ / 100)
            return not A.size >= n ** (17 / 12 - report.c)
        if part == "cycle":
            dist = np.full(n, -1, np.int64)
            found = _short_cycle_near(g.offsets, g.neighbors, int(w["near"]), lam, dist,
                                      np.full(n, -1, np.int64), np.empty(n, np.int64))
            from .graph import distance

            return not (found and 0 <= distance(g, int(w["a"]), int(w["near"])) <= lam)
        if part == "distance":
            from .graph import distance

            u, v = int(w["pair"][0]), int(w["pair"][1])
            d = distance(g, u, v)
            return not (0 <= d <= lam and g.degrees[u] < np_ / 100 and g.degrees[v] < np_ / 100)
    if cid == "g":
        return dense_subgraph_free(g, w)
    if cid == "h":
        return h_holds(g, w, report.p)
    if cid == "i":
        return i_holds(g, w, report.p)
    raise ValueError(f"unknown condition {cid!r}")


# ---------------------------------------------------------------------------
# audit


def audit(g: Graph, eps: float = 0.3, c: float = 2.0, sample_budget: int = 10_000,
          seed: int = 0) -> TypicalityReport:
    """Run every typicality condition on ``g`` as if it were drawn from ``G(n, c ln n / n)``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    n = g.n
    logn = math.log(n) if n > 1 else 1.0
    p = c * logn / n
    np_ = c * logn
    lam = loglog_radius(n)
    deg = g.degrees
    conds: dict[str, Condition] = {}

    # (a)
    labels = components(g)
    if np.all(labels == labels[0]):
        conds["a"] = Condition("a", True)
    else:
        other = labels[labels != labels[0]][0]
        conds["a"] = Condition("a", False, witness=np.flatnonzero(labels == other),
                               detail={"components": int(labels.max() + 1)})

    # (b), (c)
    bound = n ** (1 - eps * eps * c / 4)
    for cid, sel in (("b", deg < (1 - eps) * np_), ("c", deg > (1 + eps) * np_)):
        verts = np.flatnonzero(sel)
        ok = verts.size <= bound
        conds[cid] = Condition(cid, ok, witness=None if ok else {"vertices": verts},
                               detail={"count": int(verts.size), "bound": bound})

    # (d)
    vmax = int(np.argmax(deg))
    ok = deg[vmax] <= 4 * np_
    conds["d"] = Condition("d", bool(ok), witness=None if ok else vmax,
                           detail={"max_degree": int(deg[vmax]), "bound": 4 * np_})

    # (e)
    counts = np.bincount(deg, minlength=lam + 1)[:lam + 1]
    V_k = {k: int(counts[k]) for k in range(lam + 1)}
    bad_k = [k for k in range(lam + 1) if counts[k] > (3 * logn) ** (k + 1)]
    conds["e"] = Condition("e", not bad_k, witness={"k": bad_k[0]} if bad_k else None,
                           detail={"V_k": {str(k): v for k, v in V_k.items()}, "Lambda": lam})

    # (f)
    A = np.flatnonzero(deg < np_ / 100)
    conds["f"] = _check_f(g, A, n, c, lam)

    # (g)
    conds["g"] = _check_g(g, np_, n)

    # (h), (i)
    conds["h"], conds["i"] = _check_sets(g, p, np_, sample_budget, seed)

    classes = classify_vertices(g, np_=np_)
    U = u_set(g, eps, c)
    return TypicalityReport(n, c, eps, conds, A, classes.B, U, V_k)


def _check_f(g: Graph, A: np.ndarray, n: int, c: float, lam: int) -> Condition:
    size_bound = n ** (17 / 12 - c)
    detail = {"A_size": int(A.size), "size_bound": size_bound, "Lambda": lam}
    if not A.size < size_bound:
        return Condition("f", False, witness={"part": "size", "A": A}, detail=detail)
    dist = np.full(n, -1, np.int64)
    parent = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    for a in A:
        near = np.flatnonzero(_multi_bfs(g.offsets, g.neighbors, np.array([a]), lam) >= 0)
        for x in near:
            if _short_cycle_near(g.offsets, g.neighbors, int(x), lam, dist, parent, queue):
                return Condition("f", False, witness={"part": "cycle", "a": int(a), "near": int(x)},
                                 detail=detail)
    isA = np.zeros(n, dtype=bool)
    isA[A] = True
    for a in A:
        reach = np.flatnonzero(_multi_bfs(g.offsets, g.neighbors, np.array([a]), lam) >= 0)
        close = reach[isA[reach] & (reach != a)]
        if close.size:
            return Condition("f", False, witness={"part": "distance", "pair": [int(a), int(close[0])]},
                             detail=detail)
    return Condition("f", True, detail=detail)


def _check_g(g: Graph, np_: float, n: int) -> Condition:
    guard = np_ <= n ** 0.01
    if not guard:
        return Condition("g", True, mode="vacuous", detail={"guard": False})
    x = _first_dense_ball(g.offsets, g.neighbors, DENSE_SUBGRAPH_SIZE, DENSE_SUBGRAPH_DEPTH)
    if x < 0:
        return Condition("g", True, mode="local-scan", detail={"guard": True})
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    mark = np.zeros(n, dtype=bool)
    k, _ = _dense_ball(g.offsets, g.neighbors, x, DENSE_SUBGRAPH_SIZE, DENSE_SUBGRAPH_DEPTH,
                       dist, queue, mark)
    witness = np.sort(queue[:k].copy())
    return Condition("g", False, mode="local-scan", witness=witness, detail={"guard": True, "root": int(x)})


def _check_sets(g: Graph, p: float, np_: float, budget: int, seed: int):
    n = g.n
    if n <= EXHAUSTIVE_SET_LIMIT:
        e = g.edges()
        bad_h, bad_i = _exhaustive_sets(n, e[:, 0].copy(), e[:, 1].copy(), p, np_)
        out = []
        for cid, mask in (("h", bad_h), ("i", bad_i)):
            if mask:
                S = np.array([x for x in range(n) if (mask >> x) & 1])
                out.append(Condition(cid, False, witness=S))
            else:
                out.append(Condition(cid, True))
        return tuple(out)

    rng = make_rng(seed, 0x5e7)
    inv_p = 1.0 / p
    h_lo, h_hi = int(math.ceil(inv_p)), n // 2
    i_hi = int(math.ceil(inv_p)) - 1  # largest s with s < 1/p
    order = np.argsort(g.degrees, kind="stable")
    roots = rng.choice(n, size=min(n, 32), replace=False)
    balls = [_bfs_order(g, int(r)) for r in roots]

    def candidates(lo, hi, count):
        sets = []
        if lo > hi or hi < 1:
            return sets
        sizes = np.unique(np.geomspace(lo, hi, num=min(24, hi - lo + 1)).astype(np.int64))
        # structured candidates: low- and high-degree prefixes, BFS balls, closed neighbourhoods
        for s in sizes:
            sets.append(order[:s])
            sets.append(order[::-1][:s])
            for b in balls[:8]:
                if b.size >= s:
                    sets.append(b[:s])
        for v in roots:
            closed = np.concatenate([[v], g.adj(int(v))])
            if lo <= closed.size <= hi:
                sets.append(closed)
        for _ in range(max(count - len(sets), 0)):
            s = int(sizes[rng.integers(sizes.size)])
            sets.append(rng.choice(n, size=s, replace=False))
        return sets

    out = []
    half = max(budget // 2, 1)
    for cid, lo, hi in (("h", h_lo, h_hi), ("i", 1, i_hi)):
        sets = candidates(lo, hi, half)
        if not sets:
            out.append(Condition(cid, True, mode="vacuous", detail={"sets_checked": 0}))
            continue
        flat = np.concatenate(sets).astype(np.int64)
        starts = np.zeros(len(sets) + 1, dtype=np.int64)
        np.cumsum([len(s) for s in sets], out=starts[1:])
        cut, inside = _set_counts(g.offsets, g.neighbors, flat, starts)
        sizes = np.diff(starts)
        if cid == "h":
            bad = np.flatnonzero(cut < 0.5 * sizes * (n - sizes) * p)
        else:
            bad = np.flatnonzero(inside >= sizes * np_ / 1000.0)
        detail = {"sets_checked": len(sets), "size_range": [int(lo), int(hi)]}
        if bad.size:
            j = int(bad[np.argmin(sizes[bad])])
            detail["violating_sets"] = int(bad.size)
            out.append(Condition(cid, False, mode="sampled", witness=np.sort(sets[j]), detail=detail))
        else:
            out.append(Condition(cid, True, mode="sampled", detail=detail))
    return tuple(out)


def _bfs_order(g: Graph, root: int) -> np.ndarray:
    dist = _multi_bfs(g.offsets, g.neighbors, np.array([root]), g.n)
    reached = np.flatnonzero(dist >= 0)
    return reached[np.argsort(dist[reached], kind="stable")]


# ---------------------------------------------------------------------------
# vertex classes


class VertexClasses(NamedTuple):
    labels: np.ndarray  # "A", "B", "neighbor_of_A" or "other"
    A: np.ndarray
    B: np.ndarray
    a_neighbor_count: np.ndarray  # |N(v) & A|
    a_neighbor: np.ndarray  # the unique A-neighbour, or -1


def classify_vertices(g: Graph, c: float | None = None, *, np_: float | None = None,
                      report: TypicalityReport | None = None) -> VertexClasses:
    """Partition ``V`` into ``A``, ``B``, ``neighbor_of_A`` and ``other``.

    ``A = {d(v) <= np/100}`` and ``B = {v : no A vertex within 10 hops}``.
    ``neighbor_of_A`` holds the remaining vertices with exactly one ``A``
    neighbour; ``other`` the rest (``a_neighbor_count`` records how many).
    ``np`` comes from ``np_``, from ``report`` or from ``c * ln n``.
    """
    if np_ is None:
        if report is not None:
            np_ = report.np
        elif c is not None:
            np_ = c * math.log(g.n)
        else:
            raise ValueError("need c, np_ or an audit report")
    n = g.n
    isA = g.degrees <= np_ / 100
    A = np.flatnonzero(isA)
    if A.size:
        dist = _multi_bfs(g.offsets, g.neighbors, A, 10)
        isB = dist < 0
    else:
        isB = np.ones(n, dtype=bool)
    src = np.repeat(np.arange(n), g.degrees)
    hit = isA[g.neighbors]
    a_count = np.bincount(src[hit], minlength=n)
    a_nb = np.full(n, -1, dtype=np.int64)
    a_nb[src[hit]] = g.neighbors[hit]
    a_nb[a_count != 1] = -1
    labels = np.full(n, "other", dtype="<U13")
    labels[isB] = "B"
    labels[~isA & ~isB & (a_count == 1)] = "neighbor_of_A"
    labels[isA] = "A"
    return VertexClasses(labels, A, np.flatnonzero(isB), a_count, a_nb)


def u_set(g: Graph, eps: float, c: float) -> np.ndarray:
    """Vertices whose degree and all neighbour degrees lie strictly inside ``((1-eps) np, (1+eps) np)``."""
    np_ = c * math.log(g.n)
    good = (g.degrees > (1 - eps) * np_) & (g.degrees < (1 + eps) * np_)
    src = np.repeat(np.arange(g.n), g.degrees)
    bad_nb = np.bincount(src[~good[g.neighbors]], minlength=g.n)
    return np.flatnonzero(good & (bad_nb == 0))
