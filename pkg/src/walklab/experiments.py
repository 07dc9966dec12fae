"""Reproducible end-to-end experiments.

Each experiment takes an :class:`ExperimentConfig` and returns a
:class:`ResultRecord` holding per-unit measurements and an aggregate table.
Records serialise to one JSON line each; tables to CSV.  Every random choice
is keyed off the config's master seed, so a config hash pins the output.

Logarithms are natural throughout, including ``t = (1 - delta) n ln n``.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._version import __version__
from ._rng import make_rng
from .chain import (DENSE_LIMIT, avoidance_from_all, empirical_mixing_time, exact_avoidance_window,
                    first_visit_prediction, return_matrix, stationary, _mc_returns)
from .graph import (Graph, GnpParams, GraphError, atomic_write_text, bfs_distances, contract_pair,
                    gnp_sample, is_connected, structured_graph)
from .typicality import audit as run_audit, classify_vertices
from .walk import as_policy, build_transitions, default_cap, first_hit_times, replica_cover_times

MAX_RESAMPLES = 10
SEPARATION = 10


class ExperimentError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    """Knobs shared by all experiments; each experiment reads the ones it needs.

    The graph is either ``G(n, c ln n / n)`` (``structure=None``) or a
    structured family named by ``structure``.  ``n_grid`` overrides ``n`` for
    scaling sweeps.
    """

    kind: str
    n: int | None = None
    c: float | None = None
    structure: str | None = None
    n_grid: list = field(default_factory=list)
    graphs: int = 1
    policies: list = field(default_factory=lambda: ["min_degree"])
    replicas: int = 10
    t_grid: list = field(default_factory=list)
    eps: float = 0.3
    delta: float | None = None
    seed: int = 0
    cap_mult: float = 200.0
    vertices: int = 50
    start: int = 0
    pairs: list = field(default_factory=list)
    exact: bool | None = None
    p2_radius: int = 2
    out: str | None = None

    def __post_init__(self):
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.graphs < 1:
            raise ValueError("graphs must be >= 1")
        if any(b <= a for a, b in zip(self.t_grid, self.t_grid[1:])):
            raise ValueError("t_grid must be strictly increasing")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        for pol in self.policies:
            as_policy(pol)
        if self.delta is None:
            self.delta = 3 * self.eps

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def canonical(self) -> str:
        d = self.to_dict()
        d.pop("out")
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def ns(self) -> list[int]:
        if self.n_grid:
            return [int(x) for x in self.n_grid]
        if self.n is None:
            raise ValueError("config needs n or n_grid")
        return [int(self.n)]


@dataclass
class ResultRecord:
    config_hash: str
    config: dict
    units: list = field(default_factory=list)
    table: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    engine_version: str = __version__
    wall_clock: float = 0.0  # metadata, excluded from the serialised record

    def add(self, **unit) -> None:
        self.units.append(unit)

    def to_json(self) -> str:
        d = {"config_hash": self.config_hash, "config": self.config, "units": self.units,
             "table": self.table, "extra": self.extra, "engine_version": self.engine_version}
        return json.dumps(_plain(d), sort_keys=True)

    def meta(self) -> dict:
        return {"config_hash": self.config_hash, "wall_clock_s": self.wall_clock,
                "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z")}


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_jsonl(records: Sequence[ResultRecord], path) -> None:
    atomic_write_text(path, "".join(r.to_json() + "\n" for r in records))


def read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def table_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    if rows:
        cols = list(rows[0].keys())
        for r in rows[1:]:
            cols += [k for k in r if k not in cols]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(_plain({k: r.get(k, "") for k in cols}))
    return buf.getvalue()


def write_csv(rows: Sequence[dict], path) -> None:
    atomic_write_text(path, table_to_csv(rows))


def cover_floor(n: int) -> float:
    """``(n/4) ln(n/2)``: no reversible walk covers faster."""
    return n / 4 * math.log(n / 2)


# ---------------------------------------------------------------------------
# graph acquisition


def derived_seed(seed: int, *key: int) -> int:
    return int(make_rng(seed, *key).integers(2 ** 62))


def connected_gnp(n: int, c: float, seed: int) -> tuple[Graph, int, int]:
    """A connected ``G(n, p)`` sample; resamples up to 10 times.

    Returns ``(graph, graph_seed, rejected)``.
    """
    for attempt in range(MAX_RESAMPLES + 1):
        gs = seed if attempt == 0 else derived_seed(seed, attempt)
        g = gnp_sample(GnpParams(n, c, gs))
        if is_connected(g):
            return g, gs, attempt
    raise ExperimentError(f"no connected G({n}, c={c}) sample in {MAX_RESAMPLES + 1} attempts")


def config_graphs(cfg: ExperimentConfig, n: int, graph: Graph | None = None):
    """Yield ``(graph_index, graph, graph_seed, rejected)`` for one size.

    A supplied ``graph`` is used as the only instance.
    """
    if graph is not None:
        yield 0, graph, None, 0
        return
    if cfg.structure:
        yield 0, structured_graph(cfg.structure, n), None, 0
        return
    if cfg.c is None:
        raise ValueError("G(n,p) experiments need c")
    for gi in range(cfg.graphs):
        g, gs, rej = connected_gnp(n, cfg.c, derived_seed(cfg.seed, n, gi))
        yield gi, g, gs, rej


# ---------------------------------------------------------------------------
# cover time


def cover_scaling(cfg: ExperimentConfig, threads: int | None = None, graph: Graph | None = None) -> ResultRecord:
    """Mean cover time against ``n ln n`` across ``cfg.n_grid``."""
    t0 = time.perf_counter()
    rec = ResultRecord(cfg.hash, cfg.to_dict())
    policy = as_policy(cfg.policies[0])
    for n in ([graph.n] if graph is not None else cfg.ns()):
        cap = default_cap(n, cfg.cap_mult)
        all_times = []
        rejected = 0
        for gi, g, gs, rej in config_graphs(cfg, n, graph):
            rejected += rej
            table = build_transitions(g, policy)
            times = replica_cover_times(table, cfg.start, cfg.replicas, derived_seed(cfg.seed, n, gi, 1),
                                        cap, threads=threads)
            for r, v in enumerate(times):
                rec.add(n=n, graph=gi, graph_seed=gs, replica=r, value=int(v))
            all_times.append(times)
        times = np.concatenate(all_times)
        ok = times[times >= 0]
        censored = float((times < 0).mean())
        mean = float(ok.mean()) if ok.size else math.nan
        rec.table.append({
            "n": n, "graphs": len(all_times), "replicas": cfg.replicas, "mean_cover": mean,
            "stderr": float(ok.std(ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else 0.0,
            "ratio": mean / (n * math.log(n)), "censored_fraction": censored,
            "flagged": censored > 0.10, "rejected_graphs": rejected,
            "cover_floor": cover_floor(n), "above_floor": bool(mean > cover_floor(n)),
        })
    rec.wall_clock = time.perf_counter() - t0
    return rec


def policy_comparison(cfg: ExperimentConfig, threads: int | None = None,
                      graph: Graph | None = None) -> ResultRecord:
    """Paired comparison of cover times across policies.

    Every policy sees the same graphs and the same replica seeds, so the
    per-replica differences isolate the policy.
    """
    if len(cfg.policies) < 2:
        raise ValueError("policy comparison needs at least two policies")
    t0 = time.perf_counter()
    rec = ResultRecord(cfg.hash, cfg.to_dict())
    for n in ([graph.n] if graph is not None else cfg.ns()):
        cap = default_cap(n, cfg.cap_mult)
        per_policy = {p: [] for p in cfg.policies}
        for gi, g, gs, _ in config_graphs(cfg, n, graph):
            rseed = derived_seed(cfg.seed, n, gi, 2)
            for pol in cfg.policies:
                table = build_transitions(g, pol)
                times = replica_cover_times(table, cfg.start, cfg.replicas, rseed, cap, threads=threads)
                per_policy[pol].append(times)
                for r, v in enumerate(times):
                    rec.add(n=n, graph=gi, graph_seed=gs, policy=pol, replica=r, value=int(v))
        base = cfg.policies[0]
        base_times = np.concatenate(per_policy[base])
        for pol in cfg.policies:
            times = np.concatenate(per_policy[pol])
            both = (times >= 0) & (base_times >= 0)
            diff = (times[both] - base_times[both]).astype(float)
            ok = times[times >= 0]
            mean = float(ok.mean()) if ok.size else math.nan
            se = float(diff.std(ddof=1) / math.sqrt(diff.size)) if diff.size > 1 else 0.0
            rec.table.append({
                "n": n, "policy": pol, "units": int(times.size), "mean_cover": mean,
                "stderr": float(ok.std(ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else 0.0,
                "censored_fraction": float((times < 0).mean()),
                f"paired_diff_vs_{base}": float(diff.mean()) if diff.size else 0.0,
                "paired_diff_stderr": se,
                "paired_z": float(diff.mean() / se) if se > 0 else 0.0,
                "above_floor": bool(mean > cover_floor(n)),
            })
    rec.wall_clock = time.perf_counter() - t0
    return rec


# ---------------------------------------------------------------------------
# first-visit formula


def _experiment_graph(cfg: ExperimentConfig) -> tuple[Graph, int | None]:
    n = cfg.ns()[0]
    if cfg.structure:
        return structured_graph(cfg.structure, n), None
    g, gs, _ = connected_gnp(n, cfg.c, derived_seed(cfg.seed, n, 0))
    return g, gs


def first_visit_experiment(cfg: ExperimentConfig, g: Graph | None = None,
                           threads: int | None = None) -> ResultRecord:
    """Empirical ``Pr[v unvisited during T..t]`` against ``exp(-t pi_v / R_v)``.

    ``T`` is the empirical mixing time at threshold ``n**-3``.  Targets are
    ``cfg.vertices`` vertices sampled from ``V - {start}``; ``cfg.t_grid``
    defaults to ``(n, 2n, 3n)``.  With ``cfg.exact`` (default: n <= 500) the
    exact windowed avoidance is added as a third column.
    """
    t0 = time.perf_counter()
    graph_seed = None
    if g is None:
        g, graph_seed = _experiment_graph(cfg)
    n = g.n
    table = build_transitions(g, cfg.policies[0])
    mix = empirical_mixing_time(table)
    if not mix.reached:
        raise ExperimentError("chain did not mix within the cap (periodic?)")
    T = mix.steps
    t_grid = list(cfg.t_grid) if cfg.t_grid else [n, 2 * n, 3 * n]
    u = cfg.start
    pool = np.setdiff1d(np.arange(n), [u])
    k = min(cfg.vertices, pool.size)
    targets = np.sort(make_rng(cfg.seed, 3).choice(pool, size=k, replace=False))
    pi = stationary(table).pi
    R = return_matrix(table, None, targets, max(T, 1)).sum(axis=1)
    hits = first_hit_times(table, None, u, targets, T, max(t_grid), cfg.replicas, derived_seed(cfg.seed, 4),
                           threads=threads)
    exact = cfg.exact if cfg.exact is not None else n <= 500
    rec = ResultRecord(cfg.hash, cfg.to_dict(), extra={"T": T, "start": u, "graph_seed": graph_seed})
    for i, v in enumerate(targets):
        for t in t_grid:
            emp = float((hits[:, i] > t).mean())
            pred = first_visit_prediction(pi[v], R[i], t)
            row = {"v": int(v), "t": int(t), "empirical": emp, "predicted": pred,
                   "abs_error": abs(emp - pred), "pi_v": float(pi[v]), "R_v": float(R[i]), "T": T}
            if exact:
                ex = exact_avoidance_window(table, None, u, [v], T, t)
                row.update(exact=ex, empirical_vs_exact=abs(emp - ex), predicted_vs_exact=abs(pred - ex))
            rec.table.append(row)
    rec.units = [{"v": r["v"], "t": r["t"], "value": r["empirical"]} for r in rec.table]
    rec.extra["max_abs_error"] = max(r["abs_error"] for r in rec.table)
    rec.wall_clock = time.perf_counter() - t0
    return rec


# ---------------------------------------------------------------------------
# contraction


def p3_holds(g: Graph, v: int) -> bool:
    """Every neighbour of ``v`` has degree at most ``d(v)``."""
    return bool(np.all(g.degrees[g.adj(v)] <= g.degrees[v]))


def admissible_pairs(g: Graph, limit: int | None = None, min_distance: int = 3) -> list[tuple[int, int]]:
    """Pairs that can be contracted exactly: distance >= 3 and both endpoints satisfy P3."""
    cand = [v for v in range(g.n) if p3_holds(g, v)]
    out = []
    for i, u in enumerate(cand):
        dist = bfs_distances(g, u)
        for v in cand[i + 1:]:
            if dist[v] < 0 or dist[v] >= min_distance:
                out.append((u, v))
                if limit is not None and len(out) >= limit:
                    return out
    return out


def contraction_check(g: Graph, u: int, v: int, policy="min_degree", t_max: int = 50,
                      T: int | None = None) -> dict:
    """Compare ``G`` and the contracted graph for one pair.

    Reports the largest gap between avoiding ``{u, v}`` in ``G`` and avoiding
    ``z`` in the contracted graph, over every start and every ``t <= t_max``;
    the stationary residual ``pi_z - (pi_u + pi_v)``; and the return residual
    ``R_z - (R_u + R_v)/2`` at horizon ``T``.
    """
    con = contract_pair(g, u, v)
    G_tab = build_transitions(g, policy)
    H_tab = build_transitions(con.graph, policy)
    ts = np.arange(t_max + 1)
    hG = avoidance_from_all(G_tab, None, [u, v], ts)
    hH = avoidance_from_all(H_tab, None, [con.z], ts)
    others = np.setdiff1d(np.arange(g.n), [u, v])
    gap = float(np.abs(hG[:, others] - hH[:, con.mapping[others]]).max()) if others.size else 0.0
    piG = stationary(G_tab).pi
    piH = stationary(H_tab).pi
    if T is None:
        mix = empirical_mixing_time(G_tab)
        T = mix.steps if mix.reached else 2 * int(math.ceil(math.log(g.n) + 1))
    RG = return_matrix(G_tab, None, [u, v], max(T, 1)).sum(axis=1)
    RH = return_matrix(H_tab, None, [con.z], max(T, 1)).sum(axis=1)[0]
    p3 = p3_holds(g, u) and p3_holds(g, v)
    return {"u": int(u), "v": int(v), "p3": p3, "avoidance_gap": gap,
            "pi_residual": float(piH[con.z] - (piG[u] + piG[v])),
            "R_residual": float(RH - 0.5 * (RG[0] + RG[1])), "T": int(T),
            "expected_exact": p3 or as_policy(policy) is as_policy("uniform")}


def contraction_experiment(cfg: ExperimentConfig, g: Graph | None = None) -> ResultRecord:
    """Run :func:`contraction_check` on ``cfg.pairs`` or on up to ``cfg.vertices`` admissible pairs."""
    t0 = time.perf_counter()
    graph_seed = None
    if g is None:
        g, graph_seed = _experiment_graph(cfg)
    if g.n > DENSE_LIMIT:
        from .chain import DenseLimitError

        raise DenseLimitError(f"contraction experiment needs n <= {DENSE_LIMIT}")
    t_max = max(cfg.t_grid) if cfg.t_grid else 50
    pairs = [tuple(p) for p in cfg.pairs] if cfg.pairs else admissible_pairs(g, cfg.vertices)
    mix = empirical_mixing_time(build_transitions(g, cfg.policies[0]))
    T = mix.steps if mix.reached else None
    rec = ResultRecord(cfg.hash, cfg.to_dict(), extra={"graph_seed": graph_seed, "T": T})
    for u, v in pairs:
        try:
            row = contraction_check(g, u, v, cfg.policies[0], t_max, T)
        except GraphError as exc:
            rec.table.append({"u": int(u), "v": int(v), "skipped": str(exc)})
            continue
        rec.table.append(row)
    checked = [r for r in rec.table if "skipped" not in r and r["expected_exact"]]
    rec.extra["max_avoidance_gap"] = max((r["avoidance_gap"] for r in checked), default=0.0)
    rec.units = [{"u": r["u"], "v": r["v"], "value": r.get("avoidance_gap")} for r in rec.table]
    rec.wall_clock = time.perf_counter() - t0
    return rec


# ---------------------------------------------------------------------------
# lower bound


@dataclass
class LowerBoundSets:
    S0: np.ndarray
    S1: np.ndarray
    S: np.ndarray
    R: dict  # R_v for S0 vertices
    claim_threshold: float  # n / (5 np)
    bin_width: float

    def sizes(self) -> dict:
        return {"S0": int(self.S0.size), "S1": int(self.S1.size), "S": int(self.S.size),
                "claim_threshold": self.claim_threshold}


def s0_predicates(g: Graph, v: int, np_: float, eps: float, isB: np.ndarray, p2_radius: int = 2) -> dict:
    """The four membership tests P1-P4 for one vertex."""
    lo, hi = (1 - eps) * np_, (1 + eps) * np_
    d = g.degrees
    ball2 = np.flatnonzero(bfs_distances(g, v, p2_radius) >= 0)  # includes v itself
    return {
        "P1": bool(lo <= d[v] <= hi),
        "P2": bool(np.all((d[ball2] >= lo) & (d[ball2] <= hi))),
        "P3": p3_holds(g, v),
        "P4": bool(isB[v]),
    }


def build_s0(g: Graph, np_: float, eps: float, p2_radius: int = 2) -> np.ndarray:
    lo, hi = (1 - eps) * np_, (1 + eps) * np_
    d = g.degrees
    inI = (d >= lo) & (d <= hi)
    isB = np.zeros(g.n, dtype=bool)
    isB[classify_vertices(g, np_=np_).B] = True
    out = []
    for v in np.flatnonzero(inI & isB):
        if not p3_holds(g, v):
            continue
        ball2 = np.flatnonzero(bfs_distances(g, int(v), p2_radius) >= 0)
        if np.all(inI[ball2]):
            out.append(int(v))
    return np.array(out, dtype=np.int64)


def separated_subset(g: Graph, candidates: Sequence[int], order_key: np.ndarray,
                     separation: int = SEPARATION) -> np.ndarray:
    """Greedy subset with pairwise distance > ``separation``, scanning by ``order_key`` descending then id."""
    cand = np.asarray(candidates, dtype=np.int64)
    order = np.lexsort((cand, -np.asarray(order_key)))
    blocked = np.zeros(g.n, dtype=bool)
    chosen = []
    for v in cand[order]:
        if blocked[v]:
            continue
        chosen.append(int(v))
        blocked[bfs_distances(g, int(v), separation) >= 0] = True
    return np.array(sorted(chosen), dtype=np.int64)


def lower_bound_sets(g: Graph, c: float, eps: float, T: int, policy="min_degree", p2_radius: int = 2,
                     reps: int = 2000, seed: int = 0) -> LowerBoundSets:
    n = g.n
    np_ = c * math.log(n)
    S0 = build_s0(g, np_, eps, p2_radius)
    if S0.size == 0:
        raise ExperimentError("S0 is empty: no vertex satisfies P1-P4 (check the audit report)")
    table = build_transitions(g, policy)
    if n <= DENSE_LIMIT:
        R = return_matrix(table, None, S0, T).sum(axis=1)
        se = np.zeros_like(R)
    else:
        prof = [_mc_returns(table, int(v), T, reps, derived_seed(seed, 5, int(v))) for v in S0]
        R = np.array([p.sum() for p in prof])
        # returns after t >= 1 are rare events; binomial error per step, summed
        se = np.array([math.sqrt(max(np.sum(p[1:] * (1 - p[1:])), 1e-300) / reps) for p in prof])
    width = max(1.0 / math.log(n) ** 2, 3.0 * float(se.max()) if se.size else 0.0)
    bins = np.floor((R - R.min()) / width).astype(np.int64)
    best = np.bincount(bins).argmax()
    S1 = S0[bins == best]
    S = separated_subset(g, S1, R[bins == best])
    return LowerBoundSets(S0, S1, S, dict(zip(S0.tolist(), R.tolist())), n / (5 * np_), width)


def lower_bound_experiment(cfg: ExperimentConfig, g: Graph | None = None,
                           threads: int | None = None) -> ResultRecord:
    """Build S0, S1, S and count S-vertices still unvisited at ``t = (1 - delta) n ln n``."""
    t0 = time.perf_counter()
    graph_seed = None
    if g is None:
        g, graph_seed = _experiment_graph(cfg)
    n = g.n
    rep = run_audit(g, cfg.eps, cfg.c, seed=cfg.seed)
    structural = "abcdefgh"
    if not rep.passed(structural):
        raise ExperimentError(f"audit failed conditions {rep.failed()}")
    table = build_transitions(g, cfg.policies[0])
    if n <= DENSE_LIMIT:
        mix = empirical_mixing_time(table)
        T = mix.steps if mix.reached else int(math.ceil(10 * math.log(n)))
    else:
        T = int(math.ceil(10 * math.log(n)))
    try:
        sets = lower_bound_sets(g, cfg.c, cfg.eps, T, cfg.policies[0], cfg.p2_radius, seed=cfg.seed)
    except ExperimentError as exc:
        raise ExperimentError(f"{exc}; audit failures: {rep.failed() or 'none'}") from None
    t = max(int(math.floor((1 - cfg.delta) * n * math.log(n))), 0)
    start = int(np.setdiff1d(np.arange(n), sets.S)[0])
    hits = first_hit_times(table, None, start, sets.S, 0, t, cfg.replicas, derived_seed(cfg.seed, 6),
                           threads=threads)
    unvisited = (hits > t).sum(axis=1)
    rec = ResultRecord(cfg.hash, cfg.to_dict(), extra={
        "graph_seed": graph_seed, "T": T, "t": t, "start": start, **sets.sizes(),
        "bin_width": sets.bin_width, "audit_failed": rep.failed(),
    })
    for r, k in enumerate(unvisited):
        rec.add(replica=r, value=int(k))
    pairwise_ok = all(bfs_distances(g, int(a), SEPARATION)[sets.S[sets.S != a]].max(initial=-1) < 0
                      for a in sets.S)
    rec.table.append({"S0": int(sets.S0.size), "S1": int(sets.S1.size), "S": int(sets.S.size),
                      "t": t, "mean_unvisited": float(unvisited.mean()),
                      "fraction_with_unvisited": float((unvisited >= 1).mean()),
                      "separation_ok": pairwise_ok})
    rec.extra["sets"] = {"S0": sets.S0, "S1": sets.S1, "S": sets.S}
    rec.wall_clock = time.perf_counter() - t0
    return rec


EXPERIMENTS = {
    "cover_scaling": cover_scaling,
    "policy_comparison": policy_comparison,
    "first_visit": first_visit_experiment,
    "contraction": contraction_experiment,
    "lower_bound": lower_bound_experiment,
}


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> ResultRecord:
    try:
        fn = EXPERIMENTS[cfg.kind]
    except KeyError:
        raise ValueError(f"unknown experiment kind {cfg.kind!r}; choose from {sorted(EXPERIMENTS)}") from None
    if fn in (contraction_experiment,):
        return fn(cfg)
    return fn(cfg, threads=threads)
