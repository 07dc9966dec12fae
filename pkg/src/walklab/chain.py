"""Exact and spectral analysis of the walk's Markov chain.

Everything here works on the transition matrix ``P`` of a (graph, policy)
pair.  ``P`` is held as a scipy CSR matrix; the "dense limit" is a contract on
problem size (n <= 4096), not on storage, and keeps the t-step computations
at desk scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
from numba import njit

from ._rng import make_rng
from .graph import Graph, GraphError
from .walk import TransitionTable, build_transitions, return_frequencies

DENSE_LIMIT = 4096
EXHAUSTIVE_LIMIT = 20
THETA = 0.25
CHEEGER_TOL = 1e-12


class DenseLimitError(ValueError):
    """The requested exact computation exceeds the dense-size limit."""


class ConvergenceError(RuntimeError):
    pass


def _table(g, policy) -> TransitionTable:
    if isinstance(g, TransitionTable):
        return g
    return build_transitions(g, policy)


def _require_dense(n: int, what: str) -> None:
    if n > DENSE_LIMIT:
        raise DenseLimitError(f"{what} needs n <= {DENSE_LIMIT}, graph has n = {n}")


def is_bipartite(g: Graph) -> bool:
    return bool(_two_colour(g.offsets, g.neighbors))


@njit(cache=True)
def _two_colour(offsets, neighbors):
    n = offsets.size - 1
    colour = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    for s in range(n):
        if colour[s] >= 0:
            continue
        colour[s] = 0
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            x = queue[head]
            head += 1
            for k in range(offsets[x], offsets[x + 1]):
                y = neighbors[k]
                if colour[y] < 0:
                    colour[y] = 1 - colour[x]
                    queue[tail] = y
                    tail += 1
                elif colour[y] == colour[x]:
                    return False
    return True


# ---------------------------------------------------------------------------
# stationary distribution


@dataclass(frozen=True)
class StationaryDist:
    pi: np.ndarray = field(repr=False)
    normalizer: float  # sum of Psi over all vertices

    def detailed_balance_violation(self, table: TransitionTable) -> float:
        """max over edges of ``|pi_u p(u,v) - pi_v p(v,u)|``."""
        P = table.matrix()
        flow = sp.diags(self.pi) @ P
        diff = flow - flow.T
        return float(np.abs(diff.data).max()) if diff.nnz else 0.0

    def to_dict(self) -> dict:
        return {"pi": self.pi.tolist(), "normalizer": self.normalizer}


def stationary(g, policy="min_degree") -> StationaryDist:
    """``pi_v = Psi(v) / sum_u Psi(u)``."""
    table = _table(g, policy)
    total = math.fsum(table.psi)
    return StationaryDist(table.psi / total, total)


# ---------------------------------------------------------------------------
# convergence to stationarity


def tv_curve(g, policy, u: int, ts: Sequence[int]) -> np.ndarray:
    """Total variation ``(1/2) sum_x |P_u^t(x) - pi_x|`` for each requested ``t``."""
    table = _table(g, policy)
    n = table.graph.n
    _require_dense(n, "tv_distance")
    ts = np.asarray(ts, dtype=np.int64)
    if ts.size and ts.min() < 0:
        raise ValueError("t must be non-negative")
    pi = stationary(table).pi
    PT = table.matrix().T.tocsr()
    x = np.zeros(n)
    x[u] = 1.0
    out = np.empty(ts.size)
    order = np.argsort(ts)
    t = 0
    for i in order:
        while t < ts[i]:
            x = PT @ x
            t += 1
        out[i] = 0.5 * np.abs(x - pi).sum()
    return out


def tv_distance(g, policy, u: int, t: int) -> float:
    """Total variation between the ``t``-step distribution from ``u`` and ``pi``.

    Bipartite chains never converge; the value simply stays large.
    """
    return float(tv_curve(g, policy, u, [t])[0])


class MixingTime(NamedTuple):
    steps: int | None  # None when the cap was hit
    reached: bool
    periodic: bool
    threshold: float
    worst_start: int


def mixing_starts(table: TransitionTable, k_random: int = 4, seed: int = 0) -> np.ndarray:
    """Extreme-degree and extreme-Psi vertices plus a few random ones."""
    g = table.graph
    picks = {int(np.argmin(g.degrees)), int(np.argmax(g.degrees)),
             int(np.argmin(table.psi)), int(np.argmax(table.psi))}
    if k_random:
        picks.update(int(v) for v in make_rng(seed).choice(g.n, size=min(k_random, g.n), replace=False))
    return np.array(sorted(picks), dtype=np.int64)


def empirical_mixing_time(g, policy="min_degree", threshold: float | None = None,
                          starts: Sequence[int] | None = None, cap: int = 10_000) -> MixingTime:
    """Smallest ``t`` with total variation ``<= threshold`` for the worst sampled start.

    The default threshold is ``n**-3``.  Total variation bounds every
    pointwise deviation ``|P_u^t(x) - pi_x|``, so the pointwise criterion holds
    at the returned ``t`` as well.
    """
    table = _table(g, policy)
    n = table.graph.n
    _require_dense(n, "empirical_mixing_time")
    if threshold is None:
        threshold = float(n) ** -3
    starts = mixing_starts(table) if starts is None else np.asarray(starts, dtype=np.int64)
    periodic = is_bipartite(table.graph)
    pi = stationary(table).pi
    PT = table.matrix().T.tocsr()
    X = np.zeros((n, starts.size))
    X[starts, np.arange(starts.size)] = 1.0
    done = np.full(starts.size, -1, np.int64)
    for t in range(cap + 1):
        dev = 0.5 * np.abs(X - pi[:, None]).sum(axis=0)
        newly = (done < 0) & (dev <= threshold)
        done[newly] = t
        if np.all(done >= 0):
            worst = int(np.argmax(done))
            return MixingTime(int(done[worst]), True, periodic, threshold, int(starts[worst]))
        X = PT @ X
    pending = np.flatnonzero(done < 0)
    return MixingTime(None, False, periodic, threshold, int(starts[pending[0]]))


# ---------------------------------------------------------------------------
# spectrum and conductance


def _symmetrised(table: TransitionTable) -> tuple[sp.csr_matrix, np.ndarray]:
    """``S = D^{1/2} P D^{-1/2}`` with ``D = diag(pi)``, and its top eigenvector ``sqrt(pi)``."""
    pi = stationary(table).pi
    s = np.sqrt(pi)
    P = table.matrix()
    S = sp.diags(s) @ P @ sp.diags(1.0 / s)
    S = ((S + S.T) * 0.5).tocsr()  # P is reversible; this only removes rounding asymmetry
    return S, s


def second_eigenvalue(g, policy="min_degree", tol: float = 1e-13, max_iter: int = 200_000,
                      seed: int = 0, signed: bool = False) -> float:
    """Second largest absolute eigenvalue of ``P`` by deflated power iteration.

    Iterates the symmetrised chain (equivalently, ``P`` in the pi-weighted
    inner product) with the stationary direction projected out.  With
    ``signed=True`` returns the second largest eigenvalue itself, found by
    iterating ``(S + I) / 2``, whose spectrum lies in ``[0, 1]``.
    """
    table = _table(g, policy)
    n = table.graph.n
    _require_dense(n, "second_eigenvalue")
    if n == 1:
        return 0.0
    S, top = _symmetrised(table)
    if signed:
        S = ((S + sp.identity(n, format="csr")) * 0.5).tocsr()
    x = make_rng(seed).standard_normal(n)
    x -= (x @ top) * top
    x /= np.linalg.norm(x)
    prev = -1.0
    for _ in range(max_iter):
        y = S @ x
        y -= (y @ top) * top
        lam = float(np.linalg.norm(y))
        if lam <= 1e-14:  # the deflated operator is zero up to rounding
            return -1.0 if signed else 0.0
        x = y / lam
        if abs(lam - prev) <= tol * max(lam, 1.0):
            if signed:
                return float(min(2.0 * float(x @ (S @ x)) - 1.0, 1.0))  # Rayleigh quotient keeps the sign
            return min(lam, 1.0)
        prev = lam
    raise ConvergenceError(f"power iteration did not settle in {max_iter} iterations")


def _fiedler_vector(table: TransitionTable, iters: int = 2000, seed: int = 0) -> np.ndarray:
    # Eigenvector of the largest non-trivial signed eigenvalue: iterate the lazy
    # chain (I + S) / 2, whose spectrum is non-negative.
    S, top = _symmetrised(table)
    x = make_rng(seed).standard_normal(table.graph.n)
    for _ in range(iters):
        x = 0.5 * (x + S @ x)
        x -= (x @ top) * top
        nrm = np.linalg.norm(x)
        if nrm == 0:
            break
        x /= nrm
    return x / top  # back to the right eigenvector of P


class ConductanceResult(NamedTuple):
    phi: float
    mode: str  # "exhaustive" or "sampled"
    witness: np.ndarray  # a set attaining phi
    upper_bound: bool  # True when sampled: the true conductance is <= phi


def _edge_flows(table: TransitionTable):
    g = table.graph
    pi = stationary(table).pi
    src = np.repeat(np.arange(g.n), g.degrees)
    keep = src < g.neighbors
    q = pi[src] * table.probs
    return src[keep], g.neighbors[keep].astype(np.int64), q[keep], pi


@njit(cache=True)
def _exhaustive_phi(n, eu, ev, q, pi):
    best = np.inf
    best_mask = 0
    for mask in range(1, 1 << n):
        mass = 0.0
        for x in range(n):
            if (mask >> x) & 1:
                mass += pi[x]
        if mass > 0.5 + 1e-12:
            continue
        flow = 0.0
        for e in range(eu.size):
            if ((mask >> eu[e]) & 1) != ((mask >> ev[e]) & 1):
                flow += q[e]
        val = flow / mass
        if val < best:
            best = val
            best_mask = mask
    return best, best_mask


def set_conductance(table: TransitionTable, S) -> float:
    """``Phi(S) = sum_{x in S, y not in S} pi_x P_xy / pi(S)``."""
    eu, ev, q, pi = _edge_flows(table)
    mark = np.zeros(table.graph.n, dtype=bool)
    mark[np.asarray(list(S), dtype=np.int64)] = True
    mass = pi[mark].sum()
    if mass == 0:
        raise ValueError("empty set")
    return float(q[mark[eu] != mark[ev]].sum() / mass)


def conductance(g, policy="min_degree", mode: str = "exhaustive", k: int = 1000,
                seed: int = 0) -> ConductanceResult:
    """Conductance ``min_{pi(S) <= 1/2} Phi(S)``.

    ``mode="exhaustive"`` enumerates every subset (n <= 20) and is exact.
    ``mode="sampled"`` takes the minimum over ``k`` random sets, all
    singletons and the sweep cuts of the second eigenvector, which can only
    over-estimate the true value.
    """
    table = _table(g, policy)
    n = table.graph.n
    eu, ev, q, pi = _edge_flows(table)
    if mode == "exhaustive":
        if n > EXHAUSTIVE_LIMIT:
            raise ValueError(f"exhaustive conductance needs n <= {EXHAUSTIVE_LIMIT}")
        phi, mask = _exhaustive_phi(n, eu, ev, q, pi)
        witness = np.array([x for x in range(n) if (mask >> x) & 1], dtype=np.int64)
        return ConductanceResult(float(phi), mode, witness, False)
    if mode != "sampled":
        raise ValueError(f"unknown conductance mode {mode!r}")
    _require_dense(n, "sampled conductance")
    rng = make_rng(seed)
    candidates = [np.array([x]) for x in range(n)]
    order = np.argsort(_fiedler_vector(table, seed=seed), kind="stable")
    candidates += [order[:i] for i in range(1, n)]
    for _ in range(k):
        size = int(rng.integers(1, max(n // 2, 1) + 1))
        candidates.append(rng.choice(n, size=size, replace=False))
    best, best_set = np.inf, None
    for S in candidates:
        mark = np.zeros(n, dtype=bool)
        mark[S] = True
        mass = pi[mark].sum()
        if mass > 0.5 + 1e-12:
            mark = ~mark
            mass = 1.0 - mass
        if mass <= 0:
            continue
        val = q[mark[eu] != mark[ev]].sum() / mass
        if val < best:
            best, best_set = val, np.flatnonzero(mark)
    return ConductanceResult(float(best), mode, best_set, True)


@dataclass
class SpectralReport:
    lambda2: float  # second largest absolute eigenvalue
    phi: float
    phi_mode: str
    cheeger_ok: bool | None = None
    periodic: bool = False
    lambda2_signed: float | None = None  # second largest eigenvalue
    tv_curve: dict = field(default_factory=dict)  # t -> total variation from the start vertex
    meta: dict = field(default_factory=dict)  # b1, b2, L, T and similar constants

    def __post_init__(self):
        if self.cheeger_ok is None:
            self.cheeger_ok = cheeger_check(self)

    @property
    def cheeger_signed_ok(self) -> bool | None:
        """Cheeger's bound for the signed second eigenvalue, which holds for every connected chain."""
        if self.lambda2_signed is None:
            return None
        return bool(self.lambda2_signed <= 1.0 - self.phi ** 2 / 2.0 + CHEEGER_TOL)

    def to_dict(self) -> dict:
        return {"lambda2": self.lambda2, "phi": self.phi, "phi_mode": self.phi_mode,
                "cheeger_ok": self.cheeger_ok, "periodic": self.periodic,
                "lambda2_signed": self.lambda2_signed, "cheeger_signed_ok": self.cheeger_signed_ok,
                "tv_curve": {str(k): v for k, v in self.tv_curve.items()}, "meta": self.meta}


def cheeger_check(report: SpectralReport) -> bool:
    """``lambda2 <= 1 - phi**2 / 2`` (up to rounding) with ``lambda2`` the largest non-unit modulus.

    Periodic chains have ``lambda2 = 1`` and fail; that is a property of the
    chain, not an error.  Nearly bipartite chains can also fail, because the
    bound only controls the top of the spectrum; ``cheeger_signed_ok`` on the
    report is the form that always holds.
    """
    return bool(report.lambda2 <= 1.0 - report.phi ** 2 / 2.0 + CHEEGER_TOL)


def spectral_report(g, policy="min_degree", u: int = 0, ts: Sequence[int] = (), eps: float = 0.3,
                    mode: str | None = None, seed: int = 0) -> SpectralReport:
    table = _table(g, policy)
    n = table.graph.n
    if mode is None:
        mode = "exhaustive" if n <= EXHAUSTIVE_LIMIT else "sampled"
    lam = second_eigenvalue(table, seed=seed)
    lam_signed = second_eigenvalue(table, seed=seed, signed=True)
    cond = conductance(table, mode=mode, seed=seed)
    curve = dict(zip((int(t) for t in ts), tv_curve(table, None, u, ts).tolist())) if len(ts) else {}
    b1 = (1 - eps) / (1 + eps)
    b2 = 401 / (1 + eps)
    L = 10 * (8000 * b2) ** 2 / b1 ** 2
    meta = {"eps": eps, "b1": b1, "b2": b2, "L": L, "T_bound": L * math.log(max(n, 2))}
    return SpectralReport(lam, cond.phi, mode, periodic=is_bipartite(table.graph), lambda2_signed=lam_signed,
                          tv_curve=curve, meta=meta)


# ---------------------------------------------------------------------------
# return profiles


@dataclass
class ReturnProfile:
    """Return probabilities ``r_0..r_{T-1}`` of one vertex and derived quantities."""

    v: int
    T: int
    r: np.ndarray
    K: float
    min_modulus: float
    method: str = "exact"
    grid: tuple = (64, 8)

    @property
    def R1(self) -> float:
        return float(self.r.sum())

    @property
    def theta_ok(self) -> bool:
        return bool(self.min_modulus >= THETA)

    def R(self, z):
        """The truncated generating polynomial ``sum_{j<T} r_j z^j``."""
        return np.polynomial.polynomial.polyval(z, self.r)

    def to_dict(self) -> dict:
        return {"v": self.v, "T": self.T, "r": self.r.tolist(), "R1": self.R1,
                "min_modulus": self.min_modulus, "K": self.K, "theta_ok": self.theta_ok,
                "method": self.method, "grid": list(self.grid)}


def min_modulus(r: np.ndarray, K: float, n_angles: int = 64, n_radii: int = 8) -> float:
    """Min of ``|R(T, z)|`` over a polar grid of the disk ``|z| <= 1 + 1/(K T)``."""
    T = r.shape[-1]
    rho = 1.0 + 1.0 / (K * T)
    radii = rho * np.arange(1, n_radii + 1) / n_radii
    angles = 2 * np.pi * np.arange(n_angles) / n_angles
    z = (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()
    vals = np.polynomial.polynomial.polyval(z, r.T if r.ndim > 1 else r)
    mod = np.abs(vals)
    # z = 0 gives r_0 = 1
    return np.minimum(mod.min(axis=-1), 1.0)


def return_matrix(g, policy, vertices, T: int) -> np.ndarray:
    """Exact ``r_t`` for ``t < T``; shape ``(len(vertices), T)``."""
    table = _table(g, policy)
    n = table.graph.n
    _require_dense(n, "exact return profile")
    if T < 1:
        raise ValueError("T must be >= 1")
    vertices = np.asarray(vertices, dtype=np.int64)
    PT = table.matrix().T.tocsr()
    out = np.empty((vertices.size, T))
    cols = np.arange(vertices.size)
    chunk = max(1, min(vertices.size, 2_000_000 // max(n, 1)))
    for lo in range(0, vertices.size, chunk):
        vs = vertices[lo:lo + chunk]
        X = np.zeros((n, vs.size))
        X[vs, cols[:vs.size]] = 1.0
        out[lo:lo + vs.size, 0] = 1.0
        for t in range(1, T):
            X = PT @ X
            out[lo:lo + vs.size, t] = X[vs, cols[:vs.size]]
    return out


def _mc_returns(table, v, T, reps, seed):
    return return_frequencies(table, None, v, T, reps, seed)


def return_profile(g, policy, v: int, T: int, method: str = "exact", reps: int = 10_000,
                   K: float | None = None, n_angles: int = 64, n_radii: int = 8,
                   seed: int = 0) -> ReturnProfile:
    """Return profile of ``v`` over horizon ``T``.

    ``K`` defaults to ``3 * R_v``.  ``method="monte_carlo"`` estimates ``r_t``
    from ``reps`` walks and works at any size.
    """
    table = _table(g, policy)
    if not 0 <= v < table.graph.n:
        raise GraphError(f"vertex {v} outside graph")
    if method == "exact":
        r = return_matrix(table, None, [v], T)[0]
    elif method == "monte_carlo":
        if reps < 1000:
            raise ValueError("monte_carlo return profile needs reps >= 1000")
        r = _mc_returns(table, v, T, reps, seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    if K is None:
        K = 3.0 * r.sum()
    mm = float(min_modulus(r, K, n_angles, n_radii))
    return ReturnProfile(int(v), int(T), r, float(K), mm, method, (n_angles, n_radii))


def return_profiles(g, policy, vertices, T: int, K: float | None = None, n_angles: int = 64,
                    n_radii: int = 8) -> list[ReturnProfile]:
    """Exact profiles for many vertices; ``K`` defaults to ``3 * max_v R_v`` over the batch."""
    table = _table(g, policy)
    vertices = np.asarray(vertices, dtype=np.int64)
    r = return_matrix(table, None, vertices, T)
    if K is None:
        K = 3.0 * float(r.sum(axis=1).max())
    mm = min_modulus(r, K, n_angles, n_radii)
    return [ReturnProfile(int(v), int(T), r[i], float(K), float(mm[i]), "exact", (n_angles, n_radii))
            for i, v in enumerate(vertices)]


def first_visit_prediction(pi_v: float, R_v: float, t: float) -> float:
    """``exp(-t * pi_v / R_v)``, the predicted chance that ``v`` is still unvisited."""
    if not 0 < pi_v < 1:
        raise ValueError("pi_v must lie in (0, 1)")
    if R_v < 1:
        raise ValueError("R_v must be >= 1")
    if t < 0:
        raise ValueError("t must be non-negative")
    return math.exp(-t * visit_rate(pi_v, R_v))


def visit_rate(pi_v: float, R_v: float) -> float:
    """``p_v = pi_v / R_v`` (the ``1 + O(T pi_v)`` correction is taken as 1)."""
    return pi_v / R_v


# ---------------------------------------------------------------------------
# avoidance probabilities


def _avoid_mask(n, avoid):
    mask = np.zeros(n, dtype=bool)
    avoid = np.asarray(list(avoid) if not isinstance(avoid, np.ndarray) else avoid, dtype=np.int64)
    mask[avoid] = True
    return mask


def exact_avoidance(g, policy, u: int, avoid, t: int) -> float:
    """Probability that the walk from ``u`` avoids ``avoid`` at steps ``1..t``."""
    return exact_avoidance_window(g, policy, u, avoid, 1, t)


def exact_avoidance_window(g, policy, u: int, avoid, T: int, t: int) -> float:
    """Probability that the walk from ``u`` is outside ``avoid`` at every step in ``T..t``."""
    table = _table(g, policy)
    n = table.graph.n
    _require_dense(n, "exact_avoidance")
    mask = _avoid_mask(n, avoid)
    if T <= 0 and mask[u]:
        return 0.0
    if T < 1 and not mask[u]:
        T = 1
    if t < T:
        return 1.0
    PT = table.matrix().T.tocsr()
    x = np.zeros(n)
    x[u] = 1.0
    for s in range(1, t + 1):
        x = PT @ x
        if s >= T:
            x[mask] = 0.0
    return min(1.0, float(x.sum()))  # row sums carry ulp-level error


def avoidance_from_all(g, policy, avoid, t_grid: Sequence[int]) -> np.ndarray:
    """``h[i, w]`` = Pr[walk from ``w`` avoids ``avoid`` at steps ``1..t_grid[i]``].

    Backward iteration, so one pass covers every start.  Columns for ``w`` in
    ``avoid`` are not meaningful.
    """
    table = _table(g, policy)
    n = table.graph.n
    _require_dense(n, "avoidance")
    mask = _avoid_mask(n, avoid)
    keep = sp.diags((~mask).astype(float))
    Q = (table.matrix() @ keep).tocsr()
    t_grid = np.asarray(t_grid, dtype=np.int64)
    out = np.empty((t_grid.size, n))
    h = np.ones(n)
    t = 0
    for i in np.argsort(t_grid):
        while t < t_grid[i]:
            h = Q @ h
            t += 1
        out[i] = np.minimum(h, 1.0)
    return out


# ---------------------------------------------------------------------------
# birth-death projection


@dataclass(frozen=True)
class BirthDeathParams:
    """Chain on ``{0..4}``: left ``alpha``, stay ``rho``, right ``beta`` at 1..3.

    State 0 stays with probability ``rho`` and otherwise steps right; state 4
    always steps to 3.
    """

    alpha: float
    rho: float
    T: int

    def __post_init__(self):
        if self.alpha < 0 or self.rho < 0 or self.beta < -1e-15:
            raise ValueError("alpha, rho and beta = 1 - alpha - rho must be non-negative")
        if self.rho < self.alpha:
            raise ValueError("coupling needs rho >= alpha")
        if self.rho > 0.5:
            raise ValueError("the E0 recursion needs rho <= 1/2")
        if self.T < 1:
            raise ValueError("T must be >= 1")

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha - self.rho

    def transition_matrix(self, states: int = 5) -> np.ndarray:
        a, r, b = self.alpha, self.rho, self.beta
        M = np.zeros((states, states))
        M[0, 0] = r
        M[0, 1] = 1 - r
        for i in range(1, states - 1):
            M[i, i - 1] = a
            M[i, i] = r
            M[i, i + 1] = b
        M[states - 1, states - 2] = 1.0
        return M


class BirthDeathResult(NamedTuple):
    simulated: float
    stderr: float
    bound: float
    exact: float


def birth_death_bound(params: BirthDeathParams) -> float:
    """``(1 + 2 rho + 2 alpha^2 T) / (1 - alpha / beta)``."""
    a, r, b = params.alpha, params.rho, params.beta
    if a >= b:
        raise ValueError("bound undefined unless alpha < beta")
    return (1 + 2 * r + 2 * a * a * params.T) / (1 - a / b)


def birth_death_visits(params: BirthDeathParams, start: int = 0, target: int = 0,
                       states: int = 5) -> float:
    """Exact expected visits to ``target`` at times ``0..T-1`` (matrix powers)."""
    M = params.transition_matrix(states)
    x = np.zeros(states)
    x[start] = 1.0
    total = 0.0
    for _ in range(params.T):
        total += x[target]
        x = x @ M
    return total


@njit(cache=True, nogil=True)
def _bd_simulate(alpha, rho, T, states, reps, rng):
    counts = np.empty(reps, np.int64)
    for i in range(reps):
        s = 0
        c = 0
        for _ in range(T):
            if s == 0:
                c += 1
            u = rng.random()
            if s == 0:
                if u >= rho:
                    s = 1
            elif s == states - 1:
                s -= 1
            elif u < alpha:
                s -= 1
            elif u >= alpha + rho:
                s += 1
        counts[i] = c
    return counts


def birth_death_E0(params: BirthDeathParams, reps: int = 100_000, seed: int = 0) -> BirthDeathResult:
    """Simulated visits to 0 in ``T`` steps from 0, with the closed-form bound."""
    bound = birth_death_bound(params)
    counts = _bd_simulate(params.alpha, params.rho, params.T, 5, int(reps), make_rng(seed))
    sim = float(counts.mean())
    se = float(counts.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return BirthDeathResult(sim, se, bound, birth_death_visits(params))


def birth_death_E4(params: BirthDeathParams) -> tuple[float, float]:
    """Expected visits to 0 from state 4 on the six-state variant, and the ``alpha**2`` scale."""
    return birth_death_visits(params, start=4, target=0, states=6), params.alpha ** 2


# ---------------------------------------------------------------------------
# R_v bounds by vertex class


@dataclass
class RvBoundReport:
    R: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    T: int = 0
    C: float = 402.0
    band: float = 5.0
    classes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c["verdict"] is not False for c in self.classes.values())


def r_v_bound_check(g, policy, audit, T: int, C: float = 402.0, band: float = 5.0,
                    method: str = "auto", reps: int = 2000, seed: int = 0) -> RvBoundReport:
    """Compare measured ``R_v`` with the per-class bounds.

    Classes come from :func:`walklab.typicality.classify_vertices`.  ``A`` and
    ``neighbor_of_A`` vertices must satisfy ``R_v <= 1 + C/d`` (``d`` of the
    vertex itself or of its unique low-degree neighbour).  ``B`` and ``other``
    vertices without low-degree neighbours should sit in the
    ``1 + O(1/log n)`` band, judged by the class median against ``band/ln n``.
    """
    from .typicality import classify_vertices

    table = _table(g, policy)
    graph = table.graph
    n = graph.n
    if method == "auto":
        method = "exact" if n <= DENSE_LIMIT else "monte_carlo"
    verts = np.arange(n)
    if method == "exact":
        R = return_matrix(table, None, verts, T).sum(axis=1)
    else:
        R = np.array([_mc_returns(table, v, T, reps, seed + v).sum() for v in verts])
    cls = classify_vertices(graph, report=audit)
    labels = cls.labels
    d = graph.degrees.astype(float)
    excess = R - 1.0
    band_value = band / math.log(max(n, 2))
    classes = {"all": {"count": n, "min_R": float(R.min()), "verdict": bool(R.min() >= 1.0 - 1e-12)}}

    idx = np.flatnonzero(labels == "A")
    bound = 1.0 + C / d[idx]
    classes["A"] = _bounded_class(R[idx], bound, idx)
    idx = np.flatnonzero(labels == "neighbor_of_A")
    bound = 1.0 + C / d[cls.a_neighbor[idx]] if idx.size else np.empty(0)
    classes["neighbor_of_A"] = _bounded_class(R[idx], bound, idx)
    for name, sel in (("B", labels == "B"),
                      ("other", (labels == "other") & (cls.a_neighbor_count == 0))):
        idx = np.flatnonzero(sel)
        ex = excess[idx]
        med = float(np.median(ex)) if idx.size else 0.0
        classes[name] = {
            "count": int(idx.size), "median_excess": med,
            "max_excess": float(ex.max()) if idx.size else 0.0, "band": band_value,
            "violations": idx[ex > band_value].tolist(),
            "verdict": bool(med <= band_value),
        }
    rest = np.flatnonzero((labels == "other") & (cls.a_neighbor_count > 1))
    classes["unbounded"] = {"count": int(rest.size), "verdict": None}
    return RvBoundReport(R, labels, T, C, band, classes)


def _bounded_class(R, bound, idx):
    bad = idx[R > bound]
    return {"count": int(idx.size), "max_excess": float((R - 1).max()) if idx.size else 0.0,
            "violations": bad.tolist(), "verdict": bool(bad.size == 0)}
