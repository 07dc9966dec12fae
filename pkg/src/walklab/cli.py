"""``walklab`` command-line front end.

Every subcommand resolves its settings as defaults < ``--config`` file <
explicit flags, prints the resolved settings as one JSON line, then runs.
Exit codes: 0 success, 2 invalid input, 3 analysis infeasible at this size.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

from ._rng import fresh_seed, resolve_threads
from .chain import (ConvergenceError, DenseLimitError, empirical_mixing_time, return_profile,
                    spectral_report, stationary)
from .experiments import (ExperimentConfig, ExperimentError, ResultRecord, _plain, contraction_experiment,
                          cover_scaling, first_visit_experiment, lower_bound_experiment, policy_comparison,
                          write_csv, write_jsonl)
from .graph import (STRUCTURED_KINDS, GnpParams, GraphError, atomic_write_text, gnp_sample, read_edgelist,
                    structured_graph, write_edgelist)
from .typicality import audit
from .walk import WalkPolicy, build_transitions

POLICIES = [p.value for p in WalkPolicy]

# flag name -> (argparse kwargs, default)
FLAGS = {
    "gnp": (dict(metavar="n=N,c=C[,seed=S]", help="sample G(n, c ln n / n)"), None),
    "kind": (dict(choices=STRUCTURED_KINDS, help="structured graph family"), None),
    "n": (dict(metavar="N[,N...]", help="vertex count (a list sweeps sizes for cover)"), None),
    "c": (dict(type=float, help="edge density constant: p = c ln n / n"), None),
    "eps": (dict(type=float, help="degree band half-width"), 0.3),
    "delta": (dict(type=float, help="lower-bound horizon is (1 - delta) n ln n; default 3 eps"), None),
    "policy": (dict(action="append", choices=POLICIES, help="walk policy (repeatable for compare)"), None),
    "replicas": (dict(type=int, help="independent walks"), None),
    "seed": (dict(type=int, help="master seed; generated and printed when omitted"), None),
    "threads": (dict(type=int, help="worker threads (default: WALKLAB_THREADS or all cores)"), None),
    "cap-mult": (dict(type=float, help="cover-walk cap in units of n ln n"), 200.0),
    "T": (dict(type=int, help="return-profile horizon (default: empirical mixing time)"), None),
    "K": (dict(type=float, help="disk radius parameter (default 3 R_v)"), None),
    "t-grid": (dict(metavar="t[,t...]", help="comma-separated times"), None),
    "in": (dict(metavar="PATH", help="read graph from an edge list"), None),
    "out": (dict(metavar="PATH", help="write edge list"), None),
    "json": (dict(metavar="PATH", help="write JSON result"), None),
    "csv": (dict(metavar="PATH", help="write CSV table"), None),
    "v": (dict(metavar="V[,V...]", help="vertex (or vertices)"), None),
    "u": (dict(type=int, help="start vertex, or first vertex of a pair"), None),
    "exact": (dict(action="store_true", default=None, help="exact matrix computation"), None),
    "p2-radius": (dict(type=int, help="radius of the degree-band neighbourhood test for S0"), 2),
}

GRAPH = ["gnp", "kind", "n", "c", "seed", "in"]
SUBCOMMANDS = {
    "gen": (GRAPH + ["out"], "generate a graph and write it as an edge list"),
    "audit": (GRAPH + ["eps", "json"], "check the typicality conditions a..i"),
    "stationary": (GRAPH + ["policy", "json"], "stationary distribution and detailed-balance check"),
    "mix": (GRAPH + ["policy", "eps", "t-grid", "u", "json"], "mixing time, second eigenvalue, conductance"),
    "returns": (GRAPH + ["policy", "v", "T", "K", "exact", "replicas", "json", "csv"], "return profiles"),
    "cover": (GRAPH + ["policy", "replicas", "threads", "cap-mult", "u", "json", "csv"], "cover-time scaling"),
    "compare": (GRAPH + ["policy", "replicas", "threads", "cap-mult", "u", "json", "csv"],
                "paired cover-time comparison of policies"),
    "firstvisit": (GRAPH + ["policy", "replicas", "threads", "t-grid", "u", "exact", "json", "csv"],
                   "first-visit tails against the exponential formula"),
    "contract": (GRAPH + ["policy", "u", "v", "t-grid", "json", "csv"], "contraction identity checks"),
    "lowerbound": (GRAPH + ["policy", "eps", "delta", "p2-radius", "replicas", "threads", "json", "csv"],
                   "unvisited well-separated vertices at (1 - delta) n ln n"),
}


class UsageError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="walklab", allow_abbrev=False,
                                     description=__doc__.splitlines()[0].replace("``", ""))
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (flags, help_) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_, allow_abbrev=False)
        p.add_argument("--config", metavar="PATH", help="JSON settings, overridden by flags")
        for flag in flags:
            kwargs = dict(FLAGS[flag][0])
            kwargs.setdefault("default", None)
            p.add_argument(f"--{flag}", dest=flag.replace("-", "_"), **kwargs)
    return parser


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    if isinstance(text, int):
        return [text]
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def parse_gnp(text: str) -> dict:
    out = {}
    for part in text.split(","):
        key, sep, val = part.partition("=")
        key = key.strip()
        if not sep or key not in ("n", "c", "seed"):
            raise UsageError(f"bad --gnp item {part!r}; expected n=..,c=..[,seed=..]")
        out[key] = float(val) if key == "c" else int(val)
    if "n" not in out or "c" not in out:
        raise UsageError("--gnp needs n and c")
    return out


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags for ``command``."""
    flags = SUBCOMMANDS[command][0]
    settings = {f.replace("-", "_"): FLAGS[f][1] for f in flags}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        unknown = set(cfg) - set(settings)
        if unknown:
            raise UsageError(f"config keys not valid for {command}: {sorted(unknown)}")
        settings.update(cfg)
    for key in settings:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    if isinstance(settings.get("policy"), str):
        settings["policy"] = [settings["policy"]]
    if "policy" in settings:
        pols = settings["policy"] or (["uniform", "min_degree"] if command == "compare" else ["min_degree"])
        if command != "compare" and len(pols) > 1:
            raise UsageError(f"{command} takes one --policy")
        for p in pols:
            if p not in POLICIES:
                raise UsageError(f"unknown policy {p!r}")
        settings["policy"] = pols
    if isinstance(settings.get("gnp"), str):
        settings["gnp"] = parse_gnp(settings["gnp"])
    if settings.get("n") is not None:
        settings["n"] = _ints(settings["n"])
    if settings.get("t_grid") is not None:
        settings["t_grid"] = _ints(settings["t_grid"])
    if settings.get("v") is not None:
        settings["v"] = _ints(settings["v"])
    sources = [k for k in ("in", "gnp", "kind") if settings.get(k)]
    if len(sources) > 1:
        raise UsageError(f"choose one graph source, got {sources}")
    if not sources and not (settings.get("n") and settings.get("c") is not None):
        raise UsageError("need a graph: --in, --gnp, --kind with --n, or --n with --c")
    gnp = settings.get("gnp")
    unseeded_graph = (gnp is not None and "seed" not in gnp) or not sources
    needs_seed = command not in ("gen", "stationary", "mix", "contract") or unseeded_graph
    if needs_seed and settings.get("seed") is None:
        settings["seed"] = fresh_seed()
    if settings.get("gnp") is not None and "seed" not in settings["gnp"]:
        settings["gnp"]["seed"] = settings["seed"]
    if "threads" in settings:
        settings["threads"] = resolve_threads(settings["threads"])
    return settings


def load_graph(s: dict):
    """Graph named by the settings, plus the ``c`` it was drawn with (if any)."""
    if s.get("in"):
        return read_edgelist(s["in"]), s.get("c")
    if s.get("gnp"):
        q = s["gnp"]
        return gnp_sample(GnpParams(q["n"], q["c"], q["seed"])), q["c"]
    ns = s.get("n") or []
    if len(ns) != 1:
        raise UsageError("this subcommand needs a single --n")
    if s.get("kind"):
        return structured_graph(s["kind"], ns[0]), s.get("c")
    return gnp_sample(GnpParams(ns[0], s["c"], s["seed"])), s["c"]


def _emit(s: dict, payload: dict | None = None, record: ResultRecord | None = None, table=None) -> None:
    if record is not None:
        if s.get("json"):
            write_jsonl([record], s["json"])
        table = record.table
    elif payload is not None and s.get("json"):
        atomic_write_text(s["json"], json.dumps(_plain(payload), sort_keys=True, indent=1) + "\n")
    if table is not None and s.get("csv"):
        write_csv(table, s["csv"])


def _experiment_config(kind: str, s: dict, n: int | list) -> ExperimentConfig:
    d = dict(kind=kind, seed=s["seed"], policies=s["policy"])
    if isinstance(n, list):
        d["n_grid"] = n
    else:
        d["n"] = n
    for key in ("c", "eps", "delta", "replicas", "t_grid", "p2_radius"):
        if s.get(key) is not None:
            d[key] = s[key]
    if s.get("cap_mult") is not None:
        d["cap_mult"] = s["cap_mult"]
    if s.get("u") is not None:
        d["start"] = s["u"]
    if s.get("kind"):
        d["structure"] = s["kind"]
    return ExperimentConfig(**d)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(s):
    g, _ = load_graph(s)
    if s.get("out"):
        write_edgelist(g, s["out"])
    print(f"n={g.n} m={g.m}")


def cmd_audit(s):
    g, c = load_graph(s)
    if c is None:
        raise UsageError("audit needs --c when the graph comes from a file or a structured family")
    rep = audit(g, s["eps"], c, seed=s["seed"])
    _emit(s, rep.to_dict())
    for cond in rep.conditions.values():
        print(f"{cond.id}: {'pass' if cond.passed else 'FAIL'} ({cond.mode})")
    print(f"typical: {rep.typical}")


def cmd_stationary(s):
    g, _ = load_graph(s)
    table = build_transitions(g, s["policy"][0])
    st = stationary(table)
    viol = st.detailed_balance_violation(table)
    _emit(s, {**st.to_dict(), "detailed_balance_violation": viol})
    print(f"normalizer={st.normalizer:.12g} max_pi={st.pi.max():.6g} min_pi={st.pi.min():.6g} "
          f"detailed_balance_violation={viol:.3g}")


def cmd_mix(s):
    g, _ = load_graph(s)
    table = build_transitions(g, s["policy"][0])
    mix = empirical_mixing_time(table)
    u = s.get("u") or 0
    rep = spectral_report(table, u=u, ts=s.get("t_grid") or (), eps=s["eps"])
    out = {**rep.to_dict(), "mixing_time": mix.steps, "mixing_reached": mix.reached,
           "threshold": mix.threshold, "worst_start": mix.worst_start}
    _emit(s, out)
    print(f"T={mix.steps} lambda2={rep.lambda2:.6g} phi={rep.phi:.6g} ({rep.phi_mode}) "
          f"cheeger_ok={rep.cheeger_ok} lambda2_signed={rep.lambda2_signed:.6g} "
          f"cheeger_signed_ok={rep.cheeger_signed_ok} periodic={rep.periodic}")


def cmd_returns(s):
    g, _ = load_graph(s)
    table = build_transitions(g, s["policy"][0])
    vs = s.get("v") or [0]
    method = "exact" if s.get("exact") else "monte_carlo"
    T = s.get("T")
    if T is None:
        mix = empirical_mixing_time(table)
        if not mix.reached:
            raise ConvergenceError("walk did not mix; pass --T")
        T = max(mix.steps, 1)
    reps = s.get("replicas") or 10_000
    profs = [return_profile(table, None, v, T, method=method, reps=reps, K=s.get("K"), seed=s["seed"])
             for v in vs]
    _emit(s, {"T": T, "method": method, "profiles": [p.to_dict() for p in profs]},
          table=[{"v": p.v, "T": p.T, "R1": p.R1, "K": p.K, "min_modulus": p.min_modulus,
                  "theta_ok": p.theta_ok} for p in profs])
    for p in profs:
        print(f"v={p.v} R_v={p.R1:.6g} min|R|={p.min_modulus:.4g} theta_ok={p.theta_ok}")


def cmd_cover(s):
    if s.get("in") or s.get("gnp"):
        g, c = load_graph(s)
        cfg = _experiment_config("cover_scaling", {**s, "c": c, "kind": None}, g.n)
        rec = cover_scaling(cfg, threads=s["threads"], graph=g)
    else:
        rec = cover_scaling(_experiment_config("cover_scaling", s, s["n"]), threads=s["threads"])
    _emit(s, record=rec)
    for row in rec.table:
        print(f"n={row['n']} mean={row['mean_cover']:.6g} ratio={row['ratio']:.4f} "
              f"censored={row['censored_fraction']:.3f} above_floor={row['above_floor']}")
    return rec


def cmd_compare(s):
    g = None
    n = s["n"][0] if s.get("n") else None
    if s.get("in") or s.get("gnp"):
        g, _ = load_graph(s)
        n = g.n
    rec = policy_comparison(_experiment_config("policy_comparison", {**s, "kind": s.get("kind")}, n),
                            threads=s["threads"], graph=g)
    _emit(s, record=rec)
    for row in rec.table:
        print(f"{row['policy']}: mean={row['mean_cover']:.6g} paired_z={row['paired_z']:.3f}")
    return rec


def _single_graph_experiment(s, kind, fn, **kw):
    g, c = load_graph(s)
    cfg = _experiment_config(kind, {**s, "c": c}, g.n)
    return fn(cfg, g=g, **kw)


def cmd_firstvisit(s):
    rec = _single_graph_experiment(s, "first_visit", first_visit_experiment, threads=s["threads"])
    if s.get("exact") is not None:
        rec.config["exact"] = s["exact"]
    _emit(s, record=rec)
    print(f"T={rec.extra['T']} max|empirical - predicted|={rec.extra['max_abs_error']:.4g}")


def cmd_contract(s):
    if (s.get("u") is None) != (s.get("v") is None):
        raise UsageError("give both --u and --v, or neither")
    g, c = load_graph(s)
    cfg = _experiment_config("contraction", {**s, "c": c, "u": None}, g.n)
    if s.get("u") is not None:
        cfg.pairs = [[s["u"], v] for v in s["v"]]
    rec = contraction_experiment(cfg, g=g)
    _emit(s, record=rec)
    for row in rec.table:
        if "skipped" in row:
            print(f"({row['u']},{row['v']}) skipped: {row['skipped']}")
        else:
            print(f"({row['u']},{row['v']}) gap={row['avoidance_gap']:.3g} pi_res={row['pi_residual']:.3g} "
                  f"R_res={row['R_residual']:.3g} p3={row['p3']}")


def cmd_lowerbound(s):
    if s.get("in") and s.get("c") is None:
        raise UsageError("lowerbound on a file needs --c")
    rec = _single_graph_experiment(s, "lower_bound", lower_bound_experiment, threads=s["threads"])
    _emit(s, record=rec)
    row = rec.table[0]
    print(f"|S0|={row['S0']} |S1|={row['S1']} |S|={row['S']} t={row['t']} "
          f"mean_unvisited={row['mean_unvisited']:.4g}")


COMMANDS = {name: globals()[f"cmd_{name}"] for name in SUBCOMMANDS}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        settings = resolve(args.command, args)
        print(json.dumps({"command": args.command, **_plain(settings)}, sort_keys=True), flush=True)
        COMMANDS[args.command](settings)
    except (DenseLimitError, ConvergenceError, ExperimentError) as exc:
        print(f"walklab: {exc}", file=sys.stderr)
        return 3
    except (UsageError, GraphError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"walklab: {exc}", file=sys.stderr)
        return 2
    print(f"elapsed {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
