"""Command line interface.

Subcommands: simulate (i.i.d. experiments), wor (without-replacement
audits, batch or streaming), wealth (one-shot log-wealth evaluation),
confset (dump a realized confidence set as CSV).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .boxreduce import embed
from .confset import ConfidenceSet, simplex_candidate_grid
from .harness import ExperimentConfig, apply_preset, emit, run_experiment
from .wealth import (
    DirichletPrior,
    UPState,
    kt_log_wealth,
    ppr_log_wealth,
    wor_kt_log_wealth,
)
from .wor import AuditState, category_count_bounds, rank_decided


def _floats(s):
    return tuple(float(x) for x in s.split(","))


def _ints(s):
    return tuple(int(x) for x in s.split(","))


def load_observations(path, K=None, box=False):
    """Observation CSV: one row per step; a single integer category
    (1-based) or K decimals (simplex), or K-1 decimals with box=True."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            vals = [float(x) for x in line.split(",")]
            rows.append(vals)
    if not rows:
        raise ValueError(f"no observations in {path}")
    if box:
        return np.array([embed(np.array(r)) for r in rows])
    if len(rows[0]) == 1:
        cats = np.array([int(r[0]) - 1 for r in rows])
        if K is None:
            K = int(cats.max()) + 1
        out = np.zeros((len(cats), K))
        out[np.arange(len(cats)), cats] = 1.0
        return out
    return np.array(rows)


def _cmd_simulate(args):
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
    else:
        cfg = ExperimentConfig()
    for name, val in (
        ("preset", args.preset), ("k", args.k), ("mu", args.mu),
        ("concentration", args.conc), ("horizon", args.t),
        ("trials", args.trials), ("delta", args.delta), ("seed", args.seed),
        ("methods", tuple(args.methods.split(",")) if args.methods else None),
        ("grid_resolution", args.grid), ("alpha", args.alpha),
    ):
        if val is not None:
            setattr(cfg, name, val)
    result = run_experiment(cfg)
    if args.out:
        emit(result, "csv", args.out)
        emit(result, "json", args.out + ".json")
    if args.svg:
        emit(result, "svg", args.svg)
    last = {m: s["mean_volume"][-1] for m, s in result["summary"].items()}
    print(json.dumps({"final_mean_volume": last}, sort_keys=True))
    return 0


def _cmd_wor(args):
    census = _ints(args.census)
    if args.stream:
        return _wor_stream(census, args)
    cfg = ExperimentConfig(
        preset="custom", census=census, trials=args.permutations or 100,
        delta=args.delta or 0.05, seed=args.seed or 0,
        methods=tuple(args.method.split(",")) if args.method else (),
        alpha=args.alpha if args.alpha is not None else 0.5,
    )
    result = run_experiment(cfg)
    if args.out:
        emit(result, "csv", args.out)
        emit(result, "json", args.out + ".json")
    print(json.dumps(result["summary"], sort_keys=True))
    return 0


def _wor_stream(census, args):
    """Line protocol: read one 1-based category per line, emit one JSON
    object per line with the updated audit state."""
    N = sum(census)
    K = len(census)
    state = AuditState(
        N, K, args.delta or 0.05,
        method=(args.method or "wor-kt"),
        prior=DirichletPrior(np.full(K, args.alpha if args.alpha is not None else 0.5)),
    )
    src = open(args.obs) if args.obs else sys.stdin
    try:
        for line in src:
            line = line.strip()
            if not line:
                continue
            state.absorb(int(line) - 1)
            bounds = category_count_bounds(state)
            print(json.dumps({
                "t": state.t,
                "active_count": state.active_count(),
                "bounds": bounds.tolist(),
                "decided": rank_decided(state),
            }))
    finally:
        if args.obs:
            src.close()
    return 0


def _cmd_wealth(args):
    m = np.array(_floats(args.m))
    K = m.size
    alpha = args.alpha if args.alpha is not None else 0.5
    prior = DirichletPrior(np.full(K, alpha))
    obs = load_observations(args.obs, K=K, box=args.box)
    if args.method == "kt":
        counts = obs.sum(axis=0)
        val = kt_log_wealth(counts, m, prior)
    elif args.method == "up":
        state = UPState(K, prior=prior)
        for y in obs:
            state = state.absorb(y)
        val = state.log_wealth(m)
    elif args.method in ("ppr", "wor-kt"):
        if args.n is None:
            raise SystemExit("--n (population size) is required for WoR kernels")
        counts = obs.sum(axis=0)
        if args.method == "ppr":
            census = np.rint(args.n * m).astype(int)
            val = ppr_log_wealth(counts, census, prior)
        else:
            val = wor_kt_log_wealth(counts, m, args.n, prior)
    else:
        raise SystemExit(f"unknown wealth method {args.method!r}")
    print(f"{val:.12g}")
    return 0


def _cmd_confset(args):
    obs = load_observations(args.obs, box=args.box)
    K = obs.shape[1]
    grid = args.grid or {2: 100, 3: 100, 4: 40}.get(K, 20)
    candidates = simplex_candidate_grid(K, grid)
    cs = ConfidenceSet(candidates, args.delta)
    prior = DirichletPrior(np.full(K, args.alpha if args.alpha is not None else 0.5))
    if args.method == "kt":
        from .wealth import kt_log_wealth_many

        counts = np.zeros(K)
        for y in obs:
            counts += y
            cs.update(kt_log_wealth_many(counts, cs.active_candidates(), prior))
    elif args.method == "up":
        state = UPState(K, prior=prior)
        for y in obs:
            state = state.absorb(y)
            cs.update(state.log_wealth_many(cs.active_candidates()))
    else:
        raise SystemExit(f"unknown confset method {args.method!r}")
    cs.to_csv(args.out)
    print(json.dumps({"relative_volume": cs.relative_volume()}))
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="simplexcs",
        description="Gambling-based confidence sequences for bounded vectors",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    ps = sub.add_parser("simulate", help="run an i.i.d. simulation experiment")
    ps.add_argument("--preset", choices=("fig1", "fig3", "custom"), default=None)
    ps.add_argument("--config", help="JSON config file; flags override it")
    ps.add_argument("--k", type=int)
    ps.add_argument("--mu", type=_floats)
    ps.add_argument("--conc", type=_floats,
                    help="Dirichlet concentration (probability-vector data)")
    ps.add_argument("--t", type=int)
    ps.add_argument("--trials", type=int)
    ps.add_argument("--delta", type=float)
    ps.add_argument("--seed", type=int)
    ps.add_argument("--methods")
    ps.add_argument("--grid", type=int)
    ps.add_argument("--alpha", type=float)
    ps.add_argument("--out")
    ps.add_argument("--svg")
    ps.set_defaults(func=_cmd_simulate)

    pw = sub.add_parser("wor", help="without-replacement audit experiment")
    pw.add_argument("--census", required=True)
    pw.add_argument("--permutations", type=int)
    pw.add_argument("--delta", type=float)
    pw.add_argument("--method")
    pw.add_argument("--seed", type=int)
    pw.add_argument("--alpha", type=float)
    pw.add_argument("--out")
    pw.add_argument("--stream", action="store_true",
                    help="read one category label per line, emit JSON per line")
    pw.add_argument("--obs", help="label file for --stream (default stdin)")
    pw.set_defaults(func=_cmd_wor)

    pv = sub.add_parser("wealth", help="evaluate log-wealth at one candidate")
    pv.add_argument("--method", required=True)
    pv.add_argument("--obs", required=True)
    pv.add_argument("--m", required=True)
    pv.add_argument("--alpha", type=float)
    pv.add_argument("--n", type=int, help="population size for WoR kernels")
    pv.add_argument("--box", action="store_true")
    pv.set_defaults(func=_cmd_wealth)

    pc = sub.add_parser("confset", help="dump a realized confidence set as CSV")
    pc.add_argument("--method", required=True, choices=("kt", "up"))
    pc.add_argument("--obs", required=True)
    pc.add_argument("--delta", type=float, required=True)
    pc.add_argument("--grid", type=int)
    pc.add_argument("--alpha", type=float)
    pc.add_argument("--box", action="store_true")
    pc.add_argument("--out", required=True)
    pc.set_defaults(func=_cmd_confset)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
