"""Command-line interface.

Verbs:
    invert   full-grid transition law by generating-function inversion
    csgf     sparse recovery from partial generating-function measurements
    oracle   matrix-exponential or simulation ground truth
    bench    baseline-vs-recovery benchmark sweep with report and figures
    loglik   observed-data log-likelihood of a panel series

Every verb accepts --config (YAML), with flags overriding file values and
the environment (BRANCHPROB_SEED, BRANCHPROB_THREADS) sitting in between.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import benchmark as bench_mod
from . import config as config_mod
from . import gridio
from .errors import (DivergenceError, IntegrationError,
                     NumericalInconsistencyError, StepUnderflowError)
from .inversion import invert_model, truncation_mass
from .likelihood import ObservationSeries, observed_log_likelihood
from .models import default_time, named_model
from .oracle import build_generator, simulate, transition_row
from .recovery import RecoveryConfig, default_lambda, recover_transition_grid


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        cfg = _load_cfg(args)
        return args.handler(args, cfg)
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (IntegrationError, NumericalInconsistencyError,
            StepUnderflowError, DivergenceError) as err:
        print(f"numerical failure: {type(err).__name__}: {err}",
              file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchprob",
        description="Transition probabilities of two-type branching "
                    "processes via generating-function inversion and "
                    "sparse recovery.")
    sub = parser.add_subparsers(dest="command")
    parser.set_defaults(command=None)

    def common(p, query=True):
        p.add_argument("--config", type=Path, default=None,
                       help="YAML configuration file")
        p.add_argument("--model", choices=["hsc", "bds"], default=None)
        p.add_argument("--rates", default=None,
                       help="comma-separated name=value rate overrides")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        if query:
            p.add_argument("-t", "--time", type=float, default=None,
                           help="interval length (default: model horizon)")
            p.add_argument("-j", type=int, default=None,
                           help="initial type-1 count")
            p.add_argument("-k", type=int, default=None,
                           help="initial type-2 count")
            p.add_argument("-n", type=int, default=None, help="grid order")
            p.add_argument("--end", nargs=2, type=int, default=None,
                           metavar=("L", "M"),
                           help="print the single entry p_{(j,k),(L,M)}")
            p.add_argument("--out", type=Path, default=None,
                           help="grid CSV destination")

    p_invert = sub.add_parser("invert", help="full-grid baseline inversion")
    common(p_invert)
    p_invert.add_argument("--no-symmetry", action="store_true",
                          help="evaluate all n^2 points (no conjugate pairs)")
    p_invert.add_argument("--figure", type=Path, default=None,
                          help="render the law as a heatmap PNG")
    p_invert.set_defaults(handler=_cmd_invert)

    p_csgf = sub.add_parser("csgf", help="sparse recovery from partial "
                                         "measurements")
    common(p_csgf)
    p_csgf.add_argument("-m", type=int, default=None,
                        help="measurement rows (m x m sub-grid)")
    p_csgf.add_argument("--lam", type=float, default=None,
                        help="l1 penalty (default: model rule)")
    p_csgf.add_argument("--max-iters", type=int, default=None)
    p_csgf.add_argument("--stop-tol", type=float, default=None)
    p_csgf.add_argument("--step-init", type=float, default=None)
    p_csgf.add_argument("--no-warm-start", action="store_true",
                        help="restart the line search at step-init each "
                             "iteration instead of growing the last step")
    p_csgf.add_argument("--prox-at-iterate", action="store_true",
                        help="anchor the thresholded step at S_k instead of "
                             "the momentum point")
    p_csgf.add_argument("--figure", type=Path, default=None)
    p_csgf.set_defaults(handler=_cmd_csgf)

    p_oracle = sub.add_parser("oracle", help="uniformization / simulation "
                                             "ground truth")
    common(p_oracle)
    p_oracle.add_argument("--method", choices=["uniformization", "simulate"],
                          default="uniformization")
    p_oracle.add_argument("--cap", type=int, default=None,
                          help="truncation cap of the state window")
    p_oracle.add_argument("--reps", type=int, default=None,
                          help="simulation replicates")
    p_oracle.set_defaults(handler=_cmd_oracle)

    p_bench = sub.add_parser("bench", help="benchmark sweep with report")
    common(p_bench, query=False)
    p_bench.add_argument("--n-list", default=None,
                         help="comma-separated grid orders")
    p_bench.add_argument("--trials", type=int, default=None)
    p_bench.add_argument("--out", type=Path, default=None,
                         help="report directory")
    p_bench.add_argument("--no-figures", action="store_true")
    p_bench.set_defaults(handler=_cmd_bench)

    p_loglik = sub.add_parser("loglik", help="panel-series log-likelihood")
    common(p_loglik)
    p_loglik.add_argument("--series", type=Path, required=True,
                          help="CSV with header t,x1,x2")
    p_loglik.add_argument("--backend",
                          choices=["baseline", "csgf", "oracle"],
                          default="baseline")
    p_loglik.add_argument("--cap", type=int, default=None)
    p_loglik.add_argument("-m", type=int, default=None)
    p_loglik.add_argument("--lam", type=float, default=None)
    p_loglik.add_argument("--verbose", action="store_true",
                          help="print the per-interval breakdown")
    p_loglik.set_defaults(handler=_cmd_loglik)
    return parser


def _load_cfg(args) -> dict:
    overrides = {}
    if getattr(args, "model", None):
        overrides.setdefault("model", {})["name"] = args.model
    if getattr(args, "rates", None):
        rates = {}
        for pair in args.rates.split(","):
            name, _, value = pair.partition("=")
            if not _:
                raise ValueError(f"--rates expects name=value, got {pair!r}")
            rates[name.strip()] = float(value)
        overrides.setdefault("model", {})["rates"] = rates
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "threads", None) is not None:
        overrides["threads"] = args.threads
    if getattr(args, "time", None) is not None:
        overrides["time"] = args.time
    query = {}
    for key in ("j", "k", "n", "m"):
        value = getattr(args, key, None)
        if value is not None:
            query[key] = value
    if query:
        overrides["query"] = query
    solver = {}
    if getattr(args, "lam", None) is not None:
        solver["lam"] = args.lam
    if getattr(args, "max_iters", None) is not None:
        solver["max_iters"] = args.max_iters
    if getattr(args, "stop_tol", None) is not None:
        solver["stop_tol"] = args.stop_tol
    if getattr(args, "step_init", None) is not None:
        solver["step_init"] = args.step_init
    if getattr(args, "no_warm_start", False):
        solver["warm_start"] = False
    if getattr(args, "prox_at_iterate", False):
        solver["prox_at_momentum"] = False
    if solver:
        overrides["solver"] = solver
    oracle_over = {}
    if getattr(args, "cap", None) is not None:
        oracle_over["cap"] = args.cap
    if getattr(args, "reps", None) is not None:
        oracle_over["reps"] = args.reps
    if oracle_over:
        overrides["oracle"] = oracle_over
    bench_over = {}
    if getattr(args, "n_list", None):
        bench_over["n_list"] = [int(x) for x in args.n_list.split(",")]
    if getattr(args, "trials", None) is not None:
        bench_over["trials"] = args.trials
    if bench_over:
        overrides["bench"] = bench_over
    return config_mod.load_config(getattr(args, "config", None), overrides)


def _query(cfg):
    model = named_model(cfg["model"]["name"], cfg["model"]["rates"])
    t = cfg["time"] if cfg["time"] is not None else default_time(model.name)
    q = cfg["query"]
    return model, t, q["j"], q["k"], q["n"]


def _emit(values: np.ndarray, meta: dict, args, end) -> None:
    if end is not None:
        l, m = end
        if not (0 <= l < values.shape[0] and 0 <= m < values.shape[1]):
            raise ValueError(f"end state ({l}, {m}) outside the grid window")
        print("%.17g" % values[l, m])
    if getattr(args, "out", None):
        path = gridio.write_grid(args.out, values, meta)
        print(f"grid written to {path}", file=sys.stderr)
    elif end is None:
        # no destination given: summarise instead of dumping n^2 numbers
        print(f"sum={values.sum():.12g} max={values.max():.12g} "
              f"argmax={np.unravel_index(np.argmax(values), values.shape)}")


def _cmd_invert(args, cfg) -> int:
    model, t, j, k, n = _query(cfg)
    grid, pgf = invert_model(model, t, j, k, n,
                             use_symmetry=not args.no_symmetry,
                             abs_tol=cfg["ode"]["abs_tol"],
                             rel_tol=cfg["ode"]["rel_tol"])
    meta = {"backend": "baseline-nosym" if args.no_symmetry
            else "baseline", "model": model.name, "rates": model.params,
            "t": t, "origin": [j, k], "n": n,
            "ode_solves": pgf.ode_solves,
            "truncation_mass": truncation_mass(grid)}
    _emit(grid.values, meta, args, args.end)
    if args.figure:
        from .figures import probability_heatmap
        probability_heatmap(grid.values, args.figure,
                            title=f"{model.name} ({j},{k}) t={t}",
                            origin=(j, k))
        print(f"figure written to {args.figure}", file=sys.stderr)
    return 0


def _cmd_csgf(args, cfg) -> int:
    model, t, j, k, n = _query(cfg)
    m = cfg["query"]["m"] if cfg["query"]["m"] is not None else max(2, n // 2)
    lam = (cfg["solver"]["lam"] if cfg["solver"]["lam"] is not None
           else default_lambda(model.name, m))
    solver = cfg["solver"]
    rcfg = RecoveryConfig(
        lam=lam, step_init=solver["step_init"], shrink=solver["shrink"],
        step_cap=solver["step_cap"], warm_start=solver["warm_start"],
        prox_at_momentum=solver["prox_at_momentum"],
        max_iters=solver["max_iters"], stop_tol=solver["stop_tol"])
    result = recover_transition_grid(model, t, j, k, n, m, rcfg,
                                     seed=cfg["seed"],
                                     abs_tol=cfg["ode"]["abs_tol"],
                                     rel_tol=cfg["ode"]["rel_tol"])
    meta = {"backend": "csgf", "model": model.name, "rates": model.params,
            "t": t, "origin": [j, k], "n": n, "m": m, "lam": lam,
            "seed": cfg["seed"], "ode_solves": result.ode_solves,
            "iterations": result.iterations,
            "recovered_sum": result.recovered_sum}
    _emit(result.grid.values, meta, args, args.end)
    print(f"iterations={result.iterations} "
          f"objective={result.objective_trace[-1]:.6g} "
          f"sum={result.recovered_sum:.6g}", file=sys.stderr)
    if args.figure:
        from .figures import probability_heatmap
        probability_heatmap(result.grid.values, args.figure,
                            title=f"{model.name} recovery ({j},{k}) "
                                  f"t={t} m={m}", origin=(j, k))
        print(f"figure written to {args.figure}", file=sys.stderr)
    return 0


def _cmd_oracle(args, cfg) -> int:
    model, t, j, k, n = _query(cfg)
    if args.method == "uniformization":
        cap = cfg["oracle"]["cap"]
        gen = build_generator(model.rates, cap)
        dist = transition_row(gen, t, (j, k),
                              sink_bound=cfg["oracle"]["sink_bound"])
        meta = {"backend": "oracle:uniformization", "model": model.name,
                "rates": model.params, "t": t, "origin": [j, k],
                "cap": cap, "sink_mass": dist.sink_mass}
        _emit(dist.grid, meta, args, args.end)
    else:
        reps = cfg["oracle"]["reps"]
        sim = simulate(model.rates, (j, k), t, reps, seed=cfg["seed"])
        size = n if n > 1 else max(max(s) for s in sim.counts) + 1
        meta = {"backend": "oracle:simulate", "model": model.name,
                "rates": model.params, "t": t, "origin": [j, k],
                "reps": reps, "seed": cfg["seed"],
                "exploded": sim.exploded}
        _emit(sim.grid(size), meta, args, args.end)
    return 0


def _cmd_bench(args, cfg) -> int:
    report = bench_mod.run_benchmark(cfg)
    outdir = args.out if args.out is not None else Path(
        cfg["output"]["directory"])
    figures = cfg["output"]["figures"] and not args.no_figures
    paths = bench_mod.write_report(report, outdir, figures=figures)
    print(bench_mod.render_text(report), end="")
    print(f"report written to {paths['report_csv'].parent}", file=sys.stderr)
    return 0


def _cmd_loglik(args, cfg) -> int:
    model, t, j, k, n = _query(cfg)
    series = read_series(args.series)
    backend = make_backend(args.backend, cfg)
    total, parts = observed_log_likelihood(series, backend)
    if args.verbose:
        for p in parts:
            print(f"dt={p.dt:g} {p.origin}->{p.target} "
                  f"p={p.probability:.6e} logp={p.log_probability:.6f}")
    print("%.12f" % total if np.isfinite(total) else "-inf")
    return 0


def read_series(path) -> ObservationSeries:
    """Parse an observation CSV with header t,x1,x2."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader)]
        if header != ["t", "x1", "x2"]:
            raise ValueError(f"{path}: expected header t,x1,x2, got {header}")
        times, states = [], []
        for row in reader:
            if not row:
                continue
            times.append(float(row[0]))
            states.append((int(row[1]), int(row[2])))
    return ObservationSeries(times=tuple(times), states=tuple(states))


def make_backend(kind: str, cfg: dict):
    """Transition-law backend(dt, origin) -> grid used by loglik."""
    model = named_model(cfg["model"]["name"], cfg["model"]["rates"])
    n = cfg["query"]["n"]
    ode = cfg["ode"]

    if kind == "baseline":
        def backend(dt, origin):
            grid, _ = invert_model(model, dt, origin[0], origin[1], n,
                                   abs_tol=ode["abs_tol"],
                                   rel_tol=ode["rel_tol"])
            return grid.values
    elif kind == "csgf":
        m = cfg["query"]["m"] if cfg["query"]["m"] is not None else max(
            2, n // 2)
        lam = (cfg["solver"]["lam"] if cfg["solver"]["lam"] is not None
               else default_lambda(model.name, m))
        solver = cfg["solver"]
        rcfg = RecoveryConfig(
            lam=lam, step_init=solver["step_init"],
            shrink=solver["shrink"], step_cap=solver["step_cap"],
            warm_start=solver["warm_start"],
            prox_at_momentum=solver["prox_at_momentum"],
            max_iters=solver["max_iters"], stop_tol=solver["stop_tol"])

        def backend(dt, origin):
            result = recover_transition_grid(
                model, dt, origin[0], origin[1], n, m, rcfg,
                seed=cfg["seed"], abs_tol=ode["abs_tol"],
                rel_tol=ode["rel_tol"])
            return result.grid.values
    elif kind == "oracle":
        gen = build_generator(model.rates, cfg["oracle"]["cap"])

        def backend(dt, origin):
            dist = transition_row(gen, dt, tuple(origin),
                                  sink_bound=cfg["oracle"]["sink_bound"])
            return dist.grid
    else:
        raise ValueError(f"unknown backend {kind!r}")
    return backend


if __name__ == "__main__":
    sys.exit(main())
