"""Benchmark harness: baseline inversion vs sparse recovery, with report.

For each grid order n the harness runs independent trials. A trial draws a
random initial population, computes the full-grid baseline law and the
recovery from an m x m random measurement sub-grid, and records wall times,
ODE-solve counts, and the error of the recovery against the baseline:

    eps_max = max |S_hat - S|,    eps_rel = eps_max / max S.

Aggregated rows carry the median over trials. Every random draw is keyed by
(master seed, n, trial index, purpose), so reports are reproducible run to
run and independent of the thread count; wall-time columns are the only
fields that vary between identical runs.

A trial that raises is recorded with its error message and excluded from
the medians; it does not abort the sweep.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import config as config_mod
from .inversion import invert_model
from .models import ModelSpec, default_time, named_model
from .recovery import RecoveryConfig, default_lambda, recover_transition_grid

REPORT_COLUMNS = ["n", "m", "time_full", "time_meas", "time_pgd",
                  "eps_max", "eps_rel", "ode_solves_full", "ode_solves_meas",
                  "lam", "sum_recovered", "iterations", "trials_ok", "seed"]
TRIAL_COLUMNS = ["n", "m", "trial", "j", "k", "time_full", "time_meas",
                 "time_pgd", "eps_max", "eps_rel", "ode_solves_full",
                 "ode_solves_meas", "lam", "sum_recovered", "iterations",
                 "seed_state", "seed_meas", "error"]
TIME_COLUMNS = ["time_full", "time_meas", "time_pgd"]


@dataclass
class TrialRecord:
    n: int
    m: int
    trial: int
    j: int = 0
    k: int = 0
    time_full: float = math.nan
    time_meas: float = math.nan
    time_pgd: float = math.nan
    eps_max: float = math.nan
    eps_rel: float = math.nan
    ode_solves_full: int = 0
    ode_solves_meas: int = 0
    lam: float = math.nan
    sum_recovered: float = math.nan
    iterations: int = 0
    seed_state: int = 0
    seed_meas: int = 0
    error: str = ""
    baseline_grid: Optional[np.ndarray] = None
    recovered_grid: Optional[np.ndarray] = None


@dataclass
class BenchmarkReport:
    model: str
    params: dict
    t: float
    seed: int
    cfg_hash: str
    rows: list[dict] = field(default_factory=list)
    trials: list[TrialRecord] = field(default_factory=list)


def derived_seed(master: int, n: int, trial: int, purpose: str) -> int:
    """Deterministic sub-seed for one draw inside one trial."""
    tag = int.from_bytes(purpose.encode(), "big") % (2 ** 31)
    ss = np.random.SeedSequence([int(master), int(n), int(trial), tag])
    return int(ss.generate_state(1)[0])


def draw_initial_state(rng: np.random.Generator, n: int,
                       rho_occ: float) -> tuple[int, int]:
    """Uniform over {(j, k): j >= 1, k >= 0, 1 <= j + k < n * rho_occ}.

    j = 0 is excluded so that every grid point costs exactly one numerical
    integration and the reported solve counts are exact.
    """
    limit = math.ceil(n * rho_occ) - 1
    if limit < 1:
        raise ValueError(f"occupancy window too small: n={n}, rho={rho_occ}")
    total = limit * (limit + 1) // 2
    r = int(rng.integers(total))
    for j in range(1, limit + 1):
        width = limit - j + 1
        if r < width:
            return j, r
        r -= width
    raise AssertionError("unreachable")


def error_metrics(recovered: np.ndarray, baseline: np.ndarray,
                  ) -> tuple[float, float]:
    """(eps_max, eps_rel) of a recovered grid against the baseline."""
    if recovered.shape != baseline.shape:
        raise ValueError("grids must have equal shape")
    eps_max = float(np.abs(recovered - baseline).max())
    peak = float(baseline.max())
    return eps_max, eps_max / peak if peak > 0 else math.inf


def run_trial(model: ModelSpec, t: float, n: int, m: int, lam: float,
              cfg: dict, trial: int, keep_grids: bool = False) -> TrialRecord:
    rec = TrialRecord(n=n, m=m, trial=trial, lam=lam)
    rec.seed_state = derived_seed(cfg["seed"], n, trial, "state")
    rec.seed_meas = derived_seed(cfg["seed"], n, trial, "measure")
    try:
        rng = np.random.default_rng(rec.seed_state)
        rec.j, rec.k = draw_initial_state(rng, n, cfg["bench"]["rho_occ"])
        ode = cfg["ode"]

        start = time.perf_counter()
        baseline, pgf = invert_model(
            model, t, rec.j, rec.k, n,
            use_symmetry=cfg["bench"]["use_symmetry"],
            abs_tol=ode["abs_tol"], rel_tol=ode["rel_tol"])
        rec.time_full = time.perf_counter() - start
        rec.ode_solves_full = pgf.ode_solves

        solver = cfg["solver"]
        rcfg = RecoveryConfig(
            lam=lam, step_init=solver["step_init"], shrink=solver["shrink"],
            step_cap=solver["step_cap"], warm_start=solver["warm_start"],
            prox_at_momentum=solver["prox_at_momentum"],
            max_iters=solver["max_iters"], stop_tol=solver["stop_tol"])
        result = recover_transition_grid(
            model, t, rec.j, rec.k, n, m, rcfg, seed=rec.seed_meas,
            abs_tol=ode["abs_tol"], rel_tol=ode["rel_tol"])
        rec.time_meas = result.measure_time
        rec.time_pgd = result.solve_time
        rec.ode_solves_meas = result.ode_solves
        rec.iterations = result.iterations
        rec.sum_recovered = result.recovered_sum
        rec.eps_max, rec.eps_rel = error_metrics(result.grid.values,
                                                 baseline.values)
        if keep_grids:
            rec.baseline_grid = baseline.values
            rec.recovered_grid = result.grid.values
    except Exception as err:  # noqa: BLE001 - trial isolation is the contract
        rec.error = f"{type(err).__name__}: {err}"
    return rec


def run_benchmark(cfg: dict) -> BenchmarkReport:
    """Run the configured sweep and aggregate median rows per grid order."""
    model = named_model(cfg["model"]["name"], cfg["model"]["rates"])
    t = cfg["time"] if cfg["time"] is not None else default_time(model.name)
    report = BenchmarkReport(model=model.name, params=dict(model.params),
                             t=t, seed=cfg["seed"],
                             cfg_hash=config_mod.config_hash(cfg))
    trials = cfg["bench"]["trials"]
    threads = cfg["threads"]

    for n in cfg["bench"]["n_list"]:
        m = config_mod.bench_m_for(cfg, n)
        lam = (cfg["solver"]["lam"] if cfg["solver"]["lam"] is not None
               else default_lambda(model.name, m))

        def one(trial, _n=n, _m=m, _lam=lam):
            return run_trial(model, t, _n, _m, _lam, cfg, trial,
                             keep_grids=(trial == 0))

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                records = list(pool.map(one, range(trials)))
        else:
            records = [one(i) for i in range(trials)]
        report.trials.extend(records)
        report.rows.append(_aggregate(n, m, lam, records, cfg["seed"]))
    return report


def _aggregate(n: int, m: int, lam: float, records: list[TrialRecord],
               seed: int) -> dict:
    ok = [r for r in records if not r.error]

    def med(attr):
        if not ok:
            return math.nan
        return float(np.median([getattr(r, attr) for r in ok]))

    row = {
        "n": n, "m": m,
        "time_full": med("time_full"),
        "time_meas": med("time_meas"),
        "time_pgd": med("time_pgd"),
        "eps_max": med("eps_max"),
        "eps_rel": med("eps_rel"),
        "ode_solves_full": int(med("ode_solves_full")) if ok else 0,
        "ode_solves_meas": int(med("ode_solves_meas")) if ok else 0,
        "lam": lam,
        "sum_recovered": med("sum_recovered"),
        "iterations": med("iterations"),
        "trials_ok": len(ok),
        "seed": seed,
    }
    return row


def write_report(report: BenchmarkReport, outdir, figures: bool = True) -> dict:
    """Write report.csv, report.txt, trials.csv (and figures) to outdir.

    Returns a dict of the paths written.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {}

    report_csv = outdir / "report.csv"
    with open(report_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in report.rows:
            writer.writerow([_cell(row[c]) for c in REPORT_COLUMNS])
    paths["report_csv"] = report_csv

    trials_csv = outdir / "trials.csv"
    with open(trials_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_COLUMNS)
        for rec in report.trials:
            writer.writerow([_cell(getattr(rec, c)) for c in TRIAL_COLUMNS])
    paths["trials_csv"] = trials_csv

    report_txt = outdir / "report.txt"
    report_txt.write_text(render_text(report))
    paths["report_txt"] = report_txt

    if figures:
        from . import figures as figures_mod
        figdir = outdir / "figures"
        paths["figures"] = figures_mod.render_benchmark_figures(report, figdir)
    return paths


def render_text(report: BenchmarkReport) -> str:
    """Human-readable table, one aggregated row per grid order."""
    header = (f"model: {report.model}  rates: {report.params}  "
              f"t: {report.t}  seed: {report.seed}  config: {report.cfg_hash}")
    cols = [("N", "n", "d"), ("M", "m", "d"),
            ("time full (s)", "time_full", ".3f"),
            ("time meas (s)", "time_meas", ".3f"),
            ("time PGD (s)", "time_pgd", ".3f"),
            ("eps_max", "eps_max", ".3e"), ("eps_rel", "eps_rel", ".3e"),
            ("solves full", "ode_solves_full", "d"),
            ("solves meas", "ode_solves_meas", "d"),
            ("sum S_hat", "sum_recovered", ".4f"),
            ("iters", "iterations", ".0f"), ("ok", "trials_ok", "d")]
    lines = [header, ""]
    titles = [title for title, _, _ in cols]
    body = []
    for row in report.rows:
        body.append([format(row[key], spec) for _, key, spec in cols])
    widths = [max(len(t), max((len(b[i]) for b in body), default=0))
              for i, t in enumerate(titles)]
    lines.append("  ".join(t.rjust(w) for t, w in zip(titles, widths)))
    for b in body:
        lines.append("  ".join(v.rjust(w) for v, w in zip(b, widths)))
    lines.append("")
    lines.append("medians over successful trials; times are wall-clock.")
    return "\n".join(lines) + "\n"


def _cell(value) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)
