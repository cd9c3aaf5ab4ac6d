"""Monte Carlo sweeps over sample size or minority prior, and rate checks.

A sweep is a grid of cells (grid point x data seed).  Each cell draws one
training set, fits every method ``trials_per_seed`` times and evaluates a
statistic per fit.  Seeds fan out from a master seed through
:class:`numpy.random.SeedSequence` spawn keys, so a cell's result depends
only on (master seed, grid index, seed index) and cells can run in any
order or concurrently.  Failed fits (too few samples, an empty group) are
kept as NaN entries and counted, never resampled.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import stats

from .closed_form import DS, MU, SRM, UW, Method, optimal_model, wge
from .empirical import empirical_wge, fit
from .errors import InsufficientPoints, WgeLabError
from .model import GaussianGroupModel, reference_model, sample_dataset
from .svg import line_plot

DEFAULT_METHODS = (SRM, DS, UW, MU(1.0))
DEFAULT_N_GRID = (100, 200, 500, 1000, 2000, 5000, 10_000, 20_000, 50_000, 100_000)
DEFAULT_PI0_GRID = (1 / 256, 1 / 128, 1 / 64, 1 / 32, 1 / 16, 1 / 8, 3 / 16, 1 / 4)

CSV_FIELDS = ("method", "grid_kind", "grid_value", "statistic", "mean", "std", "trials", "failures")


def _parse_evaluation(evaluation):
    if evaluation == "analytic":
        return None
    kind, _, count = str(evaluation).partition(":")
    if kind != "holdout" or not count.isdigit() or int(count) < 1:
        raise ValueError(f"evaluation must be 'analytic' or 'holdout:<count>', got {evaluation!r}")
    return int(count)


@dataclass(frozen=True)
class SweepConfig:
    model: GaussianGroupModel = field(default_factory=reference_model)
    methods: tuple = DEFAULT_METHODS
    grid: Optional[tuple] = None  # None: the default grid for grid_kind
    grid_kind: str = "n"  # "n" or "pi0"
    n: int = 10_000  # training size for pi0 sweeps
    trials_per_seed: int = 10
    seeds: int = 10
    evaluation: str = "analytic"  # or "holdout:<count>"
    master_seed: int = 0
    workers: Optional[int] = None

    def __post_init__(self):
        if self.grid_kind not in ("n", "pi0"):
            raise ValueError("grid_kind must be 'n' or 'pi0'")
        grid = self.grid
        if grid is None:
            grid = DEFAULT_N_GRID if self.grid_kind == "n" else DEFAULT_PI0_GRID
        grid = tuple(int(v) if self.grid_kind == "n" else float(v) for v in grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("grid must be non-empty and strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "methods",
                           tuple(m if isinstance(m, Method) else Method.parse(m) for m in self.methods))
        if not self.methods:
            raise ValueError("at least one method is required")
        if min(self.trials_per_seed, self.seeds, self.n) < 1:
            raise ValueError("n, seeds and trials_per_seed must be at least 1")
        _parse_evaluation(self.evaluation)

    @property
    def holdout_count(self):
        return _parse_evaluation(self.evaluation)

    def replace(self, **changes) -> "SweepConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class ExperimentRecord:
    """Aggregate of one (method, grid point) cell across seeds and trials.

    ``values`` has shape (seeds, trials_per_seed) with NaN for failed fits;
    ``mean`` and ``std`` (population std) are taken over the finite entries.
    """

    method: str
    grid_kind: str
    grid_value: float
    statistic: str
    mean: float
    std: float
    trial_count: int
    failures: int
    n_min_mean: float = float("nan")
    values: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def median(self) -> float:
        finite = self.values[np.isfinite(self.values)]
        return float(np.median(finite)) if finite.size else float("nan")

    def seed_means(self) -> np.ndarray:
        """Per-seed mean over trials (NaN where every trial failed)."""
        out = np.full(self.values.shape[0], np.nan)
        for i, row in enumerate(self.values):
            ok = np.isfinite(row)
            if ok.any():
                out[i] = row[ok].mean()
        return out


def _worker_count(requested):
    cap = os.environ.get("WGELAB_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def _cell_model(cfg, gi):
    if cfg.grid_kind == "pi0":
        return cfg.model.with_pi0(cfg.grid[gi]), cfg.n
    return cfg.model, cfg.grid[gi]


def _run_cell(cfg, statistic, targets, gi, si):
    model, n = _cell_model(cfg, gi)
    base = np.random.SeedSequence(cfg.master_seed, spawn_key=(gi, si))
    data = sample_dataset(model, n, base)
    holdout = None
    if statistic == "wge" and cfg.holdout_count:
        holdout = sample_dataset(model, cfg.holdout_count,
                                 np.random.SeedSequence(cfg.master_seed, spawn_key=(gi, si, 0)))

    def evaluate(theta, target):
        if statistic == "param_mse":
            return float(np.sum((theta.theta - target.theta) ** 2))
        if holdout is not None:
            return empirical_wge(theta, holdout)
        return wge(theta, model)

    out = np.full((len(cfg.methods), cfg.trials_per_seed), np.nan)
    for mi, method in enumerate(cfg.methods):
        target = targets[gi][mi]
        for j in range(cfg.trials_per_seed):
            if method.deterministic and j > 0:
                out[mi, j] = out[mi, 0]
                continue
            trial_seed = np.random.SeedSequence(cfg.master_seed, spawn_key=(gi, si, j + 1))
            try:
                out[mi, j] = evaluate(fit(data, method, trial_seed).model, target)
            except WgeLabError:
                pass
    return out, data.n_min


def run_sweep(cfg: SweepConfig, statistic="wge") -> list:
    """Run every cell of ``cfg`` and aggregate one record per (method, grid point)."""
    if statistic not in ("wge", "param_mse"):
        raise ValueError("statistic must be 'wge' or 'param_mse'")
    targets = [[optimal_model(_cell_model(cfg, gi)[0], m) for m in cfg.methods]
               for gi in range(len(cfg.grid))]
    cells = [(gi, si) for gi in range(len(cfg.grid)) for si in range(cfg.seeds)]
    workers = min(_worker_count(cfg.workers), len(cells))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda c: _run_cell(cfg, statistic, targets, *c), cells))
    else:
        results = [_run_cell(cfg, statistic, targets, *c) for c in cells]
    by_cell = dict(zip(cells, results))

    records = []
    for mi, method in enumerate(cfg.methods):
        for gi, value in enumerate(cfg.grid):
            vals = np.stack([by_cell[gi, si][0][mi] for si in range(cfg.seeds)])
            n_min = np.mean([by_cell[gi, si][1] for si in range(cfg.seeds)])
            finite = vals[np.isfinite(vals)]
            mean = float(finite.mean()) if finite.size else float("nan")
            std = float(finite.std()) if finite.size else float("nan")
            records.append(ExperimentRecord(
                method.label, cfg.grid_kind, value, statistic, mean, std,
                trial_count=int(vals.size), failures=int(vals.size - finite.size),
                n_min_mean=float(n_min), values=vals))
    return records


def sweep_wge_vs_n(cfg: SweepConfig) -> list:
    return run_sweep(_as_kind(cfg, "n"), "wge")


def sweep_param_mse_vs_n(cfg: SweepConfig) -> list:
    """Squared distance of fitted (w, b) to each method's population optimum."""
    return run_sweep(_as_kind(cfg, "n"), "param_mse")


def sweep_wge_vs_pi0(cfg: SweepConfig) -> list:
    return run_sweep(_as_kind(cfg, "pi0"), "wge")


def _as_kind(cfg, kind):
    if cfg.grid_kind == kind:
        return cfg
    return cfg.replace(grid_kind=kind, grid=None)


class SlopeCheck(NamedTuple):
    slope: float
    passed: bool


def slope_check(records, expected_slope, tol, against="n") -> SlopeCheck:
    """Least-squares slope of log(mean statistic) against log(n) or log(n_min).

    ``records`` must belong to a single method.
    """
    records = list(records)
    if len({r.method for r in records}) > 1:
        raise ValueError("slope_check expects records of a single method")
    if against not in ("n", "n_min"):
        raise ValueError("against must be 'n' or 'n_min'")
    pts = [((r.n_min_mean if against == "n_min" else r.grid_value), r.mean) for r in records]
    pts = [(x, y) for x, y in pts if np.isfinite(x) and np.isfinite(y) and x > 0 and y > 0]
    if len(pts) < 3:
        raise InsufficientPoints(f"need at least 3 usable grid points, got {len(pts)}")
    x, y = np.log(np.array(pts)).T
    slope = float(np.polyfit(x, y, 1)[0])
    return SlopeCheck(slope, abs(slope - expected_slope) <= tol)


class PairedDifference(NamedTuple):
    mean: float
    low: float
    high: float
    pairs: int


def paired_difference(rec_a: ExperimentRecord, rec_b: ExperimentRecord, level=0.95) -> PairedDifference:
    """t-interval for the mean per-seed difference a - b over seeds where both fitted."""
    da, db = rec_a.seed_means(), rec_b.seed_means()
    diff = (da - db)[np.isfinite(da) & np.isfinite(db)]
    if diff.size < 2:
        raise InsufficientPoints("need at least two paired seeds")
    mean = float(diff.mean())
    half = float(stats.t.ppf(0.5 + level / 2, diff.size - 1) * diff.std(ddof=1) / np.sqrt(diff.size))
    return PairedDifference(mean, mean - half, mean + half, int(diff.size))


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in records:
        writer.writerow([r.method, r.grid_kind, repr(float(r.grid_value)), r.statistic,
                         repr(r.mean), repr(r.std), r.trial_count, r.failures])
    return buf.getvalue()


def trials_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("method", "grid_kind", "grid_value", "statistic", "seed", "trial", "value"))
    for r in records:
        for si, row in enumerate(r.values):
            for j, v in enumerate(row):
                writer.writerow([r.method, r.grid_kind, repr(float(r.grid_value)), r.statistic,
                                 si, j, repr(float(v))])
    return buf.getvalue()


def records_to_svg(records, title="") -> str:
    """One polyline per method; log axes as in the usual rate plots."""
    series = {}
    for r in records:
        xs, ys = series.setdefault(r.method, ([], []))
        xs.append(r.grid_value)
        ys.append(r.mean)
    kind = records[0].grid_kind if records else "n"
    stat = records[0].statistic if records else "wge"
    return line_plot(series, title=title,
                     xlabel="n" if kind == "n" else "pi0",
                     ylabel="worst-group error" if stat == "wge" else "parameter MSE",
                     logx=True, logy=(stat == "param_mse"))
