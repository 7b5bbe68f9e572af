"""Sweep harness: test functions, seeded trials, CSV and figure output.

The sweep runs a grid of (method, m, trial) pipelines against one test
function and writes one CSV row per trial.  Per-trial seeds are derived
from the master seed by hashing, so the grid can execute in any order (or
in parallel) and still reproduce byte-identical output apart from the
runtime column.
"""

import csv
import hashlib
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CswaveError, PreconditionError
from .fourier import cross_gramian
from .solvers import SolveOptions
from .recipes import FourierMemo, reference_coefficients, run_fourier, run_gauss, run_optimal
from .wavelets import PiecewiseFunction, daubechies

CSV_HEADER = "method,p,K,m,trial,seed,rel_l2_error,iterations,runtime_ms,status"

METHODS = ("gauss_bp", "optimal_bp", "fourier_bp", "fourier_wbp", "fourier_wsrlasso")


def make_fk(K, override_breakpoints=None):
    """The K-term piecewise-polynomial test function on [0,1].

    f_K(x) = sum_{i=1}^K (-1)^{i mod 5} x^{i mod 3} sign(x - 1.3^{i-9}),
    evaluated with the right limit at jumps.  Only terms with i <= 8 place
    their jump inside (0,1), so the literal formula has at most 8 interior
    breakpoints no matter how large K is; pass override_breakpoints to get
    a variant with explicitly chosen jump locations instead (the i-th term
    then jumps at the i-th override point).
    """
    if K < 1:
        raise PreconditionError("need K >= 1")
    if override_breakpoints is not None:
        shifts = [float(b) for b in override_breakpoints]
        if len(shifts) != K:
            raise PreconditionError("need exactly K override breakpoints")
    else:
        shifts = [1.3 ** (i - 9) for i in range(1, K + 1)]
    signs = [(-1) ** (i % 5) for i in range(1, K + 1)]
    powers = [i % 3 for i in range(1, K + 1)]

    def evaluator(x):
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for c, e, b in zip(signs, powers, shifts):
            total += c * x ** e * np.where(x >= b, 1.0, -1.0)
        return total

    bps = tuple(sorted(b for b in set(shifts) if 0.0 < b < 1.0))
    grid = (np.arange(4096) + 0.5) / 4096
    norm = float(np.max(np.abs(evaluator(grid))))
    return PiecewiseFunction(evaluator=evaluator, breakpoints=bps, alpha=2.0,
                             norm_estimate=max(norm, 1.0))


def trial_seed(master_seed, method, m, trial):
    """Stable 64-bit per-trial seed; collision-free on any sane grid."""
    key = f"{master_seed}:{method}:{m}:{trial}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


@dataclass(frozen=True)
class SweepConfig:
    methods: tuple = ("gauss_bp", "optimal_bp", "fourier_bp")
    p: int = 1
    K: int = 10
    m_grid: tuple = (64, 128, 256, 512, 1024)
    alpha: Optional[float] = None     # defaults to p
    delta: float = 1e-5
    N_dim: int = 4096
    trials: int = 10
    master_seed: int = 0
    output_path: Optional[str] = None
    jobs: int = 1

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.m_grid, self.m_grid[1:])):
            raise PreconditionError("m_grid must be strictly increasing")
        if any(m > self.N_dim for m in self.m_grid):
            raise PreconditionError("each m must be <= N_dim")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise PreconditionError(f"unknown methods: {sorted(unknown)}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", float(self.p))


@dataclass
class ResultRow:
    method: str
    p: int
    K: int
    m: int
    trial: int
    seed: int
    rel_l2_error: float
    iterations: int
    runtime_ms: float
    status: str

    def to_csv(self):
        err = "nan" if np.isnan(self.rel_l2_error) else f"{self.rel_l2_error:.12e}"
        return (f"{self.method},{self.p},{self.K},{self.m},{self.trial},{self.seed},"
                f"{err},{self.iterations},{self.runtime_ms:.1f},{self.status}")


def _run_one(method, f, m, alpha, seed, spec, N_dim, opts, shared):
    if method == "gauss_bp":
        return run_gauss(f, m, alpha, seed, N=N_dim, spec=spec, opts=opts,
                         d_ref=shared.get("d_ref"), d_hi=shared.get("d_hi"))
    if method == "optimal_bp":
        return run_optimal(f, m, alpha, seed, N=N_dim, spec=spec, opts=opts,
                           d_ref=shared.get("d_ref"), d_hi=shared.get("d_hi"))
    decoder = {"fourier_bp": "bp", "fourier_wbp": "wbp", "fourier_wsrlasso": "wsrlasso"}[method]
    return run_fourier(f, m, alpha, p=spec.p, decoder=decoder, mode="experiment",
                       seed=seed, N=N_dim, spec=spec, U=shared.get("U"),
                       opts=opts, memo=shared.get("memo"), d_hi=shared.get("d_hi"))


def run_sweep(config, f=None, opts=None):
    """Execute the sweep grid; returns (rows, summary).

    If config.output_path is set the CSV is written incrementally, one row
    per completed (method, m, trial) in grid order.
    """
    f = f or make_fk(config.K)
    # reconstruction error plateaus well before 2000 iterations at sweep
    # sizes, so the sweep default trades the last fraction of a percent of
    # solver accuracy for wall time; pass opts explicitly to override
    opts = opts or SolveOptions(max_iters=2000)
    spec = daubechies(config.p)
    J = int(np.log2(config.N_dim))
    shared = {
        "d_ref": reference_coefficients(f, spec, J),
        "d_hi": reference_coefficients(f, spec, J + 2),
        "memo": FourierMemo(f),
    }
    if any(meth.startswith("fourier") for meth in config.methods):
        shared["U"] = cross_gramian(spec, config.N_dim, config.N_dim)
        # warm the coefficient cache once so parallel workers share it
        shared["memo"].get(list(range(-config.N_dim // 2 + 1, config.N_dim // 2 + 1)))

    grid = [(method, m, t) for method in config.methods
            for m in config.m_grid for t in range(config.trials)]

    def task(method, m, t):
        seed = trial_seed(config.master_seed, method, m, t)
        t0 = time.perf_counter()
        try:
            res = _run_one(method, f, m, config.alpha, seed, spec, config.N_dim, opts, shared)
            ms = 1000.0 * (time.perf_counter() - t0)
            return ResultRow(method=method, p=config.p, K=config.K, m=m, trial=t,
                             seed=seed, rel_l2_error=res.rel_l2_error,
                             iterations=res.report.iterations, runtime_ms=ms,
                             status=res.report.status)
        except CswaveError as exc:
            ms = 1000.0 * (time.perf_counter() - t0)
            return ResultRow(method=method, p=config.p, K=config.K, m=m, trial=t,
                             seed=seed, rel_l2_error=float("nan"), iterations=0,
                             runtime_ms=ms, status=f"Error[{type(exc).__name__}]")

    sink = open(config.output_path, "w") if config.output_path else None
    rows = []
    try:
        if sink:
            sink.write(CSV_HEADER + "\n")
            sink.flush()
        if config.jobs > 1:
            with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                futures = [pool.submit(task, *g) for g in grid]
                for fut in futures:
                    row = fut.result()
                    rows.append(row)
                    if sink:
                        sink.write(row.to_csv() + "\n")
                        sink.flush()
        else:
            for g in grid:
                row = task(*g)
                rows.append(row)
                if sink:
                    sink.write(row.to_csv() + "\n")
                    sink.flush()
    finally:
        if sink:
            sink.close()
    return rows, summarize(rows, config)


def median_errors(rows, method):
    """m -> median error over trials with finite errors."""
    bym = {}
    for row in rows:
        if row.method == method and np.isfinite(row.rel_l2_error):
            bym.setdefault(row.m, []).append(row.rel_l2_error)
    return {m: float(np.median(v)) for m, v in sorted(bym.items())}


def summarize(rows, config):
    summary = {"medians": {}, "slopes": {}}
    for method in config.methods:
        med = median_errors(rows, method)
        summary["medians"][method] = med
        if len(med) >= 3:
            try:
                summary["slopes"][method] = fit_slope(rows, method,
                                                      (min(med), max(med.keys())))
            except PreconditionError:
                pass
    return summary


def fit_slope(rows, method, m_range):
    """Least-squares slope of ln(median error) against ln(m)."""
    lo, hi = m_range
    med = {m: e for m, e in median_errors(rows, method).items() if lo <= m <= hi and e > 0}
    if len(med) < 3:
        raise PreconditionError("need at least 3 distinct m values in range")
    ms = np.array(sorted(med))
    es = np.array([med[m] for m in ms])
    return float(np.polyfit(np.log(ms), np.log(es), 1)[0])


def emit_plot(rows, path):
    """Median error vs m on log-log axes, one line per method (SVG).

    The output is byte-deterministic for fixed input: the SVG hash salt is
    pinned and the date metadata stripped.
    """
    if not rows:
        raise PreconditionError("no rows to plot")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    methods = sorted({row.method for row in rows}, key=lambda s: METHODS.index(s) if s in METHODS else 99)
    with plt.rc_context({"svg.hashsalt": "cswave"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.2))
        all_m, all_e = [], []
        for method in methods:
            med = median_errors(rows, method)
            if not med:
                continue
            ms = sorted(med)
            es = [med[m] for m in ms]
            ax.loglog(ms, es, marker="o", label=method)
            all_m += ms
            all_e += es
        if all_m:
            ax.set_xlim(min(all_m) / 1.1, max(all_m) * 1.1)
            lo, hi = min(all_e), max(all_e)
            ax.set_ylim(lo / 1.1 if lo > 0 else 1e-16, hi * 1.1)
        ax.set_xlabel("measurements m")
        ax.set_ylabel("relative L2 error")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def rows_to_csv_text(rows):
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for row in rows:
        buf.write(row.to_csv() + "\n")
    return buf.getvalue()


def parse_csv(text):
    """Read ResultRows back from CSV text."""
    reader = csv.DictReader(io.StringIO(text))
    rows = []
    for rec in reader:
        rows.append(ResultRow(method=rec["method"], p=int(rec["p"]), K=int(rec["K"]),
                              m=int(rec["m"]), trial=int(rec["trial"]), seed=int(rec["seed"]),
                              rel_l2_error=float(rec["rel_l2_error"]),
                              iterations=int(rec["iterations"]),
                              runtime_ms=float(rec["runtime_ms"]), status=rec["status"]))
    return rows
