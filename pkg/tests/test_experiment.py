import os

import numpy as np
import pytest

from cswave.errors import PreconditionError
from cswave.experiment import (CSV_HEADER, ResultRow, SweepConfig, emit_plot, fit_slope,
                               make_fk, parse_csv, rows_to_csv_text, run_sweep,
                               trial_seed)

DATA = os.path.join(os.path.dirname(__file__), "data")


def test_make_fk_breakpoints():
    f1 = make_fk(1)
    assert len(f1.breakpoints) == 1
    assert f1.breakpoints[0] == pytest.approx(1.3 ** -8, rel=1e-12)
    f8 = make_fk(8)
    assert len(f8.breakpoints) == 8
    assert max(f8.breakpoints) == pytest.approx(1.3 ** -1, rel=1e-12)
    # terms beyond i = 8 shift their jump outside (0,1)
    assert len(make_fk(10).breakpoints) == 8
    assert len(make_fk(20).breakpoints) == 8


def test_make_fk_values_right_limit():
    f = make_fk(1)
    b = 1.3 ** -8
    lo, hi = f(np.array([b - 1e-9, b]))
    # single term -x * sign(x - b): jump of -2b at the breakpoint
    assert hi - lo == pytest.approx(-2.0 * b, abs=1e-6)
    assert f(np.array([b]))[0] == pytest.approx(-b, rel=1e-12)  # right limit at the jump


def test_make_fk_override_breakpoints():
    f = make_fk(3, override_breakpoints=(0.2, 0.5, 0.8))
    assert f.breakpoints == (0.2, 0.5, 0.8)
    with pytest.raises(PreconditionError):
        make_fk(3, override_breakpoints=(0.2, 0.5))
    with pytest.raises(PreconditionError):
        make_fk(0)


def test_trial_seed_no_collisions_on_default_grid():
    seeds = set()
    count = 0
    for method in ("gauss_bp", "optimal_bp", "fourier_bp", "fourier_wbp",
                   "fourier_wsrlasso"):
        for m in (64, 128, 256, 512, 1024):
            for t in range(100):
                seeds.add(trial_seed(0, method, m, t))
                count += 1
    assert len(seeds) == count
    assert trial_seed(0, "gauss_bp", 64, 0) == trial_seed(0, "gauss_bp", 64, 0)
    assert trial_seed(1, "gauss_bp", 64, 0) != trial_seed(0, "gauss_bp", 64, 0)


def test_sweep_config_validation():
    with pytest.raises(PreconditionError):
        SweepConfig(m_grid=(64, 64))
    with pytest.raises(PreconditionError):
        SweepConfig(m_grid=(64, 8192), N_dim=4096)
    with pytest.raises(PreconditionError):
        SweepConfig(methods=("nope",))
    cfg = SweepConfig(p=2)
    assert cfg.alpha == 2.0


def synthetic_rows(slope=-2.0, methods=("gauss_bp",), ms=(8, 16, 32, 64), noise=None):
    rows = []
    for method in methods:
        for m in ms:
            err = float(m) ** slope if noise is None else noise
            rows.append(ResultRow(method=method, p=1, K=10, m=m, trial=0, seed=0,
                                  rel_l2_error=err, iterations=1, runtime_ms=0.0,
                                  status="Converged"))
    return rows


def test_fit_slope_exact_power_law():
    rows = synthetic_rows(slope=-2.0)
    assert fit_slope(rows, "gauss_bp", (8, 64)) == pytest.approx(-2.0, abs=1e-12)
    flat = synthetic_rows(noise=0.5)
    assert fit_slope(flat, "gauss_bp", (8, 64)) == pytest.approx(0.0, abs=1e-12)


def test_fit_slope_needs_three_points():
    rows = synthetic_rows(ms=(8, 16))
    with pytest.raises(PreconditionError):
        fit_slope(rows, "gauss_bp", (8, 16))
    with pytest.raises(PreconditionError):
        fit_slope(synthetic_rows(), "other_method", (8, 64))


def test_csv_roundtrip():
    rows = synthetic_rows()
    text = rows_to_csv_text(rows)
    assert text.splitlines()[0] == CSV_HEADER
    back = parse_csv(text)
    assert back == rows


def test_empty_grid_gives_header_only(tmp_path):
    out = str(tmp_path / "empty.csv")
    cfg = SweepConfig(methods=("gauss_bp",), m_grid=(), N_dim=256, trials=2,
                      output_path=out)
    rows, summary = run_sweep(cfg)
    assert rows == []
    assert open(out).read() == CSV_HEADER + "\n"


def test_small_sweep_deterministic_across_jobs(tmp_path):
    kw = dict(methods=("gauss_bp", "optimal_bp"), m_grid=(32, 64), N_dim=128,
              trials=2, master_seed=5, K=3)
    out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    run_sweep(SweepConfig(output_path=out1, jobs=1, **kw))
    run_sweep(SweepConfig(output_path=out2, jobs=3, **kw))

    def strip_runtime(path):
        rows = parse_csv(open(path).read())
        return [(r.method, r.m, r.trial, r.seed, r.rel_l2_error, r.iterations,
                 r.status) for r in rows]

    assert strip_runtime(out1) == strip_runtime(out2)


def test_sweep_records_failures_and_continues(tmp_path):
    # m = 2 is below every recipe's floor; rows appear with an error status
    cfg = SweepConfig(methods=("optimal_bp",), m_grid=(2, 32), N_dim=128,
                      trials=1, K=1)
    rows, _ = run_sweep(cfg)
    assert len(rows) == 2
    assert rows[0].status.startswith("Error[")
    assert np.isnan(rows[0].rel_l2_error)
    assert rows[1].status in ("Converged", "MaxIters")


def test_emit_plot_golden_bytes(tmp_path):
    rows = []
    for method, scale in (("gauss_bp", 2.0), ("fourier_bp", 0.7)):
        for m in (64, 128, 256, 512):
            rows.append(ResultRow(method=method, p=1, K=10, m=m, trial=0, seed=1,
                                  rel_l2_error=scale * m ** -1.5, iterations=100,
                                  runtime_ms=1.0, status="Converged"))
    out = str(tmp_path / "plot.svg")
    emit_plot(rows, out)
    got = open(out, "rb").read()
    ref = open(os.path.join(DATA, "golden_plot.svg"), "rb").read()
    assert got == ref


def test_emit_plot_requires_rows(tmp_path):
    with pytest.raises(PreconditionError):
        emit_plot([], str(tmp_path / "x.svg"))


def test_emit_plot_polyline_per_method(tmp_path):
    rows = synthetic_rows(methods=("gauss_bp", "fourier_bp", "optimal_bp"))
    out = str(tmp_path / "three.svg")
    emit_plot(rows, out)
    text = open(out).read()
    for name in ("gauss_bp", "fourier_bp", "optimal_bp"):
        assert name in text
    assert "<svg" in text
