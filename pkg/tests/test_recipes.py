import dataclasses

import numpy as np
import pytest

from cswave.errors import BudgetError, CapExceededError, PreconditionError
from cswave.recipes import (FourierMemo, fourier_params, gauss_params, optimal_params,
                            reference_coefficients, run_fourier, run_gauss, run_optimal,
                            sparsity_plan)
from cswave.experiment import make_fk
from cswave.solvers import SolveOptions
from cswave.wavelets import daubechies


def test_gauss_params_golden():
    # r = floor((2a+1) log2 m - (2a+2) log2 ln m) - j0 for a = 1, j0 = 0
    assert gauss_params(64, 1.0).r == 9
    assert gauss_params(256, 1.0).r == 14
    assert gauss_params(1024, 1.0).r == 18
    rec = gauss_params(256, 1.0, N=4096)
    assert (rec.r, rec.N, rec.p) == (12, 4096, 1)


def test_optimal_params_golden():
    for m, r_bar in ((64, 5), (256, 7), (1024, 9)):
        rec = optimal_params(m, 1.0)
        assert rec.r_bar == r_bar
        assert rec.N1 == rec.m1 == 2 ** r_bar
        assert rec.m1 + rec.m2 == m


def test_optimal_budget_floor():
    with pytest.raises(BudgetError):
        optimal_params(3, 1.0)
    with pytest.raises(BudgetError):
        optimal_params(8, 2.0)  # j0 = 2 needs m >= 16


def test_fourier_params_experiment_budget_exact():
    for m in (64, 256, 512, 1024):
        for p in (1, 2):
            rec = fourier_params(m, float(p), p=p, N=4096)
            assert sum(rec.m_local) == m
            assert all(mk % 2 == 0 for mk in rec.m_local)


def test_fourier_params_experiment_golden():
    rec = fourier_params(256, 1.0, N=4096)
    assert rec.r_tilde == 7
    assert rec.m_local == (2, 2, 4, 8, 16, 32, 64, 24, 24, 24, 24, 32)
    rec2 = fourier_params(512, 2.0, p=2, N=4096)
    assert (rec2.j0, rec2.r, rec2.r_tilde) == (2, 10, 6)
    assert rec2.m_local == (8, 8, 16, 32, 64, 128, 64, 64, 64, 64)


def test_fourier_params_theory_bounded_by_budget():
    for m in (64, 256, 1024):
        rec = fourier_params(m, 1.0, mode="theory", N=4096)
        assert sum(rec.m_local) <= m
        # saturated prefix is enumerated in full
        sizes = (2,) + tuple(2 ** k for k in range(1, rec.r))
        assert rec.m_local[:rec.r_tilde] == sizes[:rec.r_tilde]


def test_fourier_weights_two_regimes():
    rec = fourier_params(512, 2.0, p=2, N=4096)
    levels = np.unique(rec.weights)
    assert len(levels) == 2            # dense-regime and tail-regime weights
    assert rec.weights[0] == levels[0]
    assert rec.weights[-1] == levels[-1]
    assert rec.lam == pytest.approx(1.0 / np.sqrt(rec.r * rec.m))


def test_fourier_params_validation():
    with pytest.raises(PreconditionError):
        fourier_params(256, 0.5, N=4096)
    with pytest.raises(PreconditionError):
        fourier_params(256, 2.0, p=1, N=4096)     # p < ceil(alpha)
    with pytest.raises(PreconditionError):
        fourier_params(256, 1.0)                  # experiment mode needs N
    with pytest.raises(BudgetError):
        fourier_params(2, 1.0, N=4096)


def test_sparsity_plan_desk_scale_raises():
    # the formula constant exceeds the budget at desk scale, so the plan
    # honestly refuses rather than emitting zero sparsities
    rec = fourier_params(512, 1.0, N=4096)
    with pytest.raises(BudgetError):
        sparsity_plan(rec)


def test_sparsity_plan_synthetic_recipe():
    rec = fourier_params(512, 1.0, N=4096)
    big = dataclasses.replace(rec, L_bar=4.0, r_bar=3)
    plan = sparsity_plan(big)
    assert plan.s_star == 512 // (4 * 12)
    assert plan.s_local[:3] == (2, 2, 4)          # dense below r_bar
    assert all(s == min(plan.s_star, 2 ** (k - 1)) for k, s in
               enumerate(plan.s_local[3:], start=4))
    assert plan.s_total == sum(plan.s_local)
    assert len(plan.ratios) == big.r


@pytest.fixture(scope="module")
def haar_refs():
    f = make_fk(3)
    spec = daubechies(1)
    return f, spec, reference_coefficients(f, spec, 8), reference_coefficients(f, spec, 10)


def test_run_gauss_pipeline(haar_refs):
    f, spec, d_ref, d_hi = haar_refs
    res = run_gauss(f, 128, 1.0, seed=0, N=256, spec=spec, d_ref=d_ref, d_hi=d_hi)
    assert res.recipe.N == 256
    assert 0 < res.rel_l2_error < 0.2
    res2 = run_gauss(f, 128, 1.0, seed=0, N=256, spec=spec, d_ref=d_ref, d_hi=d_hi)
    assert res2.rel_l2_error == res.rel_l2_error   # seeded determinism


def test_run_optimal_pipeline(haar_refs):
    f, spec, d_ref, d_hi = haar_refs
    res = run_optimal(f, 128, 1.0, seed=1, N=256, spec=spec, d_ref=d_ref, d_hi=d_hi)
    assert res.recipe.m1 + res.recipe.m2 == 128
    # coarse block is copied exactly
    assert np.allclose(res.coefficients[:res.recipe.N1], d_ref[:res.recipe.N1])
    assert 0 < res.rel_l2_error < 0.1


def test_run_fourier_pipeline(haar_refs):
    f, spec, _, d_hi = haar_refs
    memo = FourierMemo(f)
    res = run_fourier(f, 128, 1.0, p=1, seed=2, N=256, spec=spec, memo=memo, d_hi=d_hi)
    assert sum(res.recipe.m_local) == 128
    assert 0 < res.rel_l2_error < 0.1
    # decoder selection is validated
    with pytest.raises(PreconditionError):
        run_fourier(f, 128, 1.0, p=1, decoder="nope", N=256, spec=spec)


def test_run_fourier_more_measurements_help(haar_refs):
    f, spec, _, d_hi = haar_refs
    memo = FourierMemo(f)
    errs = [run_fourier(f, m, 1.0, p=1, seed=3, N=256, spec=spec, memo=memo,
                        d_hi=d_hi).rel_l2_error for m in (32, 128)]
    assert errs[1] < errs[0]


def test_theory_mode_cap_guard():
    f = make_fk(1)
    # the theory truncation formula explodes super-linearly in m; without a
    # working dimension the dense cap refuses
    with pytest.raises(CapExceededError):
        run_fourier(f, 4096, 1.0, p=1, mode="theory", N=None)


def test_fourier_memo_caches():
    f = make_fk(2)
    memo = FourierMemo(f)
    a = memo.get([0, 1, -1])
    assert len(memo.cache) == 3
    b = memo.get([1, 5])
    assert len(memo.cache) == 4
    assert b[0] == a[1]
