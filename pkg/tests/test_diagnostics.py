from itertools import combinations

import numpy as np
import pytest

from cswave.diagnostics import (LevelSparsity, SparseModel, gaussian_bp_trial,
                                gripl_constant_bruteforce, rip_constant_bruteforce,
                                sigma_sM_weighted, success_rate)
from cswave.errors import CapExceededError, PreconditionError
from cswave.fourier import balancing_constant, cross_gramian
from cswave.wavelets import daubechies


def test_level_sparsity_validation():
    with pytest.raises(PreconditionError):
        LevelSparsity((4, 2), (1, 1))
    with pytest.raises(PreconditionError):
        LevelSparsity((2, 4), (3, 1))     # s_1 > level size
    with pytest.raises(PreconditionError):
        LevelSparsity((2, 4), (0, 1))
    plan = LevelSparsity((2, 6), (1, 2))
    assert plan.level_sizes() == (2, 4)
    assert plan.s_total == 3


def test_sigma_single_level_examples():
    plan = LevelSparsity((3,), (1,))
    assert sigma_sM_weighted(np.array([3.0, 1.0, 2.0]), plan, np.ones(3)) == 3.0
    full = LevelSparsity((3,), (3,))
    assert sigma_sM_weighted(np.array([3.0, 1.0, 2.0]), full, np.ones(3)) == 0.0


def test_sigma_matches_exhaustive_minimum():
    rng = np.random.default_rng(0)
    plan = LevelSparsity((3, 8), (1, 2))
    for _ in range(10):
        x = rng.standard_normal(8)
        w = rng.uniform(0.5, 2.0, 8)
        best = min(sum(w[i] * abs(x[i]) for i in range(8) if i not in set(S1) | set(S2))
                   for S1 in combinations(range(3), 1)
                   for S2 in combinations(range(3, 8), 2))
        assert sigma_sM_weighted(x, plan, w) == pytest.approx(best, abs=1e-12)


def test_sigma_positive_scaling():
    plan = LevelSparsity((2, 6), (1, 2))
    x = np.array([1.0, -2.0, 0.5, 3.0, -1.0, 0.2])
    w = np.array([1.0, 0.7, 2.0, 0.4, 1.1, 0.9])
    assert sigma_sM_weighted(x, plan, 5.0 * w) == pytest.approx(
        5.0 * sigma_sM_weighted(x, plan, w))


def test_sigma_tie_break_smaller_index():
    plan = LevelSparsity((2,), (1,))
    # equal keys: the earlier entry is kept
    assert sigma_sM_weighted(np.array([2.0, -2.0]), plan, np.ones(2)) == 2.0


def test_rip_orthonormal_and_duplicate():
    rng = np.random.default_rng(1)
    Q, _ = np.linalg.qr(rng.standard_normal((16, 8)))
    assert rip_constant_bruteforce(Q, 2).constant < 1e-12
    B = np.column_stack([Q[:, 0], Q[:, 0], Q[:, 2]])
    assert rip_constant_bruteforce(B, 2).constant == pytest.approx(1.0)


def test_rip_counts_and_caps():
    A = np.eye(5)
    rep = rip_constant_bruteforce(A, 3)
    assert rep.supports_checked == 10
    with pytest.raises(CapExceededError):
        rip_constant_bruteforce(np.zeros((2, 17)), 2)
    with pytest.raises(CapExceededError):
        rip_constant_bruteforce(np.zeros((2, 5)), 5)


def test_rip_column_permutation_invariance():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((12, 8))
    perm = rng.permutation(8)
    # same support set, so equal up to eigensolver rounding
    assert (rip_constant_bruteforce(A, 2).constant
            == pytest.approx(rip_constant_bruteforce(A[:, perm], 2).constant,
                             rel=1e-13))


def test_rip_decreases_with_more_rows():
    means = []
    for m in (10, 40, 160):
        vals = [rip_constant_bruteforce(
            np.random.default_rng(s).standard_normal((m, 16)) / np.sqrt(m), 2).constant
            for s in range(5)]
        means.append(np.mean(vals))
    assert means[0] > means[1] > means[2]


def test_gripl_a_equals_g_is_zero():
    rng = np.random.default_rng(3)
    G = rng.standard_normal((6, 6)) + 3 * np.eye(6)
    plan = LevelSparsity((2, 6), (1, 2))
    assert gripl_constant_bruteforce(G, G, plan).constant < 1e-12


def test_gripl_identity_reduces_to_rip_in_levels():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((12, 6))
    plan = LevelSparsity((2, 6), (1, 2))
    rep = gripl_constant_bruteforce(A, np.eye(6), plan)
    worst = 0.0
    for S1 in combinations(range(2), 1):
        for S2 in combinations(range(2, 6), 2):
            S = S1 + S2
            ev = np.linalg.eigvalsh(A[:, S].T @ A[:, S])
            worst = max(worst, max(ev[-1] - 1.0, 1.0 - ev[0]))
    assert rep.constant == pytest.approx(worst)
    assert rep.supports_checked == 2 * 6


def test_gripl_full_sparsity_equals_gram_deviation():
    # with every level fully dense the only support is everything, so the
    # constant is exactly the extreme eigenvalue deviation of the Gram
    # matrix -- the same quantity behind the balancing constant
    U = cross_gramian(daubechies(1), 16, 8)
    plan = LevelSparsity((1, 2, 4, 8), (1, 1, 2, 4))
    rep = gripl_constant_bruteforce(U.entries, np.eye(8), plan)
    assert rep.constant == pytest.approx(1.0 - balancing_constant(U), abs=1e-12)


def test_gripl_caps():
    plan = LevelSparsity((17,), (1,))
    with pytest.raises(CapExceededError):
        gripl_constant_bruteforce(np.zeros((4, 17)), np.eye(17), plan)


def test_sparse_model_and_trial():
    model = SparseModel(64, 3)
    x = model.draw(np.random.default_rng(0))
    assert np.count_nonzero(x) == 3
    err = gaussian_bp_trial(model, 40, seed=7)
    assert err < 1e-5
    with pytest.raises(PreconditionError):
        SparseModel(4, 5)


def test_success_rate_trivials():
    model = SparseModel(64, 3)
    assert success_rate("gauss_bp", model, 10, 3, np.inf) == 1.0
    with pytest.raises(PreconditionError):
        success_rate("gauss_bp", model, 10, 0, 1.0)
    with pytest.raises(PreconditionError):
        success_rate("nope", model, 10, 1, 1.0)


def test_success_rate_monotone_in_m():
    model = SparseModel(64, 4)
    rates = [np.median([success_rate("gauss_bp", model, m, 10, 1e-4, master_seed=s)
                        for s in range(3)]) for m in (10, 20, 40)]
    assert rates[0] <= rates[1] <= rates[2]


def test_success_rate_custom_callable():
    calls = []

    def strategy(target, m, seed):
        calls.append(seed)
        return 0.0

    assert success_rate(strategy, None, 8, 4, 0.5) == 1.0
    assert len(set(calls)) == 4      # distinct per-trial seeds
