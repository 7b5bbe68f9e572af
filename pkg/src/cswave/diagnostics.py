"""Structured-sparsity measures and brute-force isometry diagnostics.

Everything here is exact-but-tiny: restricted isometry constants by
exhaustive support enumeration with hard size caps, the weighted l1 tail
against a per-level sparsity plan, and a seeded success-rate harness for
phase-transition experiments.
"""

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np
import scipy.linalg

from .errors import CapExceededError, PreconditionError
from .experiment import trial_seed
from .solvers import basis_pursuit

RIP_MAX_COLS = 16
RIP_MAX_S = 4
GRIPL_MAX_SUPPORTS = 10 ** 6


@dataclass(frozen=True)
class LevelSparsity:
    """Per-level sparsity budgets s_k against level edges M_k."""

    M_levels: tuple
    s_local: tuple

    def __post_init__(self):
        M = tuple(int(v) for v in self.M_levels)
        s = tuple(int(v) for v in self.s_local)
        object.__setattr__(self, "M_levels", M)
        object.__setattr__(self, "s_local", s)
        if len(M) != len(s):
            raise PreconditionError("level edges and sparsities must align")
        if any(b <= a for a, b in zip((0,) + M, M)):
            raise PreconditionError("M_levels must be strictly increasing and positive")
        for k, (sk, size) in enumerate(zip(s, self.level_sizes()), start=1):
            if not (1 <= sk <= size):
                raise PreconditionError(f"level {k}: need 1 <= s_k <= {size}, got {sk}")

    def level_sizes(self):
        prev = (0,) + self.M_levels[:-1]
        return tuple(b - a for a, b in zip(prev, self.M_levels))

    def level_slices(self):
        prev = (0,) + self.M_levels[:-1]
        return tuple(slice(a, b) for a, b in zip(prev, self.M_levels))

    @property
    def dim(self):
        return self.M_levels[-1]

    @property
    def s_total(self):
        return sum(self.s_local)


@dataclass(frozen=True)
class RipReport:
    order: object            # s, or (s_local, M_levels)
    constant: float
    supports_checked: int


def sigma_sM_weighted(x, plan, w):
    """Weighted l1 tail outside the best level-feasible support.

    Per level k the s_k entries maximizing w_i |x_i| are kept (ties go to
    the smaller index); the weighted l1 norm of everything else is
    returned.  This greedy per-level choice is the exact minimizer because
    the levels are disjoint.
    """
    x = np.asarray(x)
    w = np.asarray(w, dtype=float)
    if x.shape != (plan.dim,) or w.shape != (plan.dim,):
        raise PreconditionError("vector/weights length must match the plan dimension")
    if np.any(w <= 0):
        raise PreconditionError("weights must be strictly positive")
    tail = 0.0
    for sl, sk in zip(plan.level_slices(), plan.s_local):
        key = w[sl] * np.abs(x[sl])
        order = np.argsort(-key, kind="stable")
        dropped = order[sk:]
        tail += float(np.sum(key[dropped]))
    return tail


def rip_constant_bruteforce(A, s):
    """delta_s = max over s-column subsets of ||A_S* A_S - I|| (exact)."""
    A = np.asarray(A)
    n = A.shape[1]
    if n > RIP_MAX_COLS or s > RIP_MAX_S:
        raise CapExceededError(f"brute force limited to <= {RIP_MAX_COLS} columns, s <= {RIP_MAX_S}")
    if not (1 <= s <= n):
        raise PreconditionError("need 1 <= s <= #columns")
    gram = A.conj().T @ A
    worst = 0.0
    checked = 0
    for S in combinations(range(n), s):
        sub = gram[np.ix_(S, S)] - np.eye(s)
        worst = max(worst, float(np.linalg.norm(sub, 2)))
        checked += 1
    return RipReport(order=s, constant=worst, supports_checked=checked)


def _level_supports(plan):
    for combo in _product_supports([list(combinations(range(sl.start, sl.stop), sk))
                                    for sl, sk in zip(plan.level_slices(), plan.s_local)]):
        yield combo


def _product_supports(per_level):
    if not per_level:
        yield ()
        return
    head, *rest = per_level
    for choice in head:
        for tail in _product_supports(rest):
            yield choice + tail


def gripl_constant_bruteforce(A, G, plan):
    """Exact G-adjusted restricted isometry constant in levels.

    For each level-feasible support S the extreme generalized eigenvalues
    of (A_S* A_S, (G* G)_S) are computed; delta is the largest one-sided
    deviation from 1 over all supports.
    """
    A = np.asarray(A)
    G = np.asarray(G)
    if A.shape[1] != plan.dim or G.shape != (plan.dim, plan.dim):
        raise PreconditionError("A columns and G must match the plan dimension")
    if plan.dim > RIP_MAX_COLS:
        raise CapExceededError(f"brute force limited to dimension <= {RIP_MAX_COLS}")
    n_supports = 1
    for sl, sk in zip(plan.level_sizes(), plan.s_local):
        n_supports *= comb(sl, sk)
    if n_supports > GRIPL_MAX_SUPPORTS:
        raise CapExceededError(f"{n_supports} supports exceeds the cap {GRIPL_MAX_SUPPORTS}")
    AHA = A.conj().T @ A
    GHG = G.conj().T @ G
    worst = 0.0
    checked = 0
    for S in _level_supports(plan):
        idx = np.ix_(S, S)
        evals = scipy.linalg.eigh(AHA[idx], GHG[idx], eigvals_only=True)
        worst = max(worst, float(max(evals[-1] - 1.0, 1.0 - evals[0])))
        checked += 1
    return RipReport(order=(plan.s_local, plan.M_levels), constant=worst,
                     supports_checked=checked)


@dataclass(frozen=True)
class SparseModel:
    """Synthetic exactly-sparse target: s Gaussian spikes in dimension N."""

    N: int
    s: int

    def __post_init__(self):
        if not (1 <= self.s <= self.N):
            raise PreconditionError("need 1 <= s <= N")

    def draw(self, rng):
        x = np.zeros(self.N)
        support = rng.choice(self.N, size=self.s, replace=False)
        x[support] = rng.standard_normal(self.s)
        return x


def gaussian_bp_trial(model, m, seed, opts=None):
    """One seeded Gaussian-sensing BP trial on a sparse model; rel. error."""
    rng = np.random.default_rng(int(seed) & (2 ** 64 - 1))
    x0 = model.draw(rng)
    A = rng.standard_normal((m, model.N)) / np.sqrt(m)
    y = A @ x0
    xhat, _ = basis_pursuit(A, y, opts)
    return float(np.linalg.norm(np.real(xhat) - x0) / np.linalg.norm(x0))


_STRATEGIES = {"gauss_bp": gaussian_bp_trial}


def success_rate(strategy, target, m, trials, threshold, master_seed=0, opts=None):
    """Fraction of seeded trials with relative error below the threshold.

    `strategy` is either a registered name ("gauss_bp") or any callable
    (target, m, seed) -> relative error.  Per-trial seeds are hashed from
    the master seed, so the rate is reproducible and trials independent.
    """
    if trials < 1:
        raise PreconditionError("need trials >= 1")
    if isinstance(strategy, str):
        label = strategy
        try:
            fn = _STRATEGIES[strategy]
        except KeyError:
            raise PreconditionError(f"unknown strategy {strategy!r}") from None
        runner = lambda tgt, mm, seed: fn(tgt, mm, seed, opts)
    else:
        label = getattr(strategy, "__name__", "custom")
        runner = strategy
    hits = 0
    for t in range(trials):
        seed = trial_seed(master_seed, label, m, t)
        if runner(target, m, seed) < threshold:
            hits += 1
    return hits / trials
