"""Parameter recipes and end-to-end encode/decode pipelines.

Three strategies are supported: Gaussian sensing of the coefficient
vector, two-level sensing (coarse coefficients measured directly, fine
ones through a Gaussian block), and multilevel Fourier sampling through
the cross-Gramian.  Each has a `*_params` function producing the full
derived parameter set and a `run_*` function executing one seeded trial.

Conventions: r, r_tilde, r_bar count dyadic levels above j0 and come from
base-2 logs; the constant L_bar uses the natural log.  In the formula
recipes N is derived from m; the runners instead fix N to the working
dimension so strategies are compared at a common truncation.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BudgetError, CapExceededError, PreconditionError
from .fourier import cross_gramian, estimate_smoothness_q, fourier_coefficients, natural_to_signed
from .sampling import (LevelScheme, dense_operator, draw_multilevel, draw_symmetric,
                       gaussian_operator, scaling_weights, subsampled_gramian_operator,
                       two_level_operator)
from .solvers import SolveOptions, basis_pursuit, weighted_basis_pursuit, weighted_sqrt_lasso
from .wavelets import coarsest_scale, daubechies, function_to_coefficients

DENSE_GRAMIAN_CAP = 2 ** 16


@dataclass(frozen=True)
class GaussRecipe:
    m: int
    alpha: float
    p: int
    j0: int
    r: int
    N: int


@dataclass(frozen=True)
class OptimalRecipe:
    m: int
    alpha: float
    p: int
    j0: int
    r: int
    r_bar: int
    N1: int
    N2: int
    m1: int
    m2: int


@dataclass(frozen=True)
class FourierRecipe:
    m: int
    alpha: float
    p: int
    q: float
    delta: float
    j0: int
    r: int
    r_tilde: int
    r_bar: int
    L_bar: float
    m_local: tuple
    weights: np.ndarray
    lam: float
    M: int
    mode: str


@dataclass(frozen=True)
class SparsityPlan:
    s_local: tuple
    s_star: int
    s_total: int
    ratios: tuple  # sqrt(s/s_k) / w^{(k)} per level


def _r_from_dim(N, j0):
    r = int(round(math.log2(N))) - j0
    if 2 ** (j0 + r) != N:
        raise PreconditionError(f"dimension {N} must be 2^(j0+r)")
    if r < 1:
        raise BudgetError("dimension leaves no wavelet level above j0")
    return r


def gauss_params(m, alpha, N=None):
    """Parameters for the Gaussian strategy.

    Without N the truncation comes from the formula
    r = floor(log2(m^{2a+1} / (ln m)^{2a+2})) - j0; with N given, r is
    taken from the dimension directly.
    """
    if m < 2:
        raise BudgetError("need m >= 2")
    p = math.ceil(alpha)
    j0 = coarsest_scale(p)
    if N is None:
        log2val = (2 * alpha + 1) * math.log2(m) - (2 * alpha + 2) * math.log2(math.log(m))
        r = math.floor(log2val) - j0
    else:
        r = _r_from_dim(N, j0)
    if r < 1:
        raise BudgetError(f"budget m={m} too small for alpha={alpha}")
    return GaussRecipe(m=m, alpha=alpha, p=p, j0=j0, r=r, N=2 ** (j0 + r))


def optimal_params(m, alpha, N=None):
    """Parameters for the two-level strategy (coarse direct + Gaussian)."""
    p = math.ceil(alpha)
    j0 = coarsest_scale(p)
    if m < 2 ** (j0 + 2):
        raise BudgetError(f"two-level strategy needs m >= 2^(j0+2) = {2 ** (j0 + 2)}")
    r = math.floor((2 * alpha + 1) * math.log2(m)) - j0 if N is None else _r_from_dim(N, j0)
    r_bar = math.floor(math.log2(m / 2)) - j0
    if not (0 < r_bar < r):
        raise BudgetError(f"need 0 < r_bar < r, got r_bar={r_bar}, r={r}")
    N1 = 2 ** (j0 + r_bar)
    m1 = N1
    return OptimalRecipe(m=m, alpha=alpha, p=p, j0=j0, r=r, r_bar=r_bar,
                         N1=N1, N2=2 ** (j0 + r), m1=m1, m2=m - m1)


def _resolve_q(p, q):
    if q is not None:
        return float(q)
    if p == 1:
        return 0.0
    return estimate_smoothness_q(daubechies(p))


def fourier_params(m, alpha, p=None, delta=1e-5, mode="experiment", N=None, q=None):
    """Full parameter set for multilevel Fourier sampling.

    Theory mode follows the formula recipe (sample counts bounded by m);
    experiment mode spreads the unsaturated budget evenly and tops up the
    finest level so the counts sum to m exactly.
    """
    if alpha <= 0.5:
        raise PreconditionError("need alpha > 1/2")
    if not (0 < delta < 1):
        raise PreconditionError("need 0 < delta < 1")
    if mode not in ("theory", "experiment"):
        raise PreconditionError("mode must be theory or experiment")
    p = math.ceil(alpha) if p is None else int(p)
    if p < math.ceil(alpha):
        raise PreconditionError("need p >= ceil(alpha)")
    j0 = coarsest_scale(p)
    q = _resolve_q(p, q)

    if N is None:
        if mode == "experiment":
            raise PreconditionError("experiment mode needs the working dimension N")
        growth = max(2 * alpha + 1, alpha / (alpha - 0.5))
        r = math.floor(growth * math.log2(m)) - j0
    else:
        r = _r_from_dim(N, j0)
    if r < 1:
        raise BudgetError("budget too small: no sampling level above j0")

    if mode == "theory":
        r_tilde = math.floor(math.log2(m / 2)) - j0
    else:
        r_tilde = round(math.log2(m / 2)) - j0
    if r_tilde < 1:
        raise BudgetError(f"budget m={m} too small for saturation (r_tilde={r_tilde})")
    r_tilde = min(r_tilde, r)

    sizes = [2 ** (j0 + 1)] + [2 ** (j0 + k - 1) for k in range(2, r + 1)]
    m_local = [sizes[k - 1] for k in range(1, r_tilde + 1)]
    if mode == "theory":
        for k in range(r_tilde + 1, r + 1):
            bulk = 2.0 ** ((2 * q + 2) * math.log2(m) - (2 * q + 1) * (k + j0 + 2))
            m_local.append(math.floor(0.25 * (bulk + m / (4 * (r - r_tilde)))))
        if sum(m_local) > m:
            raise BudgetError(f"theory counts exceed the budget: {sum(m_local)} > {m}")
    elif r_tilde < r:
        mid = 2 * (m // (4 * (r - r_tilde)))
        for k in range(r_tilde + 1, r):
            m_local.append(mid)
        m_last = m - sum(m_local)
        if not (0 <= m_last <= sizes[r - 1]):
            raise BudgetError(f"budget m={m} incompatible with r={r}, r_tilde={r_tilde}")
        m_local.append(m_last)
        assert sum(m_local) == m
    else:
        if sum(m_local) != m:
            raise BudgetError("fully saturated geometry does not match the budget")

    L_bar = math.log(m) ** (6 + delta)
    r_bar = max(0, math.floor(math.log2(m * L_bar ** (-1.0 / (2 * (q + 1))))) - j0)
    r_bar = min(r_bar, r)
    M = 2 ** (j0 + r)
    if M > 2 ** 26:
        raise CapExceededError(
            f"truncation dimension 2^{j0 + r} is too large to materialize; "
            f"pass a working dimension N instead")
    weights = np.empty(M)
    bounds = [0] + [2 ** (j0 + k) for k in range(1, r + 1)]
    for k in range(1, r + 1):
        if k <= r_bar:
            wk = math.sqrt(m / (2 ** k * L_bar ** (1.0 / (2 * (q + 1)))))
        else:
            wk = math.sqrt(L_bar ** ((2 * q + 1) / (2 * q + 2)) * r)
        weights[bounds[k - 1]:bounds[k]] = wk
    lam = 1.0 / math.sqrt(r * m)
    return FourierRecipe(m=m, alpha=alpha, p=p, q=q, delta=delta, j0=j0, r=r,
                         r_tilde=r_tilde, r_bar=r_bar, L_bar=L_bar,
                         m_local=tuple(m_local), weights=weights, lam=lam, M=M, mode=mode)


def sparsity_plan(recipe):
    """Level sparsities paired with the recipe weights.

    Dense up to r_bar, constant s_* = floor(m / (L_bar r)) above; also
    reports the ratios sqrt(s/s_k) / w^{(k)} so the weight-consistency
    condition can be inspected.
    """
    r, r_bar = recipe.r, recipe.r_bar
    bounds = [0] + [2 ** (recipe.j0 + k) for k in range(1, r + 1)]
    s_star = math.floor(recipe.m / (recipe.L_bar * r))
    s_local = []
    for k in range(1, r + 1):
        size = bounds[k] - bounds[k - 1]
        if k <= r_bar:
            s_local.append(size)
        else:
            if s_star < 1:
                raise BudgetError("s_* < 1: budget below the sparsity-plan threshold m >= L_bar*r")
            s_local.append(min(s_star, size))
    s_total = sum(s_local)
    level_w = [float(recipe.weights[bounds[k - 1]]) for k in range(1, r + 1)]
    ratios = tuple(math.sqrt(s_total / sk) / wk for sk, wk in zip(s_local, level_w))
    return SparsityPlan(s_local=tuple(s_local), s_star=s_star, s_total=s_total, ratios=ratios)


@dataclass
class RunResult:
    coefficients: np.ndarray
    rel_l2_error: float
    report: object
    recipe: object


def reference_coefficients(f, spec, J_ref):
    return function_to_coefficients(f, spec, J_ref).values


def relative_error(xhat, d_hi):
    x = np.real(np.asarray(xhat))
    pad = np.zeros(len(d_hi))
    pad[: len(x)] = x
    return float(np.linalg.norm(pad - d_hi) / np.linalg.norm(d_hi))


def run_gauss(f, m, alpha, seed, *, N=4096, spec=None, opts=None, d_ref=None, d_hi=None):
    """Gaussian-sensing pipeline for one seeded trial."""
    recipe = gauss_params(m, alpha, N=N)
    spec = spec or daubechies(recipe.p)
    J = recipe.j0 + recipe.r
    d = d_ref if d_ref is not None else reference_coefficients(f, spec, J)
    A = gaussian_operator(m, recipe.N, seed)
    y = A.matrix @ d
    xhat, report = basis_pursuit(A, y, opts)
    d_hi = d_hi if d_hi is not None else reference_coefficients(f, spec, J + 2)
    return RunResult(coefficients=np.real(xhat), rel_l2_error=relative_error(xhat, d_hi),
                     report=report, recipe=recipe)


def run_optimal(f, m, alpha, seed, *, N=4096, spec=None, opts=None, d_ref=None, d_hi=None):
    """Two-level pipeline: exact coarse copy, Gaussian-sensed fine part."""
    recipe = optimal_params(m, alpha, N=N)
    assert recipe.m1 + recipe.m2 == m
    spec = spec or daubechies(recipe.p)
    J = recipe.j0 + recipe.r
    d = d_ref if d_ref is not None else reference_coefficients(f, spec, J)
    op = two_level_operator(recipe.N1, recipe.N2, recipe.m2, seed)
    y = op.apply(d)
    coarse = y[: recipe.N1].copy()
    fine_op = dense_operator(op.fine_block, "GaussianDense")
    x_fine, report = basis_pursuit(fine_op, y[recipe.N1:], opts)
    xhat = np.concatenate([coarse, np.real(x_fine)])
    d_hi = d_hi if d_hi is not None else reference_coefficients(f, spec, J + 2)
    return RunResult(coefficients=xhat, rel_l2_error=relative_error(xhat, d_hi),
                     report=report, recipe=recipe)


class FourierMemo:
    """Per-function cache of Fourier coefficients keyed by signed frequency."""

    def __init__(self, f):
        self.f = f
        self.cache = {}

    def get(self, freqs):
        missing = [n for n in freqs if n not in self.cache]
        if missing:
            vals = fourier_coefficients(self.f, missing)
            for n, v in zip(missing, vals):
                self.cache[n] = v
        return np.array([self.cache[n] for n in freqs])


_DECODERS = ("bp", "wbp", "wsrlasso")


def run_fourier(f, m, alpha, p=None, delta=1e-5, decoder="bp", mode="experiment",
                seed=0, *, N=4096, spec=None, U=None, opts=None, memo=None, d_hi=None):
    """Multilevel Fourier pipeline for one seeded trial.

    Measurements are quadrature Fourier coefficients of f at the drawn
    signed frequencies, scaled by the density-compensation diagonal; the
    decoder sees the matching rows of D U.
    """
    if decoder not in _DECODERS:
        raise PreconditionError(f"decoder must be one of {_DECODERS}")
    if mode == "theory" and N is None:
        probe = fourier_params(m, alpha, p=p, delta=delta, mode="theory", N=None)
        if probe.M > DENSE_GRAMIAN_CAP:
            raise CapExceededError(
                f"theory-mode M=2^{probe.j0 + probe.r} exceeds the dense cap 2^16; "
                f"use experiment mode at a working dimension (e.g. N=4096)")
        N = probe.M
    recipe = fourier_params(m, alpha, p=p, delta=delta, mode=mode, N=N)
    if recipe.M > DENSE_GRAMIAN_CAP:
        raise CapExceededError("Gramian dimension exceeds the dense cap 2^16")
    if mode == "theory":
        assert sum(recipe.m_local) <= m
    else:
        assert sum(recipe.m_local) == m
    spec = spec or daubechies(recipe.p)
    scheme = LevelScheme(N_levels=tuple(2 ** (recipe.j0 + k) for k in range(1, recipe.r + 1)),
                         m_local=recipe.m_local, saturation=recipe.r_tilde)
    if mode == "experiment":
        pattern = draw_symmetric(scheme, seed)
    else:
        pattern = draw_multilevel(scheme, seed, mode="theory")
    if U is None:
        U = cross_gramian(spec, recipe.M, recipe.M)
    A = subsampled_gramian_operator(U, pattern)
    d_diag = scaling_weights(scheme)
    signed = natural_to_signed(pattern.indices)
    memo = memo or FourierMemo(f)
    b = memo.get([int(n) for n in signed])
    y = d_diag[pattern.indices - 1] * b
    if decoder == "bp":
        xhat, report = basis_pursuit(A, y, opts)
    elif decoder == "wbp":
        xhat, report = weighted_basis_pursuit(A, y, recipe.weights, opts)
    else:
        xhat, report = weighted_sqrt_lasso(A, y, recipe.weights, recipe.lam, opts)
    J = recipe.j0 + recipe.r
    d_hi = d_hi if d_hi is not None else reference_coefficients(f, spec, J + 2)
    return RunResult(coefficients=np.real(xhat), rel_l2_error=relative_error(xhat, d_hi),
                     report=report, recipe=recipe)
