"""Convex l1 decoders.

Basis pursuit, weighted basis pursuit and the weighted square-root LASSO,
all driven by one primal-dual (Chambolle-Pock) iteration with two prox
maps, plus a brute-force support-enumeration oracle for tiny instances.

Basis pursuit treats the equality constraint through the linear conjugate
term and finishes with an exact projection onto the affine set (cached
least-squares factorization on the dense path), so the reported residual
is at solver precision.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import InfeasibleError, PreconditionError
from .sampling import MeasurementOperator, dense_operator

CHECK_EVERY = 10
WINDOW = 50
MIN_ITERS = 200  # dual warmup before the stall window may declare convergence


@dataclass
class SolveOptions:
    max_iters: int = 10000
    bp_tol: float = 1e-6
    opt_tol: float = 1e-6
    step_ratio: float = 0.99
    verbosity: int = 0

    def __post_init__(self):
        if self.max_iters < 1 or self.bp_tol <= 0 or self.opt_tol <= 0:
            raise PreconditionError("invalid solver options")


@dataclass
class SolveReport:
    iterations: int
    primal_residual: float
    objective: float
    status: str                       # Converged | MaxIters | Infeasible
    dual: Optional[np.ndarray] = None  # final dual iterate (certificate checks)


def _as_operator(A):
    if isinstance(A, MeasurementOperator):
        return A
    return dense_operator(np.asarray(A))


def _soft(z, t):
    mag = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(mag > t, 1.0 - t / np.where(mag > 0, mag, 1.0), 0.0)
    return z * scale


def _complex_inputs(op, y):
    if op.matrix is not None and np.iscomplexobj(op.matrix):
        return True
    return np.iscomplexobj(y)


def _sqrt_lasso_stage(op, y, w, lam, z, v, tau, sigma, budget, opts):
    """Run CP on the sqrt-LASSO objective at one fixed lam; warm state in/out."""
    thresholds = tau * lam * w

    def objective(zz):
        return lam * float(np.sum(w * np.abs(zz))) + float(np.linalg.norm(op.apply(zz) - y))

    zbar = z.copy()
    best_obj = objective(z)
    best_z = z.copy()
    history = [(0, best_obj)]
    converged = False
    it = 0
    for it in range(1, budget + 1):
        v = v + sigma * (op.apply(zbar) - y)
        nv = np.linalg.norm(v)
        if nv > 1.0:
            v = v / nv
        z_new = _soft(z - tau * op.adjoint(v), thresholds)
        zbar = 2.0 * z_new - z
        z = z_new
        if it % CHECK_EVERY == 0:
            obj = objective(z)
            if obj < best_obj:
                best_obj = obj
                best_z = z.copy()
            history.append((it, best_obj))
            # duality gap: scale the dual iterate into its constraint set
            # (|A*v| <= lam*w entrywise, ||v|| <= 1) and compare objectives
            atv = np.abs(op.adjoint(v))
            scale = float(min(1.0, np.min(lam * w / np.maximum(atv, 1e-300))))
            gap = best_obj + scale * float(np.real(np.vdot(v, y)))
            if (gap <= opts.opt_tol * (1.0 + abs(best_obj))
                    and _window_converged(history, it, best_obj, opts.opt_tol)):
                converged = True
                break
    return best_z, best_obj, z, v, it, converged


def weighted_sqrt_lasso(A, y, w, lam, opts=None):
    """min over z of lam * ||z||_{1,w} + ||A z - y||_2.

    Small lam is handled by continuation: a geometric lam schedule from the
    zero-solution threshold down to the target, warm-starting each stage,
    so the support is identified long before the flat small-lam landscape
    is reached.  Reported iterations are the total over all stages.
    """
    opts = opts or SolveOptions()
    op = _as_operator(A)
    if lam <= 0:
        raise PreconditionError("lambda must be positive")
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise PreconditionError("weights must be strictly positive")
    m, n = op.shape
    cdtype = complex if _complex_inputs(op, y) else float
    y = np.asarray(y, dtype=cdtype)
    nrm = max(op.norm_estimate, 1e-30)
    tau = sigma = opts.step_ratio / nrm

    ynorm = float(np.linalg.norm(y))
    if ynorm > 0:
        lam_max = float(np.max(np.abs(op.adjoint(y / ynorm)) / w))
    else:
        lam_max = 0.0
    if lam_max > 4.0 * lam:
        stages = max(1, int(np.ceil(np.log2(lam_max / lam) / 2.0)))
        schedule = list(lam_max * (lam / lam_max) ** (np.arange(1, stages + 1) / stages))
    else:
        schedule = [lam]
    schedule[-1] = lam

    z = np.zeros(n, dtype=cdtype)
    v = np.zeros(m, dtype=cdtype)
    total_it = 0
    best_z, best_obj, converged = z.copy(), np.inf, False
    for stage_lam in schedule:
        budget = opts.max_iters - total_it
        if budget <= 0:
            break
        best_z, best_obj, z, v, it, converged = _sqrt_lasso_stage(
            op, y, w, stage_lam, z, v, tau, sigma, budget, opts)
        total_it += it
        z = best_z.copy()
    status = "Converged" if converged else "MaxIters"
    resid = float(np.linalg.norm(op.apply(best_z) - y))
    return best_z, SolveReport(iterations=total_it, primal_residual=resid,
                               objective=best_obj, status=status, dual=v)


def _window_converged(history, it, best, tol):
    if it < max(WINDOW, MIN_ITERS):
        return False
    target = it - WINDOW
    past = None
    for t, val in reversed(history):
        if t <= target:
            past = val
            break
    if past is None:
        return False
    return (past - best) <= tol * (1.0 + abs(best))


def _affine_project(op, y, z, factor):
    """z + A*(AA*)^{-1}(y - Az) using the cached factorization."""
    resid = y - op.apply(z)
    if factor is None:
        return z
    kind, data = factor
    if kind == "cho":
        corr = scipy.linalg.cho_solve(data, resid)
    else:
        corr = data @ resid
    return z + op.adjoint(corr)


def _make_projection_factor(op, cdtype):
    A = op.matrix
    if A is None:
        return None
    A = A.astype(cdtype, copy=False)
    AAH = A @ A.conj().T
    try:
        return ("cho", scipy.linalg.cho_factor(AAH + 1e-14 * np.trace(AAH).real / max(1, AAH.shape[0]) * np.eye(AAH.shape[0])))
    except np.linalg.LinAlgError:
        return ("pinv", np.linalg.pinv(AAH))


def weighted_basis_pursuit(A, y, w, opts=None):
    """min ||z||_{1,w} s.t. ||A z - y||_2 <= bp_tol * max(1, ||y||)."""
    opts = opts or SolveOptions()
    op = _as_operator(A)
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise PreconditionError("weights must be strictly positive")
    m, n = op.shape
    cdtype = complex if _complex_inputs(op, y) else float
    y = np.asarray(y, dtype=cdtype)
    tol = opts.bp_tol * max(1.0, float(np.linalg.norm(y)))
    nrm = max(op.norm_estimate, 1e-30)
    tau = sigma = opts.step_ratio / nrm
    thresholds = tau * w

    factor = _make_projection_factor(op, cdtype)
    # warm start at the minimum-norm interpolant: feasible from the first
    # iteration, so the loop only has to shrink the l1 norm
    z = _affine_project(op, y, np.zeros(n, dtype=cdtype), factor)
    zbar = z.copy()
    v = np.zeros(m, dtype=cdtype)

    best_obj = np.inf
    best_z = None
    history = []
    status = "MaxIters"
    it = 0
    for it in range(1, opts.max_iters + 1):
        v = v + sigma * (op.apply(zbar) - y)
        z_new = _soft(z - tau * op.adjoint(v), thresholds)
        zbar = 2.0 * z_new - z
        z = z_new
        if it % CHECK_EVERY == 0:
            resid = float(np.linalg.norm(op.apply(z) - y))
            obj = float(np.sum(w * np.abs(z)))
            if resid <= tol and obj < best_obj:
                best_obj = obj
                best_z = z.copy()
            if best_z is not None:
                history.append((it, best_obj))
                if _window_converged(history, it, best_obj, opts.opt_tol):
                    status = "Converged"
                    break

    candidates = [z] if best_z is None else [best_z, z]
    out = None
    out_obj = np.inf
    for cand in candidates:
        proj = _affine_project(op, y, cand, factor)
        resid = float(np.linalg.norm(op.apply(proj) - y))
        obj = float(np.sum(w * np.abs(proj)))
        if resid <= tol and obj < out_obj:
            out, out_obj = proj, obj
    if out is None:
        # no candidate reaches the residual tolerance even after projection
        cand = z
        resid = float(np.linalg.norm(op.apply(cand) - y))
        return cand, SolveReport(iterations=it, primal_residual=resid,
                                 objective=float(np.sum(w * np.abs(cand))),
                                 status="Infeasible", dual=v)
    resid = float(np.linalg.norm(op.apply(out) - y))
    return out, SolveReport(iterations=it, primal_residual=resid,
                            objective=out_obj, status=status, dual=v)


def basis_pursuit(A, y, opts=None):
    op = _as_operator(A)
    return weighted_basis_pursuit(op, y, np.ones(op.shape[1]), opts)


def oracle_min_l1(A, y, w=None, s_max=4):
    """Exact minimum-l1 point over supports of size <= s_max.

    Only full-column-rank supports need checking: the l1 minimum over an
    affine set is attained at a vertex, and every vertex is the unique
    solution on some independent subsupport, which is enumerated as well.
    """
    from itertools import combinations

    A = np.asarray(A)
    m, n = A.shape
    if n > 12 or s_max > 4:
        raise PreconditionError("oracle limited to <= 12 columns, s_max <= 4")
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    y = np.asarray(y)
    feas_tol = 1e-9 * max(1.0, float(np.linalg.norm(y)))
    best = None
    best_obj = np.inf
    if np.linalg.norm(y) <= feas_tol:
        return np.zeros(n, dtype=A.dtype)
    for s in range(1, s_max + 1):
        for S in combinations(range(n), s):
            AS = A[:, S]
            if np.linalg.matrix_rank(AS, tol=1e-10) < s:
                continue
            zS, *_ = np.linalg.lstsq(AS, y, rcond=None)
            if np.linalg.norm(AS @ zS - y) > feas_tol:
                continue
            obj = float(np.sum(w[list(S)] * np.abs(zS)))
            if obj < best_obj - 1e-15:
                best_obj = obj
                best = (S, zS)
    if best is None:
        raise InfeasibleError("no support of size <= s_max reproduces y")
    S, zS = best
    x = np.zeros(n, dtype=np.result_type(A.dtype, y.dtype))
    x[list(S)] = zS
    return x
