"""Periodized Daubechies wavelets on [0,1].

Provides the filter construction (spectral factorization, minimal phase),
the periodic discrete wavelet transform and its inverse, projection of a
function onto a wavelet space without the "wavelet crime" (oversampled
sampling followed by a fine-scale transform), and the linear / best s-term
approximation errors.

Coefficient ordering convention: for a vector of length 2^{j0+r}, entries
1..2^{j0} are the scaling coefficients at the coarsest scale j0 and entries
2^j+1..2^{j+1} are the wavelet coefficients at scale j, for
j = j0, ..., j0+r-1.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import PreconditionError, UnsupportedOrderError

MAX_ORDER = 10


def coarsest_scale(p):
    """Coarsest scale j0 at which a length-2p filter periodizes cleanly.

    j0 = 0 for the Haar case p = 1, otherwise ceil(log2(2p)).
    """
    if p < 1:
        raise PreconditionError("vanishing moments p must be >= 1")
    if p == 1:
        return 0
    return int(np.ceil(np.log2(2 * p)))


@lru_cache(maxsize=None)
def daubechies_filter(p):
    """Minimal-phase Daubechies low-pass filter with p vanishing moments.

    Returns a tuple of 2p taps normalized so they sum to sqrt(2).  Built by
    spectral factorization: the half-band polynomial
    P(y) = sum_{k<p} C(p-1+k, k) y^k is factored over the roots of the
    quadratic y -> z map, keeping the roots inside the unit circle.  The
    root finding runs in 50-digit arithmetic so the float taps are accurate
    to machine precision for every supported order.
    """
    if not (1 <= p <= MAX_ORDER):
        raise UnsupportedOrderError(f"p={p} outside supported range 1..{MAX_ORDER}")
    if p == 1:
        s = 1.0 / np.sqrt(2.0)
        return (s, s)

    import mpmath as mp

    with mp.workdps(50):
        # P(y), highest degree first for polyroots.
        coeffs = [mp.binomial(p - 1 + k, k) for k in range(p)][::-1]
        yroots = mp.polyroots(coeffs, maxsteps=200, extraprec=100)
        zroots = []
        for y in yroots:
            # y = (2 - z - 1/z)/4  <=>  z^2 + (4y - 2) z + 1 = 0
            b = 4 * y - 2
            disc = mp.sqrt(b * b - 4)
            z1 = (-b + disc) / 2
            z2 = (-b - disc) / 2
            zroots.append(z1 if abs(z1) < 1 else z2)
        # H(z) = c (1+z)^p prod (z - z_i); expand then reverse so the large
        # taps sit at the front (extremal-phase convention).
        poly = [mp.mpc(1)]
        for _ in range(p):
            poly = _polymul(poly, [mp.mpc(1), mp.mpc(1)])
        for z0 in zroots:
            poly = _polymul(poly, [-z0, mp.mpc(1)])
        total = sum(poly)
        c = mp.sqrt(2) / total
        taps = [mp.re(c * a) for a in reversed(poly)]
        return tuple(float(t) for t in taps)


def _polymul(a, b):
    out = [a[0] * 0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


@dataclass(frozen=True)
class WaveletSpec:
    """Filter bank plus the derived constants used throughout.

    q is the Fourier-decay exponent |phi_hat(w)| <~ (1+|w|)^{-1-q}; it is 0
    for Haar and estimated numerically for higher orders (see
    fourier.estimate_smoothness_q).  A spec may carry q=None when the value
    has not been needed yet.
    """

    p: int
    j0: int
    h: tuple
    q: Optional[float] = None

    def with_q(self, q):
        return WaveletSpec(self.p, self.j0, self.h, q)


def daubechies(p, q=None):
    """Build the WaveletSpec for the order-p Daubechies wavelet."""
    if q is None and p == 1:
        q = 0.0
    return WaveletSpec(p=p, j0=coarsest_scale(p), h=daubechies_filter(p), q=q)


@dataclass(frozen=True)
class CoefficientVector:
    """Wavelet coefficients in the canonical dyadic ordering."""

    values: np.ndarray
    j0: int
    r: int

    def __post_init__(self):
        if len(self.values) != 2 ** (self.j0 + self.r):
            raise PreconditionError("coefficient length inconsistent with (j0, r)")

    def scaling_part(self):
        return self.values[: 2 ** self.j0]

    def wavelet_scale(self, j):
        if not (self.j0 <= j < self.j0 + self.r):
            raise PreconditionError(f"scale {j} not represented")
        return self.values[2 ** j : 2 ** (j + 1)]


def _high_pass(h):
    # g2[j] = (-1)^j h[2p-1-j]; the detail channel at output n reads the
    # input at positions 2n - (2p-2) + j (circularly).
    h = np.asarray(h)
    g = h[::-1].copy()
    g[1::2] *= -1.0
    return g


def _analysis_step(a, h, g):
    L = a.shape[0]
    nt = len(h)
    shift = nt - 2
    ext_lo = np.concatenate([a, a[:nt]], axis=0)
    ext_hi = np.concatenate([a[L - shift :], a, a[:2]], axis=0) if shift else np.concatenate([a, a[:2]], axis=0)
    low = np.zeros_like(a[: L // 2])
    high = np.zeros_like(low)
    for k in range(nt):
        low += h[k] * ext_lo[k : k + L : 2]
        high += g[k] * ext_hi[k : k + L : 2]
    return low, high


def _synthesis_step(low, high, h, g):
    half = low.shape[0]
    L = 2 * half
    nt = len(h)
    shift = nt - 2
    n2 = 2 * np.arange(half)
    out_shape = (L,) + low.shape[1:]
    acc = np.zeros(out_shape, dtype=low.dtype)
    for k in range(nt):
        acc[(n2 + k) % L] += h[k] * low
        acc[(n2 - shift + k) % L] += g[k] * high
    return acc


def dwt_array(samples, spec):
    """Periodic DWT of an array (transform along axis 0, length 2^J).

    The input is interpreted as scale-J scaling coefficients; the output is
    the full coefficient array in canonical order.  Batched columns are
    transformed independently.
    """
    a = np.asarray(samples)
    L = a.shape[0]
    J = _check_dyadic(L, spec)
    h = np.asarray(spec.h)
    g = _high_pass(h)
    pieces = []
    for _ in range(J - spec.j0):
        a, d = _analysis_step(a, h, g)
        pieces.append(d)
    pieces.append(a)
    return np.concatenate(pieces[::-1], axis=0)


def idwt_array(coeffs, spec):
    """Inverse of dwt_array (exact up to rounding)."""
    c = np.asarray(coeffs)
    L = c.shape[0]
    J = _check_dyadic(L, spec)
    h = np.asarray(spec.h)
    g = _high_pass(h)
    a = c[: 2 ** spec.j0]
    for j in range(spec.j0, J):
        a = _synthesis_step(a, c[2 ** j : 2 ** (j + 1)], h, g)
    return a


def _check_dyadic(L, spec):
    J = int(round(np.log2(L)))
    if 2 ** J != L:
        raise PreconditionError(f"length {L} is not a power of two")
    if J < spec.j0:
        raise PreconditionError(f"length 2^{J} below coarsest scale 2^{spec.j0}")
    return J


def periodized_dwt(samples, spec):
    samples = np.asarray(samples)
    if samples.ndim != 1:
        raise PreconditionError("expected a 1-D sample vector")
    out = dwt_array(samples, spec)
    J = int(round(np.log2(len(samples))))
    return CoefficientVector(values=out, j0=spec.j0, r=J - spec.j0)


def periodized_idwt(coeffs, spec):
    if isinstance(coeffs, CoefficientVector):
        if coeffs.j0 != spec.j0:
            raise PreconditionError("coefficient j0 does not match the wavelet")
        vals = coeffs.values
    else:
        vals = np.asarray(coeffs)
    return idwt_array(vals, spec)


@dataclass(frozen=True)
class PiecewiseFunction:
    """A piecewise-smooth function on [0,1].

    evaluator must accept numpy arrays.  breakpoints lists the interior
    discontinuities in increasing order; alpha is a smoothness label used
    by the recipes and norm_estimate a rough sup-norm bound.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    breakpoints: tuple = ()
    alpha: float = 1.0
    norm_estimate: float = 1.0

    def __post_init__(self):
        bs = tuple(self.breakpoints)
        if any(not (0.0 < b < 1.0) for b in bs):
            raise PreconditionError("breakpoints must lie in (0,1)")
        if any(b2 <= b1 for b1, b2 in zip(bs, bs[1:])):
            raise PreconditionError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bs)

    def __call__(self, x):
        return self.evaluator(np.asarray(x, dtype=float))

    def piece_count(self):
        return len(self.breakpoints) + 1


def function_to_coefficients(f, spec, J, oversample=16):
    """Wavelet coefficients of f up to scale J without the wavelet crime.

    Samples f at the midpoints of an oversample*2^J uniform grid, scales by
    the quadrature weight, runs the periodic DWT on the fine grid and keeps
    the first 2^J entries of the ordered coefficient vector.
    """
    if oversample < 2 or oversample & (oversample - 1):
        raise PreconditionError("oversample must be a power of two >= 2")
    L = oversample * 2 ** J
    x = (np.arange(L) + 0.5) / L
    vals = np.asarray(f(x), dtype=float) / np.sqrt(L)
    fine = dwt_array(vals, spec)
    return CoefficientVector(values=fine[: 2 ** J], j0=spec.j0, r=J - spec.j0)


def _values(d):
    return d.values if isinstance(d, CoefficientVector) else np.asarray(d)


def linear_error(d, s):
    """l2 norm of the tail after the first s coefficients."""
    v = _values(d)
    if not (1 <= s <= len(v)):
        raise PreconditionError("s out of range")
    return float(np.linalg.norm(v[s:]))


def best_s_term_error(d, s):
    """l2 norm of everything but the s largest-magnitude coefficients.

    Ties keep the smaller index (stable sort), so results are deterministic.
    """
    v = _values(d)
    if not (1 <= s <= len(v)):
        raise PreconditionError("s out of range")
    order = np.argsort(-np.abs(v), kind="stable")
    return float(np.linalg.norm(v[order[s:]]))


@dataclass(frozen=True)
class DecayProfile:
    scales: np.ndarray
    hit_max: np.ndarray   # supports touching a breakpoint of the periodic extension
    miss_max: np.ndarray  # supports away from every breakpoint (nan if empty)


def _extension_breakpoints(f, tol=1e-6):
    pts = list(f.breakpoints)
    eps = 1e-12
    left = float(np.asarray(f(np.array([1.0 - eps])))[0])
    right = float(np.asarray(f(np.array([eps])))[0])
    if abs(left - right) > tol * (1.0 + abs(f.norm_estimate)):
        pts.append(0.0)
    return pts


def decay_profile(d, f, spec):
    """Per-scale max |coefficient|, split by breakpoint proximity.

    The wavelet at scale j, shift n is supported on
    [(n-p+1)/2^j, (n+p)/2^j]; a coefficient is classed as a "hit" when that
    interval (taken modulo 1) contains a discontinuity of the periodic
    extension of f, which includes the endpoint 0 whenever f(0+) != f(1-).
    """
    if not isinstance(d, CoefficientVector):
        raise PreconditionError("decay_profile needs a CoefficientVector")
    p = spec.p
    bps = _extension_breakpoints(f)
    scales = np.arange(d.j0, d.j0 + d.r)
    hit_max = np.full(len(scales), np.nan)
    miss_max = np.full(len(scales), np.nan)
    for i, j in enumerate(scales):
        coeffs = d.wavelet_scale(j)
        n = np.arange(len(coeffs))
        lo = (n - p + 1) / 2 ** j
        hi = (n + p) / 2 ** j
        hit = np.zeros(len(coeffs), dtype=bool)
        for b in bps:
            # does b + k fall in [lo, hi] for some integer k?
            k0 = np.floor(lo - b)
            for dk in (0.0, 1.0, 2.0):
                bb = b + k0 + dk
                hit |= (lo <= bb) & (bb <= hi)
        for mask, out in ((hit, hit_max), (~hit, miss_max)):
            if mask.any():
                out[i] = np.max(np.abs(coeffs[mask]))
    return DecayProfile(scales=scales, hit_max=hit_max, miss_max=miss_max)
