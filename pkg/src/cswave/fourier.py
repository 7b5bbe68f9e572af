"""Fourier side of the machinery.

Fourier coefficients of piecewise-smooth functions by panel-split
Gauss-Legendre quadrature, the truncated Fourier-wavelet cross-Gramian U,
dyadic frequency bands, local block coherences and the balancing constant.

Frequency indexing: the complex exponentials e^{2*pi*i*n*x} are re-indexed
over the naturals as 1 <-> 0, 2 <-> +1, 3 <-> -1, 4 <-> +2, 5 <-> -2, ...
so truncating to the first N natural indices keeps the N lowest
frequencies.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import PreconditionError, UnsupportedOrderError
from .wavelets import WaveletSpec, idwt_array

GL_NODES = 32


def natural_to_signed(i):
    """Natural index (1-based) to signed integer frequency."""
    i = np.asarray(i)
    return np.where(i % 2 == 0, i // 2, -(i - 1) // 2)


def signed_to_natural(n):
    n = np.asarray(n)
    return np.where(n > 0, 2 * n, -2 * n + 1)


@dataclass(frozen=True)
class BandPartition:
    """Dyadic frequency bands B_1..B_r around zero."""

    j0: int
    r: int

    def band_signed(self, k):
        if not (1 <= k <= self.r):
            raise PreconditionError("band index out of range")
        if k == 1:
            return np.arange(-2 ** self.j0 + 1, 2 ** self.j0 + 1)
        lo, hi = 2 ** (self.j0 + k - 2), 2 ** (self.j0 + k - 1)
        pos = np.arange(lo + 1, hi + 1)
        neg = np.arange(-hi + 1, -lo + 1)
        return np.concatenate([neg, pos])

    def band_natural(self, k):
        return np.sort(signed_to_natural(self.band_signed(k)))

    def level_bounds(self):
        """N_k = 2^{j0+k} for k = 0..r (N_0 = 0)."""
        return np.array([0] + [2 ** (self.j0 + k) for k in range(1, self.r + 1)])


def dyadic_bands(j0, r):
    if r < 1:
        raise PreconditionError("need r >= 1")
    return BandPartition(j0=j0, r=r)


def _leggauss():
    return np.polynomial.legendre.leggauss(GL_NODES)


def fourier_coefficients(f, frequencies, extra_splits=()):
    """<f, gamma_n> = int_0^1 f(x) e^{-2 pi i n x} dx for each n.

    Panel-wise Gauss-Legendre with panels split at the breakpoints of f
    (plus any extra split points); each smooth piece is subdivided further
    so the oscillation per panel stays small enough for 32-node accuracy.
    """
    freqs = np.atleast_1d(np.asarray(frequencies, dtype=int))
    splits = np.unique(np.concatenate([[0.0, 1.0], np.asarray(f.breakpoints, dtype=float),
                                       np.asarray(extra_splits, dtype=float)]))
    nodes, weights = _leggauss()
    out = np.empty(len(freqs), dtype=complex)
    for idx, n in enumerate(freqs):
        xs = []
        ws = []
        for a, b in zip(splits[:-1], splits[1:]):
            panels = max(1, int(np.ceil(abs(n) * (b - a) / 3.0)))
            edges = np.linspace(a, b, panels + 1)
            mid = 0.5 * (edges[:-1] + edges[1:])
            half = 0.5 * (edges[1:] - edges[:-1])
            xs.append((mid[:, None] + half[:, None] * nodes[None, :]).ravel())
            ws.append((half[:, None] * weights[None, :]).ravel())
        x = np.concatenate(xs)
        w = np.concatenate(ws)
        out[idx] = np.sum(w * f(x) * np.exp(-2j * np.pi * n * x))
    return out


def _transfer(spec, omega):
    """H(w) = sum_k h_k e^{-i w k}."""
    om = np.asarray(omega, dtype=float)
    h = np.asarray(spec.h)
    k = np.arange(len(h))
    return np.exp(-1j * np.outer(om.ravel(), k)).dot(h).reshape(om.shape)


def scaling_fourier_transform(spec, omega, depth=64):
    """phi_hat(omega) by the cascade infinite product, truncated at `depth`."""
    om = np.asarray(omega, dtype=float)
    out = np.ones(om.shape, dtype=complex)
    cur = om.astype(float)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for _ in range(depth):
        cur = cur / 2.0
        out = out * (_transfer(spec, cur) * inv_sqrt2)
    return out


def haar_entry(j, k, n):
    """Exact <psi_{j,k}, gamma_n> for the Haar wavelet (+1 then -1).

    Closed form from psi_hat(w) = (1 - e^{-iw/2})^2 / (iw) together with
    the dilation rule 2^{-j/2} psi_hat(w / 2^j) e^{-i w k / 2^j}.
    """
    if n == 0:
        return 0.0 + 0.0j
    w = 2.0 * np.pi * n / 2 ** j
    psi_hat = (1.0 - np.exp(-0.5j * w)) ** 2 / (1j * w)
    return 2.0 ** (-j / 2) * psi_hat * np.exp(-1j * w * k)


def haar_gramian_oracle(N, M):
    """Dense Haar cross-Gramian from the closed form (independent oracle)."""
    U = np.zeros((N, M), dtype=complex)
    freqs = natural_to_signed(np.arange(1, N + 1))
    U[freqs == 0, 0] = 1.0  # constant column against the zero frequency
    col = 1
    j = 0
    while col < M:
        for k in range(2 ** j):
            for row, n in enumerate(freqs):
                U[row, col] = haar_entry(j, k, int(n))
            col += 1
            if col >= M:
                break
        j += 1
    return U


@dataclass(frozen=True)
class CrossGramian:
    """Truncated Fourier-wavelet matrix P_N U P_M with level metadata."""

    entries: np.ndarray
    spec: WaveletSpec
    oversample: int

    @property
    def N(self):
        return self.entries.shape[0]

    @property
    def M(self):
        return self.entries.shape[1]

    def n_levels(self):
        return int(np.log2(self.N)) - self.spec.j0

    def m_levels(self):
        return int(np.log2(self.M)) - self.spec.j0

    def sampling_bounds(self):
        return dyadic_bands(self.spec.j0, self.n_levels()).level_bounds()

    def sparsity_bounds(self):
        return dyadic_bands(self.spec.j0, self.m_levels()).level_bounds()


def _check_dim(n, j0, name):
    k = int(round(np.log2(n)))
    if 2 ** k != n or k < j0:
        raise PreconditionError(f"{name} must be a power of two >= 2^{j0}")
    return k


def cross_gramian(spec, N, M, oversample=16, chunk=128):
    """Assemble P_N U P_M for the given wavelet.

    Each wavelet basis function of the M-dimensional space lies exactly in
    the scaling space of the oversampled grid (L = oversample * max(N, M)
    points), so its Fourier coefficients follow from the inverse DWT of a
    canonical basis vector, an FFT, and the scaling function's Fourier
    transform at the grid scale.  Entries are accurate to roughly machine
    precision; truncation is the only approximation.
    """
    _check_dim(N, spec.j0, "N")
    _check_dim(M, spec.j0, "M")
    if oversample < 2 or oversample & (oversample - 1):
        raise PreconditionError("oversample must be a power of two >= 2")
    L = oversample * max(N, M)
    freqs = natural_to_signed(np.arange(1, N + 1)).astype(int)
    phi = scaling_fourier_transform(spec, 2.0 * np.pi * freqs / L)
    rows_mod = np.mod(freqs, L)
    U = np.empty((N, M), dtype=complex)
    for start in range(0, M, chunk):
        stop = min(start + chunk, M)
        E = np.zeros((L, stop - start))
        E[np.arange(start, stop), np.arange(stop - start)] = 1.0
        fine = idwt_array(E, spec)
        F = np.fft.fft(fine, axis=0)
        U[:, start:stop] = (phi / np.sqrt(L))[:, None] * F[rows_mod, :]
    return CrossGramian(entries=U, spec=spec, oversample=oversample)


def local_coherence(U, k, l):
    """mu of the (sampling band k, wavelet level l) block of U.

    Defined as (N_k - N_{k-1}) times the largest squared entry magnitude of
    the block.
    """
    Nb = U.sampling_bounds()
    Mb = U.sparsity_bounds()
    if not (1 <= k <= len(Nb) - 1):
        raise PreconditionError("sampling level out of range")
    if not (1 <= l <= len(Mb) - 1):
        raise PreconditionError("wavelet level out of range")
    block = U.entries[Nb[k - 1]:Nb[k], Mb[l - 1]:Mb[l]]
    return float((Nb[k] - Nb[k - 1]) * np.max(np.abs(block) ** 2))


def coherence_table(U):
    """All (k, l, mu) triples for the blocks of U."""
    rows = []
    for k in range(1, U.n_levels() + 1):
        for l in range(1, U.m_levels() + 1):
            rows.append((k, l, local_coherence(U, k, l)))
    return rows


def balancing_constant(U, N=None, M=None):
    """theta = smallest eigenvalue of P_M U* P_N U P_M.

    Equals 1 - ||P_M U* P_N U P_M - I|| because the Gram eigenvalues lie in
    [0, 1]; computed by a symmetric eigensolve.
    """
    N = U.N if N is None else N
    M = U.M if M is None else M
    if M > N:
        raise PreconditionError("balancing requires M <= N")
    if N > U.N or M > U.M:
        raise PreconditionError("requested truncation exceeds the stored matrix")
    sub = U.entries[:N, :M]
    gram = sub.conj().T @ sub
    evals = np.linalg.eigvalsh(gram)
    return float(evals[0])


@lru_cache(maxsize=None)
def _estimate_q_cached(p):
    from .wavelets import daubechies

    spec = daubechies(p)
    if p == 1:
        spec = WaveletSpec(spec.p, spec.j0, spec.h, None)
    ts = np.arange(2, 16)
    env = np.empty(len(ts))
    for i, t in enumerate(ts):
        om = np.geomspace(2.0 ** t, 2.0 ** (t + 1), 64, endpoint=False)
        env[i] = np.max(np.abs(scaling_fourier_transform(spec, om)))
    x = (ts + 0.5) * np.log(2.0)
    slope = np.polyfit(x, np.log(env), 1)[0]
    return max(0.0, -slope - 1.0)


def estimate_smoothness_q(spec):
    """Fourier-decay exponent q of |phi_hat| by a log-log envelope fit.

    |phi_hat| oscillates within each octave, so the fit uses the per-octave
    maximum over dyadic blocks [2^t, 2^{t+1}) up to 2^16; the reported
    value is -slope - 1 clamped to >= 0.
    """
    if spec.p > 10:
        raise UnsupportedOrderError("q estimation supported for p <= 10")
    return float(_estimate_q_cached(spec.p))
