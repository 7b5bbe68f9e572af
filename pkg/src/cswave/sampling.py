"""Multilevel random subsampling and the measurement operators.

Patterns are multisets of natural frequency indices: levels up to the
saturation level are enumerated in full, higher levels are sampled i.i.d.
uniformly WITH replacement (duplicates kept as repeated rows, matching the
i.i.d. model).  The scaling matrix D compensates the nonuniform sampling
density so that E[A*A] recovers the truncated Gram matrix.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import PreconditionError
from .fourier import CrossGramian, natural_to_signed, signed_to_natural


@dataclass(frozen=True)
class LevelScheme:
    """Sampling-level geometry: band edges, local counts, saturation."""

    N_levels: tuple          # N_1 < ... < N_r
    m_local: tuple           # m_1 .. m_r
    saturation: int          # levels 1..saturation are fully sampled

    def __post_init__(self):
        N = tuple(int(v) for v in self.N_levels)
        m = tuple(int(v) for v in self.m_local)
        object.__setattr__(self, "N_levels", N)
        object.__setattr__(self, "m_local", m)
        if len(N) != len(m):
            raise PreconditionError("level counts and edges must align")
        if any(b <= a for a, b in zip((0,) + N, N)):
            raise PreconditionError("N_levels must be strictly increasing and positive")
        if not (0 <= self.saturation <= len(N)):
            raise PreconditionError("saturation out of range")
        for k, (mk, size) in enumerate(zip(m, self.level_sizes()), start=1):
            if k <= self.saturation:
                if mk != size:
                    raise PreconditionError(f"saturated level {k} must take all {size} indices")
            elif mk < 0 or mk > size:
                raise PreconditionError(f"level {k}: m_k={mk} outside [0, {size}]")

    @property
    def r(self):
        return len(self.N_levels)

    def level_sizes(self):
        prev = (0,) + self.N_levels[:-1]
        return tuple(b - a for a, b in zip(prev, self.N_levels))

    def total(self):
        return sum(self.m_local)

    def check_strict(self):
        """Theory mode: unsaturated levels must undersample strictly."""
        for k, (mk, size) in enumerate(zip(self.m_local, self.level_sizes()), start=1):
            if k > self.saturation and mk >= size:
                raise PreconditionError(
                    f"level {k}: m_k={mk} must be < level size {size} in theory mode")


@dataclass(frozen=True)
class SamplingPattern:
    """Drawn index multiset with level tags."""

    indices: np.ndarray      # natural indices, with multiplicity
    levels: np.ndarray       # level tag per entry
    scheme: LevelScheme
    seed: int

    def multiplicities(self):
        uniq, counts = np.unique(self.indices, return_counts=True)
        return dict(zip(uniq.tolist(), counts.tolist()))

    def to_rows(self):
        """(level, signed_frequency, natural_index, multiplicity) rows."""
        mult = self.multiplicities()
        out = []
        for lev, idx in zip(self.levels.tolist(), self.indices.tolist()):
            out.append((lev, int(natural_to_signed(idx)), idx, mult[idx]))
        return out


def _level_rng(seed, k):
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed) & (2 ** 64 - 1),
                                                        spawn_key=(k,)))


def draw_multilevel(scheme, seed, mode="experiment"):
    """Draw an (N, m)-multilevel pattern with saturation.

    Saturated levels contribute every index of their range once;
    unsaturated levels contribute m_k i.i.d. uniform draws (with
    replacement) from their range, sorted within the level.
    """
    if mode == "theory":
        scheme.check_strict()
    idx_parts, lev_parts = [], []
    prev = 0
    for k, Nk in enumerate(scheme.N_levels, start=1):
        mk = scheme.m_local[k - 1]
        if k <= scheme.saturation:
            chosen = np.arange(prev + 1, Nk + 1)
        elif mk > 0:
            rng = _level_rng(seed, k)
            chosen = np.sort(rng.integers(prev + 1, Nk + 1, size=mk))
        else:
            chosen = np.empty(0, dtype=int)
        idx_parts.append(chosen)
        lev_parts.append(np.full(len(chosen), k))
        prev = Nk
    return SamplingPattern(indices=np.concatenate(idx_parts).astype(int),
                           levels=np.concatenate(lev_parts).astype(int),
                           scheme=scheme, seed=int(seed))


def draw_symmetric(scheme, seed, mode="experiment"):
    """Multilevel draw with enforced +/- frequency symmetry.

    For unsaturated levels, m_k/2 signed frequencies are drawn uniformly
    from the positive half of the band and each is paired with its mirror
    1 - w in the negative half.  The positive-half integers come from the
    same per-level substream as draw_multilevel on the halved range.
    """
    if mode == "theory":
        scheme.check_strict()
    idx_parts, lev_parts = [], []
    prev = 0
    for k, Nk in enumerate(scheme.N_levels, start=1):
        mk = scheme.m_local[k - 1]
        if k <= scheme.saturation:
            chosen = np.arange(prev + 1, Nk + 1)
        elif mk > 0:
            if mk % 2:
                raise PreconditionError(f"level {k}: symmetric draw needs even m_k, got {mk}")
            rng = _level_rng(seed, k)
            pos = rng.integers(prev // 2 + 1, Nk // 2 + 1, size=mk // 2)
            neg = 1 - pos  # mirrored partners in the negative half of the band
            chosen = np.sort(np.concatenate([signed_to_natural(pos), signed_to_natural(neg)]))
        else:
            chosen = np.empty(0, dtype=int)
        idx_parts.append(chosen)
        lev_parts.append(np.full(len(chosen), k))
        prev = Nk
    return SamplingPattern(indices=np.concatenate(idx_parts).astype(int),
                           levels=np.concatenate(lev_parts).astype(int),
                           scheme=scheme, seed=int(seed))


def scaling_weights(scheme):
    """Diagonal of D: d_i = sqrt((N_k - N_{k-1})/m_k) on level k."""
    d = np.zeros(scheme.N_levels[-1])
    prev = 0
    for k, Nk in enumerate(scheme.N_levels, start=1):
        mk = scheme.m_local[k - 1]
        d[prev:Nk] = np.sqrt((Nk - prev) / mk) if mk > 0 else 0.0
        prev = Nk
    return d


@dataclass
class MeasurementOperator:
    """A linear map with adjoint and an operator-norm estimate.

    `matrix` is populated for the dense variants; apply/adjoint closures
    are always available and thread-safe.
    """

    variant: str
    shape: tuple
    apply: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    matrix: Optional[np.ndarray] = None
    _norm: Optional[float] = field(default=None, repr=False)

    @property
    def norm_estimate(self):
        if self._norm is None:
            self._norm = operator_norm(self)
        return self._norm


def operator_norm(op, iters=100):
    """Largest singular value by power iteration on A*A (fixed start)."""
    m, n = op.shape
    rng = np.random.default_rng(1234)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = op.adjoint(op.apply(v))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
    return float(np.linalg.norm(op.apply(v)))


def dense_operator(A, variant="GaussianDense"):
    A = np.asarray(A)
    return MeasurementOperator(
        variant=variant, shape=A.shape,
        apply=lambda x: A @ x,
        adjoint=lambda y: A.conj().T @ y,
        matrix=A)


def gaussian_operator(m, N, seed):
    """Dense i.i.d. N(0, 1/m) operator, deterministic under the seed."""
    if m < 1 or N < 1:
        raise PreconditionError("need m, N >= 1")
    rng = np.random.default_rng(int(seed) & (2 ** 64 - 1))
    A = rng.standard_normal((m, N)) / np.sqrt(m)
    return dense_operator(A, "GaussianDense")


def two_level_operator(N1, N2, m2, seed):
    """Identity on the first N1 coordinates over Gaussian on the rest."""
    if not (0 < N1 < N2) or m2 < 1:
        raise PreconditionError("need 0 < N1 < N2 and m2 >= 1")
    rng = np.random.default_rng(int(seed) & (2 ** 64 - 1))
    G = rng.standard_normal((m2, N2 - N1)) / np.sqrt(m2)

    def apply(x):
        return np.concatenate([x[:N1], G @ x[N1:]])

    def adjoint(y):
        return np.concatenate([y[:N1], G.conj().T @ y[N1:]])

    op = MeasurementOperator(variant="TwoLevelDirectPlusGaussian",
                             shape=(N1 + m2, N2), apply=apply, adjoint=adjoint)
    op.fine_block = G
    return op


def subsampled_gramian_operator(U, pattern, dedup=False):
    """A = P_Omega D U P_M: scaled Gramian rows selected with multiplicity."""
    if not isinstance(U, CrossGramian):
        raise PreconditionError("expected a CrossGramian")
    idx = pattern.indices
    if dedup:
        idx = np.unique(idx)
    if idx.max(initial=0) > U.N:
        raise PreconditionError("pattern index exceeds Gramian rows")
    d = scaling_weights(pattern.scheme)
    A = U.entries[idx - 1, :] * d[idx - 1][:, None]
    return dense_operator(A, "SubsampledScaledGramian")
