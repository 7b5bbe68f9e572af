import numpy as np
import pytest

from cswave.errors import PreconditionError
from cswave.fourier import cross_gramian, natural_to_signed
from cswave.sampling import (LevelScheme, dense_operator, draw_multilevel,
                             draw_symmetric, gaussian_operator, operator_norm,
                             scaling_weights, subsampled_gramian_operator,
                             two_level_operator)
from cswave.wavelets import daubechies


def scheme_64():
    return LevelScheme(N_levels=(2, 4, 8, 16, 32, 64), m_local=(2, 2, 4, 6, 8, 10),
                       saturation=3)


def test_scheme_validation():
    with pytest.raises(PreconditionError):
        LevelScheme(N_levels=(4, 2), m_local=(2, 2), saturation=0)
    with pytest.raises(PreconditionError):
        LevelScheme(N_levels=(2, 4), m_local=(1, 2), saturation=1)  # saturated short
    with pytest.raises(PreconditionError):
        LevelScheme(N_levels=(2, 4), m_local=(2, 3), saturation=1)  # m_k > size
    s = scheme_64()
    assert s.level_sizes() == (2, 2, 4, 8, 16, 32)
    assert s.total() == 32


def test_strict_mode_rejects_full_unsaturated_levels():
    s = LevelScheme(N_levels=(2, 4, 8), m_local=(2, 2, 4), saturation=2)
    with pytest.raises(PreconditionError):
        s.check_strict()
    draw_multilevel(s, 0)  # experiment mode accepts it
    with pytest.raises(PreconditionError):
        draw_multilevel(s, 0, mode="theory")


def test_saturated_levels_enumerated():
    pat = draw_multilevel(scheme_64(), seed=5)
    assert np.array_equal(pat.indices[:8], np.arange(1, 9))
    assert np.array_equal(pat.levels[:8], [1, 1, 2, 2, 3, 3, 3, 3])


def test_draw_determinism_and_level_independence():
    s = scheme_64()
    a = draw_multilevel(s, seed=42)
    b = draw_multilevel(s, seed=42)
    assert np.array_equal(a.indices, b.indices)
    c = draw_multilevel(s, seed=43)
    assert not np.array_equal(a.indices, c.indices)
    # each level's draw comes from its own substream: changing one level's
    # count leaves the other levels' draws untouched
    s2 = LevelScheme(N_levels=s.N_levels, m_local=(2, 2, 4, 4, 8, 10), saturation=3)
    d = draw_multilevel(s2, seed=42)
    assert np.array_equal(a.indices[a.levels == 5], d.indices[d.levels == 5])
    assert np.array_equal(a.indices[a.levels == 6], d.indices[d.levels == 6])


def test_draws_stay_in_band_with_replacement_kept():
    pat = draw_multilevel(scheme_64(), seed=0)
    bounds = (0,) + scheme_64().N_levels
    for k in range(1, 7):
        sel = pat.indices[pat.levels == k]
        assert np.all((sel > bounds[k - 1]) & (sel <= bounds[k]))
    # multiplicities recorded; every duplicate is kept as a repeated row
    assert sum(pat.multiplicities().values()) == len(pat.indices)


def test_symmetric_draw_pairs_mirrored_frequencies():
    s = scheme_64()
    pat = draw_symmetric(s, seed=9)
    for k in range(4, 7):
        signed = natural_to_signed(pat.indices[pat.levels == k])
        mirrored = sorted(1 - signed)
        assert sorted(signed) == mirrored


def test_symmetric_draw_needs_even_counts():
    s = LevelScheme(N_levels=(2, 4, 8), m_local=(2, 2, 3), saturation=2)
    with pytest.raises(PreconditionError):
        draw_symmetric(s, seed=0)


def test_pattern_rows_schema():
    pat = draw_multilevel(scheme_64(), seed=1)
    rows = pat.to_rows()
    assert len(rows) == len(pat.indices)
    lev, sf, nat, mult = rows[0]
    assert (lev, nat) == (1, 1) and sf == 0 and mult >= 1


def test_scaling_weights_values():
    s = scheme_64()
    d = scaling_weights(s)
    assert np.allclose(d[:8], 1.0)                       # saturated levels
    assert np.allclose(d[8:16], np.sqrt(8 / 6))
    assert np.allclose(d[32:64], np.sqrt(32 / 10))


def test_operator_norm_matches_svd():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((20, 30))
    op = dense_operator(A)
    assert abs(operator_norm(op) - np.linalg.svd(A, compute_uv=False)[0]) < 1e-8


def test_gaussian_operator_seeded_and_scaled():
    op = gaussian_operator(50, 200, seed=7)
    op2 = gaussian_operator(50, 200, seed=7)
    assert np.array_equal(op.matrix, op2.matrix)
    # variance 1/m normalization keeps columns near unit norm
    assert abs(np.mean(np.linalg.norm(op.matrix, axis=0)) - 1.0) < 0.1


def test_two_level_operator_adjoint_consistency():
    op = two_level_operator(8, 32, 12, seed=0)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(32)
    y = rng.standard_normal(8 + 12)
    assert abs(np.dot(op.apply(x), y) - np.dot(x, op.adjoint(y))) < 1e-12
    assert np.array_equal(op.apply(x)[:8], x[:8])


def test_subsampled_gramian_expectation():
    # E[A* A] over patterns approximates the Gram matrix of U
    spec = daubechies(1)
    U = cross_gramian(spec, 32, 32)
    s = LevelScheme(N_levels=(2, 4, 8, 16, 32), m_local=(2, 2, 4, 6, 8), saturation=3)
    gram_ref = U.entries.conj().T @ U.entries
    acc = np.zeros_like(gram_ref)
    trials = 300
    for t in range(trials):
        A = subsampled_gramian_operator(U, draw_multilevel(s, seed=t)).matrix
        acc += A.conj().T @ A
    acc /= trials
    assert np.max(np.abs(acc - gram_ref)) < 0.05


def test_subsampled_rows_scaled_copies():
    spec = daubechies(1)
    U = cross_gramian(spec, 16, 16)
    s = LevelScheme(N_levels=(2, 4, 8, 16), m_local=(2, 2, 4, 4), saturation=3)
    pat = draw_multilevel(s, seed=2)
    A = subsampled_gramian_operator(U, pat).matrix
    d = scaling_weights(s)
    for row, idx in zip(A, pat.indices):
        assert np.allclose(row, U.entries[idx - 1] * d[idx - 1])
