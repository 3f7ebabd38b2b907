import numpy as np
import pytest

import heig


def test_solve_toeplitz_against_numpy():
    a = heig.named_matrix("toeplitz121", 192)
    sol = heig.solve(a, n_stop=48, leaf_size=24, seed=7)
    ref = np.linalg.eigvalsh(a)
    assert np.max(np.abs(sol.eigenvalues - ref)) < 1e-8
    analytic = heig.toeplitz121_eigenvalues(192)
    assert np.max(np.abs(sol.eigenvalues - analytic)) < 1e-8


def test_solution_apply_roundtrip_and_residual():
    a = heig.named_matrix("clement", 128)
    sol = heig.solve(a, n_stop=32, leaf_size=16, seed=3)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(128)
    w = sol.apply(sol.apply_transpose(v))
    assert np.linalg.norm(w - v) < 1e-9 * np.linalg.norm(v)

    q = sol.materialize()
    norm_a = np.max(np.abs(sol.eigenvalues))
    resid = a @ q - q @ np.diag(sol.eigenvalues)
    assert np.linalg.norm(resid, 2) / norm_a < 1e-7
    assert sol.q_memory_units > 0
    assert len(sol.diagnostics) >= 1


def test_solve_is_deterministic():
    eigs = heig.gap_spectrum(96, 1e-2, n_stop=24, seed=5)
    a = heig.banded_from_spectrum(eigs, 2, seed=6)
    s1 = heig.solve(a, n_stop=24, leaf_size=12, seed=11)
    s2 = heig.solve(a, n_stop=24, leaf_size=12, seed=11)
    assert np.array_equal(s1.eigenvalues, s2.eigenvalues)
    assert np.max(np.abs(np.sort(eigs) - s1.eigenvalues)) < 1e-7


def test_hodlr_roundtrip_and_arithmetic():
    rng = np.random.default_rng(1)
    m = rng.standard_normal((64, 64))
    h = heig.Hodlr.from_dense(m, leaf_size=8, epsilon=1e-10)
    assert h.shape == (64, 64)
    assert np.linalg.norm(h.to_dense() - m, 2) < 1e-8

    v = rng.standard_normal(64)
    assert np.linalg.norm(h.matvec(v) - m @ v) < 1e-10 * np.linalg.norm(m @ v)

    p = h.multiply(h)
    assert np.linalg.norm(p.to_dense() - m @ m, 2) < 1e-7


def test_banded_builder_is_exact():
    a = heig.named_matrix("toeplitz121", 64)
    h = heig.Hodlr.from_banded(a, leaf_size=8)
    assert h.rank() <= 1
    assert np.array_equal(h.to_dense(), a)


def test_spectral_projector():
    eigs = heig.gap_spectrum(64, 1e-1, n_stop=16, seed=9)
    a = heig.banded_from_spectrum(eigs, 1, seed=10)
    pi, nu, iters = heig.spectral_projector(a, shift=0.0)
    assert nu == int(np.sum(np.linalg.eigvalsh(a) < 0.0))
    assert np.linalg.norm(pi @ pi - pi, 2) < 1e-7
    assert iters >= 1


def test_gap_spectrum_domain_error():
    with pytest.raises(Exception):
        heig.gap_spectrum(16, 1.5, n_stop=4, seed=1)
