import numpy as np
import pytest

from qpde import oracle
from qpde.grid import GridSpec


@pytest.mark.parametrize("N", [2, 4, 8, 16])
def test_stencils_are_circulant_and_real(N):
    for m in (oracle.central_difference_1d(N), oracle.second_difference_1d(N), oracle.forward_difference_1d(N)):
        assert np.allclose(m, np.roll(np.roll(m, 1, 0), 1, 1))
        assert np.allclose(m.sum(axis=1), 0)


def test_laplacian_2d_is_kron_sum():
    g = GridSpec(2, 2)
    L1 = oracle.second_difference_1d(4)
    assert np.allclose(oracle.laplacian(g), np.kron(L1, np.eye(4)) + np.kron(np.eye(4), L1))


def test_pinv_kills_constant_mode():
    L = oracle.second_difference_1d(8)
    P = oracle.dense_pinv(L)
    assert np.allclose(P @ np.ones(8), 0)
    assert np.allclose(L @ P @ L, L)


def test_fft_evolve_matches_expm():
    g = GridSpec(1, 4)
    rng = np.random.default_rng(1)
    f = rng.normal(size=16)
    t = 0.003
    want = oracle.dense_expm(oracle.second_difference_1d(16), t) @ f
    assert np.allclose(oracle.fft_evolve(oracle.heat_diagonal(g, 1.0, t), f, g), want)


def test_advection_oracle_matches_expm():
    g = GridSpec(1, 3)
    f = np.random.default_rng(2).normal(size=8)
    want = oracle.dense_expm(-0.7 * oracle.central_difference_1d(8), 0.05) @ f
    assert np.allclose(oracle.fft_evolve(oracle.advection_diagonal(g, [0.7], 0.05), f, g), want)


def test_wave_second_order_identity_at_zero_time():
    g = GridSpec(1, 4)
    rng = np.random.default_rng(3)
    f, df = rng.normal(size=16), np.zeros(16)
    f0, _ = oracle.wave_second_order(g, 1.0, f, df, 0.0)
    assert np.allclose(f0, f)
