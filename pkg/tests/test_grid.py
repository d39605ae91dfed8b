import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpde.grid import (
    GridSpec, bitrev_perm, build_approx_qft, build_shifted_qft, flat_to_position, from_fourier,
    khat_diagonal, khat_nd, position_to_flat, qft_matrix_flat, tensor_qft_d, to_fourier,
)
from qpde.sim import circuit_unitary, phase_fit


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_bitrev_is_involution(n):
    p = bitrev_perm(n)
    assert np.array_equal(p[p], np.arange(2**n))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(1, 2), st.integers(0, 2**31 - 1))
def test_position_adapters_roundtrip(n, d, seed):
    f = np.random.default_rng(seed).normal(size=(2**n,) * d)
    assert np.allclose(flat_to_position(position_to_flat(f, n, d), n, d), f)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(1, 2), st.integers(0, 2**31 - 1))
def test_fourier_roundtrip_and_unitarity(n, d, seed):
    if n * d > 6:
        return
    rng = np.random.default_rng(seed)
    a = rng.normal(size=2 ** (n * d)) + 1j * rng.normal(size=2 ** (n * d))
    k = to_fourier(a, n, d)
    assert np.linalg.norm(k) == pytest.approx(np.linalg.norm(a))
    assert np.allclose(from_fourier(k, n, d), a)


def test_khat_range():
    assert np.array_equal(khat_diagonal(3), np.arange(8) - 4)


def test_plane_wave_lands_on_its_wavenumber():
    n, N = 4, 16
    g = GridSpec(1, n)
    x = g.positions()
    for k in (-8, -3, 0, 5):
        f = position_to_flat(np.exp(2j * np.pi * k * (x - x.mean()) / (x[1] - x[0]) / N), n)
        spec = np.abs(to_fourier(f, n)) ** 2
        assert spec[k + N // 2] == pytest.approx(np.sum(spec))


def test_circuit_matches_matrix():
    for n in (1, 2, 3, 4):
        dev, _ = phase_fit(circuit_unitary(build_shifted_qft(n)), qft_matrix_flat(n))
        assert dev < 1e-12


def test_approx_qft_exact_at_zero_threshold():
    c = build_approx_qft(4, angle_threshold=0.0)
    c = c[0] if isinstance(c, tuple) else c
    dev, _ = phase_fit(circuit_unitary(c), qft_matrix_flat(4))
    assert dev < 1e-12


def test_tensor_qft_is_kron():
    u = circuit_unitary(tensor_qft_d(GridSpec(2, 2)))
    one = circuit_unitary(build_shifted_qft(2))
    dev, _ = phase_fit(u, np.kron(one, one))
    assert dev < 1e-12


def test_khat_nd_shapes():
    ks = khat_nd(2, 3)
    assert len(ks) == 3 and all(k.size == 64 for k in ks)
    assert ks[0][16] == -1 and ks[2][1] == -1


def test_grid_rejects_bad_convention():
    with pytest.raises(ValueError):
        GridSpec(1, 3, "weird")


@pytest.mark.parametrize("kind", ["dirichlet", "neumann"])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_boundary_circuit_reflects(kind, n):
    from qpde.grid import boundary_extension, reflect_extend
    from qpde.sim import StateVector

    N = 2**n
    f = np.random.default_rng(n).normal(size=N)
    _, out = boundary_extension(StateVector.from_amplitudes(f, normalize=False), kind)
    # the new qubit is the top position bit, appended after the data qubits
    ell = np.arange(2 * N)
    idx = (ell % N) * 2 + (ell >> n)
    assert np.allclose(out.amplitudes[idx], reflect_extend(f, kind))
