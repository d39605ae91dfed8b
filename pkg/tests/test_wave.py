import math

import numpy as np
import pytest
import scipy.linalg

from qpde import oracle
from qpde import wave as W
from qpde.grid import GridSpec, khat_diagonal, position_to_flat
from qpde.sim import circuit_unitary, run_circuit, StateVector


@pytest.mark.parametrize("d", range(1, 7))
def test_gamma_weights_within_bound(d):
    g = W.gamma_ternary_tree(d)
    assert len(g.strings) == d
    assert g.max_weight <= g.weight_bound
    assert g.num_qubits == W.gamma_qubits(d)


def test_sqrt_laplacian_squares_to_stencil():
    for n in (1, 2, 3):
        O = W.sqrt_laplacian_1d(n)
        L = W.to_register_basis(oracle.second_difference_1d(2**n), n, 1)
        assert np.allclose(O.conj().T @ O, -L) or np.allclose(O @ O.conj().T, -L)


def test_hamiltonian_is_hermitian():
    h = W.wave_hamiltonian(2, 2, 0.9)
    assert np.allclose(h.matrix, h.matrix.conj().T)


def _mean_free(rng, M):
    x = rng.normal(size=M)
    return x - x.mean()


@pytest.mark.parametrize("variant", ["A", "B"])
def test_encode_decode_roundtrip(variant):
    rng = np.random.default_rng(7)
    h = W.wave_hamiltonian(2, 2)
    f, df = _mean_free(rng, 16), _mean_free(rng, 16)
    enc = W.encode_initial(variant, 0, f, df, h)
    fr, dfr = W.decode(h, variant, 0, enc.state.amplitudes, enc.norm)
    assert np.allclose(fr, f) and np.allclose(dfr, df)


def test_variant_b_rejects_kernel_mass():
    h = W.wave_hamiltonian(1, 2)
    with pytest.raises(W.WaveInputError):
        W.encode_initial("B", 0, np.ones(4), np.ones(4), h)


@pytest.mark.parametrize("variant", ["A", "B"])
def test_state_prep_circuit_prepares_encoding(variant):
    rng = np.random.default_rng(8)
    h = W.wave_hamiltonian(1, 2)
    f, df = _mean_free(rng, 4), _mean_free(rng, 4)
    c = W.state_prep_circuit(variant, 0, f, df, h)
    out = run_circuit(c, StateVector.basis(c.num_qubits, 0)).amplitudes
    sys = out[: 2 ** c.num_system_qubits]  # both ancillas on 0
    want = W.encode_initial(variant, 0, f, df, h).state.amplitudes
    ov = abs(np.vdot(want, sys)) / np.linalg.norm(sys)
    assert ov == pytest.approx(1.0, abs=1e-10)


def test_1d_ja_matches_dft_route():
    n, t = 3, 0.07
    ja = W.build_wave_1d_ja(n, t, 1e-11)
    dft = W.build_wave_1d_dft(n, t)
    assert np.allclose(ja.block(), dft.block(), atol=1e-10)


def test_smooth_1d_is_exact():
    n, t = 3, 0.2
    c = W.build_wave_smooth(1, n, t)
    want = scipy.linalg.expm(-2j * np.pi * t * W.smooth_wave_generator(1, n))
    assert np.allclose(circuit_unitary(c), want, atol=1e-12)


def test_trotter_error_shrinks_with_tau():
    n, kmax, t = 2, 1, 0.3
    E = scipy.linalg.expm(-2j * np.pi * t * W.smooth_wave_generator(2, n))
    cols = W.band_limited_columns(2, n, kmax)
    errs = []
    for tau in (0.1, 0.05, 0.025):
        U = circuit_unitary(W.build_wave_smooth(2, n, t, tau))
        errs.append(np.linalg.norm((U - E)[:, cols], 2))
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] == pytest.approx(2, rel=0.15)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_shift_angle_branches(d):
    phi, m, uniform = W.shift_angle(d)
    assert 0 <= phi <= math.pi
    assert 2**m >= 2 * d


def test_census_table():
    cs = [W.wave_gate_census(d, 2) for d in (2, 3)]
    text = W.census_csv(cs)
    assert text.splitlines()[0] == "d,n,row,count,expected,controls,max_weight,cnots"
    assert len(text.splitlines()) == 1 + 3 * 2
