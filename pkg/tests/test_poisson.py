import numpy as np
import pytest

from qpde import oracle
from qpde.grid import GridSpec, flat_to_position, khat_nd
from qpde.poisson import (
    A_diagonal, PoissonInputError, PoissonProblem, band_limited_mask, build_poisson_1d_dft, build_poisson_ddim,
    build_poisson_smooth, poisson_oracle, solution_csv,
)
from qpde.sim import StateVector


def test_A_diagonal_matches_stencil_spectrum():
    n = 3
    assert np.allclose(np.sort(A_diagonal(n, 1)), np.sort(np.linalg.eigvalsh(oracle.second_difference_1d(8))))


def test_oracle_solves_mean_free_problem():
    g = GridSpec(2, 2)
    rng = np.random.default_rng(0)
    gv = rng.normal(size=16)
    sol, p = poisson_oracle(PoissonProblem(g), StateVector.from_amplitudes(gv))
    L = oracle.laplacian(g)
    f = flat_to_position(sol.amplitudes, 2, 2).reshape(-1) * np.sqrt(p) * np.linalg.norm(gv)
    graw = flat_to_position(gv / np.linalg.norm(gv), 2, 2).reshape(-1) * np.linalg.norm(gv)
    assert np.allclose(L @ f, graw - graw.mean(), atol=1e-10)


def test_zero_mode_input_rejected():
    with pytest.raises(PoissonInputError):
        poisson_oracle(PoissonProblem(GridSpec(1, 3)), StateVector.from_amplitudes(np.ones(8)))


def test_dft_block_is_pinv_in_wavenumber_space():
    n = 3
    be = build_poisson_1d_dft(PoissonProblem(GridSpec(1, n)))
    A = A_diagonal(n, 1)
    want = np.where(np.abs(A) > 1e-9, 1 / np.where(np.abs(A) > 1e-9, A, 1), 0)
    assert np.allclose(np.diag(be.block()), want, atol=1e-14)


@pytest.mark.parametrize("eps", [1e-1, 1e-2])
def test_ddim_relative_error(eps):
    inv = build_poisson_ddim(PoissonProblem(GridSpec(2, 2), eps))
    A = A_diagonal(2, 2)
    nz = np.abs(A) > 1e-9
    err = np.abs(inv.spectral_values()[nz] - 1 / A[nz]).max()
    assert err <= eps * (1 / np.abs(A[nz]).min())


def test_smooth_route_in_band():
    n, d, km = 4, 2, 2
    inv = build_poisson_smooth(PoissonProblem(GridSpec(d, n), 1e-3, kmax=km))
    k2 = sum(k**2 for k in khat_nd(n, d))
    mask = band_limited_mask(n, d, km) & (k2 > 0)
    want = -1 / (4 * np.pi**2 * k2[mask])
    assert np.abs(inv.spectral_values()[mask] - want).max() <= 1e-3 / (4 * np.pi**2)


def test_ddim_accounting():
    inv = build_poisson_ddim(PoissonProblem(GridSpec(2, 2), 1e-2))
    acc = inv.gate_accounting()
    assert acc["total_select_calls"] == acc["outer_terms"] * 2 * acc["per_dimension_select_calls"]


def test_problem_validation():
    with pytest.raises(ValueError):
        PoissonProblem(GridSpec(1, 3), epsilon=2.0)
    with pytest.raises(ValueError):
        PoissonProblem(GridSpec(1, 3), kmax=4)


def test_solution_csv_header():
    g = GridSpec(2, 1)
    text = solution_csv(g, np.arange(4) + 0j)
    assert text.splitlines()[0] == "x1,x2,re,im"
    assert len(text.splitlines()) == 5


@pytest.mark.parametrize("n,d", [(1, 1), (2, 1), (3, 1), (6, 1), (2, 2), (3, 2), (2, 3)])
def test_smallest_nonzero_eigenvalue_above_16(n, d):
    A = np.abs(A_diagonal(n, d))
    assert A[A > 1e-9].min() >= 16 - 1e-9
