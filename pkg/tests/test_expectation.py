import numpy as np
import pytest

from qpde.advection import AdvectionProblem, build_advection_ja
from qpde.expectation import (
    ExpectationPlan, ObservableError, direct_expectation, expectation_via_terms, lcu_solution_state, solution_state,
    z_observable,
)
from qpde.grid import GridSpec, khat_diagonal


def _f0(seed, N=8):
    rng = np.random.default_rng(seed)
    return rng.normal(size=N) + 1j * rng.normal(size=N)


def test_identity_observable_gives_norm():
    n = 3
    f0 = _f0(0)
    be = build_advection_ja(AdvectionProblem(GridSpec(1, n), [1.0], 0.1, 1e-10))[0]
    plan = ExpectationPlan.from_series(be.extra["series"], np.eye(8))
    h = 2 * np.pi * khat_diagonal(n) / 8
    val = expectation_via_terms(plan, f0, h, n)
    f = solution_state(plan, f0, h, n)
    assert val.real == pytest.approx(np.vdot(f, f).real)


def test_polynomial_plan():
    n = 2
    f0 = _f0(1, 4)
    h = np.array([0.1, -0.2, 0.3, 0.4])
    B = z_observable(n, 1)
    plan = ExpectationPlan.polynomial([1.0, 0.5, -0.25], B)
    val, C = expectation_via_terms(plan, f0, h, n, return_terms=True)
    assert np.allclose(C, C.conj().T)
    assert val.real == pytest.approx(direct_expectation(solution_state(plan, f0, h, n), B))


def test_lcu_state_matches_series_state():
    n = 3
    f0 = _f0(2)
    be = build_advection_ja(AdvectionProblem(GridSpec(1, n), [1.0], 0.2, 1e-10))[0]
    plan = ExpectationPlan.from_series(be.extra["series"], np.eye(8))
    h = 2 * np.pi * khat_diagonal(n) / 8
    assert np.allclose(lcu_solution_state(be, f0, n), solution_state(plan, f0, h, n), atol=1e-12)


def test_non_hermitian_rejected():
    with pytest.raises(ObservableError):
        ExpectationPlan.polynomial([1.0], np.array([[0, 1], [0, 0]]))


def test_size_mismatch_rejected():
    plan = ExpectationPlan.polynomial([1.0], np.eye(4))
    with pytest.raises(ObservableError):
        expectation_via_terms(plan, _f0(3), np.zeros(8), 3)


def test_z_observable():
    assert np.allclose(np.diag(z_observable(2, 0)), [1, 1, -1, -1])
