import math

import numpy as np
import pytest

from qpde.grid import GridSpec, from_fourier, khat_diagonal, to_fourier
from qpde.heat import (
    HeatProblem, build_heat_dft, build_heat_gaussian_ja, build_heat_smooth_gaussian, build_heat_smooth_pauli,
    heat_kernel_1d, heat_oracle, heat_p_bounds, parallel_schedule, run_smooth_pauli, smooth_pauli_terms,
)
from qpde.advection import run_in_fourier
from qpde.sim import StateVector


def test_parallel_schedule_depths():
    assert [len(parallel_schedule(n)) for n in range(2, 13)] == [2, 4, 5, 7, 8, 10, 11, 13, 14, 16, 17]


@pytest.mark.parametrize("n", [3, 5, 8])
def test_schedule_steps_are_disjoint_and_complete(n):
    terms = smooth_pauli_terms(n, 1.0, 1.0)
    seen = []
    for step in parallel_schedule(n):
        qs = [q for i in step for q in terms[i][1]]
        assert len(qs) == len(set(qs)) or all(len(terms[i][1]) == 1 for i in step)
        seen += step
    assert sorted(seen) == list(range(len(terms)))


def test_smooth_pauli_reproduces_gaussian_kernel():
    n, t = 3, 1e-3
    g = GridSpec(1, n)
    plan = build_heat_smooth_pauli(HeatProblem(g, 1.0, t))
    rng = np.random.default_rng(0)
    s = StateVector.from_amplitudes(rng.normal(size=8) + 0j)
    out, p = run_smooth_pauli(plan, s, n, 1)
    blocks_scale = math.prod(b.scale for b in plan.blocks)
    got = out.amplitudes * math.sqrt(p) * blocks_scale * plan.prefactor
    want = from_fourier(np.exp(-4 * math.pi**2 * t * khat_diagonal(n) ** 2) * to_fourier(s.amplitudes, n), n)
    assert np.allclose(got, want, atol=1e-12)


def test_sequential_layout_same_output():
    g = GridSpec(2, 2)
    s = StateVector.from_amplitudes(np.arange(16) + 1.0j)
    a = run_smooth_pauli(build_heat_smooth_pauli(HeatProblem(g, 1.0, 1e-3), "parallel"), s, 2, 2)
    b = run_smooth_pauli(build_heat_smooth_pauli(HeatProblem(g, 1.0, 1e-3), "sequential"), s, 2, 2)
    assert np.allclose(a[0].amplitudes, b[0].amplitudes) and a[1] == pytest.approx(b[1])


def test_dft_route_matches_oracle():
    g = GridSpec(2, 2)
    prob = HeatProblem(g, 0.7, 0.01)
    s = StateVector.from_amplitudes(np.random.default_rng(1).normal(size=16) + 0j)
    out, p = run_in_fourier(build_heat_dft(prob), s, 2, 2)
    ref, _ = heat_oracle(prob, s)
    assert abs(np.vdot(ref.amplitudes, out.amplitudes)) == pytest.approx(1.0, abs=1e-12)


def test_gaussian_ja_within_epsilon():
    g = GridSpec(1, 4)
    for eps in (1e-3, 1e-6):
        be = build_heat_gaussian_ja(HeatProblem(g, 1.0, 0.003, eps))[0]
        assert np.abs(np.diag(be.block()) - heat_kernel_1d(4, 1.0, 0.003)).max() <= eps


def test_smooth_gaussian_needs_kmax():
    with pytest.raises(ValueError):
        build_heat_smooth_gaussian(HeatProblem(GridSpec(1, 3), 1.0, 0.01))


def test_p_bounds_hold():
    g = GridSpec(1, 4)
    prob = HeatProblem(g, 1.0, 0.002)
    lo, hi = heat_p_bounds(prob)
    for seed in range(5):
        s = StateVector.from_amplitudes(np.random.default_rng(seed).normal(size=16) + 0j)
        _, p = heat_oracle(prob, s)
        assert lo - 1e-12 <= p <= hi + 1e-12


def test_invalid_problem():
    with pytest.raises(ValueError):
        HeatProblem(GridSpec(1, 3), -1.0, 0.1)
    with pytest.raises(ValueError):
        HeatProblem(GridSpec(1, 3), 1.0, 0.1, kmax=4)
