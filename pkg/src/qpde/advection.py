"""Incompressible advection: ∂_t f = -sum_a r_a ∂_a f on the periodic grid."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .blocks import (
    BlockEncoding,
    embed_zphase,
    khat_zphase,
    parallel_compose,
    realize_fourier_series,
    run_blocks_sequential,
)
from .grid import GridSpec, flat_to_position, from_fourier, khat_diagonal, position_to_flat, to_fourier
from .series import dft_series_of_diagonal, jacobi_anger_coeffs
from .sim import Circuit, StateVector


@dataclass
class AdvectionProblem:
    grid: GridSpec
    r: list
    t: float
    epsilon: float = 1e-6

    def __post_init__(self):
        self.r = [float(x) for x in np.atleast_1d(self.r)]
        if len(self.r) != self.grid.d:
            raise ValueError("need one velocity per dimension")

    @property
    def r_max(self) -> float:
        return max(abs(x) for x in self.r)


def advect_oracle(problem: AdvectionProblem, f0: StateVector) -> StateVector:
    """FFT route on position-ordered values; returns register amplitudes."""
    g = problem.grid
    f = flat_to_position(f0.amplitudes, g.n, g.d)
    out = oracle.fft_evolve(oracle.advection_diagonal(g, problem.r, problem.t), f, g)
    return StateVector(f0.num_qubits, position_to_flat(out, g.n, g.d), f0.norm_squared)


def advection_phase(n: int, d: int, axis: int):
    """exp(i2πk̂_axis/N) as a Z ladder on the nd register."""
    return embed_zphase(khat_zphase(n, 2 * np.pi / 2**n), n, d, axis)


def build_advection_ja(problem: AdvectionProblem) -> list:
    """One LCU block per dimension realizing the truncated Jacobi-Anger series.

    Blocks act in wavenumber space; compose with ``run_in_fourier`` or
    ``parallel_compose``.
    """
    g = problem.grid
    out = []
    for ax, r in enumerate(problem.r):
        lam = -problem.t * g.N * r
        ser = jacobi_anger_coeffs(lam, problem.epsilon)
        be = realize_fourier_series(ser, advection_phase(g.n, g.d, ax))
        be.extra.update(axis=ax, lam=lam, D=ser.D, D_scaling=ser.scaling_estimate, r_max=problem.r_max)
        out.append(be)
    return out


def build_advection_dft(problem: AdvectionProblem) -> list:
    g = problem.grid
    k = khat_diagonal(g.n)
    out = []
    for ax, r in enumerate(problem.r):
        vals = np.exp(-1j * problem.t * g.N * r * np.sin(2 * np.pi * k / g.N))
        ser = dft_series_of_diagonal(vals)
        be = realize_fourier_series(ser, advection_phase(g.n, g.d, ax), drop_tol=1e-15)
        be.extra.update(axis=ax, D=ser.D, r_max=problem.r_max)
        out.append(be)
    return out


def build_advection_smooth(problem: AdvectionProblem) -> Circuit:
    """Ancilla-free product of Z rotations equal to prod_a exp(-i2π t r_a k̂_a)."""
    g = problem.grid
    c = Circuit(g.num_qubits, 0)
    for ax, r in enumerate(problem.r):
        zp = embed_zphase(khat_zphase(g.n, -2 * np.pi * problem.t * r), g.n, g.d, ax)
        c.extend(zp.gates())
        c.global_phase += zp.scalar
    return c


def run_in_fourier(blocks: list, state: StateVector, n: int, d: int, layout: str = "sequential"):
    """F · blocks · F† on a position-space state; returns (state, survival p)."""
    s = StateVector(state.num_qubits, to_fourier(state.amplitudes, n, d), state.norm_squared)
    if layout == "parallel":
        s, p = parallel_compose(blocks).apply(s)
    else:
        s, p = run_blocks_sequential(blocks, s)
    return StateVector(s.num_qubits, from_fourier(s.amplitudes, n, d), s.norm_squared), p


def band_limited_state(grid: GridSpec, kmax: int, rng) -> StateVector:
    """Random state with support only on |k̃_a| <= kmax (every dimension)."""
    N, d = grid.N, grid.d
    k = khat_diagonal(grid.n)
    mask1 = (np.abs(k) <= kmax).astype(float)
    mask = mask1
    for _ in range(d - 1):
        mask = np.kron(mask, mask1)
    c = (rng.normal(size=N**d) + 1j * rng.normal(size=N**d)) * mask
    a = from_fourier(c, grid.n, d)
    return StateVector.from_amplitudes(a)
