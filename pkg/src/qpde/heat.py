"""Heat equation ∂_t f = u Δ f: kernels, circuits and success-probability accounting."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import oracle
from .blocks import (
    BlockEncoding,
    PauliString,
    embed_zphase,
    khat_zphase,
    pauli_exp_block,
    realize_fourier_series,
    run_blocks_sequential,
)
from .grid import GridSpec, flat_to_position, khat_diagonal, position_to_flat, to_fourier
from .series import dft_series_of_diagonal, heat_composite_series, smooth_gaussian_series
from .sim import StateVector


@dataclass
class HeatProblem:
    grid: GridSpec
    u: float
    t: float
    epsilon: float = 1e-4
    kmax: int | None = None

    def __post_init__(self):
        if self.u <= 0:
            raise ValueError("diffusivity must be positive")
        if self.t < 0:
            raise ValueError("time must be nonnegative")
        if self.kmax is not None and self.kmax >= self.grid.N // 2:
            raise ValueError("kmax must be below N/2")


def heat_kernel_1d(n: int, u: float, t: float) -> np.ndarray:
    N = 2**n
    return np.exp(-4 * t * u * N**2 * np.sin(np.pi * khat_diagonal(n) / N) ** 2)


def heat_oracle(problem: HeatProblem, f0: StateVector):
    """Returns (normalized evolved state, p = <f(t)|f(t)>/<f(0)|f(0)>)."""
    g = problem.grid
    f = flat_to_position(f0.amplitudes, g.n, g.d)
    out = oracle.fft_evolve(oracle.heat_diagonal(g, problem.u, problem.t), f, g)
    p = float(np.vdot(out, out).real / np.vdot(f, f).real)
    a = position_to_flat(out, g.n, g.d)
    return StateVector(f0.num_qubits, a / np.linalg.norm(a), f0.norm_squared * p), p


def heat_p_bounds(problem: HeatProblem):
    g = problem.grid
    return math.exp(-8 * problem.t * g.N**2 * problem.u * g.d), 1.0


def _half_ladder(g: GridSpec, ax: int):
    # e^{iπk̂/N}: every gate angle of the U_k̂ ladder halved
    return embed_zphase(khat_zphase(g.n, np.pi / g.N), g.n, g.d, ax)


def build_heat_gaussian_ja(problem: HeatProblem) -> list:
    g = problem.grid
    ser = heat_composite_series(problem.t, problem.u, g.N, problem.epsilon)
    blocks = []
    for ax in range(g.d):
        be = realize_fourier_series(ser, _half_ladder(g, ax), drop_tol=1e-300)
        q = ser.extra.get("quadrature")
        be.extra.update(axis=ax, D=ser.D, series_error=ser.empirical_error,
                        G=getattr(q, "G", 0), delta_omega=getattr(q, "delta_omega", 0.0),
                        D_scaling=math.sqrt(problem.t * problem.u) * g.N * math.log(1 / problem.epsilon))
        blocks.append(be)
    return blocks


def build_heat_dft(problem: HeatProblem) -> list:
    g = problem.grid
    ser = dft_series_of_diagonal(heat_kernel_1d(g.n, problem.u, problem.t))
    blocks = []
    for ax in range(g.d):
        be = realize_fourier_series(ser, embed_zphase(khat_zphase(g.n, 2 * np.pi / g.N), g.n, g.d, ax), drop_tol=1e-15)
        be.extra.update(axis=ax, D=ser.D)
        blocks.append(be)
    return blocks


# ---------------------------------------------------------------- smooth Pauli route


def smooth_pauli_terms(n: int, u: float, t: float) -> list:
    """(θ, qubits) of exp(-4π²tuk̂²) up to its scalar: Z terms first, then ZZ."""
    N = 2**n
    out = [(-math.pi**2 * t * u * N * 2.0**-b, (b,)) for b in range(n)]
    for z in range(n):
        for e in range(z + 1, n):
            out.append((-math.pi**2 * t * u * N**2 * 2.0 ** (-z - e - 1), (z, e)))
    return out


def smooth_pauli_prefactor(n: int, u: float, t: float) -> float:
    return math.exp(-math.pi**2 * t * u * (2**(2 * n) + 2) / 3)


def parallel_schedule(n: int) -> list:
    """Steps of mutually disjoint terms (indices into smooth_pauli_terms order).

    All Z terms in one step; ZZ terms grouped by qubit distance, two steps per group.
    """
    terms = smooth_pauli_terms(n, 1.0, 1.0)
    steps = [[i for i, (_, q) in enumerate(terms) if len(q) == 1]]
    for dist in range(1, n):
        a, b = [], []
        for i, (_, q) in enumerate(terms):
            if len(q) == 2 and q[1] - q[0] == dist:
                (a if (q[0] // dist) % 2 == 0 else b).append(i)
        steps += [s for s in (a, b) if s]
    return steps


@dataclass
class SmoothPauliPlan:
    blocks: list
    schedule: list  # steps of block indices
    thetas: list
    prefactor: float
    layout: str

    @property
    def depth(self) -> int:
        return len(self.schedule)

    def predicted_p(self, f0: StateVector, n: int, d: int) -> float:
        """e^{-2Σ|θ|} · ||Π e^{θP} f||² / ||f||² (scalar prefactor excluded)."""
        c = to_fourier(f0.amplitudes, n, d)
        diag = np.exp(sum(th * _zstring(P, n * d) for th, P in self.thetas))
        num = np.vdot(diag * c, diag * c).real
        return float(math.exp(-2 * sum(abs(th) for th, _ in self.thetas)) * num / np.vdot(c, c).real)


def _zstring(P: PauliString, nq: int) -> np.ndarray:
    idx = np.arange(2**nq)
    z = np.ones(2**nq)
    for q, ch in enumerate(P.letters):
        if ch == "Z":
            z *= 1 - 2 * ((idx >> (nq - 1 - q)) & 1)
    return z


def build_heat_smooth_pauli(problem: HeatProblem, layout: str = "parallel") -> SmoothPauliPlan:
    g = problem.grid
    n, d = g.n, g.d
    nq = n * d
    blocks, thetas, schedule = [], [], []
    base = parallel_schedule(n)
    per_dim = len(smooth_pauli_terms(n, 1, 1))
    for ax in range(d):
        for th, qs in smooth_pauli_terms(n, problem.u, problem.t):
            letters = ["I"] * nq
            for q in qs:
                letters[ax * n + q] = "Z"
            P = PauliString("".join(letters))
            blocks.append(pauli_exp_block(th, P))
            thetas.append((th, P))
    if layout == "parallel":
        # dimensions act on disjoint registers, so their steps merge
        for step in base:
            schedule.append([ax * per_dim + i for ax in range(d) for i in step])
    elif layout == "sequential":
        schedule = [[i] for i in range(len(blocks))]
    else:
        raise ValueError("layout must be 'parallel' or 'sequential'")
    pref = smooth_pauli_prefactor(n, problem.u, problem.t) ** d
    return SmoothPauliPlan(blocks, schedule, thetas, pref, layout)


def run_smooth_pauli(plan: SmoothPauliPlan, state: StateVector, n: int, d: int):
    """Apply the plan in wavenumber space (state given in position space)."""
    from .grid import from_fourier

    s = StateVector(state.num_qubits, to_fourier(state.amplitudes, n, d), state.norm_squared)
    order = [i for step in plan.schedule for i in step]
    s, p = run_blocks_sequential([plan.blocks[i] for i in order], s)
    return StateVector(s.num_qubits, from_fourier(s.amplitudes, n, d), s.norm_squared), p


def build_heat_smooth_gaussian(problem: HeatProblem) -> list:
    if problem.kmax is None:
        raise ValueError("smooth Gaussian route needs kmax")
    g = problem.grid
    ser = smooth_gaussian_series(problem.t, problem.u, problem.epsilon, problem.kmax)
    C3 = ser.extra["C3"]
    blocks = []
    for ax in range(g.d):
        be = realize_fourier_series(ser, embed_zphase(khat_zphase(g.n, math.pi * C3), g.n, g.d, ax), drop_tol=1e-300)
        be.extra.update(axis=ax, D=ser.D, C3=C3, series_error=ser.empirical_error)
        blocks.append(be)
    return blocks


def smooth_survival_bound(problem: HeatProblem) -> float:
    return math.exp(-8 * math.pi**2 * problem.t * problem.kmax**2 * problem.u * problem.grid.d)
