"""Expectation values <f|B|f> of series-defined solutions, split into (ζ, η) terms.

For f = F·(Σ c_ζ e^{iζℋ})·F†·f0 the value is Σ c_ζ* c_η C_ζη with
C_ζη = <f0|F e^{−iζℋ} F† B F e^{iηℋ} F†|f0>; the polynomial variant uses ℋ^ζ.
Each C_ζη is evaluated as its own inner product rather than through a
Hadamard test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import from_fourier, to_fourier
from .series import SeriesSpec


class ObservableError(ValueError):
    pass


@dataclass
class ExpectationPlan:
    kind: str  # "fourier" | "polynomial"
    coefficients: np.ndarray  # dense over the term grid's index range
    indices: np.ndarray
    observable: np.ndarray

    def __post_init__(self):
        if self.kind not in ("fourier", "polynomial"):
            raise ValueError("kind must be 'fourier' or 'polynomial'")
        b = np.asarray(self.observable, dtype=complex)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ObservableError("observable must be a square matrix")
        if np.abs(b - b.conj().T).max() > 1e-12 * max(1.0, np.abs(b).max()):
            raise ObservableError("observable is not Hermitian")
        self.observable = b
        self.coefficients = np.asarray(self.coefficients, dtype=complex)

    @property
    def D(self) -> int:
        return int(np.abs(self.indices).max()) if self.indices.size else 0

    @property
    def term_grid(self) -> list:
        return [(int(z), int(e)) for z in self.indices for e in self.indices]

    @classmethod
    def from_series(cls, series: SeriesSpec, observable) -> "ExpectationPlan":
        D = series.D
        idx = np.arange(-D, D + 1)
        c = np.zeros(2 * D + 1, dtype=complex)
        for z, v in zip(series.zetas, series.coefficients):
            c[int(z) + D] += v
        return cls("fourier", c, idx, observable)

    @classmethod
    def polynomial(cls, coefficients, observable) -> "ExpectationPlan":
        c = np.asarray(coefficients, dtype=complex)
        return cls("polynomial", c, np.arange(c.size), observable)


def _branch(plan: ExpectationPlan, index: int, f0_k: np.ndarray, h: np.ndarray, n: int, d: int) -> np.ndarray:
    """F · g(ℋ) · F† f0 for the single term g = e^{iζℋ} or ℋ^ζ."""
    g = np.exp(1j * index * h) if plan.kind == "fourier" else h.astype(complex) ** index
    return from_fourier(g * f0_k, n, d)


def term_matrix(plan: ExpectationPlan, f0, hamiltonian_diagonal, n: int, d: int = 1) -> np.ndarray:
    """All C_ζη, one inner product each, in the order of ``plan.indices``."""
    f0_k = to_fourier(np.asarray(f0, dtype=complex), n, d)
    h = np.asarray(hamiltonian_diagonal, dtype=float)
    if plan.observable.shape[0] != f0_k.size:
        raise ObservableError("observable size does not match the register")
    branches = {int(z): _branch(plan, int(z), f0_k, h, n, d) for z in plan.indices}
    m = len(plan.indices)
    C = np.empty((m, m), dtype=complex)
    for a, z in enumerate(plan.indices):
        for b, e in enumerate(plan.indices):
            C[a, b] = np.vdot(branches[int(z)], plan.observable @ branches[int(e)])
    return C


def expectation_via_terms(plan: ExpectationPlan, f0, hamiltonian_diagonal, n: int, d: int = 1, return_terms: bool = False):
    C = term_matrix(plan, f0, hamiltonian_diagonal, n, d)
    c = plan.coefficients
    # fixed summation order: row-major over the term grid
    total = 0j
    for a in range(c.size):
        for b in range(c.size):
            total += np.conj(c[a]) * c[b] * C[a, b]
    if return_terms:
        return total, C
    return total


def solution_state(plan: ExpectationPlan, f0, hamiltonian_diagonal, n: int, d: int = 1) -> np.ndarray:
    """Unnormalized F·(Σ c g(ℋ))·F†·f0, prepared in one shot."""
    h = np.asarray(hamiltonian_diagonal, dtype=float)
    if plan.kind == "fourier":
        vals = np.exp(1j * np.multiply.outer(h, plan.indices)) @ plan.coefficients
    else:
        vals = np.vander(h, plan.coefficients.size, increasing=True) @ plan.coefficients
    return from_fourier(vals * to_fourier(np.asarray(f0, dtype=complex), n, d), n, d)


def direct_expectation(state, observable) -> float:
    a = np.asarray(state, dtype=complex)
    return float(np.vdot(a, np.asarray(observable) @ a).real)


def lcu_solution_state(block, f0, n: int, d: int = 1) -> np.ndarray:
    """Run an LCU block (acting in wavenumber space) and undo its 1/scale and 1/√p."""
    from .sim import StateVector

    s = StateVector.from_amplitudes(to_fourier(np.asarray(f0, dtype=complex), n, d), normalize=False)
    out, p = block.apply(s)
    amps = out.amplitudes / math.sqrt(out.literal_norm_squared()) * math.sqrt(p * s.literal_norm_squared()) * block.scale
    return from_fourier(amps, n, d)


def z_observable(num_qubits: int, qubit: int) -> np.ndarray:
    idx = np.arange(2**num_qubits)
    return np.diag(1.0 - 2 * ((idx >> (num_qubits - 1 - qubit)) & 1))
