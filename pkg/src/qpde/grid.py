"""Grid conventions, wavenumber operators and the shifted QFT circuit.

Register conventions (qubit 0 = MSB of the flat index globally):

* wavenumber register: k = sum_b 2^(n-1-b) k_b, so the flat index *is* k.
* position register: l = sum_b 2^b l_b, so qubit n-1 carries the top bit
  and the flat index is the bit reversal of l.

``position_to_flat`` / ``flat_to_position`` convert between a function
array indexed by l and the amplitude vector.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import gates as G
from .sim import Circuit, Gate, StateVector, circuit_unitary, run_circuit


@dataclass(frozen=True)
class GridSpec:
    d: int
    n: int
    convention: str = "symmetric"

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("need n >= 1 and d >= 1")
        if self.convention not in ("symmetric", "unit"):
            raise ValueError("convention must be 'symmetric' or 'unit'")

    @property
    def N(self) -> int:
        return 2**self.n

    @property
    def spacing(self) -> float:
        return 1.0 / self.N

    @property
    def num_qubits(self) -> int:
        return self.d * self.n

    def positions(self) -> np.ndarray:
        ell = np.arange(self.N)
        if self.convention == "unit":
            return ell / self.N
        return -0.5 + 1.0 / (2 * self.N) + ell / self.N

    def wavenumbers(self) -> np.ndarray:
        return np.arange(self.N) - self.N // 2


@dataclass(frozen=True)
class ShiftSpec:
    a: float
    b: float

    @classmethod
    def default(cls, n: int) -> "ShiftSpec":
        N = 2**n
        return cls(-N / 2, -(N - 1) / 2)


def bitrev_perm(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    out = np.zeros_like(idx)
    for b in range(n):
        out |= ((idx >> b) & 1) << (n - 1 - b)
    return out


def position_to_flat(f: np.ndarray, n: int, d: int = 1) -> np.ndarray:
    """Function values indexed [l_1, ..., l_d] -> amplitude vector."""
    N = 2**n
    arr = np.asarray(f, dtype=complex).reshape((N,) * d)
    p = bitrev_perm(n)
    for ax in range(d):
        arr = np.take(arr, p, axis=ax)
    return arr.reshape(-1)


def flat_to_position(a: np.ndarray, n: int, d: int = 1) -> np.ndarray:
    # bit reversal is an involution
    return position_to_flat(a, n, d).reshape((2**n,) * d)


# ---------------------------------------------------------------- operators


def khat_diagonal(n: int) -> np.ndarray:
    """Diagonal of k̂ in the wavenumber register (flat index = k)."""
    if n < 1:
        raise ValueError("n >= 1")
    N = 2**n
    return np.arange(N, dtype=float) - N / 2


def khat_pauli_diagonal(n: int) -> np.ndarray:
    """k̂ from its Pauli-Z sum, evaluated bit by bit (independent route)."""
    N = 2**n
    k = np.arange(N)
    out = np.full(N, -0.5)
    for beta in range(n):
        z = 1 - 2 * ((k >> (n - 1 - beta)) & 1)
        out -= N / 4 * 2.0**-beta * z
    return out


def khat_nd(n: int, d: int) -> list:
    """Per-dimension k̂ diagonals broadcast over the d-dimensional register."""
    N = 2**n
    kd = khat_diagonal(n)
    out = []
    for ax in range(d):
        shape = [1] * d
        shape[ax] = N
        out.append(np.broadcast_to(kd.reshape(shape), (N,) * d).reshape(-1))
    return out


def lhat_diagonal(n: int) -> np.ndarray:
    """Diagonal of l̂ over the (gamma qubit + n wavenumber qubits) register."""
    N = 2**n
    idx = np.arange(2 * N)
    out = np.full(2 * N, (N - 1) / 2)
    for beta in range(n + 1):
        z = 1 - 2 * ((idx >> (n - beta)) & 1)
        out -= 2.0 ** (n - beta - 1) * z
    return out


# ---------------------------------------------------------------- QFT


def shifted_qft_matrix(n: int, shifts: ShiftSpec | None = None) -> np.ndarray:
    """Dense M[l, k] = exp(i2π(k+a)(l+b)/N)/√N in (position l, wavenumber k) indices."""
    N = 2**n
    s = shifts or ShiftSpec.default(n)
    k = np.arange(N)
    ell = np.arange(N)
    return np.exp(2j * np.pi * np.outer(ell + s.b, k + s.a) / N) / np.sqrt(N)


def qft_matrix_flat(n: int, shifts: ShiftSpec | None = None) -> np.ndarray:
    """Same operator expressed in flat register indices (rows bit-reversed)."""
    m = shifted_qft_matrix(n, shifts)
    return m[bitrev_perm(n), :]


def _qft_gates(n: int, shifts: ShiftSpec, angle_threshold: float = 0.0, offset: int = 0):
    gates = []
    if shifts.b:
        for z in range(n):
            gates.append(Gate(G.phase_diag(np.pi * 2.0**-z * shifts.b), (z + offset,), label="Rb"))
    for j in range(n):
        gates.append(G.h(j + offset))
        for m in range(j + 1, n):
            zeta = m - j + 1
            angle = np.pi * 2.0 ** (-zeta + 1)
            if abs(angle) < angle_threshold:
                continue
            gates.append(Gate(G.phase_diag(angle), (j + offset,), ((m + offset, 1),), label=f"R{zeta}"))
    if shifts.a:
        for z in range(n):
            gates.append(Gate(G.phase_diag(np.pi * 2.0 ** (z - n + 1) * shifts.a), (z + offset,), label="Ra"))
    return gates


def build_shifted_qft(n: int, shifts: ShiftSpec | None = None) -> Circuit:
    """Shifted QFT without the global phase exp(i2πab/N)."""
    shifts = ShiftSpec.default(n) if shifts is None else shifts
    return Circuit(n, 0, _qft_gates(n, shifts))


def build_approx_qft(n: int, shifts: ShiftSpec | None = None, angle_threshold: float = 0.0):
    """Shifted QFT with controlled rotations below ``angle_threshold`` removed.

    Returns (circuit, spectral-norm distance to the exact circuit).
    """
    if angle_threshold < 0:
        raise ValueError("angle_threshold must be >= 0")
    shifts = ShiftSpec.default(n) if shifts is None else shifts
    circ = Circuit(n, 0, _qft_gates(n, shifts, angle_threshold))
    dist = np.linalg.norm(circuit_unitary(circ) - circuit_unitary(build_shifted_qft(n, shifts)), 2)
    return circ, float(dist)


def tensor_qft_d(grid: GridSpec, shifts: ShiftSpec | None = None) -> Circuit:
    shifts = ShiftSpec.default(grid.n) if shifts is None else shifts
    gates = []
    for ax in range(grid.d):
        gates += _qft_gates(grid.n, shifts, offset=ax * grid.n)
    return Circuit(grid.num_qubits, 0, gates)


def qft_global_phase(n: int, shifts: ShiftSpec | None = None) -> complex:
    s = shifts or ShiftSpec.default(n)
    return np.exp(2j * np.pi * s.a * s.b / 2**n)


# ---------------------------------------------------------------- fast application


def apply_qft(amps: np.ndarray, n: int, d: int = 1, inverse: bool = False) -> np.ndarray:
    """Apply F^{⊗d} (or its adjoint) to flat amplitudes, including the global phase.

    Uses the dense per-dimension matrix; cheaper than gate-by-gate simulation
    and used by the PDE modules once the circuit itself has been verified.
    """
    N = 2**n
    m = qft_matrix_flat(n)
    if inverse:
        m = m.conj().T
    arr = np.asarray(amps, dtype=complex).reshape((N,) * d + (-1,))
    for ax in range(d):
        arr = np.moveaxis(np.tensordot(m, arr, axes=([1], [ax])), 0, ax)
    return arr.reshape(np.shape(amps))


def to_fourier(amps, n, d=1):
    return apply_qft(amps, n, d, inverse=True)


def from_fourier(amps, n, d=1):
    return apply_qft(amps, n, d, inverse=False)


# ---------------------------------------------------------------- boundaries


class Boundary(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


def boundary_circuit(n: int, kind) -> Circuit:
    """n data qubits plus the new top position qubit (register qubit n).

    R_y on the new qubit, then a CNOT fan flipping every data qubit.
    """
    kind = Boundary(kind)
    phi = -np.pi / 2 if kind is Boundary.DIRICHLET else np.pi / 2
    c = Circuit(n + 1, 0)
    c.add(Gate(G.ry(phi), (n,), label="Ry"))
    for q in range(n):
        c.add(G.cnot(n, q))
    return c


def reflect_extend(f_half: np.ndarray, kind) -> np.ndarray:
    """Direct transform: doubled function with f(2N-1-l) = ∓f(l)."""
    kind = Boundary(kind)
    f_half = np.asarray(f_half, dtype=complex)
    sign = -1.0 if kind is Boundary.DIRICHLET else 1.0
    return np.concatenate([f_half, sign * f_half[::-1]]) / np.sqrt(2)


def boundary_extension(state: StateVector, kind):
    """Returns (circuit over n+1 qubits, extended state)."""
    n = state.num_qubits
    circ = boundary_circuit(n, kind)
    anc = StateVector.basis(1, 0)
    out = run_circuit(circ, state.tensor(anc))
    return circ, out
