"""Dense statevector / density-matrix simulator.

Qubit 0 is the most significant bit of the flat amplitude index.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ATOL = 1e-12
DEFAULT_SV_BUDGET = 20
DEFAULT_DM_BUDGET = 10
UNITARY_LIMIT = 14


class SimulationError(ValueError):
    pass


class AnnihilatedBranch(SimulationError):
    """Raised when a postselected branch has (almost) no weight."""

    def __init__(self, probability: float):
        super().__init__(f"postselected branch annihilated (p={probability:.3e})")
        self.probability = probability


class BudgetExceeded(SimulationError):
    pass


def qubit_budget(kind: str = "statevector") -> int:
    """Register-size limit. QPDE_BUDGET overrides the statevector limit."""
    env = os.environ.get("QPDE_BUDGET")
    if kind == "statevector":
        return int(env) if env else DEFAULT_SV_BUDGET
    if env:
        return max(1, int(env) // 2)
    return DEFAULT_DM_BUDGET


def check_budget(num_qubits: int, kind: str = "statevector") -> None:
    limit = qubit_budget(kind)
    if num_qubits > limit:
        raise BudgetExceeded(f"{num_qubits} qubits exceeds {kind} budget of {limit}")


# ---------------------------------------------------------------- containers


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray
    norm_squared: float = 1.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != 2**self.num_qubits:
            raise SimulationError(
                f"amplitude length {self.amplitudes.size} != 2^{self.num_qubits}"
            )

    @classmethod
    def from_amplitudes(cls, amps, normalize: bool = True) -> "StateVector":
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.size)))
        if 2**n != amps.size:
            raise SimulationError("amplitude length must be a power of two")
        nrm = float(np.vdot(amps, amps).real)
        if normalize:
            if nrm == 0:
                raise SimulationError("zero vector")
            amps = amps / np.sqrt(nrm)
            nrm = 1.0
        return cls(n, amps, nrm)

    @classmethod
    def basis(cls, num_qubits: int, index: int = 0) -> "StateVector":
        a = np.zeros(2**num_qubits, dtype=complex)
        a[index] = 1.0
        return cls(num_qubits, a, 1.0)

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy(), self.norm_squared)

    def literal_norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(
            self.num_qubits + other.num_qubits,
            np.kron(self.amplitudes, other.amplitudes),
            self.norm_squared * other.norm_squared,
        )

    def density_matrix(self) -> "DensityMatrix":
        a = self.amplitudes
        rho = np.outer(a, a.conj())
        return DensityMatrix(self.num_qubits, rho, float(np.trace(rho).real))


@dataclass
class DensityMatrix:
    num_qubits: int
    entries: np.ndarray
    trace: float = 1.0

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        dim = 2**self.num_qubits
        if self.entries.shape != (dim, dim):
            raise SimulationError("density matrix shape mismatch")

    @classmethod
    def from_matrix(cls, rho) -> "DensityMatrix":
        rho = np.asarray(rho, dtype=complex)
        n = int(round(np.log2(rho.shape[0])))
        return cls(n, rho, float(np.trace(rho).real))

    def check(self, tol: float = 1e-10) -> None:
        r = self.entries
        if np.max(np.abs(r - r.conj().T)) > 1e-12 * max(1.0, np.abs(r).max()):
            raise SimulationError("density matrix not Hermitian")
        if self.trace <= 0:
            raise SimulationError("non-positive trace")
        if np.linalg.eigvalsh((r + r.conj().T) / 2).min() < -tol:
            raise SimulationError("density matrix has negative eigenvalues")


@dataclass
class Gate:
    matrix: np.ndarray
    targets: tuple
    controls: tuple = ()
    label: str = ""

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        self.targets = tuple(int(t) for t in self.targets)
        self.controls = tuple((int(q), int(v)) for q, v in self.controls)
        k = len(self.targets)
        if self.matrix.shape != (2**k, 2**k):
            raise SimulationError(f"gate matrix shape {self.matrix.shape} for {k} targets")
        cq = {q for q, _ in self.controls}
        if cq & set(self.targets) or len(set(self.targets)) != k or len(cq) != len(self.controls):
            raise SimulationError("targets and controls must be disjoint and distinct")
        dev = np.abs(self.matrix.conj().T @ self.matrix - np.eye(2**k)).max()
        if dev > 1e-10:
            raise SimulationError(f"gate '{self.label}' not unitary (dev {dev:.2e})")

    @property
    def qubits(self) -> tuple:
        return tuple(q for q, _ in self.controls) + self.targets

    @property
    def width(self) -> int:
        return len(self.targets) + len(self.controls)

    def controlled(self, qubit: int, value: int = 1) -> "Gate":
        return Gate(self.matrix, self.targets, ((qubit, value),) + self.controls, self.label)

    def shifted(self, offset: int) -> "Gate":
        return Gate(
            self.matrix,
            tuple(t + offset for t in self.targets),
            tuple((q + offset, v) for q, v in self.controls),
            self.label,
        )

    def dagger(self) -> "Gate":
        return Gate(self.matrix.conj().T, self.targets, self.controls, self.label + "†" if self.label else "")


@dataclass
class Circuit:
    num_system_qubits: int
    num_ancilla_qubits: int = 0
    gates: list = field(default_factory=list)
    postselect_plan: list = field(default_factory=list)
    ancilla_first: bool = True
    global_phase: float = 0.0

    @property
    def num_qubits(self) -> int:
        return self.num_system_qubits + self.num_ancilla_qubits

    @property
    def ancilla_qubits(self) -> tuple:
        if self.ancilla_first:
            return tuple(range(self.num_ancilla_qubits))
        return tuple(range(self.num_system_qubits, self.num_qubits))

    def add(self, gate: Gate) -> "Circuit":
        for q in gate.qubits:
            if not 0 <= q < self.num_qubits:
                raise SimulationError(f"gate index {q} out of range for {self.num_qubits} qubits")
        self.gates.append(gate)
        return self

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        for g in gates:
            self.add(g)
        return self

    def compose(self, other: "Circuit", offset: int = 0) -> "Circuit":
        for g in other.gates:
            self.add(g.shifted(offset) if offset else g)
        self.global_phase += other.global_phase
        return self

    def plan_postselect(self, ancilla: int, outcome: int = 0, stage: str = "") -> None:
        if ancilla not in self.ancilla_qubits:
            raise SimulationError("postselection must target an ancilla qubit")
        self.postselect_plan.append((ancilla, outcome, stage))

    def inverse(self) -> "Circuit":
        c = Circuit(self.num_system_qubits, self.num_ancilla_qubits, ancilla_first=self.ancilla_first)
        c.gates = [g.dagger() for g in reversed(self.gates)]
        c.global_phase = -self.global_phase
        return c

    def gate_counts(self) -> dict:
        one = two = multi = 0
        for g in self.gates:
            if g.width == 1:
                one += 1
            elif g.width == 2:
                two += 1
            else:
                multi += 1
        return {"one_qubit": one, "two_qubit": two, "multi_controlled": multi}


# ---------------------------------------------------------------- kernels


def _apply_tensor(psi: np.ndarray, n: int, gate: Gate) -> np.ndarray:
    """Apply gate to array whose first n axes are qubits (extra trailing axes allowed)."""
    idx = [slice(None)] * psi.ndim
    for q, v in gate.controls:
        idx[q] = v
    idx = tuple(idx)
    sub = psi[idx] if gate.controls else psi
    # axis positions of the targets inside the sub-array
    removed = sorted(q for q, _ in gate.controls)
    tpos = [t - sum(1 for r in removed if r < t) for t in gate.targets]
    k = len(tpos)
    m = gate.matrix.reshape((2,) * (2 * k))
    out = np.tensordot(m, sub, axes=(list(range(k, 2 * k)), tpos))
    out = np.moveaxis(out, list(range(k)), tpos)
    if gate.controls:
        psi = psi.copy()
        psi[idx] = out
        return psi
    return out


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    n = state.num_qubits
    for q in gate.qubits:
        if not 0 <= q < n:
            raise SimulationError(f"qubit index {q} out of range for {n} qubits")
    psi = state.amplitudes.reshape((2,) * n) if n else state.amplitudes
    out = _apply_tensor(psi, n, gate).reshape(-1)
    return StateVector(n, out, state.norm_squared)


def run_circuit(circuit: Circuit, state: StateVector) -> StateVector:
    if state.num_qubits != circuit.num_qubits:
        raise SimulationError("state / circuit register mismatch")
    check_budget(state.num_qubits)
    n = state.num_qubits
    psi = state.amplitudes.reshape((2,) * n)
    for g in circuit.gates:
        psi = _apply_tensor(psi, n, g)
    out = psi.reshape(-1)
    if circuit.global_phase:
        out = out * np.exp(1j * circuit.global_phase)
    return StateVector(n, out, state.norm_squared)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    q = circuit.num_qubits
    if q > UNITARY_LIMIT:
        raise BudgetExceeded(f"dense unitary of {q} qubits refused (limit {UNITARY_LIMIT})")
    dim = 2**q
    u = np.eye(dim, dtype=complex).reshape((2,) * q + (dim,))
    for g in circuit.gates:
        u = _apply_tensor(u, q, g)
    u = u.reshape(dim, dim)
    if circuit.global_phase:
        u = u * np.exp(1j * circuit.global_phase)
    return u


def postselect(state: StateVector, qubit: int, outcome: int = 0):
    """Project ``qubit`` onto ``outcome`` and drop it.

    Returns the renormalized reduced state and the branch probability
    relative to the input.  The returned norm_squared carries the cumulative
    survival probability.
    """
    n = state.num_qubits
    if not 0 <= qubit < n:
        raise SimulationError(f"qubit {qubit} out of range")
    psi = state.amplitudes.reshape((2,) * n)
    branch = np.take(psi, outcome, axis=qubit).reshape(-1)
    total = state.literal_norm_squared()
    p = float(np.vdot(branch, branch).real) / total
    if p < 1e-15:
        raise AnnihilatedBranch(p)
    branch = branch / np.sqrt(p * total)
    return StateVector(n - 1, branch, state.norm_squared * p), p


def postselect_many(state: StateVector, qubits: Sequence[int], outcomes: Sequence[int] | None = None):
    """Postselect several qubits at once; qubit indices refer to the input register."""
    outcomes = [0] * len(qubits) if outcomes is None else list(outcomes)
    order = sorted(zip(qubits, outcomes), reverse=True)
    p_total = 1.0
    for q, o in order:
        state, p = postselect(state, q, o)
        p_total *= p
    return state, p_total


def project_block(u: np.ndarray, num_ancilla: int, ancilla_first: bool = True) -> np.ndarray:
    """The ⟨0|_anc U |0⟩_anc block of a dense unitary."""
    dim = u.shape[0]
    sys = dim >> num_ancilla
    if ancilla_first:
        return u[:sys, :sys]
    return u[:: 2**num_ancilla, :: 2**num_ancilla]


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    keep = sorted(set(int(k) for k in keep))
    n = rho.num_qubits
    if not keep:
        raise SimulationError("keep set is empty")
    if any(not 0 <= k < n for k in keep):
        raise SimulationError("keep index out of range")
    drop = [q for q in range(n) if q not in keep]
    t = rho.entries.reshape((2,) * (2 * n))
    # contract each dropped qubit's row axis with its column axis
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for q in drop:
        cols[q] = rows[q]
    out = "".join(rows[q] for q in keep) + "".join(cols[q] for q in keep)
    red = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    dim = 2 ** len(keep)
    red = red.reshape(dim, dim)
    return DensityMatrix(len(keep), red, float(np.trace(red).real))


def expectation(state: StateVector, observable) -> float:
    b = np.asarray(observable, dtype=complex)
    if np.abs(b - b.conj().T).max() > 1e-10:
        raise SimulationError("observable is not Hermitian")
    a = state.amplitudes
    val = np.vdot(a, b @ a) / np.vdot(a, a)
    return float(val.real)


def phase_fit(a: np.ndarray, b: np.ndarray):
    """Best single phase e^{iφ} with a ≈ e^{iφ} b. Returns (max deviation, phase)."""
    inner = np.vdot(b.reshape(-1), a.reshape(-1))
    ph = inner / abs(inner) if abs(inner) > 0 else 1.0
    return float(np.abs(a - ph * b).max()), complex(ph)


def kron_all(mats) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out
