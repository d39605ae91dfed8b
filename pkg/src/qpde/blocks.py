"""Circuit building blocks: Z-phase ladders, LCU series, Pauli-exponential blocks.

Layout convention for every block encoding: ancilla qubits first
(qubits 0..a-1), system register after.  Postselection is on all
ancillas reading 0.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import gates as G
from .grid import from_fourier, to_fourier
from .sim import (
    AnnihilatedBranch,
    BudgetExceeded,
    Circuit,
    Gate,
    StateVector,
    check_budget,
    circuit_unitary,
    postselect_many,
    project_block,
    run_circuit,
)
from .series import SeriesSpec, SpectralDiagonal

MAX_INDEX_QUBITS = 10


# ---------------------------------------------------------------- Z-phase ladders


@dataclass
class ZPhase:
    """Diagonal exp(i[scalar + sum_j angle_j Z_{S_j}]) over ``num_qubits``.

    ``terms`` holds (qubit tuple, angle) with 1- or 2-qubit Z strings.
    """

    num_qubits: int
    scalar: float
    terms: list

    def scaled(self, m: float) -> "ZPhase":
        return ZPhase(self.num_qubits, self.scalar * m, [(q, a * m) for q, a in self.terms])

    def shifted(self, offset: int, total: int | None = None) -> "ZPhase":
        return ZPhase(total or self.num_qubits + offset, self.scalar, [(tuple(x + offset for x in q), a) for q, a in self.terms])

    def compose(self, other: "ZPhase") -> "ZPhase":
        return ZPhase(max(self.num_qubits, other.num_qubits), self.scalar + other.scalar, self.terms + other.terms)

    def phases(self) -> np.ndarray:
        """Real phase per computational basis state."""
        n = self.num_qubits
        idx = np.arange(2**n)
        out = np.full(2**n, float(self.scalar))
        for qs, a in self.terms:
            z = np.ones(2**n)
            for q in qs:
                z = z * (1 - 2 * ((idx >> (n - 1 - q)) & 1))
            out += a * z
        return out

    def diagonal(self) -> np.ndarray:
        return np.exp(1j * self.phases())

    def gates(self, offset: int = 0, controls: Sequence = ()) -> list:
        out = []
        controls = tuple(controls)
        for qs, a in self.terms:
            if a == 0:
                continue
            tq = tuple(q + offset for q in qs)
            m = G.zexp(a) if len(qs) == 1 else G.zz_exp(a)
            out.append(Gate(m, tq, controls, label="Zrot" if len(qs) == 1 else "ZZrot"))
        if self.scalar and controls:
            (q0, v0), rest = controls[0], controls[1:]
            m = np.diag([np.exp(1j * self.scalar), 1.0]) if v0 == 0 else G.phase_diag(self.scalar)
            out.append(Gate(m, (q0,), rest, label="phase"))
        return out


def khat_zphase(n: int, alpha: float) -> ZPhase:
    """exp(i α k̂) = e^{-iα/2} prod_b exp(-i α (N/4) 2^{-b} Z_b)."""
    N = 2**n
    return ZPhase(n, -alpha / 2, [((b,), -alpha * N / 4 * 2.0**-b) for b in range(n)])


def khat2_zphase(n: int, alpha: float) -> ZPhase:
    """exp(i α k̂²) from the expansion of k̂² into Z and ZZ terms."""
    N = 2**n
    terms = [((b,), alpha * N / 4 * 2.0**-b) for b in range(n)]
    for z in range(n):
        for e in range(z + 1, n):
            terms.append(((z, e), alpha * N**2 / 8 * 2.0 ** (-z - e)))
    return ZPhase(n, alpha * (N**2 + 2) / 12, terms)


def build_U_khat(n: int, denominator: int = 1) -> Circuit:
    """|0><0|⊗1 + |1><1|⊗exp(i2πk̂/(N·denominator)); control is qubit 0."""
    if denominator not in (1, 2):
        raise ValueError("denominator must be 1 or 2")
    N = 2**n
    zp = khat_zphase(n, 2 * np.pi / (N * denominator))
    c = Circuit(n, 1)
    c.extend(zp.gates(offset=1, controls=((0, 1),)))
    return c


# ---------------------------------------------------------------- block encodings


@dataclass
class BlockEncoding:
    circuit: Circuit
    ancilla_count: int
    scale: float
    target: str
    extra: dict = field(default_factory=dict)

    def block(self) -> np.ndarray:
        u = circuit_unitary(self.circuit)
        return project_block(u, self.ancilla_count) * self.scale

    def apply(self, state: StateVector):
        """Run on |0>_anc ⊗ state, postselect; returns (state, survival p)."""
        anc = StateVector.basis(self.ancilla_count, 0)
        full = anc.tensor(state)
        out = run_circuit(self.circuit, full)
        return postselect_many(out, list(range(self.ancilla_count)))

    def gate_counts(self) -> dict:
        d = self.circuit.gate_counts()
        d["ancillas"] = self.ancilla_count
        d["scale"] = float(self.scale)
        for k in ("select_calls", "realization"):
            if k in self.extra:
                d[k] = self.extra[k]
        return d

    def gate_counts_json(self) -> str:
        return json.dumps(self.gate_counts(), sort_keys=True)


def state_prep_unitary(amps: np.ndarray) -> np.ndarray:
    """Dense unitary V with V|0> = amps (Householder completion)."""
    v = np.asarray(amps, dtype=complex)
    v = v / np.linalg.norm(v)
    dim = v.size
    ph = v[0] / abs(v[0]) if abs(v[0]) > 1e-300 else 1.0
    u = v / ph
    e0 = np.zeros(dim, dtype=complex)
    e0[0] = 1.0
    w = e0 - u
    nw = np.vdot(w, w).real
    if nw < 1e-30:
        return ph * np.eye(dim, dtype=complex)
    R = np.eye(dim, dtype=complex) - 2.0 * np.outer(w, w.conj()) / nw
    return ph * R


def _index_controls(j: int, m: int) -> tuple:
    return tuple((q, (j >> (m - 1 - q)) & 1) for q in range(m))


def _lcu_skeleton(weights: np.ndarray, num_system: int, select: Callable[[int, tuple], list], label: str):
    weights = np.asarray(weights, dtype=complex)
    if not np.any(np.abs(weights) > 0):
        raise ValueError("all-zero coefficients")
    T = weights.size
    # at least one index qubit so scalar phases stay controlled (not global)
    m = max(1, math.ceil(math.log2(T)))
    if m > MAX_INDEX_QUBITS:
        raise BudgetExceeded(f"LCU index register of {m} qubits exceeds {MAX_INDEX_QUBITS}")
    check_budget(m + num_system)
    s = float(np.abs(weights).sum())
    circ = Circuit(num_system, m)
    pad = np.zeros(2**m, dtype=complex)
    pad[:T] = weights
    left = np.sqrt(np.abs(pad) / s) * np.exp(1j * np.angle(pad))
    right = np.sqrt(np.abs(pad) / s)
    prep_l = state_prep_unitary(left)
    prep_r = state_prep_unitary(right)
    circ.add(Gate(prep_l, tuple(range(m)), label="PREP"))
    calls = 0
    for j in range(T):
        if weights[j] == 0:
            continue
        circ.extend(select(j, _index_controls(j, m)))
        calls += 1
    circ.add(Gate(prep_r.conj().T, tuple(range(m)), label="UNPREP"))
    for q in range(m):
        circ.plan_postselect(q, 0, "lcu")
    return BlockEncoding(circ, m, s, label, {"realization": "LCU", "select_calls": calls})


def realize_fourier_series(series: SeriesSpec, phase: ZPhase, drop_tol: float = 0.0) -> BlockEncoding:
    """LCU for sum_z c_z exp(i z θ̂) with exp(iθ̂) given as a Z-phase ladder.

    Each select term applies the ladder with angles scaled by z, controlled
    on the index register value.
    """
    ser = series.nonzero(drop_tol)
    n = phase.num_qubits
    zetas = ser.zetas

    def select(j, controls):
        return phase.scaled(int(zetas[j])).gates(offset=len(controls), controls=controls)

    be = _lcu_skeleton(ser.coefficients, n, select, f"fourier series over {series.phase_unit}")
    be.extra["D"] = series.D
    be.extra["series"] = ser
    return be


def lcu_block_encode(weighted: list) -> BlockEncoding:
    """Prepare-select-unprepare over (weight, Circuit) pairs acting on one system register."""
    if not weighted:
        raise ValueError("need at least one term")
    ns = {c.num_qubits for _, c in weighted}
    if len(ns) != 1:
        raise ValueError("all sub-circuits must share the system register")
    n = ns.pop()
    weights = np.array([w for w, _ in weighted], dtype=complex)
    circs = [c for _, c in weighted]

    def select(j, controls):
        off = len(controls)
        return [Gate(g.matrix, tuple(t + off for t in g.targets), controls + tuple((q + off, v) for q, v in g.controls), g.label)
                for g in circs[j].gates]

    return _lcu_skeleton(weights, n, select, "LCU")


# ---------------------------------------------------------------- Pauli exponentials


@dataclass(frozen=True)
class PauliString:
    letters: str

    def __post_init__(self):
        if any(ch not in "IXYZ" for ch in self.letters):
            raise ValueError("Pauli letters must be from IXYZ")

    @property
    def weight(self) -> int:
        return sum(ch != "I" for ch in self.letters)

    @property
    def num_qubits(self) -> int:
        return len(self.letters)

    def matrix(self) -> np.ndarray:
        out = np.eye(1, dtype=complex)
        for ch in self.letters:
            out = np.kron(out, G.PAULI[ch])
        return out

    @classmethod
    def single(cls, n: int, letter: str, q: int) -> "PauliString":
        return cls("".join(letter if i == q else "I" for i in range(n)))


def pauli_exp_angle(theta: float) -> float:
    a = abs(theta)
    return 2.0 * math.acos(math.sqrt(math.cosh(theta) / (math.cosh(theta) + math.sinh(a))))


def pauli_exp_block(theta: float, P: PauliString) -> BlockEncoding:
    """One-ancilla block for exp(θP)/exp(|θ|)."""
    phi = pauli_exp_angle(theta)
    n = P.num_qubits
    c = Circuit(n, 1)
    c.add(Gate(G.ry(phi), (0,), label="Ry"))
    for q, ch in enumerate(P.letters):
        if ch != "I":
            c.add(G.pauli_gate(ch, q + 1, controls=((0, 1),)))
    c.add(Gate(G.ry(-np.sign(theta) * phi), (0,), label="Ry"))
    c.plan_postselect(0, 0, "pauli-exp")
    return BlockEncoding(c, 1, math.exp(abs(theta)), f"exp({theta:+.6g}·{P.letters})",
                         {"theta": theta, "phi": phi, "pauli": P.letters})


def run_blocks_sequential(blocks: list, state: StateVector):
    """Apply blocks one after another, reusing fresh ancillas; returns (state, cumulative p)."""
    p = 1.0
    for b in blocks:
        state, pb = b.apply(state)
        p *= pb
    return state, p


# ---------------------------------------------------------------- operator-level route


def apply_spectral_function_exact(state: StateVector, diagonal, n: int, d: int = 1, fourier: bool = True):
    """F g(k̂) F† applied to amplitudes; returns (normalized state, survival ‖out‖²/‖in‖²)."""
    vals = diagonal.values if isinstance(diagonal, SpectralDiagonal) else np.asarray(diagonal)
    a = state.amplitudes
    if vals.size != a.size:
        raise ValueError("diagonal length does not match register")
    if fourier:
        out = from_fourier(vals * to_fourier(a, n, d), n, d)
    else:
        out = vals * a
    p = float(np.vdot(out, out).real / np.vdot(a, a).real)
    if p < 1e-30:
        raise AnnihilatedBranch(p)
    return StateVector(state.num_qubits, out / math.sqrt(np.vdot(out, out).real), state.norm_squared * p), p


# ---------------------------------------------------------------- composition


def parallel_compose(blocks: list) -> BlockEncoding:
    """Stack ancilla registers; all blocks act on one shared system register."""
    ns = {b.circuit.num_system_qubits for b in blocks}
    if len(ns) != 1:
        raise ValueError("blocks must share the system register")
    n = ns.pop()
    A = sum(b.ancilla_count for b in blocks)
    check_budget(A + n)
    c = Circuit(n, A)
    off = 0
    scale = 1.0
    for b in blocks:
        a = b.ancilla_count

        def remap(q, a=a, off=off):
            return q + off if q < a else q - a + A

        for g in b.circuit.gates:
            c.add(Gate(g.matrix, tuple(remap(t) for t in g.targets), tuple((remap(q), v) for q, v in g.controls), g.label))
        c.global_phase += b.circuit.global_phase
        off += a
        scale *= b.scale
    for q in range(A):
        c.plan_postselect(q, 0, "parallel")
    calls = sum(b.extra.get("select_calls", 0) for b in blocks)
    return BlockEncoding(c, A, scale, " ⊗ ".join(b.target for b in blocks), {"realization": "LCU", "select_calls": calls})


def with_qft(be: BlockEncoding, n: int, d: int) -> BlockEncoding:
    """F^{⊗d} · block · F†^{⊗d} on the system register (qft gates carry no global phase)."""
    from .grid import GridSpec, tensor_qft_d

    q = tensor_qft_d(GridSpec(d, n))
    a = be.ancilla_count
    c = Circuit(be.circuit.num_system_qubits, a, global_phase=be.circuit.global_phase)
    c.compose(q.inverse(), offset=a)
    c.gates.extend(be.circuit.gates)
    c.compose(q, offset=a)
    c.postselect_plan = list(be.circuit.postselect_plan)
    return BlockEncoding(c, a, be.scale, f"F·[{be.target}]·F†", dict(be.extra))


def embed_zphase(zp: ZPhase, n: int, d: int, axis: int) -> ZPhase:
    return zp.shifted(axis * n, total=n * d)
