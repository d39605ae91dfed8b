"""Diagonal density-matrix encoding evolved by shift-operator jumps.

The field f >= 0 with Σf = 1 sits on the diagonal of ρ (position order,
unit-interval grid). Each jump L = c·S or c·S† is applied by dilating with
one ancilla, running exp(−i√τK) and tracing the ancilla out; no
postselection is involved.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import gates as G
from . import oracle
from .grid import GridSpec, bitrev_perm, build_shifted_qft, qft_matrix_flat
from .sim import Circuit, DensityMatrix, Gate, check_budget, circuit_unitary

# fitted once on a τ sweep with a delta input (the worst case, ‖ρ − SρS†‖₁ = 2) and frozen:
# ‖step(ρ) − (ρ + τ𝒟ρ)‖₁ ≤ DEFECT_CONSTANT · τ²‖L‖⁴
DEFECT_CONSTANT = 0.67


class LindbladInputError(ValueError):
    pass


def shift_matrix(N: int) -> np.ndarray:
    """S|l> = |l−1> with periodic wrap, position order."""
    return np.roll(np.eye(N), -1, axis=0)


@dataclass(frozen=True)
class JumpOperator:
    kind: str  # "shift" | "shift_adjoint"
    prefactor: float
    axis: int = 0

    def __post_init__(self):
        if self.kind not in ("shift", "shift_adjoint"):
            raise ValueError("kind must be 'shift' or 'shift_adjoint'")
        if self.prefactor < 0:
            raise ValueError("prefactor must be nonnegative")

    @property
    def sign(self) -> int:
        return 1 if self.kind == "shift" else -1

    def matrix_1d(self, N: int) -> np.ndarray:
        s = shift_matrix(N)
        return self.prefactor * (s if self.kind == "shift" else s.T)

    def matrix(self, n: int, d: int) -> np.ndarray:
        return oracle.embed_axis(self.matrix_1d(2**n), self.axis, d)


def heat_jumps(n: int, d: int, u: float) -> list:
    """Order L₁, L₂ per dimension, dimensions in index order."""
    c = math.sqrt(u) * 2**n
    return [JumpOperator(k, c, ax) for ax in range(d) for k in ("shift", "shift_adjoint")]


def advection_jump(n: int, r: float, axis: int = 0) -> JumpOperator:
    return JumpOperator("shift", math.sqrt(r * 2**n), axis)


@dataclass
class DiagonalEncoding:
    rho: DensityMatrix
    grid: GridSpec
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_field(cls, f0, grid: GridSpec) -> "DiagonalEncoding":
        f = np.asarray(f0, dtype=float).reshape(-1)
        if f.size != grid.N**grid.d:
            raise LindbladInputError("field size does not match the grid")
        if f.min() < 0:
            raise LindbladInputError("negative input values")
        if abs(f.sum() - 1) > 1e-10:
            raise LindbladInputError("field must sum to 1")
        check_budget(grid.num_qubits + 1, "density")
        return cls(DensityMatrix(grid.num_qubits, np.diag(f).astype(complex), 1.0), grid)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.rho.entries).real.copy()

    def offdiagonal_mass(self) -> float:
        r = self.rho.entries
        return float(np.abs(r - np.diag(np.diag(r))).sum())


def dissipator(rho, jumps, n: int, d: int = 1) -> np.ndarray:
    """Σ LρL† − ½{L†L, ρ}."""
    r = np.asarray(getattr(rho, "entries", rho), dtype=complex)
    out = np.zeros_like(r)
    for j in jumps:
        L = j.matrix(n, d)
        LdL = L.conj().T @ L
        out += L @ r @ L.conj().T - 0.5 * (LdL @ r + r @ LdL)
    return out


# ---------------------------------------------------------------- dilation unitaries


def _zk_terms(n: int, alpha: float) -> list:
    """(qubits, angle) for exp(iα Z_anc ⊗ k̂) with the ancilla on qubit 0."""
    N = 2**n
    out = [((0,), -alpha / 2)]
    out += [((0, b + 1), -alpha * N / 4 * 2.0**-b) for b in range(n)]
    return out


def dilation_circuit(jump: JumpOperator, n: int, tau: float) -> Circuit:
    """exp(−i√τK) on (ancilla, register): F · e^{−iφZ/2} e^{−iθX} e^{iφZ/2} · F†.

    φ = ±2πk̂/N and θ = c√τ; conjugating X by the Z_anc⊗k̂ rotation turns it
    into X cos φ + Y sin φ, which is the Fourier-diagonal form of K.
    """
    N = 2**n
    theta = jump.prefactor * math.sqrt(tau)
    alpha = jump.sign * math.pi / N
    qft = build_shifted_qft(n)
    c = Circuit(n, 1)
    c.extend(g.shifted(1) for g in qft.inverse().gates)
    for qs, a in _zk_terms(n, alpha):
        c.add(Gate(G.zexp(a) if len(qs) == 1 else G.zz_exp(a), qs, label="Zrot" if len(qs) == 1 else "ZZrot"))
    rx = math.cos(theta) * np.eye(2) - 1j * math.sin(theta) * G.PAULI["X"]
    c.add(Gate(rx, (0,), label="Rx"))
    for qs, a in _zk_terms(n, -alpha):
        c.add(Gate(G.zexp(a) if len(qs) == 1 else G.zz_exp(a), qs, label="Zrot" if len(qs) == 1 else "ZZrot"))
    c.extend(g.shifted(1) for g in qft.gates)
    return c


def dilation_generator(jump: JumpOperator, n: int) -> np.ndarray:
    """K = |1><0|⊗L + |0><1|⊗L† in position order."""
    L = jump.matrix_1d(2**n)
    z = np.zeros_like(L)
    return np.block([[z, L.conj().T], [L, z]]).astype(complex)


def _to_position(m_reg: np.ndarray, n: int) -> np.ndarray:
    p = bitrev_perm(n)
    return m_reg[np.ix_(p, p)]


def dilation_kraus(jump: JumpOperator, n: int, tau: float, route: str = "circuit") -> tuple:
    """(A₀, A₁) = (<0|V|0>, <1|V|0>) on the register, position order."""
    N = 2**n
    if route == "circuit":
        v = circuit_unitary(dilation_circuit(jump, n, tau))
        a0, a1 = v[:N, :N], v[N:, :N]
        return _to_position(a0, n), _to_position(a1, n)
    if route == "dense":
        v = scipy.linalg.expm(-1j * math.sqrt(tau) * dilation_generator(jump, n))
        return v[:N, :N], v[N:, :N]
    raise ValueError("route must be 'circuit' or 'dense'")


def fourier_form(jump: JumpOperator, n: int, tau: float) -> np.ndarray:
    """exp(−i c√τ [X⊗cos(2πk̂/N) ± Y⊗sin(2πk̂/N)]) in the wavenumber register."""
    N = 2**n
    k = np.arange(N) - N / 2
    phi = jump.sign * 2 * math.pi * k / N
    h = np.kron(G.PAULI["X"], np.diag(np.cos(phi))) + np.kron(G.PAULI["Y"], np.diag(np.sin(phi)))
    return scipy.linalg.expm(-1j * jump.prefactor * math.sqrt(tau) * h)


def conjugated_dilation(jump: JumpOperator, n: int, tau: float) -> np.ndarray:
    """(𝟙⊗F†) exp(−i√τK) (𝟙⊗F) from dense K in the register basis."""
    N = 2**n
    p = bitrev_perm(n)
    perm = np.concatenate([p, N + p])
    k_reg = dilation_generator(jump, n)[np.ix_(perm, perm)]
    v = scipy.linalg.expm(-1j * math.sqrt(tau) * k_reg)
    F = np.kron(np.eye(2), qft_matrix_flat(n))
    return F.conj().T @ v @ F


def _apply_axis(r: np.ndarray, a: np.ndarray, axis: int, n: int, d: int) -> np.ndarray:
    """A_axis ρ A_axis† for ρ of shape (N^d, N^d)."""
    N = 2**n
    t = r.reshape((N,) * (2 * d))
    t = np.moveaxis(np.tensordot(a, t, axes=([1], [axis])), 0, axis)
    t = np.moveaxis(np.tensordot(a.conj(), t, axes=([1], [d + axis])), 0, d + axis)
    return t.reshape(N**d, N**d)


def dilation_step(rho, jump: JumpOperator, tau: float, n: int, d: int = 1, route: str = "circuit", kraus=None):
    """tr_anc[V(|0><0|⊗ρ)V†] for V = exp(−i√τK)."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    r = np.asarray(getattr(rho, "entries", rho), dtype=complex)
    if tau == 0:
        return r.copy()
    a0, a1 = kraus if kraus is not None else dilation_kraus(jump, n, tau, route)
    return _apply_axis(r, a0, jump.axis, n, d) + _apply_axis(r, a1, jump.axis, n, d)


def single_step_defect(rho, jump: JumpOperator, tau: float, n: int, d: int = 1, route: str = "circuit") -> float:
    """Trace norm of step(ρ) − (ρ + τ𝒟_L(ρ))."""
    r = np.asarray(getattr(rho, "entries", rho), dtype=complex)
    diff = dilation_step(r, jump, tau, n, d, route) - (r + tau * dissipator(r, [jump], n, d))
    return float(np.linalg.norm(diff, "nuc"))


def defect_bound(jump: JumpOperator, tau: float) -> float:
    return DEFECT_CONSTANT * tau**2 * jump.prefactor**4


# ---------------------------------------------------------------- evolution


def evolve(enc: DiagonalEncoding, jumps: list, t: float, steps: int, route: str = "circuit", record_every: int = 0):
    """Repeat the per-jump dilation steps; tracks trace drift, positivity, coherence."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    n, d = enc.grid.n, enc.grid.d
    r = enc.rho.entries.copy()
    traj = [(0, np.diag(r).real.copy())] if record_every else []
    stats = {"max_trace_drift": 0.0, "min_diagonal": float(np.diag(r).real.min()), "max_offdiagonal": 0.0}
    if t == 0:
        return DiagonalEncoding(DensityMatrix(r.shape[0].bit_length() - 1, r, 1.0), enc.grid, {**stats, "steps": steps, "trajectory": traj})
    tau = t / steps
    kraus = [dilation_kraus(j, n, tau, route) for j in jumps]
    for s in range(1, steps + 1):
        for j, kr in zip(jumps, kraus):
            r = dilation_step(r, j, tau, n, d, kraus=kr)
        diag = np.diag(r).real
        stats["max_trace_drift"] = max(stats["max_trace_drift"], abs(diag.sum() - 1))
        stats["min_diagonal"] = min(stats["min_diagonal"], float(diag.min()))
        stats["max_offdiagonal"] = max(stats["max_offdiagonal"], float(np.abs(r - np.diag(np.diag(r))).sum()))
        if record_every and s % record_every == 0:
            traj.append((s, diag.copy()))
    rho = DensityMatrix(enc.rho.num_qubits, r, float(np.trace(r).real))
    return DiagonalEncoding(rho, enc.grid, {**stats, "steps": steps, "tau": tau, "trajectory": traj})


def evolve_lindblad_heat(f0, t: float, steps: int, grid: GridSpec, u: float = 1.0, route: str = "circuit", record_every: int = 0):
    if t < 0:
        raise ValueError("time must be nonnegative")
    enc = DiagonalEncoding.from_field(f0, grid)
    return evolve(enc, heat_jumps(grid.n, grid.d, u), t, steps, route, record_every)


def fd_heat_reference(f0, t: float, grid: GridSpec, u: float = 1.0) -> np.ndarray:
    """Dense expm of the periodic second-difference generator."""
    f = np.asarray(f0, dtype=float).reshape(-1)
    return (oracle.dense_expm(u * oracle.laplacian(grid), t) @ f).real


def calibrate_steps(f0, t: float, grid: GridSpec, target: float, u: float = 1.0, start: int = 8, max_steps: int = 1 << 16) -> int:
    """Doubling search: stop once two consecutive step counts differ by ≤ target/2 in L¹.

    The accumulated error is first order in τ, so the finer run then sits
    about that far from the continuum limit.
    """
    steps = start
    prev = evolve_lindblad_heat(f0, t, steps, grid, u).diagonal
    while steps < max_steps:
        cur = evolve_lindblad_heat(f0, t, 2 * steps, grid, u).diagonal
        steps *= 2
        if np.abs(cur - prev).sum() <= target / 2:
            return steps
        prev = cur
    return steps


def trajectory_csv(enc: DiagonalEncoding) -> str:
    """(step, l_1..l_d, f) rows, '\\n' line endings."""
    g = enc.grid
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step"] + (["l"] if g.d == 1 else [f"l{i + 1}" for i in range(g.d)]) + ["f"])
    for s, diag in enc.extra.get("trajectory", []):
        for flat, val in enumerate(diag):
            w.writerow([s, *np.unravel_index(flat, (g.N,) * g.d), repr(float(val))])
    return buf.getvalue()

