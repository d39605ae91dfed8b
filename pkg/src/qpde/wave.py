"""Acoustic wave equation recast as Schrödinger evolution on a gamma ⊗ grid register.

Register layout everywhere: the q gamma qubits come first, then the d grid
registers in flat (bit-reversed position) order.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import gates as G
from . import oracle
from .blocks import BlockEncoding, PauliString, ZPhase, khat_zphase, realize_fourier_series, state_prep_unitary
from .grid import khat_diagonal, position_to_flat, qft_matrix_flat, to_fourier, from_fourier
from .series import dft_series_of_diagonal, jacobi_anger_coeffs
from .sim import Circuit, Gate, StateVector, check_budget


class WaveInputError(ValueError):
    pass


# ---------------------------------------------------------------- gamma sets


@dataclass(frozen=True)
class GammaSet:
    d: int
    strings: tuple

    @property
    def num_qubits(self) -> int:
        return self.strings[0].num_qubits

    @property
    def max_weight(self) -> int:
        return max(s.weight for s in self.strings)

    @property
    def weight_bound(self) -> int:
        m = self.d if self.d % 2 else self.d + 1
        return max(1, _ceil_log3(m))

    def matrices(self) -> list:
        return [s.matrix() for s in self.strings]

    def anticommutation_error(self) -> float:
        mats = self.matrices()
        eye = np.eye(mats[0].shape[0])
        err = 0.0
        for i, a in enumerate(mats):
            for j, b in enumerate(mats):
                want = 2 * eye if i == j else 0 * eye
                err = max(err, float(np.abs(a @ b + b @ a - want).max()))
        return err


def _ceil_log3(m: int) -> int:
    k, p = 0, 1
    while p < m:
        p *= 3
        k += 1
    return k


def gamma_qubits(d: int) -> int:
    if d < 1:
        raise ValueError("d >= 1")
    if d == 1:
        return 1
    return (d - 1) // 2 if d % 2 else d // 2


def gamma_ternary_tree(d: int) -> GammaSet:
    """Mutually anticommuting Pauli strings from root-to-leaf paths of a ternary tree.

    Tree nodes are qubits filled breadth first; every free child slot is a
    leaf.  The d shallowest leaves are kept.
    """
    q = gamma_qubits(d)
    children = {((j - 1) // 3, (j - 1) % 3): j for j in range(1, q)}
    leaves = []

    def walk(node, path):
        for slot, letter in enumerate("XYZ"):
            p = path + [(node, letter)]
            if (node, slot) in children:
                walk(children[(node, slot)], p)
            else:
                leaves.append(p)

    walk(0, [])
    leaves.sort(key=len)
    out = []
    for path in leaves[:d]:
        letters = ["I"] * q
        for node, ch in path:
            letters[node] = ch
        out.append(PauliString("".join(letters)))
    return GammaSet(d, tuple(out))


# ---------------------------------------------------------------- Hamiltonian


def _register_index(n: int, d: int) -> np.ndarray:
    N = 2**n
    return position_to_flat(np.arange(N**d, dtype=float), n, d).real.astype(int)


def to_register_basis(m_pos: np.ndarray, n: int, d: int) -> np.ndarray:
    """Operator on position-ordered arrays -> operator on register amplitudes."""
    idx = _register_index(n, d)
    return np.asarray(m_pos)[np.ix_(idx, idx)]


def sqrt_laplacian_1d(n: int) -> np.ndarray:
    """O = F D F† in register basis, D = 2N sin(πk̂/N) (signed, as written)."""
    N = 2**n
    F = qft_matrix_flat(n)
    D = 2 * N * np.sin(np.pi * khat_diagonal(n) / N)
    return (F * D) @ F.conj().T


@dataclass
class WaveHamiltonian:
    d: int
    n: int
    v: float
    gamma: GammaSet
    matrix: np.ndarray
    O: list = field(repr=False)

    @property
    def num_gamma_qubits(self) -> int:
        return self.gamma.num_qubits

    @property
    def grid_size(self) -> int:
        return 2 ** (self.n * self.d)

    def laplacian(self) -> np.ndarray:
        from .grid import GridSpec

        return to_register_basis(oracle.laplacian(GridSpec(self.d, self.n)), self.n, self.d)

    def pinv(self) -> np.ndarray:
        if not hasattr(self, "_pinv"):
            self._pinv = oracle.dense_pinv(self.matrix, rcond=1e-12)
        return self._pinv

    def kernel_projector(self) -> np.ndarray:
        return np.eye(self.matrix.shape[0]) - self.pinv() @ self.matrix


def wave_hamiltonian(d: int, n: int, v: float = 1.0, gamma: GammaSet | None = None) -> WaveHamiltonian:
    gamma = gamma or gamma_ternary_tree(d)
    N = 2**n
    dim = 2**gamma.num_qubits * N**d
    if dim > oracle.DENSE_LIMIT:
        raise ValueError(f"dense Hamiltonian of size {dim} exceeds {oracle.DENSE_LIMIT}")
    O1 = sqrt_laplacian_1d(n)
    Os = [oracle.embed_axis(O1, ax, d) for ax in range(d)]
    H = sum(np.kron(g, o) for g, o in zip(gamma.matrices(), Os)) * v
    return WaveHamiltonian(d, n, float(v), gamma, H, Os)


# ---------------------------------------------------------------- encodings


@dataclass
class WaveEncoding:
    variant: str
    zeta: int
    state: StateVector
    norm: float
    blocks: dict = field(repr=False, default_factory=dict)


def _sector(ham: WaveHamiltonian, zeta: int, x) -> np.ndarray:
    K = 2**ham.num_gamma_qubits
    if not 0 <= zeta < K:
        raise ValueError("zeta outside the gamma register")
    e = np.zeros(K)
    e[zeta] = 1.0
    x = np.asarray(x, dtype=complex)
    if x.size != ham.grid_size:
        raise ValueError("field length does not match the grid")
    return np.kron(e, x)


def _kernel_mass(ham: WaveHamiltonian, vec: np.ndarray) -> float:
    nv = np.vdot(vec, vec).real
    if nv == 0:
        return 0.0
    k = ham.kernel_projector() @ vec
    return float(np.vdot(k, k).real / nv)


def encode_initial(variant: str, zeta: int, f, dtf, ham: WaveHamiltonian) -> WaveEncoding:
    """Variant A: |ζ⟩⊗∂f − iℋ|ζ⟩⊗f.  Variant B: |ζ⟩⊗f + iℋ⁺|ζ⟩⊗∂f (kernel-free ∂f only)."""
    variant = variant.upper()
    if variant == "A":
        vec = _sector(ham, zeta, dtf) - 1j * ham.matrix @ _sector(ham, zeta, f)
    elif variant == "B":
        s = _sector(ham, zeta, dtf)
        mass = _kernel_mass(ham, s)
        if mass > 1e-10:
            raise WaveInputError(f"time derivative has kernel mass {mass:.3e}")
        vec = _sector(ham, zeta, f) + 1j * ham.pinv() @ s
    else:
        raise ValueError("variant must be 'A' or 'B'")
    nrm = float(np.linalg.norm(vec))
    if nrm == 0:
        raise WaveInputError("encoded state is zero")
    K = 2**ham.num_gamma_qubits
    parts = vec.reshape(K, -1)
    blocks = {z: parts[z] / nrm for z in range(K) if np.abs(parts[z]).max() > 0}
    return WaveEncoding(variant, zeta, StateVector(ham.num_gamma_qubits + ham.n * ham.d, vec / nrm), nrm, blocks)


def decode(ham: WaveHamiltonian, variant: str, zeta: int, psi, norm: float = 1.0):
    """Least-squares (f, ∂f) with ψ·norm = encoding(f, ∂f).

    In variant A the zero mode of f never enters ψ; the minimum-norm
    solution returns it as zero.
    """
    M = ham.grid_size
    K = 2**ham.num_gamma_qubits
    S = np.kron(np.eye(K)[:, [zeta]], np.eye(M))
    if variant.upper() == "A":
        L = np.hstack([-1j * ham.matrix @ S, S])
    else:
        L = np.hstack([S, 1j * ham.pinv() @ S])
    sol = np.linalg.lstsq(L, np.asarray(psi) * norm, rcond=1e-12)[0]
    return sol[:M], sol[M:]


def _dilation(h: np.ndarray, afunc) -> np.ndarray:
    """Unitary [[A, B], [B, −A†]] for A = afunc(h), h Hermitian, ‖A‖ ≤ 1."""
    lam, V = np.linalg.eigh((h + h.conj().T) / 2)
    a = afunc(lam)
    b = np.sqrt(np.clip(1 - np.abs(a) ** 2, 0, None))
    A = (V * a) @ V.conj().T
    B = (V * b) @ V.conj().T
    return np.block([[A, B], [B, -A.conj().T]])


def state_prep_circuit(variant: str, zeta: int, f, dtf, ham: WaveHamiltonian) -> Circuit:
    """Two-branch summing skeleton; 𝒰 / 𝒱 enter as opaque dense dilations.

    Qubit 0 sums the branches, qubit 1 dilates the non-unitary operator; both
    are postselected on 0.
    """
    variant = variant.upper()
    lam = np.linalg.eigvalsh(ham.matrix)
    if variant == "A":
        first, second = _sector(ham, zeta, dtf), _sector(ham, zeta, f)
        s = float(np.abs(lam).max()) or 1.0
        afunc = lambda x: -1j * x / s  # noqa: E731
    elif variant == "B":
        first, second = _sector(ham, zeta, f), _sector(ham, zeta, dtf)
        if _kernel_mass(ham, second) > 1e-10:
            raise WaveInputError("time derivative overlaps the kernel")
        inv = np.array([1 / x if abs(x) > 1e-9 else 0.0 for x in lam])
        s = float(np.abs(inv).max()) or 1.0
        afunc = lambda x: 1j * np.where(np.abs(x) > 1e-9, 1 / np.where(np.abs(x) > 1e-9, x, 1), 0) / s  # noqa: E731
    else:
        raise ValueError("variant must be 'A' or 'B'")
    w0 = float(np.linalg.norm(first))
    w1 = s * float(np.linalg.norm(second))
    if w0 + w1 == 0:
        raise WaveInputError("both branches vanish")
    nsys = ham.num_gamma_qubits + ham.n * ham.d
    check_budget(nsys + 2)
    sys = tuple(range(2, 2 + nsys))
    c = Circuit(nsys, 2)
    prep = state_prep_unitary(np.sqrt(np.array([w0, w1]) / (w0 + w1)))
    c.add(Gate(prep, (0,), label="PREP"))
    if w0 > 0:
        c.add(Gate(state_prep_unitary(first / w0), sys, ((0, 0),), label="U_init"))
    if w1 > 0:
        c.add(Gate(state_prep_unitary(second / np.linalg.norm(second)), sys, ((0, 1),), label="U_init"))
        c.add(Gate(_dilation(ham.matrix, afunc), (1,) + sys, ((0, 1),), label="U_op" if variant == "A" else "V_op"))
    c.add(Gate(prep.conj().T, (0,), label="UNPREP"))
    c.plan_postselect(0, 0, "sum")
    c.plan_postselect(1, 0, "dilation")
    return c


def evolve_wave_oracle(ham: WaveHamiltonian, psi0: StateVector, t: float) -> StateVector:
    U = oracle.dense_expm(-1j * ham.matrix, t)
    return StateVector(psi0.num_qubits, U @ psi0.amplitudes, psi0.norm_squared)


# ---------------------------------------------------------------- 1D circuits


def lhat_zphase(n: int) -> ZPhase:
    """e^{iπl̂/N} on (gamma qubit + n wavenumber qubits)."""
    N = 2**n
    return ZPhase(n + 1, math.pi * (N - 1) / (2 * N), [((b,), -math.pi * 2.0 ** (-b - 1)) for b in range(n + 1)])


def build_U_lhat(n: int) -> Circuit:
    c = Circuit(n + 1, 1)
    c.extend(lhat_zphase(n).gates(offset=1, controls=((0, 1),)))
    return c


def build_wave_1d_ja(n: int, t: float, epsilon: float) -> BlockEncoding:
    """Series for e^{−i2tN sin(πl̂/N)} over U_l̂ (t already multiplied by v)."""
    N = 2**n
    ser = jacobi_anger_coeffs(-2 * t * N, epsilon)
    be = realize_fourier_series(ser, lhat_zphase(n))
    be.extra.update(D=ser.D, lam=-2 * t * N, series_error=ser.empirical_error)
    return be


def build_wave_1d_dft(n: int, t: float) -> BlockEncoding:
    """Exact interpolant over the 2N distinct l̃ values."""
    N = 2**n
    ell = np.arange(-N, N)
    ser = dft_series_of_diagonal(np.exp(-2j * t * N * np.sin(np.pi * ell / N)), label="πl̂/N")
    be = realize_fourier_series(ser, lhat_zphase(n), drop_tol=1e-15)
    be.extra.update(D=ser.D)
    return be


def to_wave_frame(amps, n: int, d: int, hadamard: bool, inverse: bool = False) -> np.ndarray:
    """(H^{⊗q} ⊗ F†^{⊗d}) ψ, or its inverse; H only for the 1D X→Z rotation."""
    a = np.asarray(amps, dtype=complex)
    M = 2 ** (n * d)
    K = a.size // M
    arr = a.reshape(K, M)
    if hadamard:
        Hq = np.eye(1)
        for _ in range(int(math.log2(K))):
            Hq = np.kron(Hq, G.H)
        arr = Hq @ arr
    arr = (from_fourier(arr.T, n, d) if inverse else to_fourier(arr.T, n, d)).T
    return arr.reshape(-1)


def run_wave_1d(block: BlockEncoding, psi: StateVector, n: int):
    """(H⊗F)·block·(H⊗F†) on an encoded state; returns (state, p)."""
    s = StateVector(psi.num_qubits, to_wave_frame(psi.amplitudes, n, 1, True), psi.norm_squared)
    s, p = block.apply(s)
    return StateVector(s.num_qubits, to_wave_frame(s.amplitudes, n, 1, True, inverse=True), s.norm_squared), p


# ---------------------------------------------------------------- smooth circuits


def pauli_rotation(theta: float, letters: str, qubits, controls=(), label: str = "Prot") -> Gate:
    """exp(iθP) on the listed qubits (P given letter by letter)."""
    P = np.eye(1)
    for ch in letters:
        P = np.kron(P, G.PAULI[ch])
    m = math.cos(theta) * np.eye(P.shape[0]) + 1j * math.sin(theta) * P
    return Gate(m, tuple(qubits), tuple(controls), label=label)


def _support(P: PauliString):
    return [(i, ch) for i, ch in enumerate(P.letters) if ch != "I"]


def build_wave_smooth(dim: int, n: int, t: float, tau: float | None = None) -> Circuit:
    """1D: exact e^{−i2πtZ⊗k̂}.  dim ≥ 2: first-order Trotter of e^{−i2πtΣγ_α⊗k̂_α}."""
    if dim == 1:
        c = Circuit(n + 1, 0)
        c.add(Gate(G.zexp(math.pi * t), (0,), label="Zrot"))
        for b in range(1, n + 1):
            c.add(Gate(G.zz_exp(math.pi * t * 2.0 ** (n - b)), (0, b), label="ZZrot"))
        return c
    if tau is None or tau <= 0:
        raise ValueError("Trotter step tau must be positive")
    steps = t / tau
    if abs(steps - round(steps)) > 1e-9:
        raise ValueError("tau must divide t")
    gam = gamma_ternary_tree(dim)
    q = gam.num_qubits
    c = Circuit(q + dim * n, 0)
    for _ in range(int(round(steps))):
        for ax, P in enumerate(gam.strings):
            sup = _support(P)
            letters = "".join(ch for _, ch in sup)
            qs = [i for i, _ in sup]
            c.add(pauli_rotation(math.pi * tau, letters, qs))
            for z in range(n):
                c.add(pauli_rotation(math.pi * tau * 2.0 ** (n - z - 1), letters + "Z", qs + [q + ax * n + z], label="PZrot"))
    return c


def smooth_wave_generator(dim: int, n: int) -> np.ndarray:
    """Dense Σ γ_α ⊗ k̂_α (1D: Z ⊗ k̂) in the wavenumber frame."""
    N = 2**n
    if dim == 1:
        return np.kron(G.Z, np.diag(khat_diagonal(n)))
    gam = gamma_ternary_tree(dim)
    kd = np.diag(khat_diagonal(n))
    return sum(np.kron(g, oracle.embed_axis(kd, ax, dim)) for ax, g in enumerate(gam.matrices()))


def trotter_error_bound(d: int, kmax: int, t: float, tau: float, two_pi: bool = True) -> float:
    """τ²·d(d−1)/2·k_max²·(t/τ); two_pi adds the (2π)² carried by 𝔥_α = 2πγ_α⊗k̂_α."""
    b = tau**2 * d * (d - 1) / 2 * kmax**2 * (t / tau)
    return b * (2 * math.pi) ** 2 if two_pi else b


def band_limited_columns(dim: int, n: int, kmax: int) -> np.ndarray:
    """Indices (gamma ⊗ wavenumber registers) with every |k̃_α| ≤ kmax."""
    N = 2**n
    q = 1 if dim == 1 else gamma_qubits(dim)
    kd = khat_diagonal(n)
    ok = np.ones(1, dtype=bool)
    for _ in range(dim):
        ok = np.kron(ok, np.abs(kd) <= kmax).astype(bool)
    return np.flatnonzero(np.kron(np.ones(2**q, dtype=bool), ok))


# ---------------------------------------------------------------- block encodings


def wave_htilde(dim: int, n: int) -> np.ndarray:
    """(𝒽 + √d)/(2√d) with 𝒽 = Σ γ_α ⊗ sin(πk̂_α/N), wavenumber frame."""
    N = 2**n
    gam = gamma_ternary_tree(dim)
    s = np.diag(np.sin(np.pi * khat_diagonal(n) / N))
    h = sum(np.kron(g, oracle.embed_axis(s, ax, dim)) for ax, g in enumerate(gam.matrices()))
    r = math.sqrt(dim)
    return (h + r * np.eye(h.shape[0])) / (2 * r)


def shift_angle(d: int):
    """Prepare rotation for the identity branch and whether Hadamards suffice.

    With M uniform index branches, 2d used and w = M − 2d idle ones acting as
    identity, the block is proportional to the shifted Hamiltonian when
    cos²(φ/2) = (2√d − w)/(M + 2√d − w).  If w > 2√d the idle branches are
    given zero amplitude instead.
    """
    m = max(1, math.ceil(math.log2(2 * d)))
    M = 2**m
    w = M - 2 * d
    r2 = 2 * math.sqrt(d)
    if w <= r2:
        c2 = (r2 - w) / (M + r2 - w)
        uniform = True
    else:
        c2 = r2 / (2 * d + r2)
        uniform = False
    return 2 * math.acos(math.sqrt(c2)), m, uniform


def build_wave_block_encoding(dim: int, n: int) -> BlockEncoding:
    """LCU whose ⟨0|·|0⟩ block is proportional to the shifted, rescaled 𝒽."""
    if dim < 1:
        raise ValueError("dim >= 1")
    gam = gamma_ternary_tree(dim)
    q = gam.num_qubits
    phi, m, uniform = shift_angle(dim)
    A = 1 + m
    c = Circuit(q + dim * n, A)
    c.add(Gate(G.ry(phi), (0,), label="Ry"))
    idx = tuple(range(1, A))
    if uniform:
        prep = [G.h(i) for i in idx]
    else:
        amps = np.zeros(2**m)
        amps[: 2 * dim] = 1.0
        prep = [Gate(state_prep_unitary(amps), idx, label="PREP")]
    c.extend(prep)
    for j in range(2 * dim):
        ax, sgn = divmod(j, 2)
        sign = 1 if sgn == 0 else -1
        ctrl = ((0, 1),) + tuple((1 + b, (j >> (m - 1 - b)) & 1) for b in range(m))
        sup = _support(gam.strings[ax])
        # −iγV for the + branch, +iγV† for the − branch
        c.add(pauli_rotation(-sign * math.pi / 2, "".join(ch for _, ch in sup), [A + i for i, _ in sup], ctrl))
        zp = khat_zphase(n, sign * math.pi / 2**n)
        c.extend(zp.gates(offset=A + q + ax * n, controls=ctrl))
    c.extend(g.dagger() for g in reversed(prep))
    c.add(Gate(G.ry(-phi), (0,), label="Ry"))
    for a in range(A):
        c.plan_postselect(a, 0, "wave-lcu")
    return BlockEncoding(c, A, 1.0, f"shifted wave Hamiltonian d={dim}",
                         {"phi": phi, "index_qubits": m, "uniform_prepare": uniform, "d": dim, "n": n})


def extract_block_constant(be: BlockEncoding, htilde: np.ndarray):
    """(1/C, max deviation of block from htilde/C)."""
    blk = be.block()
    c = np.vdot(htilde, blk) / np.vdot(htilde, htilde)
    return float(c.real), float(np.abs(blk - c * htilde).max()), float(abs(c.imag))


# ---------------------------------------------------------------- gate census


def _mcrz_cnots(q: int) -> int:
    return 4 * q - 2 if q > 0 else 0


def _mcphase_cnots(q: int) -> int:
    return q * q


def _pauli_rot_cnots(r: int, q: int) -> int:
    return 2 * max(r - 1, 0) + _mcrz_cnots(q)


@dataclass
class CensusRow:
    kind: str
    count: int
    controls: int
    max_weight: int
    cnots: int


def wave_gate_census(d: int, n: int) -> dict:
    """Enumerate the select stage of the d-dimensional block encoding.

    CNOT estimates: weight-r Pauli rotation 2(r−1) plus a q-controlled Rz at
    4q−2; q-controlled phase q².
    """
    be = build_wave_block_encoding(d, n)
    A = be.ancilla_count
    rows = {"pauli_rotation": [0, set(), 0, 0], "z_rotation": [0, set(), 0, 0], "phase": [0, set(), 0, 0]}
    for g in be.circuit.gates:
        if not g.controls:
            continue
        anc_controls = sum(1 for qb, _ in g.controls if qb < A)
        if g.label == "Prot":
            key, r, qn = "pauli_rotation", len(g.targets), len(g.controls)
            cn = _pauli_rot_cnots(r, qn)
        elif g.label == "Zrot":
            key, r, qn = "z_rotation", 1, len(g.controls)
            cn = _pauli_rot_cnots(1, qn)
        elif g.label == "phase":
            # phase on one control qubit, conditioned on the others: a (1+m)-controlled phase
            key, r, qn = "phase", 0, len(g.controls) + 1
            cn = _mcphase_cnots(qn)
        else:
            continue
        row = rows[key]
        row[0] += 1
        row[1].add(qn if key == "phase" else anc_controls)
        row[2] = max(row[2], r)
        row[3] += cn
    out = []
    for k, (cnt, ctrls, w, cn) in rows.items():
        out.append(CensusRow(k, cnt, max(ctrls) if ctrls else 0, w, cn))
    m = be.extra["index_qubits"]
    expected = {"pauli_rotation": 2 * d, "z_rotation": 2 * d * n, "phase": 2 * d}
    return {
        "d": d,
        "n": n,
        "rows": out,
        "expected_rows": expected,
        "controls_expected": 1 + math.ceil(math.log2(2 * d)),
        "weight_bound": gamma_ternary_tree(d).weight_bound,
        "cnot_total": sum(r.cnots for r in out),
        "table_applies": d > 1,
        "index_qubits": m,
    }


def census_csv(census_list: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "n", "row", "count", "expected", "controls", "max_weight", "cnots"])
    for c in census_list:
        for r in c["rows"]:
            w.writerow([c["d"], c["n"], r.kind, r.count, c["expected_rows"][r.kind], r.controls, r.max_weight, r.cnots])
    return buf.getvalue()
