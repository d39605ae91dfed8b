"""Periodic Poisson problem Δf = g solved through the pseudo-inverse of the stencil Laplacian."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .blocks import BlockEncoding, khat2_zphase, khat_zphase, realize_fourier_series, MAX_INDEX_QUBITS
from .grid import GridSpec, flat_to_position, from_fourier, khat_diagonal, khat_nd, position_to_flat, to_fourier
from .series import (
    InverseFourierParams,
    SeriesSpec,
    dft_series_of_diagonal,
    inverse_fourier_params,
    jacobi_anger_coeffs,
)
from .sim import BudgetExceeded, Circuit, StateVector, circuit_unitary


class PoissonInputError(ValueError):
    pass


@dataclass
class PoissonProblem:
    grid: GridSpec
    epsilon: float = 1e-2
    kmax: int | None = None

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.kmax is not None and not 1 <= self.kmax < self.grid.N // 2:
            raise ValueError("kmax must satisfy 1 <= kmax < N/2")


def A_diagonal(n: int, d: int) -> np.ndarray:
    """−4N² Σ sin²(πk̂_α/N) over the flat d-dimensional wavenumber register."""
    N = 2**n
    return -4.0 * N**2 * sum(np.sin(np.pi * k / N) ** 2 for k in khat_nd(n, d))


def A_smooth_diagonal(n: int, d: int) -> np.ndarray:
    return -4.0 * math.pi**2 * sum(k**2 for k in khat_nd(n, d))


def _pinv_diag(vals: np.ndarray) -> np.ndarray:
    out = np.zeros_like(vals, dtype=float)
    nz = np.abs(vals) > 1e-9
    out[nz] = 1.0 / vals[nz]
    return out


def kappa_tilde(n: int, d: int) -> float:
    return d * 4**n / 4


def _check_zero_mode(g: np.ndarray, n: int, d: int) -> None:
    c = to_fourier(g, n, d)
    zero = int(np.flatnonzero(np.all([k == 0 for k in khat_nd(n, d)], axis=0))[0])
    rest = np.delete(c, zero)
    if np.linalg.norm(rest) <= 1e-12 * max(np.linalg.norm(c), 1e-300):
        raise PoissonInputError("zero-mode input: g has no component outside the constant mode")


def poisson_oracle(problem: PoissonProblem, g: StateVector):
    """Mean-free solution (normalized) and p = ‖A⁺g‖²/‖g‖² via the FFT route."""
    gr = problem.grid
    _check_zero_mode(g.amplitudes, gr.n, gr.d)
    f = flat_to_position(g.amplitudes, gr.n, gr.d)
    out = oracle.fft_evolve(oracle.poisson_diagonal(gr), f, gr)
    p = float(np.vdot(out, out).real / np.vdot(f, f).real)
    a = position_to_flat(out, gr.n, gr.d)
    return StateVector(g.num_qubits, a / np.linalg.norm(a), g.norm_squared * p), p


def build_poisson_1d_dft(problem: PoissonProblem) -> BlockEncoding:
    gr = problem.grid
    if gr.d != 1:
        raise ValueError("the DFT route is one-dimensional")
    ser = dft_series_of_diagonal(_pinv_diag(A_diagonal(gr.n, 1)))
    be = realize_fourier_series(ser, khat_zphase(gr.n, 2 * math.pi / gr.N), drop_tol=1e-18)
    be.extra.update(D=ser.D, min_eig_pinv=-1 / (4 * gr.N**2))
    return be


# ---------------------------------------------------------------- Fourier-series inverse


def cosine_ja_series(beta: float, epsilon: float) -> SeriesSpec:
    """e^{iβ(1−cos θ)} ≈ e^{iβ} Σ_ν i^ν J_ν(−β) e^{iνθ}."""
    base = jacobi_anger_coeffs(-beta, epsilon)
    nu = base.zetas
    coeffs = np.exp(1j * beta) * (1j ** (nu % 4)) * base.coefficients
    spec = SeriesSpec(coeffs, nu, "2πk̂/N", base.D, epsilon, base.empirical_error, base.scaling_estimate, {"beta": beta})
    return spec


def _geometric(v: np.ndarray, G: int) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    den = 1 - v
    small = np.abs(den) < 1e-13
    out = np.empty_like(v)
    out[small] = G
    out[~small] = (1 - v[~small] ** G) / den[~small]
    return out


@dataclass
class PoissonInverse:
    """Outer Fourier series over a compiled per-dimension controlled operator."""

    kind: str
    n: int
    d: int
    params: InverseFourierParams
    inner: list
    epsilon_abs: float
    kmax: int | None = None
    extra: dict = field(default_factory=dict)

    def inner_diagonal(self) -> np.ndarray:
        """Diagonal of the realized e^{−iδyδzÃ} read off the compiled circuits."""
        per_axis = []
        for item in self.inner:
            if isinstance(item, BlockEncoding):
                per_axis.append(np.diag(item.block()))
            else:
                per_axis.append(np.diag(circuit_unitary(item)))
        out = np.ones(1, dtype=complex)
        for u in per_axis:
            out = np.kron(out, u)
        return out

    def spectral_values(self) -> np.ndarray:
        """Series Σ_ζ Σ_η w_η u^{ζη} on every wavenumber index."""
        u = self.inner_diagonal()
        w = self.params.weights()[0]
        eta = np.arange(-self.params.K, self.params.K + 1)
        out = np.zeros(u.shape, dtype=complex)
        for e, we in zip(eta, w):
            if e == 0:
                continue
            out += we * _geometric(u**e, self.params.G)
        return out

    def operator(self) -> np.ndarray:
        """Dense realized map in register basis."""
        vals = self.spectral_values()
        M = vals.size
        eye = np.eye(M, dtype=complex)
        return from_fourier(vals[:, None] * to_fourier(eye, self.n, self.d), self.n, self.d)

    def apply(self, g: StateVector):
        vals = self.spectral_values()
        out = from_fourier(vals * to_fourier(g.amplitudes, self.n, self.d), self.n, self.d)
        p = float(np.vdot(out, out).real / np.vdot(g.amplitudes, g.amplitudes).real)
        return StateVector(g.num_qubits, out / math.sqrt(np.vdot(out, out).real), g.norm_squared * p), p

    def gate_accounting(self) -> dict:
        terms = self.params.num_terms
        if self.kind == "ddim":
            per_dim = int(self.inner[0].extra["select_calls"])
            per_dim_gates = len(self.inner[0].circuit.gates)
        else:
            per_dim = 1
            per_dim_gates = len(self.inner[0].gates)
        return {
            "outer_terms": terms,
            "G": self.params.G,
            "K": self.params.K,
            "per_dimension_select_calls": per_dim,
            "per_dimension_gates": per_dim_gates,
            "controlled_op_gates": self.d * per_dim_gates,
            "total_select_calls": terms * self.d * per_dim,
        }


def _outer_index_qubits(params: InverseFourierParams) -> int:
    return max(1, math.ceil(math.log2(params.num_terms)))


def build_poisson_ddim(problem: PoissonProblem, compile_outer: bool = False, ja_epsilon: float = 1e-14) -> PoissonInverse:
    """Fourier-series pseudo-inverse with κ̃ = dN²/4 and Ã = A/(16κ̃).

    The absolute tolerance handed to the calibration is ε·‖A⁺‖, checked on
    the actual nonzero eigenvalues, so the realized map is ε-relative.
    """
    gr = problem.grid
    n, d, N = gr.n, gr.d, gr.N
    kt = kappa_tilde(n, d)
    A = A_diagonal(n, d)
    nz = np.abs(A) > 1e-9
    pinv_norm = float(1 / np.abs(A[nz]).min())
    xs = np.unique(np.round(np.abs(A[nz]) / (16 * kt), 14))
    eps_abs = problem.epsilon * pinv_norm
    params = inverse_fourier_params(kt, eps_abs, check_points=xs)
    if compile_outer and _outer_index_qubits(params) > MAX_INDEX_QUBITS:
        raise BudgetExceeded(f"outer series needs {_outer_index_qubits(params)} index qubits")
    beta = 2 * N**2 * params.delta_y * params.delta_z / (16 * kt)
    ser = cosine_ja_series(beta, ja_epsilon)
    inner = []
    for ax in range(d):
        be = realize_fourier_series(ser, khat_zphase(n, 2 * math.pi / N))
        be.extra.update(axis=ax, beta=beta, D=ser.D)
        inner.append(be)
    return PoissonInverse("ddim", n, d, params, inner, eps_abs, extra={"kappa_tilde": kt, "pinv_norm": pinv_norm, "beta": beta})


def build_poisson_smooth(problem: PoissonProblem) -> PoissonInverse:
    """Series for (A′)⁻¹, A′ = −4π²Σk̂², κ′ = d·kmax², over exact k̂² phase circuits."""
    if problem.kmax is None:
        raise ValueError("smooth route needs kmax")
    gr = problem.grid
    n, d, km = gr.n, gr.d, problem.kmax
    kp = float(d * km**2)
    pref = 4 * math.pi**2 * kp
    pinv_norm = 1 / (4 * math.pi**2)
    ks = np.arange(-km, km + 1)
    grids = np.meshgrid(*([ks] * d), indexing="ij")
    sums = np.unique(sum(g**2 for g in grids).ravel())
    xs = sums[sums > 0] / kp
    eps_abs = problem.epsilon * pinv_norm
    params = inverse_fourier_params(kp, eps_abs, check_points=xs, prefactor=pref)
    alpha = params.delta_y * params.delta_z / kp
    inner = []
    for ax in range(d):
        zp = khat2_zphase(n, alpha)
        c = Circuit(n, 0)
        c.extend(zp.gates())
        c.global_phase = zp.scalar
        inner.append(c)
    return PoissonInverse("smooth", n, d, params, inner, eps_abs, km, {"kappa_prime": kp, "alpha": alpha})


def band_limited_mask(n: int, d: int, kmax: int) -> np.ndarray:
    return np.all([np.abs(k) <= kmax for k in khat_nd(n, d)], axis=0)


def solution_csv(grid: GridSpec, amps) -> str:
    """Field over grid coordinates: x_1..x_d, re, im ('\\n' endings)."""
    f = flat_to_position(np.asarray(amps), grid.n, grid.d).reshape(-1)
    x = grid.positions()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(grid.d)] + ["re", "im"])
    for flat, val in enumerate(f):
        idx = np.unravel_index(flat, (grid.N,) * grid.d)
        w.writerow([repr(float(x[i])) for i in idx] + [repr(float(val.real)), repr(float(val.imag))])
    return buf.getvalue()
