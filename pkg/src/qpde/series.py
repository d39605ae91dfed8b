"""Spectral diagonals of k̂ and coefficient engines for truncated operator series.

A series here is always sum_z c_z exp(i z theta) for integer orders z and a
phase unit theta that is itself a diagonal operator (2πk̂/N, πk̂/N, ...).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import khat_diagonal


# ---------------------------------------------------------------- Bessel


def bessel_j_table(x: float, order_max: int) -> np.ndarray:
    """J_0(x) ... J_{order_max}(x) by Miller's backward recurrence.

    Normalized with J_0 + 2 sum J_2k = 1.  Negative x handled by parity.
    """
    order_max = int(order_max)
    out = np.zeros(order_max + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    sign_flip = x < 0
    ax = abs(x)
    if ax < 1e-5:
        # two-term power series; the recurrence's 2k/x overflows down here
        h = ax / 2
        for nu in range(order_max + 1):
            lead = math.exp(nu * math.log(h) - math.lgamma(nu + 1)) if nu else 1.0
            out[nu] = lead * (1 - h * h / (nu + 1))
        if sign_flip:
            out[1::2] *= -1.0
        return out
    top = max(order_max, int(ax)) + 1
    m = top + 30 + int(math.sqrt(60.0 * top))
    m += m % 2
    jp1, j = 0.0, 1e-300
    vals = np.zeros(m + 1)
    vals[m] = j
    norm = 0.0
    for k in range(m, 0, -1):
        jm1 = 2.0 * k / ax * j - jp1
        jp1, j = j, jm1
        vals[k - 1] = j
        if abs(j) > 1e250:
            # rescale to dodge overflow; the normalization absorbs it
            vals[k - 1 :] *= 1e-250
            jp1 *= 1e-250
            j *= 1e-250
    norm = vals[0] + 2.0 * vals[2::2].sum()
    out[:] = vals[: order_max + 1] / norm
    if sign_flip:
        out[1::2] *= -1.0
    return out


def bessel_j(order: int, x: float) -> float:
    o = abs(int(order))
    v = bessel_j_table(x, o)[o]
    if order < 0 and o % 2:
        v = -v
    return float(v)


def bessel_j_symmetric(x: float, D: int) -> np.ndarray:
    """J_z(x) for z = -D..D."""
    t = bessel_j_table(x, D)
    neg = t[1:][::-1] * np.where(np.arange(D, 0, -1) % 2, -1.0, 1.0)
    return np.concatenate([neg, t])


# ---------------------------------------------------------------- containers


@dataclass
class SpectralDiagonal:
    values: np.ndarray
    label: str


@dataclass
class SeriesSpec:
    """sum_z coefficients[z] exp(i z theta)."""

    coefficients: np.ndarray
    zetas: np.ndarray
    phase_unit: str
    D: int
    epsilon: float = 0.0
    empirical_error: float = float("nan")
    scaling_estimate: float = float("nan")
    extra: dict = field(default_factory=dict)

    def evaluate(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        ph = np.exp(1j * np.multiply.outer(theta, self.zetas))
        return ph @ self.coefficients

    @property
    def one_norm(self) -> float:
        return float(np.abs(self.coefficients).sum())

    def nonzero(self, tol: float = 0.0) -> "SeriesSpec":
        keep = np.abs(self.coefficients) > tol
        return SeriesSpec(
            self.coefficients[keep], self.zetas[keep], self.phase_unit, self.D,
            self.epsilon, self.empirical_error, self.scaling_estimate, dict(self.extra),
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["zeta", "re", "im"])
        for z, c in zip(self.zetas, self.coefficients):
            w.writerow([int(z), repr(float(c.real)), repr(float(c.imag))])
        return buf.getvalue()


# ---------------------------------------------------------------- diagonals


def derivative_diagonals(n: int, order: int = 1, mode: str = "exact", chi: int = 3, kstar: float = 0.0):
    """Eigenvalues of the periodic FD derivative stencils over all k̃.

    order 1: i N sin(2πk/N) and approximations; order 2: -4N² sin²(πk/N).
    mode: exact | small_angle | taylor | around_kstar.
    """
    N = 2**n
    k = khat_diagonal(n)
    if mode == "exact":
        v = 1j * N * np.sin(2 * np.pi * k / N) if order == 1 else -4.0 * N**2 * np.sin(np.pi * k / N) ** 2
    elif mode == "small_angle":
        v = 2j * np.pi * k if order == 1 else -4.0 * np.pi**2 * k**2
    elif mode == "taylor":
        if chi % 2 == 0 or chi < 1:
            raise ValueError("taylor order chi must be odd")
        s = np.zeros(N)
        for z in range((chi - 1) // 2 + 1):
            s += (-1) ** z * (2 * np.pi) ** (2 * z + 1) / (math.factorial(2 * z + 1) * N ** (2 * z)) * k ** (2 * z + 1)
        # s approximates N sin(2πk/N)
        v = 1j * s if order == 1 else -(s**2)
    elif mode == "around_kstar":
        a = 2 * np.pi * kstar / N
        dk = k - kstar
        sin_approx = np.sin(a) + 2 * np.pi * np.cos(a) * dk / N - 4 * np.pi**2 * np.sin(a) * dk**2 / N**2
        v = 1j * N * sin_approx if order == 1 else -(N * sin_approx) ** 2
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return SpectralDiagonal(np.asarray(v), f"order{order}:{mode}")


def taylor_remainder_bound(n: int, chi: int, kmax: float) -> float:
    """Bound on |N sin(2πk/N) - taylor_chi| for |k| <= kmax (next-term Lagrange bound)."""
    N = 2**n
    x = 2 * np.pi * kmax / N
    return N * x ** (chi + 2) / math.factorial(chi + 2)


# ---------------------------------------------------------------- Jacobi-Anger


def ja_scaling(lam: float, epsilon: float) -> float:
    """Asymptotic form |λ| + L / log(e + L/|λ|), L = log(1/ε), with constant 1."""
    L = math.log(1.0 / epsilon)
    lam = abs(lam)
    if lam == 0:
        return 0.0
    return lam + L / math.log(math.e + L / lam)


def _theta_grid(D_hint: float) -> np.ndarray:
    m = int(8 * (D_hint + 16))
    m = max(m, 1024)
    return np.linspace(-np.pi, np.pi, m, endpoint=False)


def jacobi_anger_coeffs(lam: float, epsilon: float, theta: np.ndarray | None = None) -> SeriesSpec:
    """Truncated e^{iλ sinθ} = sum_{|z|<=D} J_z(λ) e^{izθ} with the smallest passing D."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not np.isfinite(lam):
        raise ValueError("lambda must be finite")
    est = ja_scaling(lam, epsilon)
    th = _theta_grid(abs(lam) + est) if theta is None else np.asarray(theta)
    target = np.exp(1j * lam * np.sin(th))
    Dmax = int(abs(lam) + 4 * est + 40)
    J = bessel_j_table(lam, Dmax)
    partial = np.full(th.shape, J[0], dtype=complex)
    err = float(np.abs(partial - target).max())
    D = 0
    while err > epsilon:
        D += 1
        if D > Dmax:
            raise RuntimeError("Jacobi-Anger truncation did not converge")
        jm = J[D] * (-1 if D % 2 else 1)
        partial = partial + J[D] * np.exp(1j * D * th) + jm * np.exp(-1j * D * th)
        err = float(np.abs(partial - target).max())
    coeffs = bessel_j_symmetric(lam, D).astype(complex)
    return SeriesSpec(coeffs, np.arange(-D, D + 1), "theta", D, epsilon, err, est, {"lambda": lam})


def ja_error_profile(lam: float, D_values, theta: np.ndarray | None = None) -> np.ndarray:
    """Sup-norm truncation error for each D (used for monotonicity checks)."""
    th = _theta_grid(abs(lam) + max(D_values)) if theta is None else theta
    target = np.exp(1j * lam * np.sin(th))
    out = []
    for D in D_values:
        c = bessel_j_symmetric(lam, D)
        z = np.arange(-D, D + 1)
        out.append(np.abs(np.exp(1j * np.outer(th, z)) @ c - target).max())
    return np.array(out)


# ---------------------------------------------------------------- DFT series


def dft_series_of_diagonal(g_values, epsilon: float = 0.0, label: str = "2πk̂/N") -> SeriesSpec:
    """Exact N-point interpolant of g(k̃) as sum_{z=-N/2}^{N/2} c_z e^{i2πzk̃/N}, c_{N/2}=0."""
    g = np.asarray(g_values, dtype=complex)
    N = g.size
    k = np.arange(N) - N // 2
    z = np.arange(-N // 2, N // 2)
    c = np.exp(-2j * np.pi * np.outer(z, k) / N) @ g / N
    c = np.concatenate([c, [0.0]])
    zetas = np.arange(-N // 2, N // 2 + 1)
    spec = SeriesSpec(c, zetas, label, N // 2, epsilon)
    theta = 2 * np.pi * k / N
    spec.empirical_error = float(np.abs(spec.evaluate(theta) - g).max())
    return spec


# ---------------------------------------------------------------- Gaussian quadrature


@dataclass
class GaussianQuadrature:
    delta_omega: float
    G: int
    weights: np.ndarray  # C0 e^{-C1 z^2}, z = -G..G
    C0: float
    C1: float
    C2: float
    empirical_error: float
    iterations: int

    @property
    def zetas(self):
        return np.arange(-self.G, self.G + 1)

    def evaluate(self, y) -> np.ndarray:
        """Quadrature value at y = sin(πk̃/N) (or any real argument)."""
        y = np.asarray(y, dtype=float)
        return np.exp(-1j * self.C2 * np.multiply.outer(y, self.zetas)) @ self.weights


def _gauss_weights(dw: float, G: int):
    C0 = dw / (4.0 * math.sqrt(math.pi))
    C1 = dw**2 / 16.0
    z = np.arange(-G, G + 1)
    return C0, C1, C0 * np.exp(-C1 * z.astype(float) ** 2)


def gaussian_fourier_coeffs(t: float, u: float, N: int, epsilon: float, y_grid=None, max_iter: int = 80):
    """Quadrature for exp(-4 t u N² y²) ≈ sum_z w_z exp(-i C2 z y), y = sin(πk̃/N).

    Calibrated: start at δ_ω = [N sqrt(t u L)]⁻¹, G = ⌈N sqrt(t u) L⌉ and
    halve δ_ω (aliasing) or double G (truncation) until the sup error over
    y_grid passes.
    """
    if t < 0 or u <= 0:
        raise ValueError("need t >= 0, u > 0")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    n = int(round(math.log2(N)))
    if y_grid is None:
        y_grid = np.sin(np.pi * khat_diagonal(n) / N)
        y_grid = np.concatenate([y_grid, np.linspace(-1, 1, 257)])
    y_grid = np.asarray(y_grid, dtype=float)
    target = np.exp(-4 * t * u * N**2 * y_grid**2)
    if t == 0:
        return GaussianQuadrature(1.0, 0, np.array([1.0]), 1.0, 0.0, 0.0, 0.0, 0)
    L = max(math.log(1.0 / epsilon), 1.0)
    s = N * math.sqrt(t * u)
    dw = 1.0 / (s * math.sqrt(L))
    G = max(1, math.ceil(s * L))
    for it in range(max_iter):
        C0, C1, w = _gauss_weights(dw, G)
        C2 = s * dw
        q = GaussianQuadrature(dw, G, w, C0, C1, C2, 0.0, it)
        err = float(np.abs(q.evaluate(y_grid) - target).max())
        q.empirical_error = err
        if err <= epsilon:
            return q
        # diagnose: truncation if the first dropped weight is not negligible
        tail = 2 * C0 * math.exp(-C1 * (G + 1) ** 2) * (1 + 1 / (2 * C1 * (G + 1)))
        if tail > epsilon / 4:
            G *= 2
        else:
            dw /= 2
    raise RuntimeError("Gaussian quadrature calibration infeasible for this epsilon")


def heat_composite_series(t: float, u: float, N: int, epsilon: float) -> SeriesSpec:
    """c_η = sum_z w_z J_η(-C2 z) over the phase unit πk̂/N (denominator-2 ladder)."""
    q = gaussian_fourier_coeffs(t, u, N, epsilon / 2)
    if q.G == 0:
        return SeriesSpec(np.array([1.0 + 0j]), np.array([0]), "πk̂/N", 0, epsilon, 0.0, 0.0, {"quadrature": q})
    wsum = float(np.abs(q.weights).sum())
    lam_max = q.C2 * q.G
    est = ja_scaling(lam_max, epsilon)
    th = _theta_grid(lam_max + est)
    n = int(round(math.log2(N)))
    kt = khat_diagonal(n)
    theta_grid = np.concatenate([np.pi * kt / N, th])
    target = np.exp(-4 * t * u * N**2 * np.sin(theta_grid) ** 2)
    zs = q.zetas
    Dmax = int(lam_max + 4 * est + 40)
    tables = np.array([bessel_j_table(-q.C2 * z, Dmax) for z in zs])  # (2G+1, Dmax+1)
    c_pos = q.weights @ tables  # c_η for η >= 0
    D = 0
    while True:
        eta = np.arange(-D, D + 1)
        c = np.array([c_pos[abs(e)] * (1 if e >= 0 or abs(e) % 2 == 0 else -1) for e in eta], dtype=complex)
        spec = SeriesSpec(c, eta, "πk̂/N", D, epsilon, 0.0, est, {"quadrature": q, "weight_sum": wsum})
        err = float(np.abs(spec.evaluate(theta_grid) - target).max())
        if err <= epsilon or D >= Dmax:
            spec.empirical_error = err
            if err > epsilon:
                raise RuntimeError("composite heat series did not reach epsilon")
            return spec
        D += 1


def smooth_gaussian_series(t: float, u: float, epsilon: float, kmax: int) -> SeriesSpec:
    """exp(-4π² t u k̂²) ≈ sum_z c_z exp(-iπ C3 k̂ z) on |k̃| <= kmax.

    Returned with zetas negated so the phase unit reads +πC3 k̂.
    """
    kgrid = np.linspace(-kmax, kmax, 8 * kmax + 1)
    # y = π sqrt(tu) k; reuse the quadrature with N sqrt(tu) -> π sqrt(tu)
    if t == 0:
        return SeriesSpec(np.array([1.0 + 0j]), np.array([0]), "πC3k̂", 0, epsilon, 0.0, 0.0, {"C3": 0.0})
    s_eff = math.pi * math.sqrt(t * u)
    # map onto gaussian_fourier_coeffs with N=1 and t'u' = (π² t u): exp(-4 s² y²), y = k
    q = gaussian_fourier_coeffs(math.pi**2 * t * u, 1.0, 1, epsilon, y_grid=kgrid)
    C3 = math.sqrt(t * u) * q.delta_omega
    # term e^{-i C2 z k} with C2 = π sqrt(tu) δω = π C3
    assert abs(q.C2 - math.pi * C3) < 1e-12 * max(1.0, q.C2)
    coeffs = q.weights.astype(complex)[::-1]
    zetas = -q.zetas[::-1]
    spec = SeriesSpec(coeffs, zetas, "πC3k̂", q.G, epsilon, q.empirical_error,
                      math.sqrt(t * u) * math.log(1 / epsilon), {"C3": C3, "quadrature": q})
    return spec


# ---------------------------------------------------------------- inverse series


@dataclass
class InverseFourierParams:
    kappa: float
    epsilon: float
    G: int
    K: int
    delta_y: float
    delta_z: float
    prefactor: float  # the 16κ̃ (or 4π²κ') in front
    constants: dict
    empirical_error: float = float("nan")

    @property
    def num_terms(self) -> int:
        return self.G * (2 * self.K + 1)

    def weights(self) -> np.ndarray:
        """(G, 2K+1) array of i δ_y δ_z² η e^{-(ηδ_z)²/2} / (prefactor sqrt(2π))."""
        eta = np.arange(-self.K, self.K + 1)
        row = self.delta_y * self.delta_z**2 * eta * np.exp(-((eta * self.delta_z) ** 2) / 2)
        row = 1j * row / (self.prefactor * math.sqrt(2 * math.pi))
        return np.broadcast_to(row, (self.G, 2 * self.K + 1))

    def evaluate(self, x) -> np.ndarray:
        """Series value at rescaled eigenvalues x (approximates 1/(prefactor·x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        eta = np.arange(1, self.K + 1)
        # pair ±η: i·η(e^{-iηw} - e^{iηw}) = 2η sin(ηw)
        wz = self.delta_z**2 * eta * np.exp(-((eta * self.delta_z) ** 2) / 2)
        c = np.multiply.outer(x * self.delta_y * self.delta_z, eta)
        # sum_{z<G} sin(zc) in closed form
        half = np.sin(c / 2)
        safe = np.where(half == 0, 1.0, half)
        s = np.where(half == 0, 0.0, np.sin((self.G - 1) * c / 2) * np.sin(self.G * c / 2) / safe)
        out = self.delta_y * (s @ wz)
        return 2 * out / (self.prefactor * math.sqrt(2 * math.pi))

    def aggregated(self) -> SeriesSpec:
        """Collapse terms by m = ζη: sum_m c_m e^{i m θ}, θ = -δ_y δ_z x."""
        w = self.weights()[0]
        eta = np.arange(-self.K, self.K + 1)
        M = (self.G - 1) * self.K
        c = np.zeros(2 * M + 1, dtype=complex)
        for z in range(self.G):
            np.add.at(c, z * eta + M, w)
        return SeriesSpec(c, np.arange(-M, M + 1), "-δyδz·x", M, self.epsilon)


def _inner_alias_error(dz: float, K: int, wmax: float) -> float:
    """max_w |discrete z-sum - w e^{-w²/2}| for w in [0, wmax]."""
    w = np.linspace(0, wmax, 1500)
    eta = np.arange(1, K + 1)
    wz = dz**2 * eta * np.exp(-((eta * dz) ** 2) / 2)
    approx = 2 * (np.sin(np.outer(w, eta * dz)) @ wz) / math.sqrt(2 * math.pi)
    return float(np.abs(approx - w * np.exp(-(w**2) / 2)).max())


def _outer_error(dy: float, G: int, xs: np.ndarray) -> float:
    """Riemann + truncation error of sum_z dy f(z dy) with exact inner f, on the 1/x scale."""
    y = np.arange(G) * dy
    err = 0.0
    for xv in xs:
        s = dy * np.sum(xv * y * np.exp(-((xv * y) ** 2) / 2))
        err = max(err, abs(s - 1 / xv))
    return err


def inverse_fourier_params(kappa_tilde: float, epsilon: float, check_points=None,
                           prefactor: float | None = None, max_iter: int = 40) -> InverseFourierParams:
    """Parameters for the Fourier-series inverse on x in [1/κ̃, 1].

    The series approximates 1/(prefactor·x) (prefactor defaults to 16κ̃)
    within ``epsilon``.  Constants start at 1 and the controlling parameter
    is doubled until the empirical test passes.
    """
    if kappa_tilde < 1:
        raise ValueError("kappa_tilde must be >= 1")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    pref = 16.0 * kappa_tilde if prefactor is None else float(prefactor)
    xs = np.geomspace(1 / kappa_tilde, 1, 1000) if check_points is None else np.asarray(check_points, float)
    eps_h = epsilon * pref  # tolerance on the 1/x scale
    L = max(math.log(1.0 / epsilon), 1.0)
    k = kappa_tilde
    cG = cy = cK = cz = 1.0
    for it in range(max_iter):
        dy = cy * k * epsilon / math.sqrt(L)
        G = max(2, math.ceil(cG * L / epsilon))
        dz = 1.0 / (cz * k * math.sqrt(L))
        K = max(1, math.ceil(cK * k * L))
        Y = G * dy
        outer = _outer_error(dy, G, xs)
        inner = _inner_alias_error(dz, K, Y * xs.max())
        if outer + Y * inner <= eps_h:
            p = InverseFourierParams(k, epsilon, G, K, dy, dz, pref,
                                     {"cG": cG, "cy": cy, "cK": cK, "cz": cz, "iterations": it})
            full = np.abs(p.evaluate(xs) - 1.0 / (pref * xs)).max()
            p.empirical_error = float(full)
            if full <= epsilon:
                return p
        if outer > eps_h / 2:
            tail = max(np.exp(-((xv * Y) ** 2) / 2) / xv for xv in xs)
            if tail > eps_h / 4:
                cG *= 2
            else:
                cy /= 2
                cG *= 2
        else:
            # inner sum: extend the z-range or refine δ_z
            if _inner_alias_error(dz, 2 * K, Y * xs.max()) < 0.5 * inner:
                cK *= 2
            else:
                cz *= 2
                cK *= 2
    raise RuntimeError("inverse-series calibration infeasible for this epsilon")
