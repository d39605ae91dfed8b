"""Classical reference solvers: FFT spectral evolution, dense stencils, expm, pinv.

Everything here works on function arrays indexed by grid position l
(C-order over dimensions), not on register amplitudes.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .grid import GridSpec

DENSE_LIMIT = 1024


# ---------------------------------------------------------------- stencils


def central_difference_1d(N: int) -> np.ndarray:
    """(f[l+1] - f[l-1]) * N/2 with periodic wrap."""
    m = np.zeros((N, N))
    for l in range(N):
        m[l, (l + 1) % N] += N / 2
        m[l, (l - 1) % N] -= N / 2
    return m


def second_difference_1d(N: int) -> np.ndarray:
    """(f[l+1] - 2f[l] + f[l-1]) * N² with periodic wrap."""
    m = np.zeros((N, N))
    for l in range(N):
        m[l, l] -= 2.0 * N**2
        m[l, (l + 1) % N] += N**2
        m[l, (l - 1) % N] += N**2
    return m


def forward_difference_1d(N: int) -> np.ndarray:
    """(f[l+1] - f[l]) * N."""
    m = np.zeros((N, N))
    for l in range(N):
        m[l, l] -= N
        m[l, (l + 1) % N] += N
    return m


def embed_axis(m1: np.ndarray, axis: int, d: int) -> np.ndarray:
    N = m1.shape[0]
    out = np.eye(1)
    for ax in range(d):
        out = np.kron(out, m1 if ax == axis else np.eye(N))
    return out


def laplacian(grid: GridSpec) -> np.ndarray:
    L1 = second_difference_1d(grid.N)
    return sum(embed_axis(L1, ax, grid.d) for ax in range(grid.d))


def derivative(grid: GridSpec, axis: int) -> np.ndarray:
    return embed_axis(central_difference_1d(grid.N), axis, grid.d)


# ---------------------------------------------------------------- dense linear algebra


def dense_expm(matrix, t: float = 1.0) -> np.ndarray:
    m = np.asarray(matrix)
    if m.shape[0] > DENSE_LIMIT:
        raise ValueError(f"dense expm refused above {DENSE_LIMIT}")
    return scipy.linalg.expm(t * m)


def dense_pinv(matrix, rcond: float = 1e-10) -> np.ndarray:
    m = np.asarray(matrix)
    u, s, vh = np.linalg.svd(m)
    keep = s > rcond * (s.max() if s.size else 0.0)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vh.conj().T * inv) @ u.conj().T


# ---------------------------------------------------------------- FFT route


def wavenumber_mesh(grid: GridSpec) -> list:
    k = grid.wavenumbers()
    return np.meshgrid(*([k] * grid.d), indexing="ij")


def fft_evolve(diagonal_function, f0, grid: GridSpec) -> np.ndarray:
    """Apply g(k̃_1, ..., k̃_d) in the shifted plane-wave basis.

    Coefficients <w_k|f> = e^{-i2πk x_0} fft(f)[k mod N] / sqrt(N) with
    x_0 the first grid point; the inverse uses the conjugate phase.
    """
    N, d = grid.N, grid.d
    f = np.asarray(f0, dtype=complex).reshape((N,) * d)
    x0 = grid.positions()[0]
    k = grid.wavenumbers()
    F = np.fft.fftn(f) / np.sqrt(N) ** d
    # reorder fft bins (0..N-1) to k̃ = -N/2..N/2-1
    F = np.fft.fftshift(F)
    phase = np.exp(-2j * np.pi * k * x0)
    for ax in range(d):
        shape = [1] * d
        shape[ax] = N
        F = F * phase.reshape(shape)
    F = F * diagonal_function(*wavenumber_mesh(grid))
    for ax in range(d):
        shape = [1] * d
        shape[ax] = N
        F = F * phase.conj().reshape(shape)
    out = np.fft.ifftn(np.fft.ifftshift(F)) * np.sqrt(N) ** d
    return out.reshape(-1)


def plane_wave(grid: GridSpec, ks) -> np.ndarray:
    """Normalized w_k on the symmetric grid (d-dimensional product)."""
    x = grid.positions()
    ks = np.atleast_1d(ks)
    out = np.ones(1, dtype=complex)
    for k in ks:
        out = np.kron(out, np.exp(2j * np.pi * k * x) / np.sqrt(grid.N))
    return out


# ---------------------------------------------------------------- PDE references


def advection_diagonal(grid: GridSpec, r, t):
    N = grid.N
    return lambda *ks: np.exp(-1j * t * N * sum(ra * np.sin(2 * np.pi * k / N) for ra, k in zip(r, ks)))


def heat_diagonal(grid: GridSpec, u, t):
    N = grid.N
    return lambda *ks: np.exp(-4 * t * u * N**2 * sum(np.sin(np.pi * k / N) ** 2 for k in ks))


def poisson_diagonal(grid: GridSpec):
    N = grid.N

    def g(*ks):
        lam = -4.0 * N**2 * sum(np.sin(np.pi * k / N) ** 2 for k in ks)
        out = np.zeros_like(lam)
        nz = np.abs(lam) > 1e-12
        out[nz] = 1.0 / lam[nz]
        return out

    return g


def wave_second_order(grid: GridSpec, v: float, f0, df0, t: float):
    """f(t), ∂_t f(t) for f'' = v² Δ f via expm of the first-order system."""
    L = laplacian(grid)
    M = L.shape[0]
    A = np.zeros((2 * M, 2 * M))
    A[:M, M:] = np.eye(M)
    A[M:, :M] = v**2 * L
    y = dense_expm(A, t) @ np.concatenate([np.asarray(f0, complex), np.asarray(df0, complex)])
    return y[:M], y[M:]


def heat_unit_interval(N: int, u: float, t: float, f0) -> np.ndarray:
    """exp(t u Δ) f0 with the periodic stencil (grid convention irrelevant)."""
    return dense_expm(u * second_difference_1d(N), t) @ np.asarray(f0, float)
