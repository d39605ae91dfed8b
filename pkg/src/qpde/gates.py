"""Standard gate matrices and small constructors."""
from __future__ import annotations

import numpy as np

from .sim import Gate

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def ry(phi: float) -> np.ndarray:
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(phi: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def phase_diag(phi: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * phi)])


def zexp(angle: float) -> np.ndarray:
    """exp(i·angle·Z)."""
    return np.diag([np.exp(1j * angle), np.exp(-1j * angle)])


def global_phase(phi: float) -> np.ndarray:
    return np.exp(1j * phi) * I2


def h(q):
    return Gate(H, (q,), label="H")


def x(q, controls=()):
    return Gate(X, (q,), controls, label="X")


def cnot(c, t):
    return Gate(X, (t,), ((c, 1),), label="CNOT")


def pauli_gate(letter: str, q, controls=()):
    return Gate(PAULI[letter], (q,), controls, label=letter)


def zz_exp(angle: float) -> np.ndarray:
    """exp(i·angle·Z⊗Z) as a 4x4 diagonal."""
    return np.diag(np.exp(1j * angle * np.array([1, -1, -1, 1])))
