"""Dense linear algebra for one- and two-spin deviation states.

Basis ordering is |00>, |01>, |10>, |11> with spin A as the left factor.
Functions accept single matrices or stacks of shape (..., 4, 4) unless
stated otherwise; validating wrappers only accept single matrices.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

EXACT_TOL = 1e-12
VALIDATION_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

#: sigma_0..sigma_3 = I, x, y, z
PAULI = np.stack([I2, SX, SY, SZ])
#: PAULI2[i, j] = sigma_i (x) sigma_j
PAULI2 = np.einsum("iab,jcd->ijacbd", PAULI, PAULI).reshape(4, 4, 4, 4)

PROJ0 = np.array([[1, 0], [0, 0]], dtype=complex)
PROJ1 = np.array([[0, 0], [0, 1]], dtype=complex)

LABELS = ("I", "x", "y", "z")


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def pauli_label(i: int, j: int) -> str:
    return f"{LABELS[i]}{LABELS[j]}"


def is_hermitian(m: np.ndarray, tol: float = VALIDATION_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= 2 * tol)


def is_unitary(u: np.ndarray, tol: float = VALIDATION_TOL) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[-1]))) <= tol)


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a`` acting on spin A (the left factor)."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def pauli_decompose(m: np.ndarray, check: bool = True) -> np.ndarray:
    """Return the 4x4 real array c with m = sum_ij c[i, j] sigma_i (x) sigma_j.

    Raises ValueError if the anti-Hermitian part of ``m`` exceeds 1e-9.
    Stacks of matrices are accepted when ``check`` is False.
    """
    m = np.asarray(m, dtype=complex)
    if check:
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) / 2 > VALIDATION_TOL:
            raise ValueError("pauli_decompose requires a Hermitian matrix")
    # tr(m P) with P Hermitian: sum_ab m[a, b] P[b, a]
    return np.einsum("...ab,ijba->...ij", m, PAULI2).real / 4.0


def reconstruct(c: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pauli_decompose`."""
    return np.einsum("...ij,ijab->...ab", np.asarray(c, dtype=complex), PAULI2)


def conj_by(u: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """U rho U^dagger without validation; broadcasts over leading axes."""
    return u @ rho @ np.swapaxes(u.conj(), -1, -2)


def conjugate(u: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Return U rho U^dagger, rejecting a non-unitary ``u``."""
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u):
        raise ValueError("conjugate requires a unitary matrix")
    return conj_by(u, np.asarray(rho, dtype=complex))


def project_ancilla(rho: np.ndarray, outcome: int) -> np.ndarray:
    """2x2 block of spin A with spin B projected onto |outcome>.

    Summing over both outcomes gives the partial trace over B.
    """
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    r = np.asarray(rho, dtype=complex)
    r = r.reshape(r.shape[:-2] + (2, 2, 2, 2))
    return r[..., :, outcome, :, outcome]


def partial_trace_b(rho: np.ndarray) -> np.ndarray:
    r = np.asarray(rho, dtype=complex)
    return np.einsum("...ajbj->...ab", r.reshape(r.shape[:-2] + (2, 2, 2, 2)))


def bloch_of(rho: np.ndarray) -> BlochVector:
    """(tr(rho sx), tr(rho sy), tr(rho sz)); no 1/2 normalization is applied."""
    rho = np.asarray(rho, dtype=complex)
    return BlochVector(
        float(np.trace(rho @ SX).real),
        float(np.trace(rho @ SY).real),
        float(np.trace(rho @ SZ).real),
    )


def phase_equal(u: np.ndarray, v: np.ndarray, tol: float = 1e-10) -> bool:
    """Equality of two unitaries up to a global phase."""
    u = np.asarray(u)
    v = np.asarray(v)
    n = u.shape[-1]
    return abs(abs(np.trace(u.conj().T @ v)) / n - 1.0) < tol


def random_hermitian(rng: np.random.Generator, dim: int = 4, traceless: bool = False) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (a + a.conj().T) / 2
    if traceless:
        h = h - np.trace(h) / dim * np.eye(dim)
    return h
