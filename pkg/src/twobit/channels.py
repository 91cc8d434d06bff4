"""Noise processes acting on deviation density matrices.

Phase damping is applied in operator-sum form. Amplitude relaxation is a
phenomenological correction to the longitudinal Pauli coefficients. RF-field
inhomogeneity is modelled as a per-spin multiplicative error on every x/y
rotation angle, drawn from a truncated Lorentzian and integrated with
Gauss-Legendre quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import bisect

from .qcore import I2, SZ, pauli_decompose, reconstruct, tensor

_ZI = tensor(SZ, I2)
_IZ = tensor(I2, SZ)
_ZZ = tensor(SZ, SZ)


def damping_probability(t: float, t2: float) -> float:
    """p = (1 - exp(-t/T2*)) / 2."""
    if t2 <= 0:
        raise ValueError("T2* must be positive")
    return 0.5 * (1.0 - np.exp(-t / t2))


def _check_p(p: float, name: str = "p") -> None:
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"{name}={p} outside [0, 1/2]")


def phase_damp_1q(rho: np.ndarray, p: float) -> np.ndarray:
    """(1-p) rho + p sz rho sz; off-diagonals shrink by 1 - 2p."""
    _check_p(p)
    rho = np.asarray(rho, dtype=complex)
    return (1 - p) * rho + p * (SZ @ rho @ SZ)


def phase_damp_2q(rho: np.ndarray, p_a: float, p_b: float) -> np.ndarray:
    """Independent phase damping of both spins (four-term operator sum).

    Broadcasts over leading axes of ``rho``.
    """
    _check_p(p_a, "p_a")
    _check_p(p_b, "p_b")
    rho = np.asarray(rho, dtype=complex)
    return ((1 - p_a) * (1 - p_b) * rho
            + (1 - p_a) * p_b * (_IZ @ rho @ _IZ)
            + p_a * (1 - p_b) * (_ZI @ rho @ _ZI)
            + p_a * p_b * (_ZZ @ rho @ _ZZ))


def amplitude_relax_z(bloch_z: float, t: float, T1: float, z_inf: float = 1.0) -> float:
    """z(t) = z_inf + (z(0) - z_inf) exp(-t/T1)."""
    if T1 <= 0:
        raise ValueError("T1 must be positive")
    if t < 0:
        raise ValueError("t must be >= 0")
    return z_inf + (bloch_z - z_inf) * np.exp(-t / T1)


def amplitude_relax_2q(rho: np.ndarray, t: float, T1_a: float, T1_b: float,
                       equilibrium: np.ndarray) -> np.ndarray:
    """Longitudinal relaxation of a two-spin deviation matrix.

    The single-spin law of :func:`amplitude_relax_z` is applied to the z
    component of spin A in each ancilla block (coefficients c_3j, rate
    T1_a) and to the ancilla polarization c_03 (rate T1_b), each pulled
    toward the matching coefficient of ``equilibrium``. Transverse decay
    belongs to the phase-damping channel and is not touched here.
    """
    if T1_a <= 0 or T1_b <= 0:
        raise ValueError("T1 must be positive")
    if t < 0:
        raise ValueError("t must be >= 0")
    rate = np.ones((4, 4))
    rate[3, :] = np.exp(-t / T1_a)
    rate[0, 3] = np.exp(-t / T1_b)
    c = pauli_decompose(rho, check=False)
    eq = np.where(rate < 1, pauli_decompose(equilibrium), 0.0)
    return reconstruct(eq + (c - eq) * rate)


@dataclass(frozen=True)
class RfInhomogeneity:
    """Per-spin Lorentzian spread of the RF rotation-angle scale factor.

    The scale factor is 1 + delta with delta Lorentzian of half-width gamma,
    truncated to |delta| <= truncation * gamma.
    """

    gamma_a: float = 0.0
    gamma_b: float = 0.0
    truncation: float = 5.0
    nodes: int = 64

    def __post_init__(self):
        if self.gamma_a < 0 or self.gamma_b < 0:
            raise ValueError("Lorentzian widths must be >= 0")
        if self.nodes < 2:
            raise ValueError("need at least 2 quadrature nodes")
        if self.truncation <= 0:
            raise ValueError("truncation must be positive")

    @classmethod
    def calibrated(cls, target_a: float, target_b: float, truncation: float = 5.0,
                   nodes: int = 64) -> "RfInhomogeneity":
        return cls(calibrate_gamma(target_a, truncation, nodes),
                   calibrate_gamma(target_b, truncation, nodes), truncation, nodes)

    def with_nodes(self, nodes: int) -> "RfInhomogeneity":
        return RfInhomogeneity(self.gamma_a, self.gamma_b, self.truncation, nodes)

    def scale_grid(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flattened tensor-product nodes (scale_a, scale_b) and weights."""
        sa, wa = lorentzian_nodes(self.gamma_a, self.truncation, self.nodes)
        sb, wb = lorentzian_nodes(self.gamma_b, self.truncation, self.nodes)
        ga, gb = np.meshgrid(sa, sb, indexing="ij")
        return ga.ravel(), gb.ravel(), np.outer(wa, wb).ravel()


def lorentzian_nodes(gamma: float, truncation: float = 5.0, nodes: int = 64):
    """Quadrature nodes (as scale factors 1 + delta) and normalized weights.

    Substituting delta = gamma * tan(u) turns the truncated Lorentzian into a
    uniform density on |u| <= arctan(truncation), which Gauss-Legendre then
    integrates. A zero width collapses to the single node 1.
    """
    if gamma == 0:
        return np.ones(1), np.ones(1)
    x, w = leggauss(nodes)
    umax = np.arctan(truncation)
    delta = gamma * np.tan(umax * x)
    return 1.0 + delta, w / w.sum()


def sample_scales(rng: np.random.Generator, gamma: float, size: int,
                  truncation: float = 5.0) -> np.ndarray:
    """Monte-Carlo draws from the same truncated Lorentzian."""
    umax = np.arctan(truncation)
    return 1.0 + gamma * np.tan(rng.uniform(-umax, umax, size))


def pi2_attenuation(gamma: float, truncation: float = 5.0, nodes: int = 64) -> float:
    """Ensemble signal after a nominal pi/2 pulse: <sin((1 + delta) pi/2)>."""
    s, w = lorentzian_nodes(gamma, truncation, nodes)
    return float(np.dot(w, np.sin(s * np.pi / 2)))


def calibrate_gamma(target_attenuation: float, truncation: float = 5.0, nodes: int = 64,
                    tol: float = 1e-6) -> float:
    """Lorentzian half-width reproducing the measured pi/2-pulse signal.

    Bisection on gamma in [0, 0.5]; raises ValueError when the target is out
    of range or not bracketed.
    """
    if not 0.5 < target_attenuation <= 1.0:
        raise ValueError("target attenuation must lie in (0.5, 1]")
    if target_attenuation == 1.0:
        return 0.0
    lo, hi = 0.0, 0.5

    def f(g):
        return pi2_attenuation(g, truncation, nodes) - target_attenuation

    if f(lo) * f(hi) > 0:
        raise ValueError(f"no gamma in [0, 0.5] gives attenuation {target_attenuation}")
    return float(bisect(f, lo, hi, xtol=tol))


def ensemble_average(experiment: Callable, rf: RfInhomogeneity, vectorized: bool = False) -> np.ndarray:
    """Average ``experiment(scale_a, scale_b)`` over the RF ensemble.

    Scale factors are held fixed for a whole evaluation (errors perfectly
    correlated between pulses) and are independent between spins. With
    ``vectorized`` the experiment receives arrays of all nodes at once and
    must return a stack with the node axis first.
    """
    sa, sb, w = rf.scale_grid()
    if vectorized:
        vals = np.asarray(experiment(sa, sb))
    else:
        vals = np.stack([np.asarray(experiment(a, b)) for a, b in zip(sa, sb)])
    return np.tensordot(w, vals, axes=(0, 0))


def monte_carlo_average(experiment: Callable, rf: RfInhomogeneity, samples: int,
                        seed: int = 0, vectorized: bool = False) -> np.ndarray:
    """Independent sampling estimate of :func:`ensemble_average`."""
    rng = np.random.default_rng(seed)
    sa = sample_scales(rng, rf.gamma_a, samples, rf.truncation)
    sb = sample_scales(rng, rf.gamma_b, samples, rf.truncation)
    if vectorized:
        return np.asarray(experiment(sa, sb)).mean(axis=0)
    return np.mean([np.asarray(experiment(a, b)) for a, b in zip(sa, sb)], axis=0)
