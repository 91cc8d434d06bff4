"""End-to-end simulation of the coding and control experiments.

Pipeline for one trial (coded mode)::

    rho0 --Y_a(theta)--> rho1 --U_enc--> rho3 --storage--> rho4 --U_dec--> rho5

The control mode skips U_enc and U_dec. Storage is J evolution plus phase
damping for t_d/2, a pi pulse on B about y, another t_d/2, and a second pi
pulse about -y. Readout applies X_a and maps the two spin-A lines to the accepted
(ancilla |0>) and rejected (ancilla |1>) states.

All functions accept array-valued ``scales`` so the whole RF ensemble can be
propagated as one stack of matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import channels, gates
from .gates import DEFAULT_J, PulseSequence, compile_sequence, gate_library
from .qcore import (
    I2, PAULI2, PROJ0, SX, SZ, BlochVector, conj_by, pauli_decompose, project_ancilla, tensor,
)

MODES = ("coded", "control")
STAGES = ("rho0", "rho1", "rho3", "rho4", "rho5")


@dataclass(frozen=True)
class NoiseConfig:
    """Relaxation constants (seconds), RF calibration, and model switches."""

    T2star_a: float = 0.35
    T2star_b: float = 0.50
    T1_a: float = 9.0
    T1_b: float = 13.5
    attenuation_a: float = 0.96
    attenuation_b: float = 0.92
    truncation: float = 5.0
    nodes: int = 64
    phase_damping: bool = True
    rf_inhomogeneity: bool = False
    amplitude_relaxation: bool = False

    def probabilities(self, t: float) -> tuple[float, float]:
        if not self.phase_damping:
            return 0.0, 0.0
        return (channels.damping_probability(t, self.T2star_a),
                channels.damping_probability(t, self.T2star_b))

    def rf(self, nodes: int | None = None) -> channels.RfInhomogeneity:
        """Calibrated RF ensemble, or a zero-width one when disabled."""
        n = self.nodes if nodes is None else nodes
        if not self.rf_inhomogeneity:
            return channels.RfInhomogeneity(0.0, 0.0, self.truncation, n)
        return _calibrated_rf(self.attenuation_a, self.attenuation_b, self.truncation, n)


_RF_CACHE: dict = {}


def _calibrated_rf(att_a, att_b, truncation, nodes):
    key = (att_a, att_b, truncation, nodes)
    if key not in _RF_CACHE:
        _RF_CACHE[key] = channels.RfInhomogeneity.calibrated(att_a, att_b, truncation, nodes)
    return _RF_CACHE[key]


IDEAL = NoiseConfig()


# -- states ---------------------------------------------------------------

def thermal_state(omega_a: float = 4.0, omega_b: float = 1.0) -> np.ndarray:
    """Deviation matrix (w_a/2) sz(x)I + (w_b/2) I(x)sz, J term neglected."""
    return omega_a / 2 * tensor(SZ, I2) + omega_b / 2 * tensor(I2, SZ)


def temporal_label(preps: Sequence[PulseSequence], omega_a: float = 4.0, omega_b: float = 1.0,
                   J: float = DEFAULT_J, scales=(1.0, 1.0)) -> np.ndarray:
    """Sum of P_k rho_th P_k^dagger over the preparation sequences."""
    rho_th = thermal_state(omega_a, omega_b)
    return sum(conj_by(compile_sequence(p, J, scales), rho_th) for p in preps)


def label_preps(J: float = DEFAULT_J) -> list[PulseSequence]:
    """No pulse, then CN~: together they put the ancilla in |0>."""
    return [PulseSequence((), "identity"), gate_library("CN_tilde", J=J)]


def initial_state(J: float = DEFAULT_J, scales=(1.0, 1.0), omega_a: float = 1.0,
                  omega_b: float = 0.0) -> np.ndarray:
    """Labelled initial state; the defaults give sz (x) (I + sz)/2."""
    return temporal_label(label_preps(J), omega_a, omega_b, J, scales)


def pure_input(theta: float) -> np.ndarray:
    """Unit-trace |psi(theta)><psi(theta)| (x) |0><0| with psi = Y(theta)|0>."""
    psi = np.array([np.cos(theta / 2), np.sin(theta / 2)], dtype=complex)
    return tensor(np.outer(psi, psi.conj()), PROJ0)


# -- storage and trials ---------------------------------------------------

def run_storage(rho: np.ndarray, t_d: float, noise: NoiseConfig = IDEAL, J: float = DEFAULT_J,
                scales=(1.0, 1.0), refocus: bool = True, equilibrium: np.ndarray | None = None) -> np.ndarray:
    """Store ``rho`` for ``t_d`` seconds with refocusing pi pulses on B.

    Within each half interval the J evolution and dephasing commute, so they
    are applied one after the other. ``equilibrium`` is only used when
    amplitude relaxation is switched on; it is inverted on B together with
    the state, so the labelled ancilla is not driven toward the wrong sign
    between the two refocusing pulses.
    """
    if t_d < 0:
        raise ValueError("storage time must be >= 0")
    half = t_d / 2.0
    p_a, p_b = noise.probabilities(half)
    u_j = gates.j_coupling_unitary(half, J)
    # second pi pulse about -y: correlated RF errors of the pair cancel
    u_pis = (compile_sequence(gate_library("refocus_b"), J, scales),
             compile_sequence(gate_library("refocus_b_bar"), J, scales))
    relax = noise.amplitude_relaxation and equilibrium is not None
    eq = equilibrium
    flip = compile_sequence(gate_library("refocus_b"), J)
    for u_pi in u_pis:
        rho = conj_by(u_j, rho)
        rho = channels.phase_damp_2q(rho, p_a, p_b)
        if relax:
            rho = channels.amplitude_relax_2q(rho, half, noise.T1_a, noise.T1_b, eq)
        if refocus:
            rho = conj_by(u_pi, rho)
            if relax:
                # relax in the toggling frame of the refocused ancilla
                eq = conj_by(flip, eq)
    return rho


def trial_stages(theta: float, t_d: float, mode: str = "coded", noise: NoiseConfig = IDEAL,
                 J: float = DEFAULT_J, scales=(1.0, 1.0), rho0: np.ndarray | None = None,
                 omega_b: float = 0.0) -> dict:
    """States rho0, rho1, rho3, rho4, rho5 of one trial.

    In control mode rho3 = rho1 and rho5 = rho4. ``omega_b`` (relative to
    omega_a = 1) only enters the default labelled initial state and the
    relaxation target.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if rho0 is None:
        rho0 = initial_state(J, scales, 1.0, omega_b)
    # the labelled state plays the role of equilibrium (effective pure state)
    eq = initial_state(J, (1.0, 1.0), 1.0, omega_b) if noise.amplitude_relaxation else None
    out = {"rho0": rho0}
    rho = conj_by(compile_sequence(gate_library("Y_a", theta), J, scales), rho0)
    out["rho1"] = rho
    if mode == "coded":
        rho = conj_by(compile_sequence(gate_library("U_enc", J=J), J, scales), rho)
    out["rho3"] = rho
    rho = run_storage(rho, t_d, noise, J, scales, equilibrium=eq)
    out["rho4"] = rho
    if mode == "coded":
        rho = conj_by(compile_sequence(gate_library("U_dec", J=J), J, scales), rho)
    out["rho5"] = rho
    return out


def run_trial(theta: float, t_d: float, mode: str = "coded", noise: NoiseConfig = IDEAL,
              scales=(1.0, 1.0), J: float = DEFAULT_J, rho0: np.ndarray | None = None,
              omega_b: float = 0.0) -> np.ndarray:
    """Output state rho5 of one coding or control trial."""
    return trial_stages(theta, t_d, mode, noise, J, scales, rho0, omega_b)["rho5"]


# -- readout --------------------------------------------------------------

@dataclass(frozen=True)
class PeakIntegrals:
    a_high: complex
    a_low: complex
    b_high: complex
    b_low: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.a_high, self.a_low, self.b_high, self.b_low])


@dataclass(frozen=True)
class DecodedOutput:
    """Spin-A Bloch components read from the low (accepted) and high
    (rejected) lines. Only x and z are observable with an X_a readout, so
    ``y`` is reported as 0. ``raw`` holds the acquired (post-readout)
    Pauli coefficients.
    """

    accepted: BlochVector
    rejected: BlochVector
    raw: np.ndarray = field(repr=False)

    @property
    def acceptance_amplitude(self) -> float:
        return float(np.hypot(self.accepted.x, self.accepted.z))


def peak_integrals(c: np.ndarray) -> PeakIntegrals:
    """Integrated areas of the four lines, from Pauli coefficients."""
    c = np.asarray(c)
    return PeakIntegrals(
        -(1j * (c[1, 0] - c[1, 3]) + c[2, 0] - c[2, 3]),
        -(1j * (c[1, 0] + c[1, 3]) + c[2, 0] + c[2, 3]),
        -(1j * (c[0, 1] - c[3, 1]) + c[0, 2] - c[3, 2]),
        -(1j * (c[0, 1] + c[3, 1]) + c[0, 2] + c[3, 2]),
    )


def decode_peaks(peaks: PeakIntegrals, raw: np.ndarray | None = None) -> DecodedOutput:
    """Map spin-A lines after an X_a readout to (z, x) of the pre-readout state.

    X_a sends the z coefficient to -y, so Re(line) = z; x is untouched and
    appears as -Im(line).
    """
    acc = BlochVector(-peaks.a_low.imag, 0.0, peaks.a_low.real)
    rej = BlochVector(-peaks.a_high.imag, 0.0, peaks.a_high.real)
    return DecodedOutput(acc, rej, raw)


def readout_pulse(rho5: np.ndarray, J: float = DEFAULT_J, scale_a=1.0) -> np.ndarray:
    return conj_by(compile_sequence(gate_library("X_a"), J, (scale_a, 1.0)), rho5)


def readout(rho5: np.ndarray, J: float = DEFAULT_J, scale_a: float = 1.0) -> DecodedOutput:
    """Apply X_a, take the peak integrals, and decode accepted/rejected states."""
    c = pauli_decompose(readout_pulse(rho5, J, scale_a))
    return decode_peaks(peak_integrals(c), c)


def acceptance_weight(theta: float, t_d: float, mode: str, noise: NoiseConfig = IDEAL,
                      J: float = DEFAULT_J, scales=(1.0, 1.0)) -> np.ndarray:
    """Trace of the ancilla-|0> block for a unit-trace pure input.

    For ideal coding this is (1-p_a)(1-p_b) + p_a p_b; control gives 1.
    Amplitude relaxation is not applied here.
    """
    n = NoiseConfig(**{**noise.__dict__, "amplitude_relaxation": False})
    rho0 = pure_input(0.0)
    rho5 = run_trial(theta, t_d, mode, n, scales, J, rho0=rho0)
    return np.trace(project_ancilla(rho5, 0), axis1=-2, axis2=-1).real


# -- ensemble simulation ----------------------------------------------------

def simulate_trial(theta: float, t_d: float, mode: str, noise: NoiseConfig = IDEAL,
                   J: float = DEFAULT_J, nodes: int | None = None,
                   omega_b: float = 0.0) -> tuple[DecodedOutput, float]:
    """Decoded output and acceptance weight averaged over the RF ensemble.

    Every RF pulse (labelling, preparation, coding, refocusing, readout) is
    scaled by the same per-spin factor within one ensemble member.
    """
    rf = noise.rf(nodes)

    def experiment(sa, sb):
        scales = (sa, sb)
        rho5 = run_trial(theta, t_d, mode, noise, scales, J, omega_b=omega_b)
        c = pauli_decompose(readout_pulse(rho5, J, sa), check=False)
        w = acceptance_weight(theta, t_d, mode, noise, J, scales)
        packed = np.zeros(c.shape[:-2] + (17,))
        packed[..., :16] = c.reshape(c.shape[:-2] + (16,))
        packed[..., 16] = w
        return packed

    avg = channels.ensemble_average(experiment, rf, vectorized=True)
    c = avg[:16].reshape(4, 4)
    return decode_peaks(peak_integrals(c), c), float(avg[16])


# -- spectra --------------------------------------------------------------

def line_frequencies(J: float = DEFAULT_J, centers=(2000.0, -2000.0)) -> dict:
    fa, fb = centers
    return {"a_high": fa + J / 2, "a_low": fa - J / 2, "b_high": fb + J / 2, "b_low": fb - J / 2}


def synthesize_spectrum(rho0: np.ndarray, T2star_a: float, T2star_b: float, grid: np.ndarray,
                        J: float = DEFAULT_J, centers=(2000.0, -2000.0)) -> np.ndarray:
    """Phase-corrected complex spectrum of ``rho0``.

    Each line is its complex peak integral times a unit-area absorptive
    Lorentzian of half-width 1/(2 pi T2*). Dispersive tails are left out:
    they would leak about ln(3)/pi of each A line into its neighbour's
    integration window. ``centers`` are the Larmor offsets of A and B in Hz
    (the true 500/125 MHz values are not needed for line areas).
    """
    grid = np.asarray(grid, dtype=float)
    freqs = line_frequencies(J, centers)
    widths = {"a": 1 / (2 * np.pi * T2star_a), "b": 1 / (2 * np.pi * T2star_b)}
    step = np.max(np.diff(grid)) if grid.size > 1 else np.inf
    if step > min(widths.values()) / 2:
        raise ValueError("spectral grid too coarse for the line widths")
    if grid.min() > min(freqs.values()) - J / 2 or grid.max() < max(freqs.values()) + J / 2:
        raise ValueError("spectral grid does not cover all four lines")
    peaks = peak_integrals(pauli_decompose(rho0))
    spectrum = np.zeros(grid.shape, dtype=complex)
    for name, area in zip(("a_high", "a_low", "b_high", "b_low"), peaks.as_array()):
        w = widths[name[0]]
        spectrum += area * (w / np.pi) / (w**2 + (grid - freqs[name]) ** 2)
    return spectrum


def integrate_lines(spectrum: np.ndarray, grid: np.ndarray, J: float = DEFAULT_J,
                    centers=(2000.0, -2000.0)) -> PeakIntegrals:
    """Trapezoidal area of each line over a window of +-J/2."""
    out = {}
    for name, f in line_frequencies(J, centers).items():
        m = (grid >= f - J / 2) & (grid <= f + J / 2)
        out[name] = complex(np.trapezoid(spectrum[m], grid[m]))
    return PeakIntegrals(**out)


# -- tomography -------------------------------------------------------------

TOMOGRAPHY_PULSES = tuple((a, b) for a in (None, "X_a", "Y_a") for b in (None, "X_b", "Y_b"))


def _observables(c: np.ndarray) -> np.ndarray:
    p = peak_integrals(c).as_array()
    return np.concatenate([p.real, p.imag])


def _tomography_unitaries(J: float = DEFAULT_J) -> list[np.ndarray]:
    us = []
    for pa, pb in TOMOGRAPHY_PULSES:
        seq = PulseSequence()
        if pa:
            seq = seq + gate_library(pa)
        if pb:
            seq = seq + gate_library(pb)
        us.append(compile_sequence(seq, J))
    return us


def tomography_measure(rho: np.ndarray, J: float = DEFAULT_J) -> np.ndarray:
    """Simulated peak-integral data of the nine readout experiments (9 x 8)."""
    return np.stack([_observables(pauli_decompose(conj_by(u, rho), check=False))
                     for u in _tomography_unitaries(J)])


def tomography_matrix(J: float = DEFAULT_J) -> np.ndarray:
    """Linear map from the 15 traceless Pauli coefficients to the 72 data."""
    cols = []
    for i in range(4):
        for j in range(4):
            if i == j == 0:
                continue
            cols.append(tomography_measure(PAULI2[i, j], J).ravel())
    return np.array(cols).T


def tomography(rho: np.ndarray, J: float = DEFAULT_J, data: np.ndarray | None = None) -> np.ndarray:
    """Reconstruct the deviation state's Pauli coefficients from nine readouts.

    The identity coefficient is unobservable and returned as 0. ``data``
    may be supplied instead of simulating it from ``rho``.
    """
    m = tomography_matrix(J)
    if np.linalg.matrix_rank(m) < 15:
        raise np.linalg.LinAlgError("tomography readout set is not complete")
    y = tomography_measure(rho, J).ravel() if data is None else np.asarray(data).ravel()
    sol, *_ = np.linalg.lstsq(m, y, rcond=None)
    c = np.zeros(16)
    c[1:] = sol
    return c.reshape(4, 4)


# -- closed forms ------------------------------------------------------------

def closed_form_coded(theta: float, p_a: float, p_b: float) -> np.ndarray:
    """Ideal coded output: accepted block on ancilla |0>, rejected on |1>."""
    acc = np.cos(theta) * (1 - p_a - p_b + 2 * p_a * p_b) * SZ + np.sin(theta) * (1 - p_a - p_b) * SX
    rej = np.cos(theta) * (p_a + p_b - 2 * p_a * p_b) * SZ + np.sin(theta) * (p_b - p_a) * SX
    return tensor(acc, (I2 + SZ) / 2) + tensor(rej, (I2 - SZ) / 2)


def closed_form_control(theta: float, p_a: float) -> np.ndarray:
    return tensor(np.cos(theta) * SZ + (1 - 2 * p_a) * np.sin(theta) * SX, (I2 + SZ) / 2)
