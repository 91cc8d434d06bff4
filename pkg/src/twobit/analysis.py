"""Ellipse fits, ellipticities, fidelities, trend fits and code tradeoffs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares


class FitError(RuntimeError):
    pass


# -- intensity model ---------------------------------------------------------

def intensity_model(theta, A, B, C, D):
    """(A + B sin^2(theta + D)) (1 - C (theta + D))."""
    phi = np.asarray(theta) + D
    return (A + B * np.sin(phi) ** 2) * (1 - C * phi)


def _model_jacobian(theta, A, B, C, D):
    phi = theta + D
    s2 = np.sin(phi) ** 2
    base = A + B * s2
    atten = 1 - C * phi
    return np.column_stack([
        atten,
        s2 * atten,
        -base * phi,
        B * np.sin(2 * phi) * atten - C * base,
    ])


@dataclass
class EllipseFit:
    A: float
    B: float
    C: float
    D: float
    residual_rms: float
    stderr: dict = field(default_factory=dict)
    d_frozen: bool = False
    nfev: int = 0

    @property
    def params(self) -> np.ndarray:
        return np.array([self.A, self.B, self.C, self.D])

    def intensity(self, theta):
        return intensity_model(theta, self.A, self.B, self.C, self.D)


def fit_ellipse(points: Sequence[tuple[float, float, float]], max_iter: int = 200,
                xtol: float = 1e-10, bootstrap: int = 0, seed: int = 0) -> EllipseFit:
    """Levenberg-Marquardt fit of the intensity model to (theta, z, x) points.

    The fit target is I = z^2 + x^2. D is frozen at 0 when the fitted
    |B| < 1e-6 A, since the angular offset is then unidentifiable. Standard
    errors come from the Jacobian covariance, or from residual resampling
    when ``bootstrap`` > 0.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 5:
        raise FitError("need at least 5 (theta, z, x) points")
    theta = pts[:, 0]
    if np.ptp(theta) <= 0:
        raise FitError("degenerate theta grid")
    inten = pts[:, 1] ** 2 + pts[:, 2] ** 2

    p, jac, nfev, rss = _lm(theta, inten, _initial_guess(theta, inten), True, max_iter, xtol)
    frozen = False
    if abs(p[1]) < 1e-6 * abs(p[0]):
        p, jac, nfev, rss = _lm(theta, inten, np.array([p[0], p[1], p[2]]), False, max_iter, xtol)
        p = np.append(p, 0.0)
        frozen = True
    if p[0] <= 0:
        raise FitError("fitted A is not positive")

    names = ["A", "B", "C"] + ([] if frozen else ["D"])
    dof = max(len(theta) - len(names), 1)
    if bootstrap > 0:
        se = _bootstrap_stderr(theta, inten, p, frozen, bootstrap, seed, max_iter, xtol)
    else:
        cov = np.linalg.pinv(jac.T @ jac) * rss / dof
        se = np.sqrt(np.clip(np.diag(cov), 0, None))
    stderr = dict(zip(names, map(float, se)))
    if frozen:
        stderr["D"] = 0.0
    return EllipseFit(*map(float, p), residual_rms=float(np.sqrt(rss / len(theta))),
                      stderr=stderr, d_frozen=frozen, nfev=nfev)


def _initial_guess(theta, inten):
    i0 = inten[np.argmin(np.abs(theta))]
    i90 = inten[np.argmin(np.abs(theta - np.pi / 2))]
    return np.array([i0, i90 - i0, 0.0, 0.0])


def _lm(theta, inten, p0, with_d, max_iter, xtol):
    if with_d:
        def res(p):
            return intensity_model(theta, *p) - inten

        def jac(p):
            return _model_jacobian(theta, *p)
    else:
        def res(p):
            return intensity_model(theta, *p, 0.0) - inten

        def jac(p):
            return _model_jacobian(theta, *p, 0.0)[:, :3]

    sol = least_squares(res, p0, jac=jac, method="lm", xtol=xtol, ftol=1e-15, gtol=1e-15,
                        max_nfev=max_iter * (len(p0) + 1))
    if not sol.success:
        raise FitError(f"ellipse fit did not converge: {sol.message}")
    return sol.x, sol.jac, sol.nfev, float(np.sum(sol.fun ** 2))


def _bootstrap_stderr(theta, inten, p, frozen, n, seed, max_iter, xtol):
    rng = np.random.default_rng(seed)
    model = intensity_model(theta, *p)
    resid = inten - model
    start = p[:3] if frozen else p
    draws = []
    for _ in range(n):
        y = model + rng.choice(resid, size=resid.size, replace=True)
        q, *_ = _lm(theta, y, start, not frozen, max_iter, xtol)
        draws.append(q)
    return np.std(draws, axis=0, ddof=1)


# -- ellipticity and fidelities ------------------------------------------------

def ellipticity(fit: EllipseFit) -> float:
    """sqrt(I(0) / I(pi/2)) from the fitted intensity model."""
    i0 = fit.intensity(0.0)
    i90 = fit.intensity(np.pi / 2)
    if i0 <= 0 or i90 <= 0:
        raise FitError("fitted intensity is not positive at theta = 0 or pi/2")
    return float(np.sqrt(i0 / i90))


def fidelity_from_ellipticity(eps: float) -> float:
    """F = (1 + 1/eps) / 2."""
    if eps <= 0:
        raise ValueError("ellipticity must be positive")
    return 0.5 * (1 + 1 / eps)


def error_from_ellipticity(eps: float) -> float:
    return 1 - fidelity_from_ellipticity(eps)


def overlap_fidelity(outputs: Sequence[tuple[float, float, float]],
                     normalization: float | None = None) -> float:
    """Minimum over inputs of (1 + r_in . r_out / |r_out(theta=0)|) / 2.

    ``outputs`` are (theta, z, x) with the input Bloch vector
    (sin theta, 0, cos theta). The normalization defaults to the output
    amplitude at theta = 0, which also yields the conditional fidelity for
    coded data.
    """
    out = np.asarray(outputs, dtype=float)
    theta, z, x = out.T
    if normalization is None:
        at0 = np.isclose(theta, 0.0, atol=1e-12)
        if not at0.any():
            raise ValueError("overlap fidelity needs the theta = 0 output")
        normalization = float(np.hypot(z[at0][0], x[at0][0]))
    if normalization <= 0:
        raise ValueError("normalization amplitude must be positive")
    overlap = 0.5 * (1 + (np.sin(theta) * x + np.cos(theta) * z) / normalization)
    return float(overlap.min())


@dataclass
class FidelityReport:
    ellipticity: float
    F_epsilon: float
    F_delta: float
    p_epsilon: float
    normalization_amplitude: float


def fidelity_report(points: Sequence[tuple[float, float, float]], fit: EllipseFit | None = None) -> FidelityReport:
    fit = fit or fit_ellipse(points)
    eps = ellipticity(fit)
    pts = np.asarray(points, dtype=float)
    at0 = np.isclose(pts[:, 0], 0.0, atol=1e-12)
    norm = float(np.hypot(pts[at0][0, 1], pts[at0][0, 2])) if at0.any() else float("nan")
    f_eps = fidelity_from_ellipticity(eps)
    return FidelityReport(eps, f_eps, overlap_fidelity(points, norm), 1 - f_eps, norm)


# -- trend fits ---------------------------------------------------------------

@dataclass
class QuadraticFit:
    coeffs: np.ndarray
    stderr: np.ndarray

    def __call__(self, x):
        c0, c1, c2 = self.coeffs
        return c0 + c1 * np.asarray(x) + c2 * np.asarray(x) ** 2


def quadratic_fit(x, y, weights=None) -> QuadraticFit:
    """Weighted least squares y = c0 + c1 x + c2 x^2.

    ``weights`` multiply the squared residuals (uniform by default).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 4:
        raise ValueError("quadratic fit needs at least 4 points")
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    V = np.vander(x, 3, increasing=True)
    sw = np.sqrt(w)
    A = V * sw[:, None]
    if np.linalg.matrix_rank(A) < 3:
        raise np.linalg.LinAlgError("rank-deficient quadratic fit")
    coeffs, *_ = np.linalg.lstsq(A, y * sw, rcond=None)
    resid = (y - V @ coeffs) * sw
    s2 = resid @ resid / (x.size - 3)
    cov = np.linalg.inv(A.T @ A) * s2
    return QuadraticFit(coeffs, np.sqrt(np.diag(cov)))


# -- detection vs correction tradeoff -------------------------------------------

TRADEOFF_MODELS = ("pool", "gate_cost", "signal_2m")


@dataclass
class TradeoffReport:
    model: str
    p: float
    p_g: float
    detection_signal: float
    correction_signal: float
    detection_fidelity: float
    correction_fidelity: float
    crossover_p: float

    @property
    def detection_better(self) -> bool:
        return self.detection_signal >= self.correction_signal


def tradeoff(p: float, p_g: float = 0.0, model: str = "pool") -> TradeoffReport:
    """Compare the two-bit detection code with the three-bit correction code.

    Signals are per unit of resource (qubit pool size m or molecule count n):

    * ``pool``: (1-2p)/2 vs 1/3
    * ``gate_cost``: (1-2p)(1-p_g) vs 1-3p_g
    * ``signal_2m``: (1-2p)/4 vs 1/8

    Fidelities are those of the accepted (1 - p^2) and corrected (1 - 3p^2)
    outputs for single phase flips.
    """
    if not (0 <= p <= 0.5 and 0 <= p_g <= 0.5):
        raise ValueError("p and p_g must lie in [0, 1/2]")
    if model == "pool":
        det, cor, cross = (1 - 2 * p) / 2, 1 / 3, 1 / 6
    elif model == "gate_cost":
        det, cor, cross = (1 - 2 * p) * (1 - p_g), 1 - 3 * p_g, p_g / (1 - p_g)
    elif model == "signal_2m":
        det, cor, cross = (1 - 2 * p) / 4, 1 / 8, 1 / 4
    else:
        raise ValueError(f"unknown tradeoff model {model!r}")
    return TradeoffReport(model, p, p_g, det, cor, 1 - p ** 2, 1 - 3 * p ** 2, cross)


def crossover_numeric(model: str, p_g: float = 0.0) -> float:
    """Crossover found by root bracketing, independent of the closed forms."""
    from scipy.optimize import brentq

    def gap(p):
        r = tradeoff(p, p_g, model)
        return r.detection_signal - r.correction_signal

    if gap(0.0) <= 0:
        return 0.0
    return brentq(gap, 0.0, 0.5, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def asymptotic_signals(t: int, p: float, f: Callable[[float], float] = lambda p: 1.0):
    """Output signals of t-error detection vs correction codes at the
    singleton bound when signal halves per qubit: (1 - p f(p)) / 4^t and 1/16^t.
    """
    return (1 - p * f(p)) / 2 ** (2 * t), 1 / 2 ** (4 * t)
