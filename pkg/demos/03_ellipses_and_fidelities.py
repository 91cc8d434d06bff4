"""
From output ellipses to fidelities
==================================

Outputs over a semicircle of inputs trace an ellipse in the xz plane. Fitting
the intensity I = z^2 + x^2 to (A + B sin^2(theta + D))(1 - C(theta + D))
gives the ellipticity eps = sqrt(I(0) / I(pi/2)) and with it the fidelity
F = (1 + 1/eps) / 2.
"""

import numpy as np

from twobit import analysis
from twobit.experiment import NoiseConfig, readout, run_trial

theta = np.arange(11) * np.pi / 10
t_grid = np.arange(6) * 12 / 195.0
noise = NoiseConfig(T2star_a=0.40, T2star_b=0.40)


def ellipse(mode, t_d):
    pts = []
    for th in theta:
        out = readout(run_trial(th, t_d, mode, noise)).accepted
        pts.append((th, out.z, out.x))
    return pts


print(" t_d(ms)   eps_control  exp(t/T2*)   eps_coded   F_eps ctl  F_eps coded  F_delta coded")
eps = {"control": [], "coded": []}
for t in t_grid:
    reports = {m: analysis.fidelity_report(ellipse(m, t)) for m in eps}
    for m in eps:
        eps[m].append(reports[m].ellipticity)
    print(f" {t * 1e3:6.1f}   {reports['control'].ellipticity:10.4f}  {np.exp(t / 0.4):10.4f}"
          f"   {reports['coded'].ellipticity:9.4f}   {reports['control'].F_epsilon:8.4f}"
          f"   {reports['coded'].F_epsilon:10.4f}   {reports['coded'].F_delta:12.4f}")

# Quadratic trends of eps(t_d), as one would fit to measured points.
for m in eps:
    c = analysis.quadratic_fit(t_grid, eps[m]).coeffs
    print(f"{m:8s} eps ~ {c[0]:.3f} + {c[1]:.3f} t + {c[2]:.3f} t^2")

# Error probability of the coded run against that of the control run. The
# ideal relation has no linear term at small p, so the curve hugs p^2.
p_ctl = [analysis.error_from_ellipticity(e) for e in eps["control"]]
p_cod = [analysis.error_from_ellipticity(e) for e in eps["coded"]]
for a, b in zip(p_ctl, p_cod):
    print(f"p_control = {a:.3f}   p_coded = {b:.4f}   p^2 = {a * a:.4f}")

# A noisy synthetic ellipse: the fit reports standard errors as well.
rng = np.random.default_rng(0)
th = np.linspace(0, np.pi, 31)
inten = analysis.intensity_model(th, 0.9, -0.25, 0.04, 0.05) + rng.normal(0, 0.003, th.size)
fit = analysis.fit_ellipse([(t, np.sqrt(v), 0.0) for t, v in zip(th, inten)])
print("\nfit of noisy data:", {k: f"{getattr(fit, k):.4f} +- {fit.stderr[k]:.4f}" for k in "ABCD"})
