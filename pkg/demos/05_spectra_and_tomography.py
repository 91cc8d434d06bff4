"""
Reading the state: spectra, peak integrals and tomography
=========================================================

Only eight of the fifteen Pauli coefficients show up in one spectrum. Spin A
has two lines split by J, one per ancilla state, so the accepted and rejected
outputs can be read separately. Nine spectra with different readout pulses
recover the full deviation matrix.
"""

import numpy as np

from twobit.experiment import (integrate_lines, peak_integrals, readout_pulse, synthesize_spectrum,
                               tomography, trial_stages)
from twobit.qcore import pauli_decompose, pauli_label

stages = trial_stages(np.pi / 2, 0.0, "coded")

# Peak integrals of the encoded state after the readout pulse.
rho = readout_pulse(stages["rho5"])
print("closed-form peak integrals:", peak_integrals(pauli_decompose(rho)))

# A synthetic spectrum with T2* line widths, integrated line by line.
grid = np.arange(-3000.0, 3000.0, 0.05)
spectrum = synthesize_spectrum(rho, 0.35, 0.50, grid)
print("integrated spectrum:       ", integrate_lines(spectrum, grid))

# Full reconstruction of the encoded state rho3 from nine experiments.
c = tomography(stages["rho3"])
print("\nrho3 coefficients above 1e-9:")
for i, j in zip(*np.nonzero(np.abs(c) > 1e-9)):
    print(f"  {pauli_label(i, j)}: {c[i, j]:+.4f}")
direct = pauli_decompose(stages["rho3"])
direct[0, 0] = 0
print("max reconstruction error:", np.max(np.abs(c - direct)))
