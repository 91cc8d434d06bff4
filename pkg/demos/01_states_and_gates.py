"""
States, Pauli coefficients and the pulse library
================================================

Two spins, A (the qubit being protected) and B (the ancilla). Every state is
a 4x4 deviation matrix and every measurement sees its Pauli coefficients
c_ij = Re tr(rho sigma_i (x) sigma_j) / 4.
"""

import numpy as np

from twobit.gates import compile_sequence, gate_library
from twobit.qcore import I2, SZ, conjugate, pauli_decompose, pauli_label, phase_equal, tensor
from twobit.experiment import thermal_state

np.set_printoptions(precision=3, suppress=True)

# The thermal deviation state with omega_a : omega_b = 4 : 1 is diagonal.
rho_th = thermal_state(4.0, 1.0)
print("thermal state diagonal:", np.diag(rho_th).real)

c = pauli_decompose(rho_th)
print("nonzero coefficients:", {pauli_label(i, j): float(c[i, j]) for i, j in zip(*np.nonzero(np.abs(c) > 1e-12))})

# Gates are pulse sequences. The first element acts first; a delay tau = 1/(2J)
# lets the J coupling build exp(-i pi/4 sz(x)sz).
cn = gate_library("CN_tilde")
print("\nCN_tilde as pulses:", [f"{e.axis}_{e.spin}" if e.kind == "rotation" else "tau" for e in cn])
U_cn = compile_sequence(cn)
print(np.round(U_cn * np.sqrt(2), 3))

# Acting on the thermal state with equal polarizations, CN_tilde swaps the
# populations of |01> and |11>.
out = conjugate(U_cn, 0.5 * tensor(SZ, I2) + 0.5 * tensor(I2, SZ))
print("\nCN_tilde on thermal state -> 1/2 zz + 1/2 Iz:",
      np.allclose(out, 0.5 * tensor(SZ, SZ) + 0.5 * tensor(I2, SZ)))

# Encoder and decoder use eight RF pulses in total, and undo each other.
enc, dec = gate_library("U_enc"), gate_library("U_dec")
print("\nRF pulses in encoder + decoder:", enc.rf_pulse_count + dec.rf_pulse_count)
print("U_dec U_enc is identity up to phase:", phase_equal(compile_sequence(enc + dec), np.eye(4)))

# A 5% over-rotation on every pulse spoils that. The scale factor multiplies
# x/y pulse angles only; z rotations are frame shifts and stay exact.
u = compile_sequence(enc + dec, scales=(1.05, 1.05))
print("overlap |tr U|/4 with 5% over-rotation:", abs(np.trace(u)) / 4)
