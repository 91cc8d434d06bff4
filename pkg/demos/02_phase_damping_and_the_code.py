"""
Phase damping and the two-bit detection code
============================================

Store the input state of spin A for t_d seconds, once bare (control) and once
encoded across both spins (coded). Dephasing of spin i happens with
probability p_i = (1 - exp(-t_d / T2*_i)) / 2.
"""

import numpy as np

from twobit.channels import damping_probability
from twobit.experiment import NoiseConfig, acceptance_weight, readout, run_trial

noise = NoiseConfig(T2star_a=0.40, T2star_b=0.40)
t_d = 5 * 12 / 195.0  # five storage steps of 12/J, about 308 ms
pa, pb = noise.probabilities(t_d)
print(f"t_d = {t_d * 1e3:.0f} ms  ->  p_a = {pa:.3f}, p_b = {pb:.3f}")

# Run both experiments over a semicircle of inputs and read spin A.
print("\n theta   control (z, x)     coded accepted (z, x)   coded rejected (z, x)")
for theta in np.linspace(0, np.pi, 5):
    ctl = readout(run_trial(theta, t_d, "control", noise)).accepted
    out = readout(run_trial(theta, t_d, "coded", noise))
    print(f" {theta:5.2f}   ({ctl.z:+.3f}, {ctl.x:+.3f})   ({out.accepted.z:+.3f}, {out.accepted.x:+.3f})"
          f"      ({out.rejected.z:+.3f}, {out.rejected.x:+.3f})")

# The control ellipse shrinks along x by 1 - 2p_a. The accepted coded output
# is a near circle: only the both-spins-flipped term (weight p_a p_b) leaks in.
w = acceptance_weight(0.0, t_d, "coded", noise)
print(f"\nacceptance probability {w:.4f} = (1-p_a)(1-p_b) + p_a p_b = {(1 - pa) * (1 - pb) + pa * pb:.4f}")

# Conditional on acceptance, the worst-case fidelity is
# 1 - p_a p_b / (1 - p_a - p_b + 2 p_a p_b), which tends to 1 - p_a p_b for
# small p. At this long storage time the two differ visibly.
z0 = readout(run_trial(0.0, t_d, "coded", noise)).accepted.z
x90 = readout(run_trial(np.pi / 2, t_d, "coded", noise)).accepted.x
exact = 1 - pa * pb / (1 - pa - pb + 2 * pa * pb)
print(f"conditional fidelity {(1 + x90 / z0) / 2:.4f} (exact law {exact:.4f}, small-p law {1 - pa * pb:.4f})"
      f" vs unprotected 1 - p_a = {1 - pa:.4f}")

# The probability ladder of the default storage grid with T2* = 0.4 s.
print("\np_a ladder:", [round(float(damping_probability(n * 12 / 195.0, 0.4)), 3) for n in range(6)])
