"""
When is detecting better than correcting?
=========================================

Given m qubits, the two-bit detection code yields m/2 logical qubits with
acceptance (1 - 2p) on average. The three-bit correction code yields m/3
logical qubits that are always usable. Other figures of merit charge for
gate errors p_g or for the signal halving with every ancilla.
"""

import numpy as np

from twobit.analysis import TRADEOFF_MODELS, asymptotic_signals, crossover_numeric, tradeoff

for model in TRADEOFF_MODELS:
    for p_g in ((0.0, 0.05) if model == "gate_cost" else (0.0,)):
        closed = tradeoff(0.0, p_g, model).crossover_p
        print(f"{model:9s} p_g = {p_g:.2f}: detection wins for p <= {closed:.6f}"
              f" (root finder: {crossover_numeric(model, p_g):.6f})")

print("\n  p     pool: det / cor     signal_2m: det / cor")
for p in np.linspace(0, 0.3, 7):
    a, b = tradeoff(p, model="pool"), tradeoff(p, model="signal_2m")
    print(f" {p:.2f}   {a.detection_signal:.3f} / {a.correction_signal:.3f}"
          f"       {b.detection_signal:.3f} / {b.correction_signal:.3f}")

# For t-error codes at the singleton bound with signal halving per qubit,
# detection keeps a 4^t advantage in signal.
for t in (1, 2, 3):
    d, c = asymptotic_signals(t, 0.1)
    print(f"t = {t}: detection {d:.3g}, correction {c:.3g}, ratio {d / c:.1f}")
