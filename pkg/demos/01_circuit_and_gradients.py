"""
The quantum part of the trial function
======================================

A 3-qubit, 4-layer circuit maps x in [0, 1] to a number u_q(x) in [-1, 1].
Here we build it, read it out, and check the parameter-shift gradient
against finite differences.
"""

import numpy as np

from qbratu import ansatz, optim, qsim

# the three features fed into the RY embedding
print("features at x = 0.5:", ansatz.encode_features(0.5))

rng = np.random.default_rng(0)
weights = rng.uniform(-np.pi, np.pi, (4, 3, 3))
gates = ansatz.build_circuit(0.5, weights)
print(f"{len(gates)} gates, {sum(g.kind == 'CNOT' for g in gates)} of them CNOT")

# gate-by-gate simulation and the vectorised route agree
state = qsim.run_circuit(gates, 3)
print("u_q(0.5), gate by gate :", qsim.expectation_z(state, 2))
print("u_q(0.5), vectorised   :", ansatz.evaluate_uq(0.5, weights))

# with RX(pi/2) on qubit 0 of the last layer and everything else zero,
# the read-out vanishes for every x
xs = np.linspace(0, 1, 7)
print("zero-output weights:", np.round(ansatz.evaluate_uq(xs, optim.zero_output_weights()), 15))

# parameter shift: (f(t + pi/2) - f(t - pi/2)) / 2 is exact for these gates
g = ansatz.gradient_uq(0.3, weights)
fd = np.zeros_like(weights)
for idx in np.ndindex(weights.shape):
    e = np.zeros_like(weights)
    e[idx] = 1e-6
    fd[idx] = (ansatz.evaluate_uq(0.3, weights + e) - ansatz.evaluate_uq(0.3, weights - e)) / 2e-6
print(f"max |shift - finite difference| = {np.max(np.abs(g - fd)):.2e}")

for row in ansatz.weight_table(weights)[:4]:
    print("index %d  layer %d  qubit %d  %s  %.4f" % row)
