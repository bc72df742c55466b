"""
Training the circuit on the lower branch
========================================

The trial u(x) = u_pred(x) + s x (1 - x) u_q(x) meets both boundary
conditions for any weights.  Starting near the zero-output point, Adam
drives the mean squared residual of u'' + lambda e^u down.
"""

import numpy as np

from qbratu import classical, continuation, optim, pde

for lam in (0.1, 1.0, 3.0):
    cfg = pde.TrialConfig(lam=lam)
    report = optim.train(optim.initialize_weights("lower", 0), cfg, 500)
    h = report.cost_history
    point = continuation.make_point(report, cfg, "lower")
    err = continuation.max_abs_error(point, classical.newton_solve(lam))
    print(f"lambda = {lam}: cost {h[0]:.2e} -> {h[99]:.2e} -> {h[-1]:.2e}, "
          f"u(1/2) = {report.u_max:.5f}, sup error {err:.1e}")

# a short sweep: each lambda starts from the previous weights
pts = continuation.sweep_lower(np.arange(0.5, 3.01, 0.5), pde.TrialConfig(lam=0.5), 500, seed=0)
for p in pts:
    print(f"  {p.lam:.1f}  u_max {p.u_max:.5f}  cost {p.final_cost:.1e}  {p.status}")
