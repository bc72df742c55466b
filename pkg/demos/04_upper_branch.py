"""
Reaching the upper branch
=========================

Near the fold both branches are close and the optimiser prefers the lower
one.  A coarse 9-point classical solution, spline-smoothed, is used as the
predictor for a multi-start solve at lambda = 3.  From there each step uses
the previous quantum solution as predictor and the circuit only has to learn
the correction.  Takes a few minutes.
"""

from qbratu import classical, continuation, pde

template = pde.TrialConfig(lam=3.0)
first = continuation.bootstrap_upper(3.0, template, 500, seed=0, n_starts=8)
print(f"seed point: u(1/2) = {first.u_max:.4f}, cost {first.final_cost:.1e}, {first.status}")
for run in first.report.extra["multi_start"]:
    print("   start", run)

points = continuation.sweep_upper([2.5, 2.0, 1.5, 1.0], first, template)
for p in [first, *points]:
    ref = classical.closed_form_solution(p.lam, "upper")
    print(f"lambda = {p.lam}: u(1/2) = {p.u_max:.4f} (classical {ref.u_max:.4f}), "
          f"sup error {continuation.max_abs_error(p, ref):.1e}, cost {p.final_cost:.1e}")
