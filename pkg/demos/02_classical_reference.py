"""
Classical reference solutions
=============================

Second-order finite differences plus Newton give the lower branch directly.
Pseudo arc-length continuation walks round the fold onto the upper branch,
and the closed-form solution checks both.
"""

import numpy as np

from qbratu import classical

lam_c = classical.critical_lambda()
print(f"critical lambda from the transcendental relation: {lam_c:.9f}")

sol = classical.newton_solve(1.0, M=999)
exact = classical.closed_form_solution(1.0)
print(f"lambda = 1, M = 999: {sol.newton_iterations} Newton steps, "
      f"sup error {np.max(np.abs(sol.u - exact(sol.x))):.2e}")

# halving h divides the error by four
for M in (99, 199, 399, 799):
    s = classical.newton_solve(1.0, M=M)
    print(f"  M = {M:4d}  error = {np.max(np.abs(s.u - exact(s.x))):.3e}")

# trace the whole S-shaped curve from lambda = 0.05 and back down
path = classical.arc_length_continue(classical.newton_solve(0.05), 0.05, 5000, lambda_stop=0.05)
print(f"{len(path)} arc-length steps, fold found at lambda = {classical.fold_from_path(path):.7f}")

for lam in (0.5, 1.0, 3.0):
    up = classical.solve_on_branch(lam, "upper", path=path)
    print(f"lambda = {lam}: lower u(1/2) = {classical.closed_form_solution(lam).u_max:.5f}, "
          f"upper u(1/2) = {up.u_max:.5f} (closed form {classical.closed_form_solution(lam, 'upper').u_max:.5f})")
