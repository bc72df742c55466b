"""Classical reference solvers for the 1D Bratu problem.

* finite-difference Newton at fixed lambda (tridiagonal Jacobian, Thomas solve)
* Keller pseudo arc-length continuation through the fold, with the bordered
  system solved by block elimination around the tridiagonal core
* the closed-form solution ``u(x) = -2 ln[cosh((x - 1/2) t / 2) / cosh(t / 4)]``
  with ``t = sqrt(2 lam) cosh(t / 4)``, used as an independent oracle

Grid: ``M`` interior points ``x_i = i h``, ``h = 1 / (M + 1)``; the boundary
values ``u_0 = u_{M+1} = 0`` are implicit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import optimize

log = logging.getLogger(__name__)

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
DEFAULT_M = 999


class ConvergenceError(RuntimeError):
    """A Newton-type iteration failed; ``last`` holds the final iterate if any."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class SingularJacobianError(ConvergenceError):
    pass


@njit(cache=True)
def _thomas(lower, diag, upper, rhs, pivot_floor):
    n = diag.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    denom = diag[0]
    if abs(denom) <= pivot_floor:
        return dp, 0
    cp[0] = upper[0] / denom if n > 1 else 0.0
    dp[0] = rhs[0] / denom
    for i in range(1, n):
        denom = diag[i] - lower[i - 1] * cp[i - 1]
        if abs(denom) <= pivot_floor:
            return dp, i
        if i < n - 1:
            cp[i] = upper[i] / denom
        dp[i] = (rhs[i] - lower[i - 1] * dp[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        dp[i] -= cp[i] * dp[i + 1]
    return dp, -1


def thomas_solve(lower, diag, upper, rhs) -> np.ndarray:
    """Solve a tridiagonal system without pivoting.

    ``lower`` and ``upper`` hold the ``n - 1`` sub- and super-diagonal entries.
    Raises ``SingularJacobianError`` on a vanishing pivot.
    """
    lower = np.ascontiguousarray(lower, dtype=float)
    diag = np.ascontiguousarray(diag, dtype=float)
    upper = np.ascontiguousarray(upper, dtype=float)
    rhs = np.ascontiguousarray(rhs, dtype=float)
    n = diag.shape[0]
    if lower.shape != (n - 1,) or upper.shape != (n - 1,) or rhs.shape != (n,):
        raise ValueError("inconsistent tridiagonal band lengths")
    scale = np.max(np.abs(diag)) if n else 0.0
    x, bad = _thomas(lower, diag, upper, rhs, 1e-14 * scale)
    if bad >= 0:
        raise SingularJacobianError(f"vanishing pivot at row {bad}")
    return x


def grid(M: int) -> np.ndarray:
    return np.arange(1, M + 1) / (M + 1)


def residual(u: np.ndarray, lam: float) -> np.ndarray:
    """``F_i = (u_{i+1} - 2 u_i + u_{i-1}) / h^2 + lam exp(u_i)``."""
    h = 1.0 / (u.size + 1)
    padded = np.concatenate([[0.0], u, [0.0]])
    return (padded[2:] - 2.0 * u + padded[:-2]) / h**2 + lam * np.exp(u)


def residual_floor(u: np.ndarray, lam: float) -> float:
    """Rounding level of ``||F||_inf`` when evaluated in float64.

    The stencil divides O(|u|) cancellation error by ``h^2``, so for fine grids
    and O(1) solutions this floor sits above 1e-10.
    """
    h = 1.0 / (u.size + 1)
    umax = float(np.max(np.abs(u))) if u.size else 0.0
    return 4.0 * np.finfo(float).eps * (4.0 * umax / h**2 + lam * np.exp(umax))


def jacobian_bands(u: np.ndarray, lam: float):
    h = 1.0 / (u.size + 1)
    off = np.full(u.size - 1, 1.0 / h**2)
    diag = -2.0 / h**2 + lam * np.exp(u)
    return off, diag, off


@dataclass(frozen=True)
class ClassicalSolution:
    lam: float
    u: np.ndarray
    newton_iterations: int
    residual_norm: float

    @property
    def M(self) -> int:
        return self.u.size

    @property
    def h(self) -> float:
        return 1.0 / (self.u.size + 1)

    @property
    def x(self) -> np.ndarray:
        return grid(self.u.size)

    @property
    def u_max(self) -> float:
        return float(self(0.5))

    def __call__(self, x):
        """Linear interpolation of the grid solution, boundaries included."""
        xs = np.concatenate([[0.0], self.x, [1.0]])
        us = np.concatenate([[0.0], self.u, [0.0]])
        return np.interp(x, xs, us)


def newton_solve(
    lam: float,
    initial_u=None,
    M: int = DEFAULT_M,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
    history: list | None = None,
) -> ClassicalSolution:
    """Fixed-lambda Newton on the finite-difference system.

    Converged when ``||F||_inf`` drops below ``tol``, or below the float64
    rounding floor of the residual if that is larger.  ``history``, if given, receives the
    residual norm before every iteration.
    """
    if M < 3:
        raise ValueError("M must be at least 3")
    u = np.zeros(M) if initial_u is None else np.array(initial_u, dtype=float)
    if u.shape != (M,) or not np.all(np.isfinite(u)):
        raise ValueError(f"initial_u must be a finite vector of length {M}")
    for it in range(max_iter + 1):
        f = residual(u, lam)
        rnorm = float(np.max(np.abs(f)))
        if history is not None:
            history.append(rnorm)
        if not np.isfinite(rnorm):
            break
        if rnorm < max(tol, residual_floor(u, lam)):
            return ClassicalSolution(float(lam), u, it, rnorm)
        if it == max_iter:
            break
        lo, di, up = jacobian_bands(u, lam)
        try:
            du = thomas_solve(lo, di, up, -f)
        except SingularJacobianError as exc:
            raise SingularJacobianError(f"lambda={lam}: {exc}", last=u) from None
        u = u + du
        if np.max(u) > 50.0:
            break
    raise ConvergenceError(
        f"Newton did not converge at lambda={lam} (||F||_inf={rnorm:.3e})", last=u
    )


# -- closed form ----------------------------------------------------------------


def _lambda_of_theta(theta):
    return theta**2 / (2.0 * np.cosh(theta / 4.0) ** 2)


def critical_point() -> tuple[float, float]:
    """``(theta_c, lambda_c)`` at the maximum of ``lambda(theta)``, by golden section."""
    res = optimize.minimize_scalar(
        lambda t: -_lambda_of_theta(t), bracket=(1.0, 4.0, 10.0), method="golden",
        options={"xtol": 1e-10},
    )
    theta = float(res.x)
    return theta, float(_lambda_of_theta(theta))


def critical_lambda() -> float:
    return critical_point()[1]


@dataclass(frozen=True)
class ClosedFormSolution:
    lam: float
    branch: str
    theta: float

    @property
    def u_max(self) -> float:
        return float(2.0 * np.log(np.cosh(self.theta / 4.0)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return -2.0 * np.log(np.cosh((x - 0.5) * self.theta / 2.0) / np.cosh(self.theta / 4.0))


def closed_form_solution(lam: float, branch: str = "lower") -> ClosedFormSolution:
    if branch not in ("lower", "upper"):
        raise ValueError(f"branch must be 'lower' or 'upper', got {branch!r}")
    theta_c, lam_c = critical_point()
    if not 0.0 < lam < lam_c:
        raise ValueError(f"closed-form solution needs 0 < lambda < {lam_c:.6f}, got {lam}")
    root = lambda t: t - np.sqrt(2.0 * lam) * np.cosh(t / 4.0)
    if branch == "lower":
        a, b = 0.0, theta_c
    else:
        a, b = theta_c, 2.0 * theta_c
        while root(b) > 0:
            b *= 2.0
    theta = optimize.bisect(root, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return ClosedFormSolution(float(lam), branch, float(theta))


# -- pseudo arc-length ---------------------------------------------------------------


@dataclass(frozen=True)
class ContinuationStep:
    u: np.ndarray
    lam: float
    u_dot: np.ndarray
    lam_dot: float
    arc_step: float
    residual_norm: float = 0.0
    constraint_residual: float = 0.0

    @property
    def u_max(self) -> float:
        return float(np.interp(0.5, np.r_[0.0, grid(self.u.size), 1.0], np.r_[0.0, self.u, 0.0]))

    @property
    def tangent_norm(self) -> float:
        return float(np.sqrt(self.u_dot @ self.u_dot + self.lam_dot**2))


def _bordered_solve(u, lam, f_rhs, border_u, border_lam, phi_rhs):
    """Solve ``[[J, F_lam], [border_u^T, border_lam]] (du, dlam) = (f_rhs, phi_rhs)``.

    Block elimination: two tridiagonal solves with J, then a scalar equation.
    """
    lo, di, up = jacobian_bands(u, lam)
    f_lam = np.exp(u)
    a = thomas_solve(lo, di, up, f_rhs)
    b = thomas_solve(lo, di, up, f_lam)
    denom = border_lam - border_u @ b
    if abs(denom) < 1e-300:
        raise SingularJacobianError("bordered system is singular")
    dlam = (phi_rhs - border_u @ a) / denom
    return a - b * dlam, dlam


def _tangent(u, lam, prev_u_dot, prev_lam_dot):
    t_u, t_lam = _bordered_solve(u, lam, np.zeros_like(u), prev_u_dot, prev_lam_dot, 1.0)
    norm = np.sqrt(t_u @ t_u + t_lam**2)
    return t_u / norm, t_lam / norm


def initial_tangent(sol: ClassicalSolution):
    """Tangent at a converged fixed-lambda point: ``(u_lam, 1)`` normalised."""
    lo, di, up = jacobian_bands(sol.u, sol.lam)
    u_lam = thomas_solve(lo, di, up, -np.exp(sol.u))
    norm = np.sqrt(u_lam @ u_lam + 1.0)
    return u_lam / norm, 1.0 / norm


def _correct(u0, lam0, u_dot, lam_dot, ds, tol, max_iter):
    u = u0 + ds * u_dot
    lam = lam0 + ds * lam_dot
    for _ in range(max_iter + 1):
        f = residual(u, lam)
        phi = u_dot @ (u - u0) + lam_dot * (lam - lam0) - ds
        fnorm = float(np.max(np.abs(f)))
        if not np.isfinite(fnorm):
            break
        if fnorm < max(tol, residual_floor(u, lam)) and abs(phi) < tol:
            return u, lam, fnorm, abs(phi)
        du, dlam = _bordered_solve(u, lam, -f, u_dot, lam_dot, -phi)
        u = u + du
        lam = lam + dlam
    raise ConvergenceError(f"arc-length corrector failed near lambda={lam0:.6f}")


def arc_length_continue(
    start: ClassicalSolution,
    delta_s: float,
    n_steps: int,
    tol: float = NEWTON_TOL,
    max_iter: int = 20,
    max_halvings: int = 5,
    lambda_stop: float | None = None,
) -> list[ContinuationStep]:
    """Keller pseudo arc-length continuation from a converged solution.

    Each step predicts along the unit tangent and corrects with Newton on the
    system augmented by ``u_dot0 . (u - u0) + lam_dot0 (lam - lam0) - ds = 0``.
    A failed corrector halves ``ds`` (up to ``max_halvings`` times).  The
    sweep stops after ``n_steps`` accepted steps, or once lambda falls below
    ``lambda_stop`` after having turned at the fold.

    The returned list starts with the initial point (``arc_step = 0``).
    """
    if delta_s <= 0:
        raise ValueError("delta_s must be positive")
    u_dot, lam_dot = initial_tangent(start)
    steps = [ContinuationStep(start.u, start.lam, u_dot, lam_dot, 0.0, start.residual_norm)]
    u, lam = start.u, start.lam
    turned = False
    for _ in range(n_steps):
        ds = delta_s
        for attempt in range(max_halvings + 1):
            try:
                u_new, lam_new, fnorm, phinorm = _correct(u, lam, u_dot, lam_dot, ds, tol, max_iter)
                break
            except ConvergenceError:
                if attempt == max_halvings:
                    raise ConvergenceError(
                        f"arc-length step failed after {max_halvings} halvings at lambda={lam:.6f}",
                        last=steps,
                    ) from None
                ds *= 0.5
                log.debug("halving arc step to %g at lambda=%g", ds, lam)
        new_u_dot, new_lam_dot = _tangent(u_new, lam_new, u_dot, lam_dot)
        if new_lam_dot < 0 <= lam_dot:
            turned = True
        u, lam, u_dot, lam_dot = u_new, lam_new, new_u_dot, new_lam_dot
        steps.append(ContinuationStep(u, lam, u_dot, lam_dot, ds, fnorm, phinorm))
        if lambda_stop is not None and turned and lam < lambda_stop:
            break
    return steps


def fold_from_path(path: list[ContinuationStep]) -> float:
    return max(step.lam for step in path)


def solve_on_branch(
    lam: float,
    branch: str,
    M: int = DEFAULT_M,
    path: list[ContinuationStep] | None = None,
    tol: float = NEWTON_TOL,
) -> ClassicalSolution:
    """Discrete solution on the requested branch at fixed ``lam``.

    The Newton initial guess is the continuation path interpolated at ``lam``
    on the requested side of the fold, or the closed form when no path is
    supplied.
    """
    if path is None:
        guess = closed_form_solution(lam, branch)(grid(M))
    else:
        guess = _guess_from_path(path, lam, branch)
    return newton_solve(lam, guess, M=M, tol=tol)


def _guess_from_path(path, lam, branch):
    i_fold = int(np.argmax([s.lam for s in path]))
    side = path[: i_fold + 1] if branch == "lower" else path[i_fold:][::-1]
    lams = np.array([s.lam for s in side])
    if not lams[0] <= lam <= lams[-1]:
        raise ValueError(f"lambda={lam} is not covered by the {branch} part of the path")
    j = int(np.clip(np.searchsorted(lams, lam), 1, lams.size - 1))
    w = (lam - lams[j - 1]) / (lams[j] - lams[j - 1])
    return (1 - w) * side[j - 1].u + w * side[j].u
