"""Predictor-corrector sweeps of the quantum solver over lambda.

Lower branch: zero predictor, weights carried from one lambda to the next.
Upper branch: the first point comes from a multi-start solve steered by a
low-fidelity classical predictor; every later point uses the previous quantum
solution as predictor, so the circuit only has to learn the change between
neighbouring lambdas.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.interpolate import CubicSpline

from . import classical, optim, pde
from .optim import TrainingReport

log = logging.getLogger(__name__)

ACCEPT_COST = optim.ACCEPT_COST
COARSE_M = 9
UPPER_ITERATIONS = 5000
PROJECTION_DEGREES = tuple(range(8, 41, 2))


@dataclass
class BranchPoint:
    lam: float
    grid_xs: np.ndarray
    u_values: np.ndarray
    u_max: float
    branch: str
    final_cost: float
    weights: np.ndarray
    status: str = "ok"  # ok | failed | branch-lost
    profile: pde.PredictorFunction | None = None
    report: TrainingReport | None = None
    config: pde.TrialConfig | None = None

    @property
    def converged(self) -> bool:
        return self.status == "ok"


def lower_reference_umax(lam: float) -> float:
    if lam <= 0:
        return 0.0
    return classical.closed_form_solution(lam, "lower").u_max


def smooth_profile(weights, cfg: pde.TrialConfig, degrees=PROJECTION_DEGREES) -> pde.PredictorFunction:
    """The trial at the stencil points, projected onto a Chebyshev series.

    Each step of the circuit leaves a faint ripple (amplitude ~1e-4) that is
    harmless in ``u`` but large in ``u''``; carried through the predictor it
    accumulates from step to step.  Among the least-squares fits of the given
    degrees, and the raw samples themselves, the one with the smallest
    residual cost at ``cfg.lam`` is kept.
    """
    xs = cfg.stencil_points()
    u = pde.trial(xs, weights, cfg)
    best = pde.PredictorFunction(xs, u)
    best_cost = pde.cost(weights, cfg)
    zero = optim.zero_output_weights(*np.shape(weights)[:2])
    for deg in degrees:
        fit = pde.PredictorFunction.from_function(Chebyshev.fit(xs, u, deg, domain=[0, 1]), xs)
        c = pde.cost(zero, cfg.with_(predictor=fit))
        if c < best_cost:
            best, best_cost = fit, c
    return best


def make_point(
    report: TrainingReport, cfg: pde.TrialConfig, branch: str, smooth: bool = False
) -> BranchPoint:
    xs = np.concatenate([[0.0], cfg.grid(), [1.0]])
    if report.diverged:
        u = np.full(xs.shape, np.nan)
        u_max = float("nan")
        profile = None
    else:
        u = pde.trial(xs, report.final_weights, cfg)
        u_max = pde.trial(0.5, report.final_weights, cfg)
        if smooth:
            profile = smooth_profile(report.final_weights, cfg)
        else:
            profile = pde.sample_trial(report.final_weights, cfg)
    status = "ok" if report.converged else "failed"
    report.branch = branch
    return BranchPoint(
        lam=cfg.lam, grid_xs=xs, u_values=u, u_max=u_max, branch=branch,
        final_cost=report.final_cost, weights=report.final_weights, status=status,
        profile=profile, report=report, config=cfg,
    )


def sweep_lower(
    lambda_values,
    template: pde.TrialConfig,
    iterations: int,
    seed: int,
    use_predictor: bool = False,
    n_layers: int = 4,
    n_qubits: int = 3,
    **train_kwargs,
) -> list[BranchPoint]:
    """Solve the lower branch at each lambda, in the given (ascending) order."""
    points: list[BranchPoint] = []
    weights = None
    last_ok: BranchPoint | None = None
    for lam in lambda_values:
        predictor = pde.PredictorFunction.zero()
        if use_predictor and last_ok is not None:
            predictor = last_ok.profile
        cfg = template.with_(lam=float(lam), predictor=predictor)
        if weights is None or use_predictor:
            init = optim.initialize_weights("lower", seed, n_layers, n_qubits)
        else:
            init = weights
        report = optim.train(init, cfg, iterations, **train_kwargs)
        report.seed = seed
        point = make_point(report, cfg, "lower")
        log.info("lower lambda=%.4g cost=%.3e u_max=%.5f %s", lam, point.final_cost, point.u_max, point.status)
        points.append(point)
        if point.converged:
            last_ok = point
            weights = point.weights
    return points


def low_fidelity_predictor(
    lam: float, branch: str, template: pde.TrialConfig, M: int = COARSE_M
) -> pde.PredictorFunction:
    """Coarse-grid classical solution, spline-smoothed, sampled at the stencil points.

    Used once, to steer the first upper-branch solve.  The spline keeps the
    predictor's curvature continuous so the detached stencil sees no kinks.
    """
    start = classical.newton_solve(0.05, M=M)
    path = classical.arc_length_continue(start, 0.05, 2000, lambda_stop=min(0.05, lam / 2))
    sol = classical.solve_on_branch(lam, branch, M=M, path=path)
    spline = CubicSpline(np.r_[0.0, sol.x, 1.0], np.r_[0.0, sol.u, 0.0])
    return pde.PredictorFunction.from_function(spline, template.stencil_points())


def bootstrap_upper(
    lam: float,
    template: pde.TrialConfig,
    iterations: int,
    seed: int,
    n_starts: int = 8,
    coarse_M: int = COARSE_M,
    initializer: str = "corrector",
    n_layers: int = 4,
    n_qubits: int = 3,
    **train_kwargs,
) -> BranchPoint:
    """First upper-branch point by multi-start, steered by a coarse classical predictor."""
    predictor = low_fidelity_predictor(lam, "upper", template, coarse_M)
    cfg = template.with_(lam=float(lam), predictor=predictor)
    report = optim.multi_start(
        cfg, n_starts, iterations, seed, initializer=initializer, n_layers=n_layers,
        n_qubits=n_qubits, **train_kwargs,
    )
    point = make_point(report, cfg, "upper", smooth=True)
    if not report.upper and point.converged:
        point.status = "branch-lost"
    return point


def sweep_upper(
    lambda_values,
    first_point: BranchPoint,
    template: pde.TrialConfig,
    iterations: int = UPPER_ITERATIONS,
    seed: int = 0,
    warm_start: bool = False,
    **train_kwargs,
) -> list[BranchPoint]:
    """Quantum predictor-corrector along the upper branch.

    The predictor at each lambda is the previous accepted solution (see
    ``smooth_profile``).  The circuit restarts from the zero-output point (``u_q = 0``, so the initial
    trial equals the predictor) unless ``warm_start`` is set, in which case
    it starts from the previous weights.  Stops at the first point whose
    ``u_max`` falls below the lower-branch value.
    """
    points: list[BranchPoint] = []
    prev = first_point
    n_layers, n_qubits, _ = first_point.weights.shape
    for lam in lambda_values:
        cfg = template.with_(lam=float(lam), predictor=prev.profile)
        if warm_start:
            init = prev.weights
        else:
            init = optim.initialize_weights("corrector", seed, n_layers, n_qubits)
        report = optim.train(init, cfg, iterations, **train_kwargs)
        report.seed = seed
        point = make_point(report, cfg, "upper", smooth=True)
        report.upper = bool(np.isfinite(point.u_max) and point.u_max > lower_reference_umax(point.lam))
        if point.converged and not report.upper:
            point.status = "branch-lost"
        log.info("upper lambda=%.4g cost=%.3e u_max=%.5f %s", lam, point.final_cost, point.u_max, point.status)
        points.append(point)
        if point.status == "branch-lost":
            break
        if point.converged:
            prev = point
    return points


@dataclass
class BifurcationDiagram:
    points: list[BranchPoint] = field(default_factory=list)

    def branch(self, name: str) -> list[BranchPoint]:
        return [p for p in self.points if p.branch == name]

    def violations(self) -> list[str]:
        """Ordering and monotonicity violations among converged points."""
        out = []
        lower = {p.lam: p for p in self.branch("lower") if p.converged}
        upper = {p.lam: p for p in self.branch("upper") if p.converged}
        for lam in sorted(set(lower) & set(upper)):
            if not upper[lam].u_max > lower[lam].u_max:
                out.append(f"upper u_max <= lower u_max at lambda={lam}")
        for name, pts in (("lower", lower), ("upper", upper)):
            lams = sorted(pts)
            u = [pts[l].u_max for l in lams]
            for a, b, ua, ub in zip(lams, lams[1:], u, u[1:]):
                if name == "lower" and not ub > ua:
                    out.append(f"lower u_max not increasing between lambda={a} and {b}")
                if name == "upper" and not ua > ub:
                    out.append(f"upper u_max not decreasing between lambda={a} and {b}")
        return out


def build_diagram(lower, upper) -> BifurcationDiagram:
    """Merge branch points, ordered by (branch, lambda).

    Raises ``ValueError`` on a duplicate (branch, lambda) pair or on an
    ordering/monotonicity violation.
    """
    points = sorted([*lower, *upper], key=lambda p: (p.branch, p.lam))
    keys = [(p.branch, p.lam) for p in points]
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate (branch, lambda) in bifurcation diagram")
    diagram = BifurcationDiagram(points)
    problems = diagram.violations()
    if problems:
        raise ValueError("; ".join(problems))
    return diagram


def max_abs_error(point: BranchPoint, reference) -> float:
    """Sup-norm distance on the point's grid to a callable reference profile."""
    return float(np.max(np.abs(point.u_values - reference(point.grid_xs))))
