"""Bratu residual and cost for the quantum trial function.

The trial function is ``u_pred(x) + s * x * (1 - x) * u_q(x; weights)``.  Its
second derivative is taken with a central stencil of step ``h`` that is
detached from the collocation grid, so every collocation point costs three
circuit evaluations (``x - h``, ``x``, ``x + h``).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .ansatz import check_weights, evaluate_uq, uq_with_gradient

EXP_GUARD = 50.0


class DivergenceError(ArithmeticError):
    """Trial values grew past the exponential guard."""


@dataclass(frozen=True)
class PredictorFunction:
    """Piecewise-linear predictor through stored samples, pinned to 0 at both ends."""

    sample_xs: np.ndarray
    sample_us: np.ndarray

    def __post_init__(self):
        xs = np.array(self.sample_xs, dtype=float)
        us = np.array(self.sample_us, dtype=float)
        if xs.ndim != 1 or xs.shape != us.shape or xs.size < 2:
            raise ValueError("predictor needs matching 1-D sample arrays of length >= 2")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("predictor sample_xs must be strictly increasing")
        if xs[0] != 0.0 or xs[-1] != 1.0:
            raise ValueError("predictor samples must span [0, 1]")
        if not np.all(np.isfinite(us)):
            raise ValueError("predictor samples must be finite")
        us[0] = us[-1] = 0.0
        xs.setflags(write=False)
        us.setflags(write=False)
        object.__setattr__(self, "sample_xs", xs)
        object.__setattr__(self, "sample_us", us)

    @classmethod
    def zero(cls) -> PredictorFunction:
        return cls(np.array([0.0, 1.0]), np.zeros(2))

    @classmethod
    def from_function(cls, func, xs) -> PredictorFunction:
        xs = np.union1d(np.asarray(xs, dtype=float), [0.0, 1.0])
        return cls(xs, func(xs))

    def __call__(self, x):
        return np.interp(x, self.sample_xs, self.sample_us)

    def is_zero(self) -> bool:
        return not np.any(self.sample_us)


@dataclass(frozen=True)
class TrialConfig:
    lam: float
    scale_s: float = 4.0
    predictor: PredictorFunction = field(default_factory=PredictorFunction.zero)
    stencil_h: float = 1e-3
    grid_n: int = 100

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be a nonnegative real, got {self.lam}")
        if not self.scale_s >= 0:
            raise ValueError(f"scale_s must be nonnegative, got {self.scale_s}")
        if not 0 < self.stencil_h <= 0.01:
            raise ValueError(f"stencil_h must lie in (0, 0.01], got {self.stencil_h}")
        if int(self.grid_n) != self.grid_n or self.grid_n < 3:
            raise ValueError(f"grid_n must be an integer >= 3, got {self.grid_n}")
        if self.stencil_h >= 1.0 / (self.grid_n + 1):
            raise ValueError("stencil_h must be smaller than the collocation spacing")

    def with_(self, **changes) -> TrialConfig:
        return replace(self, **changes)

    def grid(self) -> np.ndarray:
        return collocation_grid(self.grid_n)

    def stencil_points(self) -> np.ndarray:
        """Every point the cost touches, plus 0, 1/2 and 1, sorted."""
        x = self.grid()
        h = self.stencil_h
        return np.unique(np.concatenate([[0.0, 0.5, 1.0], x - h, x, x + h]))


def collocation_grid(n: int) -> np.ndarray:
    """Interior points ``i / (n + 1)``, ``i = 1..n``."""
    return np.arange(1, n + 1) / (n + 1)


def _envelope(x, cfg: TrialConfig):
    return cfg.scale_s * x * (1.0 - x)


def trial(x, weights, cfg: TrialConfig):
    x = np.asarray(x, dtype=float)
    uq = evaluate_uq(x, weights)
    value = cfg.predictor(x) + _envelope(x, cfg) * uq
    return float(value) if value.ndim == 0 else value


def _check_stencil(x, h):
    x = np.asarray(x, dtype=float)
    # small slack so that grid points built as i/(n+1) are not rejected by rounding
    if np.any(x < h - 1e-15) or np.any(x > 1.0 - h + 1e-15):
        raise ValueError(f"stencil points must stay in [h, 1 - h] with h = {h}")
    return x


def _stencil_values(x, weights, cfg):
    h = cfg.stencil_h
    pts = np.stack([x - h, x, x + h])
    return trial(pts.ravel(), weights, cfg).reshape(pts.shape)


def second_derivative(x, weights, cfg: TrialConfig):
    x = _check_stencil(x, cfg.stencil_h)
    lo, mid, hi = _stencil_values(np.atleast_1d(x), weights, cfg)
    d2 = (hi - 2.0 * mid + lo) / cfg.stencil_h**2
    return float(d2[0]) if x.ndim == 0 else d2


def _residual_from_stencil(lo, mid, hi, cfg):
    if np.any(mid > EXP_GUARD) or not np.all(np.isfinite(mid)):
        raise DivergenceError(f"trial value exceeded {EXP_GUARD}; optimisation diverged")
    return (hi - 2.0 * mid + lo) / cfg.stencil_h**2 + cfg.lam * np.exp(mid)


def residual(x, weights, cfg: TrialConfig):
    x = _check_stencil(x, cfg.stencil_h)
    lo, mid, hi = _stencil_values(np.atleast_1d(x), weights, cfg)
    r = _residual_from_stencil(lo, mid, hi, cfg)
    return float(r[0]) if x.ndim == 0 else r


def cost(weights, cfg: TrialConfig, grid=None) -> float:
    """Mean squared residual over the collocation grid."""
    grid = cfg.grid() if grid is None else np.asarray(grid, dtype=float)
    r = residual(grid, weights, cfg)
    return float(np.mean(r**2))


def cost_and_gradient(weights, cfg: TrialConfig, grid=None):
    """Cost and its exact gradient with respect to ``weights``.

    ``du_q/dtheta`` comes from the parameter-shift rule at every stencil point;
    the rest is the chain rule through the stencil and ``lam * exp(u)``.
    """
    w = check_weights(weights)
    grid = cfg.grid() if grid is None else np.asarray(grid, dtype=float)
    grid = _check_stencil(grid, cfg.stencil_h)
    h = cfg.stencil_h
    pts = np.stack([grid - h, grid, grid + h])
    uq, duq = uq_with_gradient(pts.ravel(), w)
    env = _envelope(pts, cfg)
    u = cfg.predictor(pts) + env * uq.reshape(pts.shape)
    r = _residual_from_stencil(u[0], u[1], u[2], cfg)
    # du/dtheta at each stencil point: envelope times the shift-rule gradient
    du = env.reshape(env.shape + (1,) * w.ndim) * duq.reshape(pts.shape + w.shape)
    dr = (du[2] - 2.0 * du[1] + du[0]) / h**2
    dr += (cfg.lam * np.exp(u[1])).reshape((-1,) + (1,) * w.ndim) * du[1]
    n = grid.size
    c = float(np.mean(r**2))
    g = (2.0 / n) * np.tensordot(r, dr, axes=(0, 0))
    return c, g


def cost_gradient(weights, cfg: TrialConfig, grid=None) -> np.ndarray:
    return cost_and_gradient(weights, cfg, grid)[1]


def sample_trial(weights, cfg: TrialConfig) -> PredictorFunction:
    """Collapse the current trial into samples at every point the cost touches.

    Used as the next continuation predictor: linear interpolation through these
    samples reproduces the trial exactly at the stencil points, so the
    recursion never nests circuit evaluations.
    """
    xs = cfg.stencil_points()
    return PredictorFunction(xs, trial(xs, weights, cfg))
