import numpy as np
import pytest

from qbratu import continuation, optim, pde
from qbratu.classical import closed_form_solution
from qbratu.continuation import (
    BifurcationDiagram,
    BranchPoint,
    build_diagram,
    low_fidelity_predictor,
    smooth_profile,
    sweep_lower,
    sweep_upper,
)
from qbratu.pde import TrialConfig


def fake_point(lam, u_max, branch, status="ok"):
    xs = np.linspace(0, 1, 5)
    return BranchPoint(
        lam=lam, grid_xs=xs, u_values=u_max * 4 * xs * (1 - xs), u_max=u_max, branch=branch,
        final_cost=1e-4, weights=np.zeros((4, 3, 3)), status=status,
    )


@pytest.fixture(scope="module")
def lower_points():
    return sweep_lower([0.1, 0.5, 1.0], TrialConfig(lam=0.1), 500, seed=0)


@pytest.fixture(scope="module")
def upper_points(upper_seed_point):
    return sweep_upper([2.5, 2.0], upper_seed_point, TrialConfig(lam=3.0), seed=0)


def test_lower_sweep_increases(lower_points):
    assert [p.lam for p in lower_points] == [0.1, 0.5, 1.0]
    assert all(p.converged and p.branch == "lower" for p in lower_points)
    u = [p.u_max for p in lower_points]
    assert u[0] < u[1] < u[2]
    assert u[2] == pytest.approx(0.1405, abs=1e-2)


def test_lower_sweep_empty():
    assert sweep_lower([], TrialConfig(lam=1.0), 10, seed=0) == []


def test_branch_point_fields(lower_points):
    p = lower_points[-1]
    assert p.grid_xs[0] == 0.0 and p.grid_xs[-1] == 1.0 and p.grid_xs.size == 102
    assert p.u_values[0] == 0.0 and p.u_values[-1] == 0.0
    assert p.u_max == pytest.approx(p.u_values[51], abs=1e-3)
    assert p.final_cost == p.report.final_cost < continuation.ACCEPT_COST
    assert p.config.lam == 1.0


def test_upper_sweep_increases_as_lambda_falls(upper_seed_point, upper_points):
    pts = [upper_seed_point, *upper_points]
    assert all(p.converged for p in pts)
    u = [p.u_max for p in pts]
    assert u[0] < u[1] < u[2]
    for p in pts:
        assert p.u_max > closed_form_solution(p.lam, "lower").u_max
        assert p.u_max == pytest.approx(closed_form_solution(p.lam, "upper").u_max, abs=5e-2)


def test_upper_sweep_reconverges_at_start(upper_seed_point):
    (again,) = sweep_upper([3.0], upper_seed_point, TrialConfig(lam=3.0), iterations=500, seed=0)
    assert again.converged
    assert again.u_max == pytest.approx(upper_seed_point.u_max, abs=1e-3)


def test_upper_sweep_stops_when_branch_lost(upper_seed_point, monkeypatch):
    monkeypatch.setattr(continuation, "lower_reference_umax", lambda lam: 1e3)
    pts = sweep_upper(
        [2.9, 2.8], upper_seed_point, TrialConfig(lam=3.0), iterations=20, seed=0, accept_cost=10.0
    )
    assert len(pts) == 1
    assert pts[0].status == "branch-lost" and not pts[0].converged


def test_unconverged_point_is_failed_not_lost(upper_seed_point, monkeypatch):
    # branch loss is only judged on converged points
    monkeypatch.setattr(continuation, "lower_reference_umax", lambda lam: 1e3)
    pts = sweep_upper(
        [2.9, 2.8], upper_seed_point, TrialConfig(lam=3.0), iterations=5, seed=0, accept_cost=1e-12
    )
    assert [p.status for p in pts] == ["failed", "failed"]
    # the failed point is not used as the next predictor
    assert pts[1].config.predictor is upper_seed_point.profile


def test_smooth_profile_no_worse_than_raw(upper_seed_point):
    cfg = upper_seed_point.config
    zero = optim.zero_output_weights()
    smooth = smooth_profile(upper_seed_point.weights, cfg)
    raw_cost = pde.cost(upper_seed_point.weights, cfg)
    assert pde.cost(zero, cfg.with_(predictor=smooth)) <= raw_cost


def test_low_fidelity_predictor_is_rough_but_on_branch():
    pred = low_fidelity_predictor(3.0, "upper", TrialConfig(lam=3.0))
    exact = closed_form_solution(3.0, "upper")
    xs = np.linspace(0.05, 0.95, 19)
    err = np.max(np.abs(pred(xs) - exact(xs)))
    assert 1e-4 < err < 5e-2
    assert pred(0.5) > closed_form_solution(3.0, "lower").u_max


class TestDiagram:
    def test_union_is_sorted(self):
        lower = [fake_point(1.0, 0.14, "lower"), fake_point(0.5, 0.06, "lower")]
        upper = [fake_point(1.0, 6.0, "upper"), fake_point(3.0, 2.4, "upper")]
        d = build_diagram(lower, upper)
        assert [(p.branch, p.lam) for p in d.points] == [
            ("lower", 0.5), ("lower", 1.0), ("upper", 1.0), ("upper", 3.0)
        ]
        assert [p.lam for p in d.branch("upper")] == [1.0, 3.0]

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            build_diagram([fake_point(1.0, 0.14, "lower")], [fake_point(1.0, 0.14, "lower")])

    def test_violations_rejected(self):
        with pytest.raises(ValueError, match="upper u_max <= lower"):
            build_diagram([fake_point(1.0, 0.14, "lower")], [fake_point(1.0, 0.1, "upper")])
        with pytest.raises(ValueError, match="not increasing"):
            build_diagram([fake_point(1.0, 0.14, "lower"), fake_point(2.0, 0.1, "lower")], [])
        with pytest.raises(ValueError, match="not decreasing"):
            build_diagram([], [fake_point(1.0, 2.0, "upper"), fake_point(2.0, 3.0, "upper")])

    def test_failed_points_ignored(self):
        d = build_diagram([fake_point(1.0, 0.14, "lower")], [fake_point(1.0, 0.1, "upper", "failed")])
        assert d.violations() == []

    def test_empty(self):
        assert build_diagram([], []).points == []
        assert BifurcationDiagram().violations() == []


def test_max_abs_error():
    p = fake_point(1.0, 0.5, "lower")
    assert continuation.max_abs_error(p, lambda x: np.zeros_like(x)) == pytest.approx(0.5)
