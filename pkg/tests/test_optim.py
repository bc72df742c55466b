import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbratu import optim, pde
from qbratu.classical import closed_form_solution
from qbratu.optim import AdamState, adam_step, initialize_weights, multi_start, train
from qbratu.pde import PredictorFunction, TrialConfig


def test_zero_gradient_leaves_weights():
    w = np.random.default_rng(0).normal(size=(4, 3, 3))
    state, w1 = adam_step(AdamState.fresh(w.shape), w, np.zeros_like(w))
    np.testing.assert_array_equal(w1, w)
    assert state.step_count == 1


def test_first_step_is_learning_rate_times_sign():
    w = np.zeros((2, 3, 3))
    g = np.random.default_rng(1).normal(size=w.shape)
    _, w1 = adam_step(AdamState.fresh(w.shape, learning_rate=0.005), w, g)
    np.testing.assert_allclose(w1, -0.005 * np.sign(g), rtol=1e-6)


def test_repeated_gradient_moves_monotonically():
    w = np.zeros((1, 2, 3))
    g = np.array([[[1.0, -2.0, 0.5], [-0.1, 3.0, -4.0]]])
    state = AdamState.fresh(w.shape)
    w1 = w
    for _ in range(2):
        prev = w1
        state, w1 = adam_step(state, w1, g)
        assert np.all(np.sign(w1 - prev) == -np.sign(g))
    assert state.step_count == 2


def test_adam_rejects_bad_gradients():
    w = np.zeros((1, 1, 3))
    with pytest.raises(FloatingPointError):
        adam_step(AdamState.fresh(w.shape), w, np.array([[[0.0, np.nan, 0.0]]]))
    with pytest.raises(ValueError):
        adam_step(AdamState.fresh(w.shape), w, np.zeros((1, 2, 3)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 60))
def test_adam_step_bound_and_moments(seed, steps):
    rng = np.random.default_rng(seed)
    w = np.zeros((2, 2, 3))
    state = AdamState.fresh(w.shape)
    for k in range(steps):
        g = rng.normal(scale=10.0 ** rng.uniform(-4, 4), size=w.shape)
        state, w_new = adam_step(state, w, g)
        assert np.all(np.abs(w_new - w) <= 2 * state.learning_rate)
        assert np.all(state.second_moment >= 0)
        assert state.step_count == k + 1
        w = w_new


def test_zero_iterations():
    w = initialize_weights("lower", 3)
    rep = train(w, TrialConfig(lam=1.0), 0)
    assert rep.cost_history == [] and rep.iterations == 0
    np.testing.assert_array_equal(rep.final_weights, w)
    assert rep.final_cost == pde.cost(w, TrialConfig(lam=1.0))


def test_lower_branch_small_lambda():
    rep = train(initialize_weights("lower", 0), TrialConfig(lam=0.1), 500)
    assert rep.iterations == 500 and rep.final_cost == rep.cost_history[-1]
    assert rep.final_cost < 1e-4
    assert rep.u_max == pytest.approx(closed_form_solution(0.1).u_max, abs=1e-2)
    assert rep.converged


def test_training_is_deterministic_and_windows_descend():
    cfg = TrialConfig(lam=1.0)
    a = train(initialize_weights("lower", 7), cfg, 500)
    b = train(initialize_weights("lower", 7), cfg, 500)
    assert a.cost_history == b.cost_history
    h = np.asarray(a.cost_history)
    for k in range(100, h.size - 49):
        window = h[k : k + 50]
        assert window[-1] <= window[0]
        assert np.max(window) <= 1.05 * window[0]


def test_divergence_is_reported():
    blowup = PredictorFunction.from_function(lambda x: 300 * x * (1 - x), np.linspace(0, 1, 101))
    rep = train(initialize_weights("lower", 0), TrialConfig(lam=1.0, predictor=blowup), 10)
    assert rep.diverged and not rep.converged
    assert rep.final_cost == float("inf")
    assert "exceeded" in rep.message


def test_early_stop_rule():
    w = optim.EARLY_STOP_WINDOW
    flat = [1.0] * 5 + [0.5 * (1 + 1e-12 * k) for k in range(w + 1)]
    assert optim._early_stop(flat, w, optim.EARLY_STOP_RTOL)
    assert not optim._early_stop(flat[-w:], w, optim.EARLY_STOP_RTOL)
    moving = list(np.geomspace(1.0, 0.5, w + 1))
    assert not optim._early_stop(moving, w, optim.EARLY_STOP_RTOL)


def test_early_stop_in_training():
    rep = train(initialize_weights("lower", 0), TrialConfig(lam=0.1), 300, early_stop=True)
    h = rep.cost_history
    if rep.stopped_early:
        assert rep.iterations < 300
        assert optim._early_stop(h, optim.EARLY_STOP_WINDOW, optim.EARLY_STOP_RTOL)
    else:
        assert rep.iterations == 300
        assert not any(
            optim._early_stop(h[:k], optim.EARLY_STOP_WINDOW, optim.EARLY_STOP_RTOL) for k in range(1, 301)
        )


def test_report_serialisation():
    rep = train(initialize_weights("lower", 0), TrialConfig(lam=0.5), 3)
    d = rep.to_dict()
    assert set(d) >= {"lambda", "branch", "seed", "iterations", "final_cost", "u_max", "weights", "cost_history"}
    assert len(d["weights"]) == 36 and d["weights"][4] == rep.final_weights[0, 1, 1]


class TestInitialisation:
    def test_upper_near_two_radians(self):
        for seed in range(20):
            w = initialize_weights("upper", seed)
            assert w.shape == (4, 3, 3)
            assert np.all((w >= 1.0) & (w <= 3.0))
            assert np.mean((w > 1.5) & (w < 2.5)) == 1.0

    def test_reproducible(self):
        for branch in ("lower", "upper", "corrector"):
            np.testing.assert_array_equal(initialize_weights(branch, 5), initialize_weights(branch, 5))
        assert not np.array_equal(initialize_weights("upper", 5), initialize_weights("upper", 6))

    def test_lower_is_jittered_zero_output(self):
        w = initialize_weights("lower", 11)
        jitter = w - optim.zero_output_weights()
        assert np.all((jitter >= 0) & (jitter < optim.LOWER_JITTER))

    def test_unknown_branch(self):
        with pytest.raises(ValueError):
            initialize_weights("middle", 0)


def test_multi_start_single_run_matches_train():
    cfg = TrialConfig(lam=1.0)
    best = multi_start(cfg, 1, 20, seed=3)
    single = train(initialize_weights("upper", optim.run_seed(3, 0)), cfg, 20)
    assert best.cost_history == single.cost_history
    np.testing.assert_array_equal(best.final_weights, single.final_weights)


def test_multi_start_flags_non_upper_without_error():
    # one step from the zero-output start cannot leave the lower-branch neighbourhood
    rep = multi_start(TrialConfig(lam=3.0), 3, 1, seed=0, initializer="corrector")
    assert rep.upper is False
    assert len(rep.extra["multi_start"]) == 3


def test_multi_start_all_diverging():
    blowup = PredictorFunction.from_function(lambda x: 300 * x * (1 - x), np.linspace(0, 1, 101))
    rep = multi_start(TrialConfig(lam=3.0, predictor=blowup), 2, 1, seed=0)
    assert rep.upper is False and rep.diverged


def test_multi_start_finds_upper_branch(upper_seed_point):
    rep = upper_seed_point.report
    assert rep.upper
    assert rep.u_max > closed_form_solution(3.0, "lower").u_max
    assert rep.final_cost < 1e-2
    assert len(rep.extra["multi_start"]) == 8
