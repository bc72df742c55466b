import numpy as np
import pytest

from qbratu import ansatz, qsim
from qbratu.optim import zero_output_weights

from oracles import central_difference, dense_circuit, dense_uq, dense_z_expectation


def test_features_at_known_points():
    np.testing.assert_allclose(ansatz.encode_features(0.5), [1.0, 1.0, -1.0], atol=1e-15)
    np.testing.assert_allclose(ansatz.encode_features(0.0), [0.0, np.exp(-2.5), 0.0], atol=0)
    f1 = ansatz.encode_features(1.0)
    assert abs(f1[0]) < 1e-15
    assert f1[1] == pytest.approx(np.exp(-2.5), abs=1e-16)
    assert abs(f1[2]) < 1e-14


def test_feature_ranges():
    f = ansatz.encode_features(np.linspace(0, 1, 1001))
    assert f.shape == (1001, 3)
    assert np.all((f[:, 0] >= 0) & (f[:, 0] <= 1))
    assert np.all((f[:, 1] > 0) & (f[:, 1] <= 1))
    assert np.all((f[:, 2] >= -1) & (f[:, 2] <= 1))


@pytest.mark.parametrize("x", [-0.1, 1.0000001, np.nan])
def test_features_reject_outside_domain(x):
    with pytest.raises(ValueError):
        ansatz.encode_features(x)


@pytest.mark.parametrize(
    "L, n, count, cnots",
    [(4, 3, 3 + 4 * (9 + 3), 12), (0, 3, 3, 0), (1, 1, 1 + 3, 0), (2, 2, 2 + 2 * (6 + 2), 4)],
)
def test_gate_counts(L, n, count, cnots):
    gates = ansatz.build_circuit(0.3, np.zeros((L, n, 3)))
    assert len(gates) == count
    assert sum(g.kind == "CNOT" for g in gates) == cnots


def test_circuit_structure():
    w = np.arange(36, dtype=float).reshape(4, 3, 3) / 10
    gates = ansatz.build_circuit(0.25, w)
    phi = ansatz.encode_features(0.25)
    assert [(g.kind, g.target, g.angle) for g in gates[:3]] == [("RY", q, phi[q]) for q in range(3)]
    layer1 = gates[3 + 12 : 3 + 24]
    assert [(g.kind, g.target) for g in layer1[:9]] == [
        (k, q) for q in range(3) for k in ("RX", "RY", "RZ")
    ]
    assert [g.angle for g in layer1[:9]] == list(w[1].ravel())
    assert [(g.control, g.target) for g in layer1[9:]] == [(0, 1), (1, 2), (2, 0)]


def test_single_qubit_no_layers():
    # a single RY(phi_0) embedding: u_q = cos(sin(pi/2)) = cos(1)
    w = np.zeros((0, 1, 3))
    assert ansatz.simulate_uq(0.5, w) == pytest.approx(np.cos(1.0), abs=1e-15)
    assert ansatz.evaluate_uq(0.5, w) == pytest.approx(np.cos(1.0), abs=1e-15)


def test_zero_weights_against_dense_oracle():
    w = np.zeros((4, 3, 3))
    assert ansatz.simulate_uq(0.0, w) == pytest.approx(dense_uq(0.0, w), abs=1e-12)
    assert ansatz.evaluate_uq(0.0, w) == pytest.approx(dense_uq(0.0, w), abs=1e-12)


def test_pure_embedding_matches_dense_oracle():
    w = np.zeros((0, 3, 3))
    for x in np.linspace(0, 1, 9):
        assert ansatz.evaluate_uq(x, w) == pytest.approx(dense_uq(x, w), abs=1e-12)


def test_random_circuits_match_dense_oracle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        L, n = int(rng.integers(0, 5)), int(rng.integers(1, 4))
        w = rng.uniform(-np.pi, np.pi, (L, n, 3))
        x = float(rng.uniform())
        gates = ansatz.build_circuit(x, w)
        psi = dense_circuit(gates, n)[:, 0]
        state = qsim.run_circuit(gates, n)
        np.testing.assert_allclose(state.amplitudes, psi, atol=1e-12)
        ref = dense_z_expectation(psi, n - 1, n)
        assert ansatz.simulate_uq(x, w) == pytest.approx(ref, abs=1e-12)
        assert ansatz.evaluate_uq(x, w) == pytest.approx(ref, abs=1e-12)


def test_vectorised_route_matches_gate_by_gate():
    rng = np.random.default_rng(11)
    w = rng.normal(size=(4, 3, 3))
    xs = rng.uniform(size=25)
    ref = np.array([ansatz.simulate_uq(x, w) for x in xs])
    np.testing.assert_allclose(ansatz.evaluate_uq(xs, w), ref, atol=1e-13)


def test_output_bounded_and_deterministic():
    rng = np.random.default_rng(5)
    xs = np.linspace(0, 1, 50)
    for _ in range(20):
        w = rng.uniform(-10, 10, (4, 3, 3))
        a = ansatz.evaluate_uq(xs, w)
        assert np.all(np.abs(a) <= 1.0)
        assert np.array_equal(a, ansatz.evaluate_uq(xs, w))


def test_shift_rule_matches_finite_differences():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        w = rng.uniform(-np.pi, np.pi, (4, 3, 3))
        x = float(rng.uniform())
        g = ansatz.gradient_uq(x, w)
        fd = central_difference(lambda v: ansatz.evaluate_uq(x, v), w, 1e-6)
        assert np.max(np.abs(g - fd)) < 1e-6


def test_shift_rule_single_qubit_layer():
    w = np.zeros((1, 1, 3))
    g = ansatz.gradient_uq(0.3, w)
    fd = central_difference(lambda v: dense_uq(0.3, v), w, 1e-6)
    np.testing.assert_allclose(g, fd, atol=1e-9)
    # RY(a) then RY(t): <Z> = cos(a + t), so d/dt at t=0 is -sin(a)
    a = np.sin(0.3 * np.pi)
    assert g[0, 0, 1] == pytest.approx(-np.sin(a), abs=1e-12)
    # RX and RZ at zero: cos(a) cos(t) and a Z-diagonal phase -> even in t
    assert abs(g[0, 0, 0]) < 1e-10
    assert abs(g[0, 0, 2]) < 1e-10


def test_batched_gradient_matches_pointwise():
    rng = np.random.default_rng(9)
    w = rng.normal(size=(2, 3, 3))
    xs = rng.uniform(size=6)
    vals, grads = ansatz.uq_with_gradient(xs, w)
    assert grads.shape == (6, 2, 3, 3)
    for i, x in enumerate(xs):
        assert vals[i] == pytest.approx(ansatz.simulate_uq(x, w), abs=1e-13)
        np.testing.assert_allclose(grads[i], ansatz.gradient_uq(float(x), w), atol=1e-15)


def test_zero_output_weights():
    xs = np.linspace(0, 1, 101)
    for L, n in [(4, 3), (1, 1), (2, 2), (3, 4)]:
        w = zero_output_weights(L, n)
        assert np.max(np.abs(ansatz.evaluate_uq(xs, w))) < 1e-14
        assert abs(dense_uq(0.37, w)) < 1e-14


def test_weight_table_enumeration():
    w = np.arange(36, dtype=float).reshape(4, 3, 3)
    rows = ansatz.weight_table(w)
    assert [r[0] for r in rows] == list(range(36))
    assert rows[0] == (0, 0, 0, 0, "RX", 0.0)[:1] + (0, 0, "RX", 0.0)
    assert rows[4] == (4, 0, 1, "RY", 4.0)
    assert rows[35] == (35, 3, 2, "RZ", 35.0)
    assert ansatz.flat_index(2, 1, 2, 3) == 2 * 9 + 3 + 2
    assert ansatz.n_parameters(4, 3) == 36
