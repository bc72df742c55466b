"""Quantum neural network ``u_q(x; weights)``.

Circuit: RY feature embedding on every qubit, then ``L`` strongly entangling
layers (RX, RY, RZ on each qubit followed by a stride-1 CNOT ring), read out as
``<Z>`` on the last qubit.  ``weights`` is a float array of shape ``(L, n, 3)``
whose last axis is ordered (RX, RY, RZ).

Two evaluation routes are provided.  ``simulate_uq`` runs the gate list through
the statevector simulator one gate at a time.  ``evaluate_uq`` and friends use
the fact that the trainable layers do not depend on ``x``: the layers are
compiled once into the Heisenberg-picture observable ``U^dag Z U`` and then
contracted against the (real) embedded product states of every grid point.
Both routes are exact; the tests hold them against each other.
"""

from __future__ import annotations

import numpy as np

from . import qsim
from .qsim import Gate

ROTATION_NAMES = ("RX", "RY", "RZ")
SHIFT = np.pi / 2


def check_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim < 3 or w.shape[-1] != 3 or w.shape[-2] < 1:
        raise ValueError(f"weights must have shape (..., L, n, 3), got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights contain non-finite entries")
    return w


def n_parameters(n_layers: int, n_qubits: int) -> int:
    return n_layers * n_qubits * 3


def encode_features(x):
    """Feature map ``[sin(pi x), exp(-10 (x - 1/2)^2), sin(3 pi x)]``.

    Works on scalars and arrays; the feature axis is last.
    """
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)) or np.any(np.isnan(x)):
        raise ValueError("collocation points must lie in [0, 1]")
    return np.stack(
        [np.sin(np.pi * x), np.exp(-10.0 * (x - 0.5) ** 2), np.sin(3.0 * np.pi * x)],
        axis=-1,
    )


def build_circuit(x: float, weights) -> list[Gate]:
    w = check_weights(weights)
    if w.ndim != 3:
        raise ValueError("build_circuit takes a single weight tensor")
    n_layers, n_qubits, _ = w.shape
    phi = encode_features(float(x))
    gates = [Gate("RY", q, angle=float(phi[q % 3])) for q in range(n_qubits)]
    for layer in range(n_layers):
        for q in range(n_qubits):
            for r, name in enumerate(ROTATION_NAMES):
                gates.append(Gate(name, q, angle=float(w[layer, q, r])))
        if n_qubits > 1:
            gates.extend(Gate("CNOT", (q + 1) % n_qubits, control=q) for q in range(n_qubits))
    return gates


def simulate_uq(x: float, weights) -> float:
    """Gate-by-gate evaluation of ``u_q`` at a single point."""
    w = check_weights(weights)
    n_qubits = w.shape[1]
    state = qsim.run_circuit(build_circuit(x, w), n_qubits)
    return qsim.expectation_z(state, n_qubits - 1)


def embedding_amplitudes(xs, n_qubits: int) -> np.ndarray:
    """Embedded states ``RY(phi)|0...0>`` for each point, shape ``(len(xs), 2**n)``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    phi = encode_features(xs)
    amps = np.zeros((xs.size, 2**n_qubits), dtype=complex)
    amps[:, 0] = 1.0
    for q in range(n_qubits):
        amps = qsim.apply_rotation(amps, "RY", q, phi[:, q % 3])
    # RY with real angles keeps the amplitudes real
    return amps.real.copy()


def layers_unitary(weights) -> np.ndarray:
    """Unitary of the trainable layers, shape ``(..., 2**n, 2**n)``.

    Leading axes of ``weights`` are batch axes.
    """
    w = check_weights(weights)
    n_layers, n_qubits = w.shape[-3], w.shape[-2]
    batch = w.shape[:-3]
    dim = 2**n_qubits
    # row k evolves basis state e_k, so rows end up holding the columns of U
    rows = np.broadcast_to(np.eye(dim, dtype=complex), batch + (dim, dim)).copy()
    for layer in range(n_layers):
        for q in range(n_qubits):
            for r, name in enumerate(ROTATION_NAMES):
                rows = qsim.apply_rotation(rows, name, q, w[..., layer, q, r][..., None])
        if n_qubits > 1:
            for q in range(n_qubits):
                rows = qsim.apply_cnot(rows, q, (q + 1) % n_qubits)
    return np.swapaxes(rows, -1, -2)


def readout_operator(weights) -> np.ndarray:
    """``U^dag Z_{n-1} U`` for the trainable layers (Hermitian, batched)."""
    w = check_weights(weights)
    n_qubits = w.shape[-2]
    u = layers_unitary(w)
    z = qsim._z_signs(n_qubits, n_qubits - 1)
    return np.conj(np.swapaxes(u, -1, -2)) @ (z[:, None] * u)


def _contract(psi: np.ndarray, op: np.ndarray) -> np.ndarray:
    # psi is real, so psi^T op psi only needs the real part of op
    return np.einsum("xi,...ij,xj->...x", psi, op.real, psi, optimize=True)


def evaluate_uq(x, weights):
    """``u_q`` at a point or an array of points (vectorised route)."""
    w = check_weights(weights)
    if w.ndim != 3:
        raise ValueError("evaluate_uq takes a single weight tensor")
    scalar = np.ndim(x) == 0
    psi = embedding_amplitudes(x, w.shape[1])
    values = np.clip(_contract(psi, readout_operator(w)), -1.0, 1.0)
    return float(values[0]) if scalar else values


def shifted_weights(weights, shift: float = SHIFT) -> np.ndarray:
    """Stack of ``2P`` weight tensors: every parameter shifted by +shift, then by -shift."""
    w = check_weights(weights)
    p = w.size
    eye = np.eye(p).reshape((p,) + w.shape)
    return np.concatenate([w + shift * eye, w - shift * eye])


def uq_with_gradient(xs, weights):
    """Values and parameter-shift gradients of ``u_q`` on an array of points.

    Returns ``(values, grads)`` with shapes ``(len(xs),)`` and
    ``(len(xs), L, n, 3)``.  Embedding angles are inputs and are not
    differentiated.
    """
    w = check_weights(weights)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    p = w.size
    stack = np.concatenate([w[None], shifted_weights(w)])
    psi = embedding_amplitudes(xs, w.shape[1])
    out = _contract(psi, readout_operator(stack))
    values = out[0]
    grads = 0.5 * (out[1 : 1 + p] - out[1 + p :])
    return values, np.moveaxis(grads, 0, -1).reshape(xs.shape + w.shape)


def gradient_uq(x, weights):
    """Parameter-shift gradient of ``u_q`` with respect to the trainable angles."""
    scalar = np.ndim(x) == 0
    _, grads = uq_with_gradient(x, weights)
    return grads[0] if scalar else grads


def flat_index(layer: int, qubit: int, rotation: int, n_qubits: int) -> int:
    return layer * n_qubits * 3 + qubit * 3 + rotation


def weight_table(weights) -> list[tuple[int, int, int, str, float]]:
    """Rows ``(index, layer, qubit, rotation, angle)`` in flat-index order."""
    w = check_weights(weights)
    n_layers, n_qubits, _ = w.shape
    rows = []
    for layer in range(n_layers):
        for q in range(n_qubits):
            for r, name in enumerate(ROTATION_NAMES):
                rows.append((flat_index(layer, q, r, n_qubits), layer, q, name, float(w[layer, q, r])))
    return rows
