"""Independent reference computations used by the tests.

Nothing here imports the simulator internals: gates are built as explicit
2^n x 2^n matrices from Kronecker products, derivatives by central differences.
"""

from functools import reduce

import numpy as np

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
P0 = np.diag([1.0, 0.0])
P1 = np.diag([0.0, 1.0])
PAULI = {"RX": X, "RY": Y, "RZ": Z}


def kron_all(mats):
    return reduce(np.kron, mats)


def rotation(kind, angle):
    # exp(-i t P / 2) = cos(t/2) I - i sin(t/2) P
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * PAULI[kind]


def single_qubit_op(mat, qubit, n):
    return kron_all([mat if q == qubit else I2 for q in range(n)])


def dense_gate(kind, n, target, angle=None, control=None):
    if kind == "CNOT":
        a = kron_all([P0 if q == control else I2 for q in range(n)])
        b = kron_all([P1 if q == control else (X if q == target else I2) for q in range(n)])
        return a + b
    return single_qubit_op(rotation(kind, angle), target, n)


def dense_circuit(gates, n):
    u = np.eye(2**n, dtype=complex)
    for g in gates:
        u = dense_gate(g.kind, n, g.target, g.angle, g.control) @ u
    return u


def dense_z_expectation(psi, qubit, n):
    return float(np.real(np.conj(psi) @ single_qubit_op(Z, qubit, n) @ psi))


def dense_uq(x, weights):
    """u_q from scratch: features, RY embedding, layers, CNOT ring, <Z_last>."""
    weights = np.asarray(weights)
    L, n, _ = weights.shape
    phi = [np.sin(np.pi * x), np.exp(-10 * (x - 0.5) ** 2), np.sin(3 * np.pi * x)]
    u = kron_all([rotation("RY", phi[q % 3]) for q in range(n)])
    for layer in range(L):
        for q in range(n):
            for r, kind in enumerate(("RX", "RY", "RZ")):
                u = single_qubit_op(rotation(kind, weights[layer, q, r]), q, n) @ u
        if n > 1:
            for q in range(n):
                u = dense_gate("CNOT", n, (q + 1) % n, control=q) @ u
    psi = u[:, 0]
    return dense_z_expectation(psi, n - 1, n)


def central_difference(f, w, step):
    w = np.asarray(w, dtype=float)
    grad = np.zeros_like(w)
    for idx in np.ndindex(w.shape):
        e = np.zeros_like(w)
        e[idx] = step
        grad[idx] = (f(w + e) - f(w - e)) / (2 * step)
    return grad
