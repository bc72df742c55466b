"""Exact statevector simulation of small qubit registers.

Qubit 0 is the most significant bit of the basis-state index.  Rotations use
the half-angle convention ``R_P(t) = exp(-i t P / 2)``, so that
``<Z>`` after ``RY(t)|0>`` equals ``cos(t)``.

The array-level helpers (``apply_rotation``, ``apply_cnot``, ``z_expectation``)
accept any number of leading batch axes; the trailing axis holds the ``2**n``
amplitudes.  ``StateVector``/``Gate`` wrap them with value semantics.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_QUBITS = 24
ROTATIONS = ("RX", "RY", "RZ")
GATE_KINDS = ROTATIONS + ("CNOT",)


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    n_qubits: int

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    angle: float | None = None
    control: int | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "CNOT":
            if self.control is None:
                raise ValueError("CNOT needs a control qubit")
            if self.control == self.target:
                raise ValueError("CNOT control and target must differ")
        elif self.angle is None:
            raise ValueError(f"{self.kind} needs an angle")

    def inverse(self) -> Gate:
        if self.kind == "CNOT":
            return self
        return Gate(self.kind, self.target, angle=-self.angle)

    def qubits(self) -> tuple[int, ...]:
        return (self.target,) if self.control is None else (self.control, self.target)


def _check_qubit(qubit: int, n_qubits: int) -> None:
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit index {qubit} out of range for {n_qubits} qubits")


def _n_qubits_of(amps: np.ndarray) -> int:
    dim = amps.shape[-1]
    n = dim.bit_length() - 1
    if 2**n != dim:
        raise ValueError(f"trailing axis length {dim} is not a power of two")
    return n


def new_zero_state(n_qubits: int) -> StateVector:
    """|0...0> on ``n_qubits`` qubits."""
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(amps, int(n_qubits))


def rotation_matrix(kind: str, angle) -> np.ndarray:
    """2x2 rotation matrix (or a stack of them if ``angle`` is an array)."""
    angle = np.asarray(angle, dtype=float)
    c = np.cos(angle / 2)
    s = np.sin(angle / 2)
    zero = np.zeros_like(c)
    if kind == "RX":
        rows = [[c + 0j, -1j * s], [-1j * s, c + 0j]]
    elif kind == "RY":
        rows = [[c + 0j, -s + 0j], [s + 0j, c + 0j]]
    elif kind == "RZ":
        rows = [[np.exp(-0.5j * angle), zero + 0j], [zero + 0j, np.exp(0.5j * angle)]]
    else:
        raise ValueError(f"not a rotation: {kind!r}")
    return np.moveaxis(np.array(rows, dtype=complex), (0, 1), (-2, -1))


def apply_rotation(amps: np.ndarray, kind: str, qubit: int, angle) -> np.ndarray:
    """Rotate ``qubit`` of a (batch of) state(s).

    ``angle`` is a scalar or an array broadcastable against ``amps.shape[:-1]``.
    Returns a new array.
    """
    amps = np.asarray(amps, dtype=complex)
    n = _n_qubits_of(amps)
    _check_qubit(qubit, n)
    batch = amps.shape[:-1]
    view = amps.reshape(batch + (2**qubit, 2, 2 ** (n - qubit - 1)))
    m = rotation_matrix(kind, angle)
    # trailing (2, 2) matrix axes; pad for the (high, low) index axes
    m = m.reshape(m.shape[:-2] + (1, 1) + (2, 2))
    a0 = view[..., 0, :]
    a1 = view[..., 1, :]
    out = np.empty(np.broadcast_shapes(view.shape, m.shape[:-4] + (1, 2, 1)), dtype=complex)
    out[..., 0, :] = m[..., 0, 0] * a0 + m[..., 0, 1] * a1
    out[..., 1, :] = m[..., 1, 0] * a0 + m[..., 1, 1] * a1
    return out.reshape(out.shape[:-3] + (2**n,))


@lru_cache(maxsize=None)
def _cnot_permutation(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(2**n)
    cbit = 1 << (n - 1 - control)
    tbit = 1 << (n - 1 - target)
    perm = np.where(idx & cbit, idx ^ tbit, idx)
    perm.setflags(write=False)
    return perm


def apply_cnot(amps: np.ndarray, control: int, target: int) -> np.ndarray:
    amps = np.asarray(amps, dtype=complex)
    n = _n_qubits_of(amps)
    _check_qubit(control, n)
    _check_qubit(target, n)
    if control == target:
        raise ValueError("CNOT control and target must differ")
    # the map is an involution, so gathering with it equals scattering with it
    return amps[..., _cnot_permutation(n, control, target)]


@lru_cache(maxsize=None)
def _z_signs(n: int, qubit: int) -> np.ndarray:
    bits = (np.arange(2**n) >> (n - 1 - qubit)) & 1
    signs = 1.0 - 2.0 * bits
    signs.setflags(write=False)
    return signs


def z_expectation(amps: np.ndarray, qubit: int) -> np.ndarray:
    """<Z_qubit> for a (batch of) state(s); returns real values."""
    amps = np.asarray(amps)
    n = _n_qubits_of(amps)
    _check_qubit(qubit, n)
    probs = amps.real**2 + amps.imag**2
    return probs @ _z_signs(n, qubit)


def apply_gate_array(amps: np.ndarray, gate: Gate) -> np.ndarray:
    if gate.kind == "CNOT":
        return apply_cnot(amps, gate.control, gate.target)
    return apply_rotation(amps, gate.kind, gate.target, gate.angle)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    for q in gate.qubits():
        _check_qubit(q, state.n_qubits)
    return StateVector(apply_gate_array(state.amplitudes, gate), state.n_qubits)


def run_circuit(gates, n_qubits: int, state: StateVector | None = None) -> StateVector:
    """Apply ``gates`` in order, starting from ``state`` (default |0...0>)."""
    if state is None:
        state = new_zero_state(n_qubits)
    amps = state.amplitudes
    for gate in gates:
        for q in gate.qubits():
            _check_qubit(q, n_qubits)
        amps = apply_gate_array(amps, gate)
    return StateVector(amps, n_qubits)


def expectation_z(state: StateVector, qubit: int) -> float:
    _check_qubit(qubit, state.n_qubits)
    value = float(z_expectation(state.amplitudes, qubit))
    return min(1.0, max(-1.0, value))
