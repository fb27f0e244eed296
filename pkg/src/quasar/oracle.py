"""Brute-force references: a dense state vector and an unpacked sequential tableau.

The state vector follows textbook matrix-vector semantics and is limited to
small n.  ``ScalarTableau`` holds one boolean per tableau cell, and
``chp_step`` processes one gate or one measurement at a time.  CX injections
run strictly in target order, and each phase is evaluated position by
position with the CHP g-function.  It is the differential reference for the
packed engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Gate, GateKind
from .gates import apply_gate_rule
from .rng import BitStream
from .scheduler import Mode, schedule_windows
from .tableau import Layout, Tableau, new_basis_state

MAX_SV_QUBITS = 14

_I = np.eye(2, dtype=complex)
_SQ = 1 / np.sqrt(2)
ONE_QUBIT = {
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.diag([1, -1]).astype(complex),
    GateKind.H: np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex),
    GateKind.S: np.diag([1, 1j]),
    GateKind.SDG: np.diag([1, -1j]),
}


def _controlled(u):
    return np.block([[_I, np.zeros((2, 2))], [np.zeros((2, 2)), u]])


# Two-qubit matrices in the basis |a b> with the first operand as the high bit.
TWO_QUBIT = {
    GateKind.CX: _controlled(ONE_QUBIT[GateKind.X]),
    GateKind.CY: _controlled(ONE_QUBIT[GateKind.Y]),
    GateKind.CZ: _controlled(ONE_QUBIT[GateKind.Z]),
    GateKind.SWAP: np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
    GateKind.ISWAP: np.array([[1, 0, 0, 0], [0, 0, 1j, 0], [0, 1j, 0, 0], [0, 0, 0, 1]], dtype=complex),
}


def unitary(kind: GateKind) -> np.ndarray:
    kind = GateKind(kind)
    return ONE_QUBIT[kind] if kind.arity == 1 else TWO_QUBIT[kind]


# ---------------------------------------------------------------- state vector


class StateVector:
    """Amplitudes as an n-axis tensor; axis q is qubit q (|0> = index 0)."""

    def __init__(self, n: int, amplitudes=None):
        if not 1 <= n <= MAX_SV_QUBITS:
            raise ValueError(f"state vectors support 1..{MAX_SV_QUBITS} qubits")
        self.n = n
        if amplitudes is None:
            amplitudes = np.zeros((2,) * n, dtype=complex)
            amplitudes[(0,) * n] = 1
        self.amplitudes = np.asarray(amplitudes, dtype=complex).reshape((2,) * n)

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def probability_one(self, q: int) -> float:
        return float(np.sum(np.abs(np.take(self.amplitudes, 1, axis=q)) ** 2))


def sv_apply(state: StateVector, gate: Gate) -> StateVector:
    kind, qs = GateKind(gate[0]), tuple(gate[1])
    if any(not 0 <= q < state.n for q in qs):
        raise ValueError(f"qubit out of range for n={state.n}")
    u = unitary(kind).reshape((2,) * (2 * len(qs)))
    axes = list(range(len(qs), 2 * len(qs)))
    moved = np.tensordot(u, state.amplitudes, axes=(axes, list(qs)))
    state.amplitudes = np.moveaxis(moved, list(range(len(qs))), list(qs))
    return state


def sv_project(state: StateVector, q: int, outcome: int) -> float:
    """Project qubit q onto ``outcome`` and renormalize; returns the branch probability."""
    p1 = state.probability_one(q)
    p = p1 if outcome else 1.0 - p1
    if p <= 1e-12:
        raise ValueError("projection onto a zero-probability branch")
    index = [slice(None)] * state.n
    index[q] = 1 - outcome
    state.amplitudes[tuple(index)] = 0
    state.amplitudes /= np.sqrt(p)
    return p


def sv_measure(state: StateVector, q: int, rng) -> tuple[int, StateVector]:
    """Born-rule outcome drawn with ``rng`` (a numpy Generator), then collapse."""
    outcome = int(rng.random() < state.probability_one(q))
    sv_project(state, q, outcome)
    return outcome, state


def sv_distribution(circuit: Circuit, max_qubits: int = 12) -> dict[tuple, float]:
    """Exact joint distribution over the MEASURE gates, in program order."""
    n = circuit.num_qubits
    if n > max_qubits:
        raise ValueError(f"sv_distribution is limited to {max_qubits} qubits")
    if int((circuit.kinds == GateKind.MEASURE).sum()) > max_qubits:
        raise ValueError(f"sv_distribution is limited to {max_qubits} measurements")
    branches = [((), 1.0, StateVector(n))]
    for gate in circuit.gates:
        if gate.kind is GateKind.MEASURE:
            q = gate.qubits[0]
            nxt = []
            for outcomes, p, st in branches:
                p1 = st.probability_one(q)
                for bit, pb in ((0, 1.0 - p1), (1, p1)):
                    if pb > 1e-12:
                        child = st.copy() if pb < 1 - 1e-12 else st
                        sv_project(child, q, bit)
                        nxt.append((outcomes + (bit,), p * pb, child))
            branches = nxt
        else:
            for _, _, st in branches:
                sv_apply(st, gate)
    dist: dict[tuple, float] = {}
    for outcomes, p, _ in branches:
        dist[outcomes] = dist.get(outcomes, 0.0) + p
    return dist


# -------------------------------------------------------------- scalar tableau


def g_phase(x1, z1, x2, z2):
    """Exponent of i when multiplying single-qubit Paulis (x1,z1)·(x2,z2) (CHP g-function).

    Elementwise on integer arrays or scalars.
    """
    x1, z1, x2, z2 = (np.asarray(a, dtype=np.int64) for a in (x1, z1, x2, z2))
    return np.where(
        x1 & z1, z2 - x2,
        np.where(x1, z2 * (2 * x2 - 1), np.where(z1, x2 * (1 - 2 * z2), 0)),
    )


@dataclass
class ScalarTableau:
    """Unpacked forward tableau: X, Z of shape (2n, n), S of length 2n (destabilizers first)."""

    X: np.ndarray
    Z: np.ndarray
    S: np.ndarray

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @classmethod
    def basis(cls, n: int) -> "ScalarTableau":
        return cls.from_tableau(new_basis_state(np.zeros(n, dtype=bool), 8))

    @classmethod
    def from_tableau(cls, t: Tableau) -> "ScalarTableau":
        X, Z, S = t.to_bool()
        return cls(X.copy(), Z.copy(), S.copy())

    def to_tableau(self, w: int = 64, layout: Layout = Layout.COLUMN_MAJOR) -> Tableau:
        return Tableau.from_bool(self.X, self.Z, self.S, w, layout)

    def copy(self) -> "ScalarTableau":
        return ScalarTableau(self.X.copy(), self.Z.copy(), self.S.copy())

    def __eq__(self, other) -> bool:
        return (np.array_equal(self.X, other.X) and np.array_equal(self.Z, other.Z)
                and np.array_equal(self.S, other.S))

    # rowsum: row h <- row h · row i (rows commute or h = i's partner with an i factor)
    def phase(self, h: int, i: int) -> int:
        return int(g_phase(self.X[h], self.Z[h], self.X[i], self.Z[i]).sum()) % 4

    def multiply_into(self, h: int, i: int) -> None:
        e = self.phase(h, i)
        if e % 2:
            raise RuntimeError("imaginary phase in a product of commuting generators")
        self.S[h] ^= self.S[i] ^ bool(e // 2)
        self.X[h] ^= self.X[i]
        self.Z[h] ^= self.Z[i]


def _apply_gate_scalar(st: ScalarTableau, gate: Gate) -> None:
    qs = list(gate.qubits)
    xs = tuple(st.X[:, q].copy() for q in qs)
    zs = tuple(st.Z[:, q].copy() for q in qs)
    nx, nz, sign = apply_gate_rule(gate.kind, xs, zs)
    for q, x, z in zip(qs, nx, nz):
        st.X[:, q] = x
        st.Z[:, q] = z
    st.S ^= np.asarray(sign).astype(bool)


def _product_sign(st: ScalarTableau, rows) -> tuple[np.ndarray, np.ndarray, int]:
    n = st.n
    x = np.zeros(n, dtype=bool)
    z = np.zeros(n, dtype=bool)
    e, s = 0, 0
    for r in rows:
        e += int(g_phase(x, z, st.X[r], st.Z[r]).sum())
        x ^= st.X[r]
        z ^= st.Z[r]
        s ^= int(st.S[r])
    e %= 4
    if e % 2:
        raise RuntimeError("imaginary phase in a product of stabilizers")
    return x, z, s ^ (e // 2)


def scalar_outcome(st: ScalarTableau, q: int) -> int:
    n = st.n
    rows = [n + i for i in range(n) if st.X[i, q]]
    x, z, m = _product_sign(st, rows)
    if x.any() or z.sum() != 1 or not z[q]:
        raise RuntimeError(f"Z_{q} is not in the stabilizer group")
    return m


def scalar_inject_cx(st: ScalarTableau, c: int, t: int) -> None:
    """Virtual CX(c -> t) on generator indices: S_t <- S_c·S_t, D_c <- D_c·D_t."""
    n = st.n
    st.multiply_into(n + t, n + c)
    st.multiply_into(c, t)


def scalar_swap(st: ScalarTableau, p: int, q: int) -> None:
    n = st.n
    if st.X[p, q]:
        e = st.phase(p, n + p)
        if e % 2 == 0:
            raise RuntimeError("pivot pair commutes")
        st.S[n + p] ^= st.S[p] ^ bool(((1 + e) % 4) // 2)
        st.X[n + p] ^= st.X[p]
        st.Z[n + p] ^= st.Z[p]
        st.S[p] ^= True
    else:
        for A in (st.X, st.Z, st.S):
            A[[p, n + p]] = A[[n + p, p]]


def chp_step(st: ScalarTableau, gate: Gate, rng=None):
    """Apply one gate, or measure; returns ``(outcome, deterministic)`` for MEASURE, else None."""
    gate = Gate(GateKind(gate[0]), tuple(gate[1]))
    if gate.kind is not GateKind.MEASURE:
        _apply_gate_scalar(st, gate)
        return None
    n, q = st.n, gate.qubits[0]
    anti = [i for i in range(n) if st.X[n + i, q]]
    if not anti:
        return scalar_outcome(st, q), True
    p = anti[0]
    for t in range(p + 1, n):  # strict order
        if st.X[n + t, q]:
            scalar_inject_cx(st, p, t)
    scalar_swap(st, p, q)
    current = scalar_outcome(st, q)
    bit = rng.bit()
    if bit != current:
        st.S[n + p] ^= True
    return bit, False


def reference_run(circuit: Circuit, seed: int = 0, rng=None, schedule=None):
    """Full sequential run in the same measurement order as the packed engine.

    Returns ``(ScalarTableau, outcomes, deterministic)`` with outcomes in program order.
    """
    schedule = schedule if schedule is not None else schedule_windows(circuit, Mode.SINGLE_SHOT)
    rng = rng if rng is not None else BitStream(seed, 0)
    st = ScalarTableau.basis(circuit.num_qubits)
    is_meas = circuit.kinds == GateKind.MEASURE
    ordinal = np.cumsum(is_meas) - 1
    outcomes = np.zeros(int(is_meas.sum()), dtype=np.uint8)
    deterministic = np.zeros(len(outcomes), dtype=bool)
    for window in schedule.windows:
        for idx, gate in zip(window.indices.tolist(), window.gates):
            res = chp_step(st, gate, rng)
            if res is not None:
                outcomes[ordinal[idx]], deterministic[ordinal[idx]] = res
    return st, outcomes, deterministic
