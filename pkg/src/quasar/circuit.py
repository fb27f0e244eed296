"""Clifford circuits: representation, an OpenQASM 2.0 subset, and a random generator.

A circuit is stored as parallel numpy arrays (gate kind, operand pair, classical
label) so that desk-scale circuits with millions of gates stay compact.
``Circuit.gates`` materializes :class:`Gate` tuples on demand.
"""

from __future__ import annotations

import enum
import re
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class GateKind(enum.IntEnum):
    X = 0
    Y = 1
    Z = 2
    H = 3
    S = 4
    SDG = 5
    CX = 6
    CY = 7
    CZ = 8
    SWAP = 9
    ISWAP = 10
    MEASURE = 11

    @property
    def arity(self) -> int:
        return 2 if GateKind.CX <= self <= GateKind.ISWAP else 1

    @property
    def qasm_name(self) -> str:
        return self.name.lower()


SINGLE_QUBIT_KINDS = (GateKind.X, GateKind.Y, GateKind.Z, GateKind.H, GateKind.S, GateKind.SDG)
TWO_QUBIT_KINDS = (GateKind.CX, GateKind.CY, GateKind.CZ, GateKind.SWAP, GateKind.ISWAP)
CLIFFORD_KINDS = SINGLE_QUBIT_KINDS + TWO_QUBIT_KINDS

_BY_QASM_NAME = {k.qasm_name: k for k in CLIFFORD_KINDS}
ARITY = np.array([k.arity for k in GateKind], dtype=np.int64)


class Gate(NamedTuple):
    kind: GateKind
    qubits: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.kind.name} {','.join(map(str, self.qubits))}"


class Circuit:
    """An ordered sequence of gates on ``num_qubits`` qubits.

    ``kinds[i]`` is the :class:`GateKind` of gate ``i`` and ``qubits[i]`` its
    operands (second column ``-1`` for single-qubit kinds).  ``cbits[i]`` is the
    classical label of a MEASURE gate, ``-1`` otherwise.
    """

    __slots__ = ("num_qubits", "kinds", "qubits", "cbits")

    def __init__(self, num_qubits: int, kinds, qubits, cbits=None, *, validate: bool = True):
        self.num_qubits = int(num_qubits)
        self.kinds = np.ascontiguousarray(kinds, dtype=np.uint8).reshape(-1)
        self.qubits = np.ascontiguousarray(qubits, dtype=np.int64).reshape(-1, 2)
        m = len(self.kinds)
        is_meas = self.kinds == GateKind.MEASURE
        if cbits is None:
            cbits = np.full(m, -1, dtype=np.int64)
            cbits[is_meas] = np.arange(int(is_meas.sum()))
        self.cbits = np.ascontiguousarray(cbits, dtype=np.int64).reshape(-1)
        if validate:
            self._validate()
        for a in (self.kinds, self.qubits, self.cbits):
            a.flags.writeable = False

    def _validate(self) -> None:
        n, m = self.num_qubits, len(self.kinds)
        if n < 1:
            raise ValueError("a circuit needs at least one qubit")
        if len(self.qubits) != m or len(self.cbits) != m:
            raise ValueError("kinds, qubits and cbits must have equal length")
        if m == 0:
            return
        if self.kinds.max() > GateKind.MEASURE:
            raise ValueError("unknown gate kind")
        two = ARITY[self.kinds] == 2
        q0, q1 = self.qubits[:, 0], self.qubits[:, 1]
        if ((q0 < 0) | (q0 >= n)).any() or ((q1[two] < 0) | (q1[two] >= n)).any():
            raise ValueError(f"qubit index out of range for n={n}")
        if (q1[~two] != -1).any():
            raise ValueError("single-qubit gates must have -1 as second operand")
        if (q0[two] == q1[two]).any():
            raise ValueError("two-qubit gate with identical operands")

    @classmethod
    def from_gates(cls, num_qubits: int, gates: Iterable[Gate | tuple]) -> "Circuit":
        kinds, qubits = [], []
        for kind, qs in gates:
            kind = GateKind(kind)
            qs = tuple(int(q) for q in qs)
            if len(qs) != kind.arity:
                raise ValueError(f"{kind.name} takes {kind.arity} operand(s), got {len(qs)}")
            kinds.append(kind)
            qubits.append(qs + (-1,) * (2 - len(qs)))
        return cls(num_qubits, kinds, np.array(qubits, dtype=np.int64).reshape(-1, 2))

    def __len__(self) -> int:
        return len(self.kinds)

    def gate(self, i: int) -> Gate:
        kind = GateKind(int(self.kinds[i]))
        return Gate(kind, tuple(int(q) for q in self.qubits[i, : kind.arity]))

    @property
    def gates(self) -> list[Gate]:
        return [self.gate(i) for i in range(len(self))]

    @property
    def measured_qubits(self) -> np.ndarray:
        """Qubits of the MEASURE gates in program order."""
        return self.qubits[self.kinds == GateKind.MEASURE, 0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Circuit):
            return NotImplemented
        return (
            self.num_qubits == other.num_qubits
            and np.array_equal(self.kinds, other.kinds)
            and np.array_equal(self.qubits, other.qubits)
            and np.array_equal(self.cbits, other.cbits)
        )

    def __repr__(self) -> str:
        return f"Circuit(n={self.num_qubits}, gates={len(self)})"

    def depth(self) -> int:
        """Longest per-qubit chain of gates."""
        level = np.zeros(self.num_qubits, dtype=np.int64)
        for kind, (a, b) in zip(self.kinds.tolist(), self.qubits.tolist()):
            if b < 0:
                level[a] += 1
            else:
                level[a] = level[b] = max(level[a], level[b]) + 1
        return int(level.max()) if len(self) else 0


# --------------------------------------------------------------------------- QASM


class QasmError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


_TOKEN = re.compile(
    r"""(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>//[^\n]*)
      |(?P<string>"[^"\n]*")|(?P<real>\d+\.\d*)|(?P<int>\d+)
      |(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<arrow>->)|(?P<sym>[\[\];,()])""",
    re.VERBOSE,
)


def _tokenize(text: str):
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise QasmError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            yield kind, m.group(), line, m.start() - line_start + 1
        pos = m.end()


def _statements(text: str):
    stmt = []
    for tok in _tokenize(text):
        if tok[1] == ";":
            if not stmt:
                raise QasmError("empty statement", tok[2], tok[3])
            yield stmt
            stmt = []
        else:
            stmt.append(tok)
    if stmt:
        raise QasmError("missing ';' at end of statement", stmt[0][2], stmt[0][3])


def parse_qasm(text: str) -> Circuit:
    """Parse the supported OpenQASM 2.0 subset into a :class:`Circuit`."""
    qreg = creg = None
    kinds: list[int] = []
    qubits: list[tuple[int, int]] = []
    cbits: list[int] = []
    saw_header = False

    def expect(stmt, i, kind=None, value=None):
        if i >= len(stmt):
            last = stmt[-1]
            raise QasmError("unexpected end of statement", last[2], last[3] + len(last[1]))
        tok = stmt[i]
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            raise QasmError(f"unexpected token {tok[1]!r}", tok[2], tok[3])
        return tok

    def operand(stmt, i, reg):
        name = expect(stmt, i, "ident")
        if reg is None or name[1] != reg[0]:
            raise QasmError(f"unknown register {name[1]!r}", name[2], name[3])
        expect(stmt, i + 1, value="[")
        idx = expect(stmt, i + 2, "int")
        expect(stmt, i + 3, value="]")
        q = int(idx[1])
        if q >= reg[1]:
            raise QasmError(f"index {q} out of bounds for {reg[0]}[{reg[1]}]", idx[2], idx[3])
        return q, i + 4

    for stmt in _statements(text):
        head = stmt[0]
        word, line, col = head[1], head[2], head[3]
        if word == "OPENQASM":
            ver = expect(stmt, 1)
            if ver[1] not in ("2.0", "2") or len(stmt) != 2:
                raise QasmError("only OPENQASM 2.0 is supported", line, col)
            saw_header = True
        elif not saw_header:
            raise QasmError("missing 'OPENQASM 2.0;' header", line, col)
        elif word == "include":
            expect(stmt, 1, "string")
        elif word in ("qreg", "creg"):
            name = expect(stmt, 1, "ident")
            expect(stmt, 2, value="[")
            size = expect(stmt, 3, "int")
            expect(stmt, 4, value="]")
            if len(stmt) != 5:
                raise QasmError("trailing tokens after register declaration", *stmt[5][2:])
            if word == "qreg":
                if qreg is not None:
                    raise QasmError("multiple quantum registers are not supported", line, col)
                qreg = (name[1], int(size[1]))
                if qreg[1] < 1:
                    raise QasmError("quantum register must hold at least one qubit", *size[2:])
            else:
                if creg is not None:
                    raise QasmError("multiple classical registers are not supported", line, col)
                creg = (name[1], int(size[1]))
        elif word == "measure":
            q, i = operand(stmt, 1, qreg)
            expect(stmt, i, "arrow")
            c, i = operand(stmt, i + 1, creg)
            if i != len(stmt):
                raise QasmError("trailing tokens after measure", *stmt[i][2:])
            kinds.append(GateKind.MEASURE)
            qubits.append((q, -1))
            cbits.append(c)
        elif head[0] == "ident":
            kind = _BY_QASM_NAME.get(word)
            if kind is None:
                raise QasmError(f"unsupported gate {word!r}", line, col)
            ops, i = [], 1
            for a in range(kind.arity):
                if a:
                    expect(stmt, i, value=",")
                    i += 1
                q, i = operand(stmt, i, qreg)
                ops.append(q)
            if i != len(stmt):
                raise QasmError(f"{word} takes {kind.arity} operand(s)", *stmt[i][2:])
            if len(ops) == 2 and ops[0] == ops[1]:
                raise QasmError(f"{word} with identical operands", line, col)
            kinds.append(kind)
            qubits.append((ops[0], ops[1] if len(ops) == 2 else -1))
            cbits.append(-1)
        else:
            raise QasmError(f"unexpected token {word!r}", line, col)
    if not saw_header:
        raise QasmError("missing 'OPENQASM 2.0;' header", 1, 1)
    if qreg is None:
        raise QasmError("no quantum register declared", 1, 1)
    return Circuit(qreg[1], kinds, np.array(qubits, dtype=np.int64).reshape(-1, 2), cbits)


def emit_qasm(circuit: Circuit) -> str:
    """Render ``circuit`` as OpenQASM 2.0 text that parses back to an equal circuit."""
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.num_qubits}];"]
    meas = circuit.kinds == GateKind.MEASURE
    if meas.any():
        lines.append(f"creg c[{int(circuit.cbits[meas].max()) + 1}];")
    names = [k.qasm_name for k in GateKind]
    for kind, (a, b), c in zip(circuit.kinds.tolist(), circuit.qubits.tolist(), circuit.cbits.tolist()):
        if kind == GateKind.MEASURE:
            lines.append(f"measure q[{a}] -> c[{c}];")
        elif b < 0:
            lines.append(f"{names[kind]} q[{a}];")
        else:
            lines.append(f"{names[kind]} q[{a}],q[{b}];")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------- generator


def generate_random(n: int, depth: int, seed: int, measure_prob: float = 0.0) -> Circuit:
    """Random layered Clifford circuit followed by a Bernoulli measurement tail.

    Each layer visits the qubits in a fresh random order and places operators
    until every qubit is used once; each operator is uniform over the eleven
    Clifford kinds, falling back to the six single-qubit kinds when only one
    qubit of the layer remains.
    """
    if n < 1 or depth < 1:
        raise ValueError("n and depth must be at least 1")
    if not 0.0 <= measure_prob <= 1.0:
        raise ValueError("measure_prob must lie in [0, 1]")
    rng = np.random.Generator(np.random.PCG64(int(seed) & (2**64 - 1)))
    kinds, q0, q1 = [], [], []
    n_kinds, n_single = len(CLIFFORD_KINDS), len(SINGLE_QUBIT_KINDS)
    for _ in range(depth):
        order = rng.permutation(n).tolist()
        draws = rng.integers(0, n_kinds, size=n).tolist()
        tail = rng.integers(0, n_single)
        pos = 0
        while pos < n:
            kind = draws[pos]
            if kind >= n_single and pos == n - 1:
                kind = int(tail)
            kinds.append(kind)
            q0.append(order[pos])
            if kind >= n_single:
                q1.append(order[pos + 1])
                pos += 2
            else:
                q1.append(-1)
                pos += 1
    measured = np.flatnonzero(rng.random(n) < measure_prob)
    kinds.extend([GateKind.MEASURE] * len(measured))
    q0.extend(measured.tolist())
    q1.extend([-1] * len(measured))
    qubits = np.stack([np.array(q0, dtype=np.int64), np.array(q1, dtype=np.int64)], axis=1)
    return Circuit(n, np.array(kinds, dtype=np.uint8), qubits)
