"""Partition a circuit into maximal windows of qubit-disjoint gates.

Gates are layered greedily.  A unitary gate joins the first round after all of
its per-qubit predecessors.  A MEASURE waits until the unitary window of its
round has been placed, so measurements act as barriers and form their own
windows right after it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .circuit import ARITY, Circuit, Gate, GateKind


class Mode(str, enum.Enum):
    SINGLE_SHOT = "single_shot"
    SAMPLING = "sampling"


@dataclass(frozen=True)
class Window:
    """A set of gates applied in one parallel step.

    ``indices`` are positions of the gates in the source circuit (program
    order within the window); ``kinds``/``qubits`` are the matching rows.
    """

    indices: np.ndarray
    kinds: np.ndarray
    qubits: np.ndarray
    is_measurement: bool

    @classmethod
    def from_circuit(cls, circuit: Circuit, indices, is_measurement: bool | None = None) -> "Window":
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        kinds = circuit.kinds[idx]
        if is_measurement is None:
            is_measurement = bool(len(idx)) and bool((kinds == GateKind.MEASURE).all())
        return cls(idx, kinds, circuit.qubits[idx], is_measurement)

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def gates(self) -> list[Gate]:
        out = []
        for kind, row in zip(self.kinds.tolist(), self.qubits.tolist()):
            kind = GateKind(kind)
            out.append(Gate(kind, tuple(row[: kind.arity])))
        return out

    @property
    def measured_qubits(self) -> np.ndarray:
        return self.qubits[:, 0]

    def touched_qubits(self) -> np.ndarray:
        q = self.qubits.reshape(-1)
        return q[q >= 0]


@dataclass(frozen=True)
class Schedule:
    windows: list[Window]
    mode: Mode

    def __len__(self) -> int:
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    def dump(self) -> str:
        """One window per line, measurement windows prefixed with ``M``."""
        lines = []
        for i, w in enumerate(self.windows):
            tag = "M" if w.is_measurement else "U"
            lines.append(f"{tag}{i}: " + " ".join(str(g) for g in w.gates))
        return "\n".join(lines)


def _rounds(circuit: Circuit) -> np.ndarray:
    """Round index of each gate under greedy front advancement."""
    n = circuit.num_qubits
    # Earliest round a unitary / a measurement may occupy on each qubit.
    next_unitary = [0] * n
    next_measure = [0] * n
    rounds = np.empty(len(circuit), dtype=np.int64)
    measure = int(GateKind.MEASURE)
    for i, (kind, (a, b)) in enumerate(zip(circuit.kinds.tolist(), circuit.qubits.tolist())):
        if kind == measure:
            r = next_measure[a]
            next_unitary[a] = r + 1
            next_measure[a] = r + 1
        elif b < 0:
            r = next_unitary[a]
            next_unitary[a] = r + 1
            next_measure[a] = r
        else:
            r = max(next_unitary[a], next_unitary[b])
            next_unitary[a] = next_unitary[b] = r + 1
            next_measure[a] = next_measure[b] = r
        rounds[i] = r
    return rounds


def schedule_windows(
    circuit: Circuit, mode: Mode | str = Mode.SINGLE_SHOT, *, isolate_measurements: bool = False
) -> Schedule:
    """Greedy maximal windows; measurement windows follow each round's unitary window.

    With ``isolate_measurements`` every MEASURE gets a window of its own (in
    program order), which is the one-measurement-per-window reading of the
    window definition.
    """
    mode = Mode(mode)
    if len(circuit) == 0:
        return Schedule([], mode)
    is_meas = circuit.kinds == GateKind.MEASURE
    key = 2 * _rounds(circuit) + is_meas
    order = np.argsort(key, kind="stable")
    sorted_keys = key[order]
    cuts = np.flatnonzero(np.diff(sorted_keys)) + 1
    windows = []
    for chunk, k in zip(np.split(order, cuts), sorted_keys[np.r_[0, cuts]]):
        measuring = bool(k & 1)
        if measuring and isolate_measurements:
            windows.extend(Window.from_circuit(circuit, [i], True) for i in chunk)
        else:
            windows.append(Window.from_circuit(circuit, chunk, measuring))
    return Schedule(windows, mode)


@dataclass(frozen=True)
class ScheduleReport:
    valid: bool
    message: str = "valid"

    def __bool__(self) -> bool:
        return self.valid

    def __str__(self) -> str:
        return self.message


def validate_schedule(circuit: Circuit, schedule: Schedule) -> ScheduleReport:
    """Check disjointness, per-qubit order, gate conservation and maximality."""
    n = circuit.num_qubits
    m = len(circuit)
    window_of = np.full(m, -1, dtype=np.int64)
    for wi, win in enumerate(schedule.windows):
        if len(win) == 0:
            return ScheduleReport(False, f"window {wi} is empty")
        if len(win) > n:
            return ScheduleReport(False, f"window {wi} holds more than n gates")
        if ((win.indices < 0) | (win.indices >= m)).any():
            return ScheduleReport(False, f"window {wi} references a gate outside the circuit")
        if not (np.array_equal(circuit.kinds[win.indices], win.kinds)
                and np.array_equal(circuit.qubits[win.indices], win.qubits)):
            return ScheduleReport(False, f"window {wi} gates differ from the circuit's")
        meas = win.kinds == GateKind.MEASURE
        if win.is_measurement != bool(meas.all()) or (not win.is_measurement and meas.any()):
            return ScheduleReport(False, f"window {wi} mixes measurements and unitary gates")
        touched = win.touched_qubits()
        if len(np.unique(touched)) != len(touched):
            return ScheduleReport(False, f"window {wi} has overlapping operands")
        if (window_of[win.indices] >= 0).any():
            return ScheduleReport(False, f"window {wi} repeats a gate")
        window_of[win.indices] = wi
    if (window_of < 0).any():
        missing = int(np.flatnonzero(window_of < 0)[0])
        return ScheduleReport(False, f"gate {missing} ({circuit.gate(missing)}) is not scheduled")

    unitary_windows = np.array([not w.is_measurement for w in schedule.windows], dtype=bool)
    # Number of unitary windows strictly before window i.
    unitary_before = np.concatenate([[0], np.cumsum(unitary_windows)])
    last = [-1] * n  # window of the latest gate seen on each qubit, in program order
    preds = np.empty(m, dtype=np.int64)
    for i, (a, b) in enumerate(circuit.qubits.tolist()):
        wi = int(window_of[i])
        ops = (a,) if b < 0 else (a, b)
        preds[i] = max(last[q] for q in ops)
        if preds[i] >= wi:
            return ScheduleReport(
                False, f"order violation: gate {i} ({circuit.gate(i)}) in window {wi} "
                f"does not follow its predecessor in window {preds[i]}")
        for q in ops:
            last[q] = wi
    for i in np.flatnonzero(circuit.kinds != GateKind.MEASURE).tolist():
        # Any unitary window strictly between the predecessor and this one could host it.
        if unitary_before[window_of[i]] - unitary_before[preds[i] + 1] > 0:
            return ScheduleReport(
                False, f"maximality violation: gate {i} ({circuit.gate(i)}) fits an earlier window")
    return ScheduleReport(True)
