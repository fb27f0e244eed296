"""Top-level single-shot driver: schedule, evolve, measure.

For each window of the schedule, a unitary window updates the ColumnMajor
tableau directly.  A measurement window is transposed to RowMajor, measured,
and transposed back.  Outcomes are reported per MEASURE gate in program order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, GateKind
from .gates import apply_window
from .measure import PhaseTimer, measure_window
from .rng import BitStream
from .scheduler import Mode, Schedule, schedule_windows
from .tableau import Tableau, new_basis_state


@dataclass
class RunResult:
    outcomes: np.ndarray  # one bit per MEASURE gate, program order
    deterministic: np.ndarray
    measured_qubits: np.ndarray
    tableau: Tableau
    timings: dict
    wall_time: float
    windows: int

    def outcome_string(self) -> str:
        return "".join("1" if b else "0" for b in self.outcomes)


def measurement_ordinals(circuit: Circuit) -> np.ndarray:
    """Map circuit gate index -> ordinal among MEASURE gates (-1 for unitary gates)."""
    is_meas = circuit.kinds == GateKind.MEASURE
    ordinal = np.full(len(circuit), -1, dtype=np.int64)
    ordinal[is_meas] = np.arange(int(is_meas.sum()))
    return ordinal


def simulate(
    circuit: Circuit,
    seed: int = 0,
    *,
    w: int = 64,
    threads: int | None = None,
    block_size: int = 256,
    schedule: Schedule | None = None,
    rng=None,
    initstate=None,
) -> RunResult:
    """Single-shot simulation; one random bit per probabilistic collapse from ``rng``.

    The default stream is ``BitStream(seed, 0)``.
    """
    wall = time.perf_counter()
    schedule = schedule if schedule is not None else schedule_windows(circuit, Mode.SINGLE_SHOT)
    rng = rng if rng is not None else BitStream(seed, 0)
    n = circuit.num_qubits
    t = new_basis_state(initstate if initstate is not None else np.zeros(n, dtype=bool), w)
    ordinal = measurement_ordinals(circuit)
    m = int((ordinal >= 0).sum())
    outcomes = np.zeros(m, dtype=np.uint8)
    deterministic = np.zeros(m, dtype=bool)
    timer = PhaseTimer()
    for window in schedule.windows:
        if window.is_measurement:
            _, record = measure_window(t, window, rng, block_size=block_size, threads=threads, timer=timer)
            idx = ordinal[window.indices]
            outcomes[idx] = record.outcomes
            deterministic[idx] = record.deterministic
        else:
            start = time.perf_counter()
            apply_window(t, window, threads=threads)
            timer.add("TO", start)
    return RunResult(
        outcomes, deterministic, circuit.measured_qubits.copy(), t, dict(timer.totals),
        time.perf_counter() - wall, len(schedule),
    )
