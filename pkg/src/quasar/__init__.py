"""Bit-packed stabilizer circuit simulation with a parallel measurement pipeline."""

from .circuit import Circuit, Gate, GateKind, QasmError, emit_qasm, generate_random, parse_qasm
from .engine import RunResult, simulate
from .measure import measure_window
from .oracle import ScalarTableau, StateVector, chp_step, reference_run, sv_distribution
from .sampler import FrameTableau, ShotRecord, sample
from .scheduler import Mode, Schedule, Window, schedule_windows, validate_schedule
from .tableau import Layout, PauliString, Tableau, check_group_validity, new_basis_state, transpose_in_place

__all__ = [
    "Circuit", "Gate", "GateKind", "QasmError", "emit_qasm", "generate_random", "parse_qasm",
    "RunResult", "simulate", "measure_window",
    "ScalarTableau", "StateVector", "chp_step", "reference_run", "sv_distribution",
    "FrameTableau", "ShotRecord", "sample",
    "Mode", "Schedule", "Window", "schedule_windows", "validate_schedule",
    "Layout", "PauliString", "Tableau", "check_group_validity", "new_basis_state", "transpose_in_place",
]
