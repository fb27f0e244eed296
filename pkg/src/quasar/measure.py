"""Single-shot projective measurement on the RowMajor tableau.

The pipeline for one window:

1. ``find_probabilistic`` scans each measured qubit's column of the stabilizer
   X bits.
2. For every reported qubit, ``find_and_compact_pivots`` scatters the indices of
   anti-commuting stabilizers and compacts them.
3. ``parallel_ge`` injects CX(c -> t) from the first pivot into all others.
4. ``swap_anti_commuting`` exchanges the pivot pair.
5. A coin is drawn, and ``inject_x`` forces the drawn outcome.

All steps act on the forward state tableau T by right-multiplying it with a
gate on generator indices (T <- T·G).  A CX(c -> t) injection therefore does
S_t <- S_c·S_t and D_c <- D_c·D_t.  Signs follow the exact Pauli-product phase,
so every generator stays Hermitian and the signs stay meaningful.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import bitplane, kernels
from ._parallel import resolve_threads, run_ranges
from .tableau import Layout, Tableau, transpose_in_place


@dataclass
class PivotList:
    entries: np.ndarray
    count: int

    @property
    def control(self) -> int:
        if self.count == 0:
            raise ValueError("empty pivot list")
        return int(self.entries[0])

    @property
    def targets(self) -> np.ndarray:
        return self.entries[1: self.count]


@dataclass
class MeasurementRecord:
    qubits: np.ndarray
    outcomes: np.ndarray
    deterministic: np.ndarray

    def __len__(self) -> int:
        return len(self.qubits)


@dataclass
class PhaseTimer:
    """Accumulated wall time per phase: TO, T, CMP, GE."""

    totals: dict = field(default_factory=lambda: {"TO": 0.0, "T": 0.0, "CMP": 0.0, "GE": 0.0})

    def add(self, phase: str, start: float) -> None:
        self.totals[phase] += time.perf_counter() - start


def _require_row_major(t: Tableau) -> None:
    if t.layout is not Layout.ROW_MAJOR:
        raise ValueError("operation requires the row-major layout")


def _column(t: Tableau, plane: str, half: int, q: int) -> np.ndarray:
    """Bit q of every generator row in ``half`` (length n, uint8)."""
    out = np.empty(t.n, dtype=np.uint8)
    kernels.column_bits(t.view(plane), half, q // t.w, q % t.w, t.n, out)
    return out


def _sign_bits(t: Tableau, half: int, rows: np.ndarray) -> np.ndarray:
    words = t.S[half * t.k + rows // t.w]
    return ((words >> (rows % t.w).astype(t.dtype)) & 1).astype(np.uint8)


def _xor_sign_bits(t: Tableau, half: int, rows: np.ndarray, bits: np.ndarray) -> None:
    sel = rows[bits.astype(bool)]
    if len(sel):
        one = t.dtype.type(1)
        np.bitwise_xor.at(t.S, half * t.k + sel // t.w, one << (sel % t.w).astype(t.dtype))


def _check_real(history: np.ndarray) -> None:
    if (history & 1).any():
        raise RuntimeError("imaginary phase in a product of commuting generators; tableau corrupted")


# ---------------------------------------------------------------- detection


def find_probabilistic(t: Tableau, window) -> np.ndarray:
    """For each measured qubit: the qubit if some stabilizer has X at it, else -1."""
    _require_row_major(t)
    qs = np.asarray(window.measured_qubits, dtype=np.int64)
    XS = t.view("X")[: t.n, 1]
    out = np.full(len(qs), -1, dtype=np.int64)
    for s in range(0, len(qs), 64):
        chunk = qs[s: s + 64]
        words = XS[:, chunk // t.w]
        hit = ((words >> (chunk % t.w).astype(t.dtype)) & 1).any(axis=0)
        out[s: s + 64] = np.where(hit, chunk, -1)
    return out


def scatter_pivots(t: Tableau, q: int) -> np.ndarray:
    """entries[g] = g if stabilizer g anti-commutes with Z_q else -1."""
    _require_row_major(t)
    bits = _column(t, "X", 1, q)
    return np.where(bits.astype(bool), np.arange(t.n, dtype=np.int64), -1)


def find_and_compact_pivots(t: Tableau, q: int, block_size: int | None = None) -> PivotList:
    entries = scatter_pivots(t, q)
    count = bitplane.compact_select(entries, -1, block_size)
    return PivotList(entries, count)


# ---------------------------------------------------------------- products


def _accumulate_rows(t, half, rows, base_x, base_z, block_size, threads):
    """Three-pass running product over ``rows``; returns (total_x, total_z, history).

    ``history[a]`` is the phase (mod 4) picked up when the running product
    ``base * rows[0] * ... * rows[a-1]`` is multiplied by ``rows[a]``.
    """
    XR, ZR = t.view("X"), t.view("Z")
    count, k = len(rows), t.k
    nblocks = bitplane.words_for(count, block_size)
    sum_x = np.empty((nblocks, k), dtype=t.dtype)
    sum_z = np.empty((nblocks, k), dtype=t.dtype)
    # Pass 1: per-block totals.
    run_ranges(lambda a, b: kernels.scan_pass1(XR, ZR, half, rows, block_size, a, b, sum_x, sum_z),
               nblocks, threads)
    # Pass 2: exclusive scan over block totals.
    scan_x, total_x = bitplane.exclusive_scan_xor(sum_x)
    scan_z, total_z = bitplane.exclusive_scan_xor(sum_z)
    # Pass 3: each block re-walks its rows from its offset and records phases.
    history = np.empty(count, dtype=np.int64)
    run_ranges(lambda a, b: kernels.scan_pass3(XR, ZR, half, rows, block_size, a, b, scan_x, scan_z,
                                               base_x, base_z, history), nblocks, threads)
    return base_x ^ total_x, base_z ^ total_z, history


def product_sign(t: Tableau, half: int, rows: np.ndarray, block_size: int = 256, threads: int | None = None):
    """Packed (x, z) and sign bit of the ordered product of generators ``rows`` in ``half``."""
    _require_row_major(t)
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    zero = np.zeros(t.k, dtype=t.dtype)
    if len(rows) == 0:
        return zero, zero.copy(), 0
    x, z, history = _accumulate_rows(t, half, rows, zero, zero.copy(), block_size, resolve_threads(threads))
    _check_real(history)
    bit = int(np.bitwise_xor.reduce((history >> 1).astype(np.uint8)) ^ np.bitwise_xor.reduce(_sign_bits(t, half, rows)))
    return x, z, bit


# ----------------------------------------------------------- elimination


def parallel_ge(t: Tableau, pivots: PivotList, block_size: int = 256, threads: int | None = None) -> Tableau:
    """Inject CX(c -> t) for every target, equal to the strictly ordered sequential loop.

    Destabilizer half: D_c <- D_c·D_t1·D_t2·…  The prefix of the running
    product is an exclusive XOR scan (Pass 1 block prefixes and totals, Pass 2
    scan of totals, Pass 3 merge).  Each target's sign history is the phase
    picked up when it joins the product; the histories are XOR-reduced into
    D_c's sign.
    Stabilizer half: S_t <- S_c·S_t independently per target.
    """
    _require_row_major(t)
    if pivots.count < 1:
        raise ValueError("parallel_ge needs at least one pivot")
    if block_size < 1:
        raise ValueError("block_size must be positive")
    targets = np.ascontiguousarray(pivots.targets, dtype=np.int64)
    if len(targets) == 0:
        return t
    threads = resolve_threads(threads)
    c = pivots.control
    XR, ZR = t.view("X"), t.view("Z")

    base_x, base_z = XR[c, 0].copy(), ZR[c, 0].copy()
    total_x, total_z, history = _accumulate_rows(t, 0, targets, base_x, base_z, block_size, threads)
    _check_real(history)
    XR[c, 0] = total_x
    ZR[c, 0] = total_z
    flip = bitplane.reduce_xor((history >> 1).astype(np.uint8)) ^ bitplane.reduce_xor(_sign_bits(t, 0, targets))
    _xor_sign_bits(t, 0, np.array([c]), np.array([flip]))

    merged = np.empty(len(targets), dtype=np.int64)
    run_ranges(lambda a, b: kernels.merge_rows(XR, ZR, 1, c, targets, a, b, merged), len(targets), threads)
    _check_real(merged)
    flips = (merged >> 1).astype(np.uint8) ^ np.uint8(t.sign(t.n + c))
    _xor_sign_bits(t, 1, targets, flips)
    return t


def swap_anti_commuting(t: Tableau, p: int, q: int) -> Tableau:
    """Exchange the roles of D_p and S_p so that S_p commutes with Z_q.

    X case (D_p commutes with Z_q): swap the rows and their signs (virtual H on p).
    Y case (D_p has X at q): S_p <- i·D_p·S_p and D_p <- -D_p (virtual H_YZ on p),
    whose bit rule is the injection x ^= z.
    """
    _require_row_major(t)
    XR, ZR = t.view("X"), t.view("Z")
    word, shift = q // t.w, t.dtype.type(q % t.w)
    if not (XR[p, 1, word] >> shift) & 1:
        raise ValueError(f"stabilizer {p} does not anti-commute with Z_{q}")
    if (XR[p, 0, word] >> shift) & 1:
        e = int(kernels.row_phase(XR[p, 0], ZR[p, 0], XR[p, 1], ZR[p, 1]))
        if e % 2 == 0:
            raise RuntimeError("pivot pair commutes; tableau corrupted")
        flip = ((1 + e) & 3) >> 1 ^ t.sign(p)
        XR[p, 1] ^= XR[p, 0]
        ZR[p, 1] ^= ZR[p, 0]
        if flip:
            t.flip_sign(t.n + p)
        t.flip_sign(p)
    else:
        for P in (XR, ZR):
            P[p, [0, 1]] = P[p, [1, 0]]
        if t.sign(p) != t.sign(t.n + p):
            t.flip_sign(p)
            t.flip_sign(t.n + p)
    return t


def inject_x(t: Tableau, p: int) -> Tableau:
    """Virtual X on generator pair p: S_p changes sign, D_p is unchanged."""
    _require_row_major(t)
    t.flip_sign(t.n + p)
    return t


def outcome_of(t: Tableau, q: int, block_size: int = 256, threads: int | None = None) -> int:
    """Sign m with (-1)^m Z_q = prod of S_i over destabilizers i with X at q."""
    rows = np.flatnonzero(_column(t, "X", 0, q))
    x, z, bit = product_sign(t, 1, rows, block_size, threads)
    expect = np.zeros(t.k, dtype=t.dtype)
    expect[q // t.w] = t.dtype.type(1) << t.dtype.type(q % t.w)
    if x.any() or not np.array_equal(z, expect):
        raise RuntimeError(f"Z_{q} is not in the stabilizer group; tableau corrupted")
    return bit


def deterministic_outcome(t: Tableau, q: int, block_size: int = 256, threads: int | None = None) -> int:
    _require_row_major(t)
    if _column(t, "X", 1, q).any():
        raise ValueError(f"measurement of qubit {q} is not deterministic")
    return outcome_of(t, q, block_size, threads)


# ---------------------------------------------------------------- window


def measure_rows(t: Tableau, window, rng, *, block_size=256, threads=None, timer: PhaseTimer | None = None):
    """Measure a window on a RowMajor tableau; returns the MeasurementRecord."""
    _require_row_major(t)
    timer = timer or PhaseTimer()
    threads = resolve_threads(threads)
    qs = np.asarray(window.measured_qubits, dtype=np.int64)
    if len(np.unique(qs)) != len(qs):
        raise ValueError("a qubit is measured twice in one window")
    start = time.perf_counter()
    candidates = find_probabilistic(t, window)
    timer.add("CMP", start)
    outcomes = np.zeros(len(qs), dtype=np.uint8)
    deterministic = np.ones(len(qs), dtype=bool)
    for i, q in enumerate(qs.tolist()):
        if candidates[i] >= 0:
            start = time.perf_counter()
            pivots = find_and_compact_pivots(t, q)
            timer.add("CMP", start)
            if pivots.count:
                start = time.perf_counter()
                p = pivots.control
                parallel_ge(t, pivots, block_size, threads)
                swap_anti_commuting(t, p, q)
                current = outcome_of(t, q, block_size, threads)
                bit = rng.bit()
                if bit != current:
                    inject_x(t, p)
                outcomes[i] = bit
                deterministic[i] = False
                timer.add("GE", start)
                continue
        start = time.perf_counter()
        outcomes[i] = outcome_of(t, q, block_size, threads)
        timer.add("GE", start)
    return MeasurementRecord(qs, outcomes, deterministic)


def measure_window(t: Tableau, window, rng, *, block_size=256, threads=None, timer: PhaseTimer | None = None):
    """Transpose, measure every qubit of the window in order, transpose back."""
    if t.layout is not Layout.COLUMN_MAJOR:
        raise ValueError("measure_window expects the column-major layout")
    if not window.is_measurement:
        raise ValueError("measure_window expects a measurement window")
    timer = timer or PhaseTimer()
    start = time.perf_counter()
    transpose_in_place(t, threads)
    timer.add("T", start)
    record = measure_rows(t, window, rng, block_size=block_size, threads=threads, timer=timer)
    start = time.perf_counter()
    transpose_in_place(t, threads)
    timer.add("T", start)
    return t, record
