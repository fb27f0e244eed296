"""Many-shot sampling with Pauli frames.

A frame holds one X and one Z flip bit per (qubit, shot).  The words are
qubit-major, and each word packs w shots of one qubit.  The tableau is
simulated once to get a reference shot.  The frames are then pushed through
the same windows without signs.  Each measurement records the X flips of the
measured qubit and then re-randomizes its Z frame.  An absolute outcome is
the reference outcome XOR the recorded flip.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass

import numpy as np

from ._parallel import resolve_threads, run_ranges
from .bitplane import pack_bits, unpack_bits, word_dtype
from .circuit import Circuit
from .engine import measurement_ordinals, simulate
from .gates import _check_window, apply_columns
from .rng import frame_words
from .scheduler import Mode, Schedule, schedule_windows

FRAME_STREAM = 1


def _tail_mask(f: int, w: int, kf: int, dtype) -> np.ndarray:
    """Per-word mask keeping shot bits below f."""
    mask = np.full(kf, (1 << w) - 1, dtype=np.uint64)
    if f % w:
        mask[-1] = (1 << (f % w)) - 1
    return mask.astype(dtype)


@dataclass
class FrameTableau:
    n: int
    f: int
    w: int
    Xf: np.ndarray  # (n, kf), word (q, j) holds shots j*w .. j*w+w-1 of qubit q
    Zf: np.ndarray

    @property
    def kf(self) -> int:
        return self.Xf.shape[1]

    def shot_bits(self, plane: str = "X") -> np.ndarray:
        """Unpacked (n, f) bool view of one plane."""
        return unpack_bits(getattr(self, plane + "f"), self.f)


def randomize_rows(frames: FrameTableau, qubits, seed: int, epoch: int, threads: int = 1) -> None:
    """Fill Zf rows of ``qubits`` from the (seed, 1, q, epoch) streams; padding bits zeroed."""
    qubits = np.asarray(qubits, dtype=np.int64)
    mask = _tail_mask(frames.f, frames.w, frames.kf, frames.Zf.dtype)

    def run(a, b):
        for q in qubits[a:b].tolist():
            frames.Zf[q] = frame_words(seed, FRAME_STREAM, q, epoch, frames.kf, frames.w) & mask

    run_ranges(run, len(qubits), threads)


def init_frames(n: int, f: int, seed: int, w: int = 64, threads: int | None = None) -> FrameTableau:
    """X frames zero and Z frames uniformly random (epoch 0)."""
    if f < 1:
        raise ValueError("shot count must be at least 1")
    kf = -(-f // w)
    dtype = word_dtype(w)
    frames = FrameTableau(n, f, w, np.zeros((n, kf), dtype=dtype), np.zeros((n, kf), dtype=dtype))
    randomize_rows(frames, np.arange(n), seed, 0, resolve_threads(threads))
    return frames


def apply_window_frames(frames: FrameTableau, window, *, partition: int = 1024,
                        threads: int | None = None) -> FrameTableau:
    """Column rules of a unitary window on the shot words; signs are never computed."""
    if window.is_measurement:
        raise ValueError("apply_window_frames needs a unitary window")
    _check_window(window, frames.n)
    apply_columns(frames.Xf, frames.Zf, window, partition, resolve_threads(threads), signed=False)
    return frames


@dataclass
class ShotRecord:
    """Outcome words per measurement, in program order: ``words[m, j]`` packs shots of word j."""

    words: np.ndarray
    f: int
    w: int
    measured_qubits: np.ndarray

    @property
    def kf(self) -> int:
        return self.words.shape[1]

    @classmethod
    def empty(cls, measured_qubits, f: int, w: int = 64) -> "ShotRecord":
        kf = -(-f // w)
        mq = np.asarray(measured_qubits, dtype=np.int64)
        return cls(np.zeros((len(mq), kf), dtype=word_dtype(w)), f, w, mq)

    def bits(self) -> np.ndarray:
        """(f, m) uint8 matrix: row = shot, column = measurement."""
        return unpack_bits(self.words, self.f).T.astype(np.uint8)

    @classmethod
    def from_bits(cls, bits, measured_qubits, w: int = 64) -> "ShotRecord":
        bits = np.asarray(bits, dtype=bool)
        f = bits.shape[0]
        return cls(pack_bits(bits.T, w), f, w, np.asarray(measured_qubits, dtype=np.int64))

    def __eq__(self, other) -> bool:
        return self.f == other.f and np.array_equal(self.bits(), other.bits())

    def to_text(self) -> str:
        """One line per shot, one '0'/'1' per measurement."""
        b = self.bits()
        if b.shape[1] == 0:
            return "\n" * self.f
        chars = np.where(b, ord("1"), ord("0")).astype(np.uint8)
        lines = np.concatenate([chars, np.full((self.f, 1), ord("\n"), dtype=np.uint8)], axis=1)
        return lines.tobytes().decode("ascii")

    @classmethod
    def from_text(cls, text: str, measured_qubits, w: int = 64) -> "ShotRecord":
        rows = text.splitlines()
        m = len(measured_qubits)
        bits = np.array([[c == "1" for c in r] for r in rows], dtype=bool).reshape(len(rows), m)
        return cls.from_bits(bits, measured_qubits, w)

    def to_binary(self) -> bytes:
        """Per measurement, kf little-endian words; bit 0 of word 0 is shot 0."""
        return self.words.astype(self.words.dtype.newbyteorder("<"), copy=False).tobytes()

    @classmethod
    def from_binary(cls, data: bytes, measured_qubits, f: int, w: int = 64) -> "ShotRecord":
        kf = -(-f // w)
        dt = np.dtype(word_dtype(w)).newbyteorder("<")
        words = np.frombuffer(data, dtype=dt).reshape(len(measured_qubits), kf).astype(word_dtype(w))
        return cls(words, f, w, np.asarray(measured_qubits, dtype=np.int64))

    def write(self, fh, fmt: str = "text") -> None:
        if fmt == "text":
            data = self.to_text().encode("ascii")
        elif fmt == "binary":
            data = self.to_binary()
        else:
            raise ValueError(f"unknown format {fmt!r}")
        (fh.buffer if isinstance(fh, io.TextIOBase) else fh).write(data)


def measure_sample(frames: FrameTableau, window, record: ShotRecord, rows, seed: int, epoch: int,
                   threads: int | None = None) -> None:
    """Record the X frames of the measured qubits into ``rows`` of ``record``, then re-randomize Z."""
    qubits = window.measured_qubits
    if len(np.unique(qubits)) != len(qubits):
        raise ValueError("qubit measured twice in one window")
    record.words[np.asarray(rows)] = frames.Xf[qubits]
    randomize_rows(frames, qubits, seed, epoch, resolve_threads(threads))


@dataclass
class SampleResult:
    record: ShotRecord  # absolute outcomes
    flips: ShotRecord
    reference: np.ndarray
    timings: dict
    wall_time: float


def sample_frames(circuit: Circuit, f: int, seed: int = 0, *, w: int = 64, threads: int | None = None,
                  schedule: Schedule | None = None) -> tuple[ShotRecord, FrameTableau]:
    """Propagate f frames through the schedule; returns the flip record and final frames."""
    schedule = schedule if schedule is not None else schedule_windows(circuit, Mode.SAMPLING)
    frames = init_frames(circuit.num_qubits, f, seed, w, threads)
    flips = ShotRecord.empty(circuit.measured_qubits, f, w)
    ordinal = measurement_ordinals(circuit)
    epoch = 0
    for window in schedule.windows:
        if window.is_measurement:
            epoch += 1
            measure_sample(frames, window, flips, ordinal[window.indices], seed, epoch, threads)
        else:
            apply_window_frames(frames, window, threads=threads)
    return flips, frames


def sample(circuit: Circuit, f: int, seed: int = 0, *, w: int = 64, threads: int | None = None) -> SampleResult:
    """f absolute shots: a reference single shot XOR the Pauli-frame flips."""
    if f < 1:
        raise ValueError("shot count must be at least 1")
    wall = time.perf_counter()
    schedule = schedule_windows(circuit, Mode.SAMPLING)
    start = time.perf_counter()
    ref = simulate(circuit, seed, w=w, threads=threads, schedule=schedule)
    t_ref = time.perf_counter() - start
    start = time.perf_counter()
    flips, _ = sample_frames(circuit, f, seed, w=w, threads=threads, schedule=schedule)
    t_frames = time.perf_counter() - start
    mask = _tail_mask(f, w, flips.kf, flips.words.dtype)
    ref_words = np.where(ref.outcomes.astype(bool)[:, None], mask[None, :], 0).astype(flips.words.dtype)
    record = ShotRecord(flips.words ^ ref_words, f, w, flips.measured_qubits)
    timings = dict(ref.timings, reference=t_ref, frames=t_frames)
    return SampleResult(record, flips, ref.outcomes, timings, time.perf_counter() - wall)
