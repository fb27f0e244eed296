"""Column update rules and unitary-window application.

H, S and CX follow the standard state-tableau rules.  The other kinds were
derived by conjugating every Pauli basis element with the gate's dense
unitary and reading off the (x, z, sign) map; ``tests/test_gates.py`` keeps
that derivation as an oracle.
"""

from __future__ import annotations

import numpy as np

from . import bitplane
from ._parallel import resolve_threads, run_ranges
from .circuit import GateKind
from .tableau import Layout, Tableau


def apply_gate_rule(kind: GateKind, xs: tuple, zs: tuple):
    """Map operand columns ``(xs, zs)`` to ``(xs', zs', sign_contribution)``.

    Works on any operands supporting ``& ^ ~`` (packed words or booleans).
    Column tuples have one entry per operand, control first.
    """
    kind = GateKind(kind)
    if kind.arity == 1:
        (x,), (z,) = xs, zs
        if kind is GateKind.X:
            return (x,), (z,), z
        if kind is GateKind.Y:
            return (x,), (z,), x ^ z
        if kind is GateKind.Z:
            return (x,), (z,), x
        if kind is GateKind.H:
            return (z,), (x,), x & z
        if kind is GateKind.S:
            return (x,), (z ^ x,), x & z
        if kind is GateKind.SDG:
            return (x,), (z ^ x,), x & ~z
        raise ValueError(f"{kind.name} has no column rule")
    (xc, xt), (zc, zt) = xs, zs
    if kind is GateKind.CX:
        return (xc, xt ^ xc), (zc ^ zt, zt), xc & zt & ~(xt ^ zc)
    if kind is GateKind.CY:
        return (xc, xt ^ xc), (zc ^ xt ^ zt, zt ^ xc), xc & ((xt & ~(zc ^ zt)) ^ (zc & zt))
    if kind is GateKind.CZ:
        return (xc, xt), (zc ^ xt, zt ^ xc), xc & xt & (zc ^ zt)
    if kind is GateKind.SWAP:
        return (xt, xc), (zt, zc), (xc & 0)
    if kind is GateKind.ISWAP:
        return (xt, xc), (xc ^ xt ^ zt, xc ^ zc ^ xt), (xc & zc) ^ (xt & zt) ^ (xc & xt & (zc ^ zt))
    raise ValueError(f"{kind.name} has no column rule")


def collapse_signs(contributions, target):
    """``target ^ reduce_xor(contributions)``: fold per-gate sign words into a sign word."""
    return target ^ bitplane.reduce_xor(contributions)


def _check_window(window, n: int) -> None:
    if window.is_measurement:
        raise ValueError("apply_window expects a unitary window")
    touched = window.touched_qubits()
    if len(np.unique(touched)) != len(touched):
        raise ValueError("window operands are not pairwise disjoint")
    if len(touched) and (touched.max() >= n or touched.min() < 0):
        raise ValueError("window operand out of range")


def apply_columns(X2: np.ndarray, Z2: np.ndarray, window, partition: int, threads: int, signed: bool):
    """Apply a window's rules to row-per-qubit planes ``X2, Z2`` (shape (n, words)).

    Returns the XOR of all sign contributions (one word per column index) or
    ``None`` when ``signed`` is false.
    """
    words = X2.shape[1]
    # Cap each gate-rule temporary near 256 KiB; rules hold several at once.
    chunk = max(1, min(partition, (1 << 15) // max(1, words)))
    jobs = []
    for kind in np.unique(window.kinds).tolist():
        rows = window.qubits[window.kinds == kind]
        arity = GateKind(kind).arity
        for s in range(0, len(rows), chunk):
            jobs.append((GateKind(kind), rows[s: s + chunk, :arity]))

    def run(a, b):
        acc = np.zeros(words, dtype=X2.dtype) if signed else None
        for kind, ops in jobs[a:b]:
            cols = [ops[:, i] for i in range(ops.shape[1])]
            xs = tuple(X2[c] for c in cols)
            zs = tuple(Z2[c] for c in cols)
            nx, nz, sign = apply_gate_rule(kind, xs, zs)
            for c, x, z in zip(cols, nx, nz):
                X2[c] = x
                Z2[c] = z
            if signed:
                acc = collapse_signs(sign, acc)
        return acc

    parts = run_ranges(run, len(jobs), threads)
    if not signed:
        return None
    total = np.zeros(words, dtype=X2.dtype)
    for p in parts:
        total ^= p
    return total


def apply_window(t: Tableau, window, *, partition: int = 1024, threads: int | None = None) -> Tableau:
    """Apply every gate of a unitary window; sign contributions are XOR-collapsed per word."""
    if t.layout is not Layout.COLUMN_MAJOR:
        raise ValueError("apply_window requires the column-major layout")
    _check_window(window, t.n)
    X2 = t.X.reshape(t.n_pad, 2 * t.k)
    Z2 = t.Z.reshape(t.n_pad, 2 * t.k)
    t.S ^= apply_columns(X2, Z2, window, partition, resolve_threads(threads), signed=True)
    return t


def apply_gate(t: Tableau, kind: GateKind, qubits) -> Tableau:
    """Convenience: apply a single gate as a one-gate window."""
    from .scheduler import Window

    qs = list(qubits) + [-1] * (2 - len(qubits))
    win = Window(np.array([0]), np.array([kind], dtype=np.uint8), np.array([qs], dtype=np.int64), False)
    return apply_window(t, win)
