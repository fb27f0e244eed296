"""Compiled row kernels for the measurement pipeline.

Planes are passed as ``(rows, 2, k)`` RowMajor views.  Every kernel writes
only the rows or outputs it owns for its index range ``[start, stop)``, so
callers may run disjoint ranges on different threads.

``phase`` is the exponent of i picked up when multiplying two Hermitian
Pauli strings: ``|x1&z1| + |x2&z2| + 2|x1&z2| - |x3&z3|`` with ``x3 = x1^x2``,
``z3 = z1^z2``, taken mod 4.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


@njit(inline="always", cache=True)
def popcount(v):
    v = np.uint64(v)
    v = v - ((v >> np.uint64(1)) & _M1)
    v = (v & _M2) + ((v >> np.uint64(2)) & _M2)
    v = (v + (v >> np.uint64(4))) & _M4
    return np.int64((v * _H01) >> np.uint64(56))


@njit(inline="always", cache=True)
def phase_word(x1, z1, x2, z2):
    return (popcount(x1 & z1) + popcount(x2 & z2) + 2 * popcount(x1 & z2)
            - popcount((x1 ^ x2) & (z1 ^ z2)))


@njit(nogil=True, cache=True)
def row_phase(x1, z1, x2, z2):
    """Phase exponent (mod 4) of the product of two packed rows."""
    e = 0
    for i in range(x1.shape[0]):
        e += phase_word(x1[i], z1[i], x2[i], z2[i])
    return e & 3


@njit(nogil=True, cache=True)
def scan_pass1(X, Z, half, rows, block, start, stop, sum_x, sum_z):
    """XOR total of the selected rows in each block ``start <= b < stop``."""
    k = X.shape[2]
    count = rows.shape[0]
    for b in range(start, stop):
        for i in range(k):
            sum_x[b, i] = 0
            sum_z[b, i] = 0
        for a in range(b * block, min(count, (b + 1) * block)):
            r = rows[a]
            for i in range(k):
                sum_x[b, i] ^= X[r, half, i]
                sum_z[b, i] ^= Z[r, half, i]


@njit(nogil=True, cache=True)
def scan_pass3(X, Z, half, rows, block, start, stop, scan_x, scan_z, base_x, base_z, history):
    """Re-walk each block from its scanned offset and emit every row's phase.

    The running product before the first row of block ``b`` is
    ``base ^ scan[b]``.  ``history[a]`` is the phase (mod 4) picked up by
    multiplying the running product with row ``a``.
    """
    k = X.shape[2]
    count = rows.shape[0]
    run_x = np.empty(k, dtype=X.dtype)
    run_z = np.empty(k, dtype=Z.dtype)
    for b in range(start, stop):
        for i in range(k):
            run_x[i] = scan_x[b, i] ^ base_x[i]
            run_z[i] = scan_z[b, i] ^ base_z[i]
        for a in range(b * block, min(count, (b + 1) * block)):
            r = rows[a]
            e = 0
            for i in range(k):
                xr = X[r, half, i]
                zr = Z[r, half, i]
                e += phase_word(run_x[i], run_z[i], xr, zr)
                run_x[i] ^= xr
                run_z[i] ^= zr
            history[a] = e & 3


@njit(nogil=True, cache=True)
def merge_rows(X, Z, half, control, rows, start, stop, history):
    """Row ``r ^= control`` for the selected rows, recording the product phase (mod 4)."""
    k = X.shape[2]
    for a in range(start, stop):
        r = rows[a]
        e = 0
        for i in range(k):
            xc = X[control, half, i]
            zc = Z[control, half, i]
            xt = X[r, half, i]
            zt = Z[r, half, i]
            e += phase_word(xc, zc, xt, zt)
            X[r, half, i] = xt ^ xc
            Z[r, half, i] = zt ^ zc
        history[a] = e & 3


@njit(nogil=True, cache=True)
def column_bits(P, half, word, shift, count, out):
    """``out[g] = bit (word, shift) of row g`` for g < count."""
    for g in range(count):
        out[g] = (P[g, half, word] >> shift) & 1
