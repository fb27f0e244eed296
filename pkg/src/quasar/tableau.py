"""Bit-packed extended stabilizer tableau with column-major and row-major layouts.

Both layouts view each bit plane as an ``(n_pad, 2, k)`` word array:

* ColumnMajor: ``[qubit, half, generator-word]``, word ``(q, j)`` at ``q*2k + j``
  with destabilizer words ``j < k`` and stabilizer words ``j >= k``.
* RowMajor: ``[generator, half, qubit-word]``, i.e. word ``(g, i)`` of generator
  ``g`` in half ``h`` lives at ``g*2k + h*k + i``.  This is the placement the
  tile transpose produces, so one routine converts in both directions.

``n_pad = k*w``; rows, bits and signs with index ``>= n`` are padding and stay zero.
Generator ``g < n`` is destabilizer ``g``; generator ``n + i`` is stabilizer ``i``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import bitplane
from ._parallel import resolve_threads, run_ranges


class Layout(enum.Enum):
    COLUMN_MAJOR = "column-major"
    ROW_MAJOR = "row-major"


_LETTERS = np.array(list("IXZY"))


@dataclass(frozen=True)
class PauliString:
    """A signed Pauli string; ``sign`` is the exponent of -1."""

    sign: int
    paulis: str

    @classmethod
    def from_str(cls, text: str) -> "PauliString":
        text = text.strip()
        sign = 0
        if text[:1] in "+-":
            sign, text = int(text[0] == "-"), text[1:]
        if not text or set(text) - set("IXYZ"):
            raise ValueError(f"not a Pauli string: {text!r}")
        return cls(sign, text)

    @classmethod
    def from_bits(cls, sign, x, z) -> "PauliString":
        x = np.asarray(x, dtype=np.int64)
        z = np.asarray(z, dtype=np.int64)
        return cls(int(sign), "".join(_LETTERS[x + 2 * z]))

    def bits(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.array([c in "XY" for c in self.paulis], dtype=bool)
        z = np.array([c in "ZY" for c in self.paulis], dtype=bool)
        return x, z

    def __str__(self) -> str:
        return ("-" if self.sign else "+") + self.paulis


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    message: str = "valid"

    def __bool__(self) -> bool:
        return self.valid

    def __str__(self) -> str:
        return self.message


class Tableau:
    __slots__ = ("n", "w", "X", "Z", "S", "layout")

    def __init__(self, n: int, w: int, X, Z, S, layout: Layout = Layout.COLUMN_MAJOR):
        if n < 1:
            raise ValueError("a tableau needs at least one qubit")
        dt = bitplane.word_dtype(w)
        self.n, self.w, self.layout = int(n), int(w), Layout(layout)
        k = self.k
        self.X = np.ascontiguousarray(X, dtype=dt).reshape(-1)
        self.Z = np.ascontiguousarray(Z, dtype=dt).reshape(-1)
        self.S = np.ascontiguousarray(S, dtype=dt).reshape(-1)
        if len(self.X) != self.n_pad * 2 * k or len(self.Z) != len(self.X) or len(self.S) != 2 * k:
            raise ValueError("plane sizes do not match n and w")

    @classmethod
    def zeros(cls, n: int, w: int = 64) -> "Tableau":
        dt = bitplane.word_dtype(w)
        k = bitplane.words_for(n, w)
        size = k * w * 2 * k
        return cls(n, w, np.zeros(size, dt), np.zeros(size, dt), np.zeros(2 * k, dt))

    @property
    def k(self) -> int:
        return bitplane.words_for(self.n, self.w)

    @property
    def n_pad(self) -> int:
        return self.k * self.w

    @property
    def dtype(self) -> np.dtype:
        return self.X.dtype

    @property
    def nbytes(self) -> int:
        return self.X.nbytes + self.Z.nbytes + self.S.nbytes

    def view(self, plane: str) -> np.ndarray:
        """``(n_pad, 2, k)`` view of the X or Z plane in the current layout."""
        arr = {"X": self.X, "Z": self.Z}[plane]
        return arr.reshape(self.n_pad, 2, self.k)

    def copy(self) -> "Tableau":
        return Tableau(self.n, self.w, self.X.copy(), self.Z.copy(), self.S.copy(), self.layout)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tableau):
            return NotImplemented
        return (
            (self.n, self.w, self.layout) == (other.n, other.w, other.layout)
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.Z, other.Z)
            and np.array_equal(self.S, other.S)
        )

    def __repr__(self) -> str:
        return f"Tableau(n={self.n}, w={self.w}, layout={self.layout.value})"

    # -------------------------------------------------------------- signs

    def _split(self, g: int) -> tuple[int, int]:
        if not 0 <= g < 2 * self.n:
            raise IndexError(f"generator {g} out of range for n={self.n}")
        return (0, g) if g < self.n else (1, g - self.n)

    def sign(self, g: int) -> int:
        half, local = self._split(g)
        word = self.S[half * self.k + local // self.w]
        return int(word >> word.dtype.type(local % self.w)) & 1

    def flip_sign(self, g: int) -> None:
        half, local = self._split(g)
        self.S[half * self.k + local // self.w] ^= self.dtype.type(1 << (local % self.w))

    def signs(self) -> np.ndarray:
        """All 2n sign bits as booleans (destabilizers first)."""
        bits = bitplane.unpack_bits(self.S.reshape(2, self.k), self.n)
        return bits.reshape(-1)

    # ---------------------------------------------------------- conversion

    def to_bool(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unpacked ``(X, Z, S)`` with X, Z of shape (2n, n): row = generator, column = qubit."""
        out = []
        for plane in "XZ":
            bits = bitplane.unpack_bits(self.view(plane), self.n)[: self.n]  # (row, half, bit)
            if self.layout is Layout.COLUMN_MAJOR:
                bits = bits.transpose(1, 2, 0)  # (half, generator, qubit)
            else:
                bits = bits.transpose(1, 0, 2)
            out.append(np.ascontiguousarray(bits).reshape(2 * self.n, self.n))
        return out[0], out[1], self.signs()

    @classmethod
    def from_bool(cls, X, Z, S, w: int = 64, layout: Layout = Layout.COLUMN_MAJOR) -> "Tableau":
        X = np.asarray(X, dtype=bool)
        Z = np.asarray(Z, dtype=bool)
        S = np.asarray(S, dtype=bool).reshape(-1)
        n = X.shape[1]
        if X.shape != (2 * n, n) or Z.shape != X.shape or S.shape != (2 * n,):
            raise ValueError("expected X, Z of shape (2n, n) and S of length 2n")
        t = cls.zeros(n, w)
        t.layout = Layout(layout)
        n_pad = t.n_pad
        for plane, bits in (("X", X), ("Z", Z)):
            halves = bits.reshape(2, n, n)  # (half, generator, qubit)
            full = np.zeros((2, n_pad, n_pad), dtype=bool)
            if t.layout is Layout.COLUMN_MAJOR:
                full[:, :n, :n] = halves.transpose(0, 2, 1)  # (half, qubit, generator)
            else:
                full[:, :n, :n] = halves
            packed = bitplane.pack_bits(full, w)  # (half, row, word)
            t.view(plane)[...] = packed.transpose(1, 0, 2)
        t.S[:] = bitplane.pack_bits(S.reshape(2, n), w).reshape(-1)
        return t

    def row_words(self, g: int) -> tuple[np.ndarray, np.ndarray]:
        """Packed qubit words of generator ``g`` (RowMajor only; views)."""
        if self.layout is not Layout.ROW_MAJOR:
            raise ValueError("row_words requires the row-major layout")
        half, local = self._split(g)
        return self.view("X")[local, half], self.view("Z")[local, half]


# ------------------------------------------------------------------ operations


def new_basis_state(initstate, w: int = 64) -> Tableau:
    """Tableau of the computational basis state ``|initstate>``.

    Destabilizer ``i`` is ``X_i`` and stabilizer ``i`` is ``Z_i``.  Both carry
    the sign bit ``initstate[i]``, as in the printed |+01> initialization.
    The destabilizer sign has no physical effect.
    """
    if isinstance(initstate, str):
        bits = np.array([c == "1" for c in initstate if c in "01"], dtype=bool)
        if len(bits) != len(initstate.strip()):
            raise ValueError(f"initstate must be a bit string, got {initstate!r}")
    else:
        bits = np.asarray(initstate, dtype=bool).reshape(-1)
    n = len(bits)
    if n == 0:
        raise ValueError("initstate must hold at least one qubit")
    t = Tableau.zeros(n, w)
    q = np.arange(n)
    one = t.dtype.type(1)
    shifts = (q % w).astype(t.dtype)
    t.view("X")[q, 0, q // w] = one << shifts
    t.view("Z")[q, 1, q // w] = one << shifts
    packed = bitplane.pack_bits(bits, w)
    t.S[: t.k] = packed
    t.S[t.k:] = packed
    return t


def get_generator(t: Tableau, g: int) -> PauliString:
    half, local = t._split(g)
    if t.layout is Layout.COLUMN_MAJOR:
        shift = t.dtype.type(local % t.w)
        bits = [(t.view(p)[: t.n, half, local // t.w] >> shift) & 1 for p in "XZ"]
    else:
        bits = [bitplane.unpack_bits(t.view(p)[local, half], t.n) for p in "XZ"]
    return PauliString.from_bits(t.sign(g), bits[0], bits[1])


def dump(t: Tableau) -> str:
    """One signed Pauli string per line, destabilizers first."""
    X, Z, S = t.to_bool()
    return "\n".join(str(PauliString.from_bits(s, x, z)) for x, z, s in zip(X, Z, S))


def transpose_in_place(t: Tableau, threads: int | None = None) -> Tableau:
    """Flip the layout by tile-wise bit transposes followed by tile swaps.

    Stage 1 bit-transposes every w×w tile of each plane; stage 2 swaps tile
    ``(y, x)`` with ``(x, y)`` separately in the destabilizer and stabilizer
    halves.  The sign vector is untouched.  The operation is an involution.
    """
    threads = resolve_threads(threads)
    k, w = t.k, t.w
    for plane in (t.X, t.Z):
        tiles = plane.reshape(k, w, 2 * k)
        # Stage 1, chunked over tile rows so temporaries stay small.
        rows_per_chunk = max(1, (1 << 18) // (w * 2 * k))
        def shuffle(a, b, tiles=tiles):
            for s in range(a, b, rows_per_chunk):
                bitplane.shuffle_tiles(tiles[s: min(b, s + rows_per_chunk)], w)
        run_ranges(shuffle, k, threads)
        # Stage 2: SwapTiles, one tile row at a time.
        grid = plane.reshape(k, w, 2, k)
        for y in range(k - 1):
            upper = grid[y, :, :, y + 1:].copy()
            grid[y, :, :, y + 1:] = grid[y + 1:, :, :, y].transpose(1, 2, 0)
            grid[y + 1:, :, :, y] = upper.transpose(2, 0, 1)
    t.layout = Layout.ROW_MAJOR if t.layout is Layout.COLUMN_MAJOR else Layout.COLUMN_MAJOR
    return t


def symplectic_products(t: Tableau) -> np.ndarray:
    """(2n, 2n) matrix of commutation bits: 1 where two generators anti-commute."""
    X, Z, _ = t.to_bool()
    Xf, Zf = X.astype(np.float32), Z.astype(np.float32)
    counts = Xf @ Zf.T + Zf @ Xf.T
    return (counts.astype(np.int64) & 1).astype(bool)


def check_group_validity(t: Tableau) -> ValidityReport:
    """Destabilizers and stabilizers commute among themselves; D_i anti-commutes only with S_i."""
    n = t.n
    prod = symplectic_products(t)
    expected = np.zeros((2 * n, 2 * n), dtype=bool)
    idx = np.arange(n)
    expected[idx, n + idx] = expected[n + idx, idx] = True
    bad = np.argwhere(prod != expected)
    if len(bad):
        a, b = (int(v) for v in bad[0])
        name = lambda g: f"destabilizer {g}" if g < n else f"stabilizer {g - n}"
        relation = "anti-commute" if prod[a, b] else "commute"
        return ValidityReport(False, f"{name(a)} and {name(b)} {relation} unexpectedly")
    X, Z, S = t.to_bool()
    # Padding must stay clear.
    for plane in "XZ":
        full = bitplane.unpack_bits(t.view(plane), t.n_pad)
        if full[n:].any() or full[..., n:].any():
            return ValidityReport(False, f"padding bits set in the {plane} plane")
    if bitplane.unpack_bits(t.S.reshape(2, t.k), t.n_pad)[:, n:].any():
        return ValidityReport(False, "padding bits set in the sign vector")
    return ValidityReport(True)
