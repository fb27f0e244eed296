"""Word-level data-parallel primitives on packed bit planes.

All routines work on numpy arrays of unsigned words.  Bit ``b`` of word ``j``
stands for logical index ``j*w + b`` (LSB first).  The blocked variants follow
the three-pass structure used by the measurement pipeline: per-block work,
a scan over block totals, then a merge.  They are exact, so every block size
gives the same answer as the sequential fold.
"""

from __future__ import annotations

import numpy as np

WORD_DTYPES = {8: np.uint8, 16: np.uint16, 32: np.uint32, 64: np.uint64}

_MASKS_64 = (
    0x5555555555555555,
    0x3333333333333333,
    0x0F0F0F0F0F0F0F0F,
    0x00FF00FF00FF00FF,
    0x0000FFFF0000FFFF,
    0x00000000FFFFFFFF,
)


def word_dtype(w: int) -> np.dtype:
    try:
        return np.dtype(WORD_DTYPES[w])
    except KeyError:
        raise ValueError(f"word size must be one of {sorted(WORD_DTYPES)}, got {w}") from None


def shuffle_masks(w: int) -> list[int]:
    """The log2(w) group-swap masks, truncated from the 64-bit table."""
    word_dtype(w)
    levels = w.bit_length() - 1
    return [m & ((1 << w) - 1) for m in _MASKS_64[:levels]]


def words_for(bits: int, w: int) -> int:
    return -(-bits // w)


# ----------------------------------------------------------------- exclusive scan


def scan_blocks(values: np.ndarray, block_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Pass 1: block-local exclusive XOR prefixes and per-block totals (axis 0)."""
    values = np.asarray(values)
    count = values.shape[0]
    nblocks = words_for(count, block_size) if count else 0
    padded = np.zeros((nblocks * block_size,) + values.shape[1:], dtype=values.dtype)
    padded[:count] = values
    blocks = padded.reshape((nblocks, block_size) + values.shape[1:])
    inclusive = np.bitwise_xor.accumulate(blocks, axis=1)
    local = np.zeros_like(blocks)
    local[:, 1:] = inclusive[:, :-1]
    totals = inclusive[:, -1] if nblocks else np.zeros((0,) + values.shape[1:], values.dtype)
    return local.reshape(padded.shape)[:count], totals


def exclusive_scan_xor(values, block_size: int | None = None):
    """Exclusive XOR scan along axis 0.

    Returns ``(prefixes, total)`` with ``prefixes[i] = values[0] ^ ... ^ values[i-1]``.
    With ``block_size`` the scan runs as Pass 1 (per-block scans), Pass 2 (scan
    of block totals) and Pass 3 (merge).
    """
    values = np.asarray(values)
    if values.ndim == 0:
        raise ValueError("exclusive_scan_xor expects an array")
    zero = np.zeros(values.shape[1:], dtype=values.dtype)
    if values.shape[0] == 0:
        return values.copy(), zero[()]
    if block_size is None:
        inclusive = np.bitwise_xor.accumulate(values, axis=0)
        prefixes = np.empty_like(values)
        prefixes[0] = 0
        prefixes[1:] = inclusive[:-1]
        return prefixes, inclusive[-1][()]
    if block_size < 1:
        raise ValueError("block_size must be positive")
    local, totals = scan_blocks(values, block_size)
    block_prefix, total = exclusive_scan_xor(totals)
    block_of = np.arange(values.shape[0]) // block_size
    return local ^ block_prefix[block_of], total


# -------------------------------------------------------------------- reduction


def reduce_xor(values, axis: int = 0):
    """XOR of all entries along ``axis`` by pairwise halving (a binary tree)."""
    v = np.moveaxis(np.asarray(values), axis, 0)
    if v.shape[0] == 0:
        return np.zeros(v.shape[1:], dtype=v.dtype)[()]
    while v.shape[0] > 1:
        if v.shape[0] & 1:
            v = np.concatenate([v, np.zeros((1,) + v.shape[1:], dtype=v.dtype)])
        v = v[0::2] ^ v[1::2]
    return v[0][()]


# ------------------------------------------------------------------- compaction


def compact_select(values: np.ndarray, sentinel: int = -1, block_size: int | None = None) -> int:
    """Stable in-place compaction of non-sentinel entries; returns their count.

    Blocked form: each block counts its survivors, an exclusive scan of the
    counts gives every block its output offset, and survivors are scattered to
    ``offset + local rank``.
    """
    if sentinel >= 0:
        raise ValueError("sentinel must be negative")
    keep = values != sentinel
    if block_size is None:
        kept = values[keep]
    else:
        count = len(values)
        nblocks = words_for(count, block_size)
        padded = np.zeros(nblocks * block_size, dtype=bool)
        padded[:count] = keep
        per_block = padded.reshape(nblocks, block_size)
        counts = per_block.sum(axis=1)
        offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
        local_rank = np.cumsum(per_block, axis=1) - per_block
        dest = (offsets[:, None] + local_rank).reshape(-1)[:count][keep]
        kept = np.empty(int(counts.sum()), dtype=values.dtype)
        kept[dest] = values[keep]
    values[: len(kept)] = kept
    values[len(kept):] = sentinel
    return len(kept)


# ------------------------------------------------------------------- transpose


def shuffle_tiles(tiles: np.ndarray, w: int) -> None:
    """Bit-transpose, in place, every w×w tile ``tiles[b, :, c]`` of a (B, w, C) array.

    Round ``l`` swaps 2^l-bit groups between rows ``r`` and ``r + 2^l``.
    """
    dt = word_dtype(w)
    if tiles.ndim != 3 or tiles.shape[1] != w or tiles.dtype != dt:
        raise ValueError(f"expected a (B, {w}, C) array of {dt}")
    B, _, C = tiles.shape
    for level, mask in enumerate(shuffle_masks(w)):
        off = 1 << level
        m, s = dt.type(mask), dt.type(off)
        pairs = tiles.reshape(B, w // (2 * off), 2, off, C)
        x = pairs[:, :, 0]
        y = pairs[:, :, 1]
        upper = (x & m) | ((y & m) << s)
        lower = ((x >> s) & m) | (y & ~m)
        x[...] = upper
        y[...] = lower


def bit_transpose_tile(tile) -> np.ndarray:
    """Transpose one w×w bit tile given as w words: out bit (r, c) = in bit (c, r)."""
    tile = np.asarray(tile)
    w = tile.dtype.itemsize * 8
    if tile.shape != (w,):
        raise ValueError(f"a tile of {tile.dtype} words must hold exactly {w} words")
    out = tile.copy().reshape(1, w, 1)
    shuffle_tiles(out, w)
    return out.reshape(w)


# ------------------------------------------------------------------- bit helpers


def pack_bits(bits: np.ndarray, w: int) -> np.ndarray:
    """Pack booleans along the last axis into LSB-first words (zero padded)."""
    bits = np.asarray(bits, dtype=bool)
    nwords = words_for(bits.shape[-1], w)
    padded = np.zeros(bits.shape[:-1] + (nwords * w,), dtype=bool)
    padded[..., : bits.shape[-1]] = bits
    as_bytes = np.packbits(padded, axis=-1, bitorder="little")
    return np.ascontiguousarray(as_bytes).view(np.dtype(word_dtype(w)).newbyteorder("<")).astype(word_dtype(w))


def unpack_bits(words: np.ndarray, count: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`, returning ``count`` booleans per row."""
    words = np.ascontiguousarray(words)
    as_bytes = words.astype(words.dtype.newbyteorder("<")).view(np.uint8)
    return np.unpackbits(as_bytes, axis=-1, bitorder="little", count=count).astype(bool)
