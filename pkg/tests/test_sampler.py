import io
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from quasar.circuit import Circuit, GateKind, generate_random
from quasar.gates import apply_gate_rule
from quasar.oracle import sv_distribution
from quasar.sampler import (FrameTableau, ShotRecord, apply_window_frames, init_frames, measure_sample, sample,
                            sample_frames)
from quasar.scheduler import Mode, Window, schedule_windows

K = GateKind


def circ(n, *gates):
    return Circuit.from_gates(n, [(g[0], g[1:]) for g in gates])


def scalar_propagate(circuit, x, z):
    """Per-shot frame oracle: push one (x, z) mask through the unitary gates."""
    x, z = x.copy(), z.copy()
    for g in circuit.gates:
        qs = list(g.qubits)
        nx, nz, _ = apply_gate_rule(g.kind, tuple(bool(x[q]) for q in qs), tuple(bool(z[q]) for q in qs))
        for q, a, b in zip(qs, nx, nz):
            x[q], z[q] = a, b
    return x, z


class TestFrames:
    def test_init(self):
        f = init_frames(5, 100, 7, w=32)
        assert f.kf == 4 and not f.Xf.any()
        assert np.array_equal(f.Zf, init_frames(5, 100, 7, w=32).Zf)
        assert not (f.Zf[:, -1] >> np.uint32(4)).any()  # shots 100..127 are padding

    def test_density(self):
        bits = init_frames(16, 65536, 3).shot_bits("Z")
        assert abs(bits.mean() - 0.5) < 3 * 0.5 / np.sqrt(bits.size)

    def test_bad_shots(self):
        with pytest.raises(ValueError):
            init_frames(2, 0, 0)

    def test_zero_frames_stay_zero(self):
        c = generate_random(10, 20, 1)
        f = init_frames(10, 64, 0)
        f.Zf[:] = 0
        for win in schedule_windows(c, Mode.SAMPLING).windows:
            apply_window_frames(f, win)
        assert not f.Xf.any() and not f.Zf.any()

    def test_h_swaps(self):
        f = init_frames(2, 128, 1)
        f.Xf[0] = np.arange(2, dtype=np.uint64)
        x0, z0 = f.Xf[0].copy(), f.Zf[0].copy()
        (win,) = schedule_windows(circ(2, (K.H, 0))).windows
        apply_window_frames(f, win)
        assert np.array_equal(f.Xf[0], z0) and np.array_equal(f.Zf[0], x0)

    def test_matches_scalar_oracle(self, rng):
        c = generate_random(7, 15, 5)
        f = init_frames(7, 70, 2, w=8)
        f.Xf[:] = rng.integers(0, 256, f.Xf.shape, dtype=np.uint8)
        f.Xf[:, -1] &= np.uint8(0x3F)
        X0, Z0 = f.shot_bits("X"), f.shot_bits("Z")
        for win in schedule_windows(c, Mode.SAMPLING).windows:
            apply_window_frames(f, win, partition=2)
        X1, Z1 = f.shot_bits("X"), f.shot_bits("Z")
        for shot in range(70):
            x, z = scalar_propagate(c, X0[:, shot], Z0[:, shot])
            assert np.array_equal(x, X1[:, shot]) and np.array_equal(z, Z1[:, shot])

    def test_measure_sample(self):
        f = init_frames(3, 64, 0)
        f.Xf[1] = 5
        c = circ(3, (K.MEASURE, 1), (K.MEASURE, 2))
        win = Window.from_circuit(c, [0, 1])
        rec = ShotRecord.empty(c.measured_qubits, 64)
        z_before = f.Zf.copy()
        measure_sample(f, win, rec, [0, 1], seed=0, epoch=1)
        assert rec.words[:, 0].tolist() == [5, 0]
        assert np.array_equal(f.Zf[0], z_before[0])
        assert not np.array_equal(f.Zf[1], z_before[1])

    def test_measure_twice_rejected(self):
        c = circ(2, (K.MEASURE, 1), (K.MEASURE, 1))
        f = init_frames(2, 8, 0)
        with pytest.raises(ValueError):
            measure_sample(f, Window.from_circuit(c, [0, 1]), ShotRecord.empty([1, 1], 8), [0, 1], 0, 1)

    def test_bell_flips_agree(self):
        c = circ(2, (K.H, 0), (K.CX, 0, 1), (K.MEASURE, 0), (K.MEASURE, 1))
        flips, _ = sample_frames(c, 256, 3)
        assert np.array_equal(flips.words[0], flips.words[1])
        assert flips.words[0].any()


class TestSample:
    def test_identity_all_zero(self):
        c = circ(4, *[(K.MEASURE, q) for q in range(4)])
        assert not sample(c, 300, 1).record.bits().any()

    def test_plus_fraction(self):
        c = circ(1, (K.H, 0), (K.MEASURE, 0))
        assert 0.49 <= sample(c, 20000, 4).record.bits().mean() <= 0.51

    def test_x_deterministic(self):
        c = circ(2, (K.X, 1), (K.MEASURE, 0), (K.MEASURE, 1))
        bits = sample(c, 100, 0).record.bits()
        assert (bits[:, 0] == 0).all() and (bits[:, 1] == 1).all()

    def test_shot_prefix_stable(self):
        c = generate_random(6, 10, 2, 0.5)
        a, b = sample(c, 128, 9), sample(c, 64, 9)
        assert np.array_equal(a.record.bits()[:64], b.record.bits())

    def test_deterministic_in_seed(self):
        c = generate_random(6, 10, 3, 0.5)
        assert sample(c, 100, 1).record == sample(c, 100, 1).record

    def test_threads_identical(self):
        c = generate_random(40, 20, 3, 0.5)
        assert sample(c, 500, 1, threads=1).record == sample(c, 500, 1, threads=4).record

    @pytest.mark.parametrize("seed", range(6))
    def test_distribution(self, seed):
        c = generate_random(2 + seed, 12, seed, 0.6)
        dist = sv_distribution(c)
        bits = sample(c, 8192, seed, w=[8, 16, 32, 64][seed % 4]).record.bits()
        counts = Counter(map(tuple, bits.tolist()))
        assert set(counts) <= set(dist)
        keys = sorted(dist)
        if len(keys) > 1:
            p = chisquare([counts.get(k, 0) for k in keys], [dist[k] * 8192 for k in keys]).pvalue
            assert p > 1e-3


class TestShotRecord:
    def setup_method(self):
        self.rec = ShotRecord.from_bits(np.array([[1, 0], [0, 0], [1, 1]]), [4, 2], w=8)

    def test_bits(self):
        assert self.rec.words.tolist() == [[5], [4]]
        assert self.rec.bits().tolist() == [[1, 0], [0, 0], [1, 1]]

    def test_text(self):
        assert self.rec.to_text() == "10\n00\n11\n"
        assert ShotRecord.from_text(self.rec.to_text(), [4, 2], 8) == self.rec

    def test_binary(self):
        data = self.rec.to_binary()
        assert data == bytes([5, 4])
        assert ShotRecord.from_binary(data, [4, 2], 3, 8) == self.rec

    def test_binary_little_endian(self):
        rec = ShotRecord.from_bits(np.eye(16, 1, dtype=bool), [0], w=16)
        assert rec.to_binary() == b"\x01\x00"

    def test_write(self):
        buf = io.BytesIO()
        self.rec.write(buf, "binary")
        assert buf.getvalue() == bytes([5, 4])
        with pytest.raises(ValueError):
            self.rec.write(buf, "csv")

    def test_no_measurements(self):
        rec = sample(circ(2, (K.H, 0)), 3, 0).record
        assert rec.bits().shape == (3, 0) and rec.to_text() == "\n\n\n"
