"""Command-line driver: run, sample, gen, verify, bench.

Reports are line-oriented ``key=value`` on stdout.  ``--json PATH`` also
writes the same report as JSON.  Exit codes are 0 for success, 1 for a
verification failure, 2 for bad input and 3 for resource exhaustion.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import zlib
from collections import Counter

import numpy as np

from .circuit import Circuit, GateKind, QasmError, emit_qasm, generate_random, parse_qasm
from ._parallel import resolve_threads
from .engine import simulate
from .oracle import ScalarTableau, reference_run, sv_distribution
from .sampler import sample

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3
PHASES = ("TO", "T", "CMP", "GE")


class InputError(Exception):
    pass


def _load(path: str) -> Circuit:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_qasm(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _report(out, report: dict, json_path: str | None = None) -> None:
    for key, value in report.items():
        if isinstance(value, float):
            value = f"{value:.6f}"
        print(f"{key}={value}", file=out)
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)


def _phase_report(timings: dict, wall: float) -> dict:
    return {f"time_{p}": float(timings.get(p, 0.0)) for p in PHASES} | {"time_total": wall}


def _counts(circuit: Circuit) -> dict:
    m = int((circuit.kinds == GateKind.MEASURE).sum())
    return {"qubits": circuit.num_qubits, "gates": len(circuit) - m, "measurements": m}


# ---------------------------------------------------------------- commands


def cmd_run(args, out) -> int:
    circuit = _load(args.qasm)
    res = simulate(circuit, args.seed, w=args.word_size, threads=args.threads)
    text = res.outcome_string()
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text + "\n" if text else "")
    report = _counts(circuit) | {
        "seed": args.seed, "windows": res.windows, "outcomes": text,
        "deterministic": int(res.deterministic.sum()),
    } | _phase_report(res.timings, res.wall_time)
    _report(out, report, args.json)
    return EXIT_OK


def cmd_sample(args, out) -> int:
    circuit = _load(args.qasm)
    if args.shots < 1:
        raise InputError("--shots must be at least 1")
    res = sample(circuit, args.shots, args.seed, w=args.word_size, threads=args.threads)
    if args.out:
        mode = "w" if args.format == "text" else "wb"
        with open(args.out, mode) as fh:
            res.record.write(fh, args.format)
    elif args.format == "text":
        sys.stdout.write(res.record.to_text())
    else:
        sys.stdout.buffer.write(res.record.to_binary())
    bits = res.record.bits()
    report = _counts(circuit) | {
        "seed": args.seed, "shots": args.shots, "format": args.format,
        "ones_fraction": float(bits.mean()) if bits.size else 0.0,
        "time_reference": res.timings["reference"], "time_frames": res.timings["frames"],
        "time_total": res.wall_time,
    }
    _report(sys.stderr if not args.out else out, report, args.json)
    return EXIT_OK


def cmd_gen(args, out) -> int:
    if args.n < 1 or args.depth < 0 or not 0.0 <= args.measure_prob <= 1.0:
        raise InputError("need n >= 1, depth >= 0 and 0 <= measure-prob <= 1")
    text = emit_qasm(generate_random(args.n, args.depth, args.seed, args.measure_prob))
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def _chi_square_p(counts: Counter, dist: dict, shots: int) -> float:
    from scipy.stats import chisquare

    keys = sorted(dist)
    if len(keys) < 2:
        return 1.0
    observed = np.array([counts.get(k, 0) for k in keys], dtype=float)
    expected = np.array([dist[k] for k in keys]) * shots
    return float(chisquare(observed, expected * observed.sum() / expected.sum()).pvalue)


def verify_circuit(circuit: Circuit, seed: int, *, w: int = 64, threads=None, shots: int = 4096,
                   inject_fault: bool = False) -> dict:
    """Differential and statistical checks for one circuit; returns named booleans."""
    res = simulate(circuit, seed, w=w, threads=threads)
    engine = ScalarTableau.from_tableau(res.tableau)
    if inject_fault:
        engine.S[0] ^= True
    ref, outcomes, deterministic = reference_run(circuit, seed)
    checks = {"tableau": engine == ref,
              "record": bool(np.array_equal(outcomes, res.outcomes)
                             and np.array_equal(deterministic, res.deterministic))}
    m = len(outcomes)
    if circuit.num_qubits <= 10 and 0 < m <= 12:
        dist = sv_distribution(circuit)
        smp = sample(circuit, shots, seed, w=w, threads=threads).record.bits()
        counts = Counter(map(tuple, smp.tolist()))
        checks["support"] = set(counts) <= set(dist)
        checks["chi2"] = _chi_square_p(counts, dist, shots) > 1e-3
    return checks


def cmd_verify(args, out) -> int:
    if args.trials == 0:
        print("warning: trials=0, nothing verified", file=sys.stderr)
        _report(out, {"trials": 0, "failures": 0, "status": "pass"})
        return EXIT_OK
    lo_n, hi_n = args.n_range
    lo_d, hi_d = args.depth_range
    if not (1 <= lo_n <= hi_n and 0 <= lo_d <= hi_d):
        raise InputError("bad --n-range or --depth-range")
    rng = np.random.default_rng(args.seed)
    failures = 0
    print(f"{'trial':>5} {'n':>4} {'depth':>5} checks", file=out)
    for trial in range(args.trials):
        n = int(rng.integers(lo_n, hi_n + 1))
        depth = int(rng.integers(lo_d, hi_d + 1))
        circuit = generate_random(n, depth, args.seed + trial, args.measure_prob)
        checks = verify_circuit(circuit, args.seed + trial, w=args.word_size, threads=args.threads,
                                shots=args.shots, inject_fault=args.inject_fault)
        ok = all(checks.values())
        failures += not ok
        cells = " ".join(f"{k}:{'pass' if v else 'FAIL'}" for k, v in checks.items())
        print(f"{trial:>5} {n:>4} {depth:>5} {cells}", file=out)
    _report(out, {"trials": args.trials, "failures": failures, "status": "fail" if failures else "pass"})
    return EXIT_FAIL if failures else EXIT_OK


def cmd_bench(args, out) -> int:
    if args.qasm:
        circuit = _load(args.qasm)
    else:
        circuit = generate_random(args.n, args.depth, args.gen_seed, args.measure_prob)
    if args.repetitions < 1:
        raise InputError("--repetitions must be at least 1")
    rows = []
    print(f"{'rep':>6} " + " ".join(f"{p:>9}" for p in PHASES) + f" {'total':>9} outcomes", file=out)
    for rep in range(args.repetitions):
        start = time.perf_counter()
        res = simulate(circuit, args.seed, w=args.word_size, threads=args.threads)
        wall = time.perf_counter() - start
        row = [float(res.timings.get(p, 0.0)) for p in PHASES] + [wall]
        rows.append(row)
        digest = f"{zlib.crc32(res.outcomes.tobytes()):08x}"
        print(f"{rep:>6} " + " ".join(f"{v:9.4f}" for v in row) + f" {digest}", file=out)
    med = np.median(np.array(rows), axis=0)
    print(f"{'median':>6} " + " ".join(f"{v:9.4f}" for v in med), file=out)
    report = _counts(circuit) | {"repetitions": args.repetitions, "threads": resolve_threads(args.threads)}
    report |= {f"median_{p}": float(v) for p, v in zip(PHASES + ("total",), med)}
    _report(out, report, args.json)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasar", description="Bit-packed stabilizer circuit simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, shots=False):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--word-size", type=int, default=64, choices=(8, 16, 32, 64))
        p.add_argument("--threads", type=int, default=None, help="default: $QUASAR_THREADS or 1")
        p.add_argument("--json", metavar="PATH", help="also write the report as JSON")
        if shots:
            p.add_argument("--shots", type=int, default=1024)

    p = sub.add_parser("run", help="single-shot simulation")
    p.add_argument("qasm")
    p.add_argument("--out", help="write the outcome bits here")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sample", help="many-shot Pauli-frame sampling")
    p.add_argument("qasm")
    p.add_argument("--out", help="write the shot record here (default stdout)")
    p.add_argument("--format", choices=("text", "binary"), default="text")
    common(p, shots=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("gen", help="emit a random Clifford circuit as QASM")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--measure-prob", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="differential and statistical checks against the oracles")
    p.add_argument("--n-range", type=int, nargs=2, default=(2, 8), metavar=("LO", "HI"))
    p.add_argument("--depth-range", type=int, nargs=2, default=(5, 30), metavar=("LO", "HI"))
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--measure-prob", type=float, default=0.5)
    p.add_argument("--inject-fault", action="store_true", help="flip one engine sign bit (mutation smoke)")
    common(p, shots=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="TO/T/CMP/GE timing decomposition")
    p.add_argument("qasm", nargs="?")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--depth", type=int, default=100)
    p.add_argument("--measure-prob", type=float, default=0.1)
    p.add_argument("--gen-seed", type=int, default=0)
    p.add_argument("--repetitions", type=int, default=3)
    common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (QasmError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MemoryError:
        print("error: out of memory", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
