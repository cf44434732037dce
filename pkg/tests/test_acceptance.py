"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (lines go straight to the
terminal) or ``python tests/test_acceptance.py`` for just the summary.
"""

import math
import os
import sys
import time

import numpy as np
import pytest

from aicodec.encode import encode_dense, encode_stream
from aicodec.experiments import (
    SigmaConfig,
    config_from_dict,
    run_exp1,
    run_exp2,
    run_exp3,
    verify_sigma_floor,
)
from aicodec.linalg import apply_D_r
from aicodec.quantize import MidriseAlphabet, sd_greedy
from aicodec.decode import solve_ball_l1

sys.path.insert(0, os.path.dirname(__file__))
from oracles import homotopy_bpdn, random_sparse_instance  # noqa: E402

THREADS = max(1, min(8, os.cpu_count() or 1))

EXP1 = dict(
    N=400, L=120, trials=10, sweep={"m_min": 150, "m_max": 1000, "count": 8},
    quantizer={"scheme": "sigma_delta", "r": 2, "delta": 0.1, "K": 20},
    signal={"kind": "sparse", "k": 5},
)


@pytest.fixture
def report(capsys):
    """Print one summary line straight to the terminal, bypassing output capture."""

    def emit(n, ok, detail, seconds):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail} [{seconds:.1f} s]"
        with capsys.disabled():
            print("\n" + line, flush=True)

    return emit


@pytest.fixture(scope="module")
def exp1_result():
    t0 = time.perf_counter()
    res = run_exp1(config_from_dict(EXP1), threads=THREADS)
    return res, time.perf_counter() - t0


def test_criterion_1_quantizer_identity(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_identity = 0.0
    stability_checked = stability_broken = 0
    for _ in range(1000):
        r = int(rng.integers(1, 5))
        m = int(rng.integers(1, 200))
        delta = float(rng.uniform(0.01, 1.0))
        beta = float(rng.uniform(0.0, 2.0))
        if rng.random() < 0.7:
            K = 2 * math.ceil(beta / delta) + 2**r + 1
        else:
            K = int(rng.integers(1, 2 * math.ceil(beta / delta) + 2**r + 1))
        y = rng.uniform(-beta, beta, m)
        run = sd_greedy(y, MidriseAlphabet(K, delta), r)
        scale = max(np.abs(y).max(), np.abs(run.u).max(), 1e-300)
        worst_identity = max(worst_identity, np.abs(apply_D_r(run.u, r) - (y - run.q)).max() / scale)
        if K >= 2 * math.ceil(beta / delta) + 2**r + 1:
            stability_checked += 1
            stability_broken += np.abs(run.u).max() > delta / 2 * (1 + 1e-12)
    ok = worst_identity <= 1e-10 and stability_broken == 0
    report(1, ok, f"max relative identity error {worst_identity:.2e}; "
           f"stability violated on {stability_broken}/{stability_checked} covered instances",
           time.perf_counter() - t0)
    assert ok


def _exact_codeword(B, n, r):
    """``B D^-r n`` in Python integers (``n`` in half-step lattice units)."""
    v = [int(a) for a in n]
    for _ in range(r):
        acc, out = 0, []
        for a in v:
            acc += a
            out.append(acc)
        v = out
    return [sum(int(b) * a for b, a in zip(row, v)) for row in B]


def test_criterion_2_encoder_equivalence(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    lattice_ok = True
    for _ in range(500):
        m = int(rng.integers(1, 257))
        r = int(rng.integers(1, 5))
        L = int(rng.integers(1, 9))
        K = int(rng.integers(1, 30))
        delta = float(rng.uniform(0.01, 1.0))
        a = MidriseAlphabet(K, delta)
        B = rng.choice([-1.0, 1.0], (L, m))
        q = rng.choice(a.levels, m)
        dense = encode_dense(B, q, r, a)
        stream = encode_stream(B, q, r, a)
        scale = max(1.0, float(np.abs(dense.values).max()))
        worst = max(worst, float(np.abs(dense.values - stream.values).max()) / scale)
        exact = _exact_codeword(B, a.lattice_index(q), r)
        lattice_ok &= [int(c) for c in dense.lattice_ints] == exact
        lattice_ok &= [int(c) for c in stream.lattice_ints] == exact
        lattice_ok &= bool(np.all(dense.values == np.array(exact, dtype=float) * (delta / 2)))
    ok = worst <= 1e-10 and lattice_ok
    report(2, ok, f"max relative stream/dense gap {worst:.2e}; exact lattice integers {lattice_ok}",
           time.perf_counter() - t0)
    assert ok


def test_criterion_3_solver_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    unconverged = 0
    for _ in range(100):
        L = int(rng.integers(2, 9))
        N = int(rng.integers(L + 1, 13))
        A, b, _ = random_sparse_instance(rng, L, N, k=int(rng.integers(1, 3)))
        tau = float(rng.uniform(0.05, 0.95)) * float(np.linalg.norm(b))
        res = solve_ball_l1(A, b, tau)
        _, obj = homotopy_bpdn(A, b, tau)
        worst = max(worst, abs(res.objective - obj))
        unconverged += not res.converged
    ok = worst <= 1e-4 and unconverged == 0
    report(3, ok, f"max objective gap {worst:.2e} over 100 instances; unconverged {unconverged}",
           time.perf_counter() - t0)
    assert ok


def test_criterion_4_singular_value_floor(report):
    t0 = time.perf_counter()
    reports = verify_sigma_floor(SigmaConfig(m=512, L=64, r=(1, 2), seeds=20, seed=0))
    ok = all(rep.successes >= 19 for rep in reports)
    detail = "; ".join(
        f"r={rep.r}: floor {rep.floor:.2f}, observed sigma in [{min(rep.sigmas):.2f}, "
        f"{max(rep.sigmas):.2f}], {rep.successes}/20 above"
        for rep in reports
    )
    report(4, ok, detail, time.perf_counter() - t0)
    assert ok


def test_criterion_5_experiment1(exp1_result, report):
    res, seconds = exp1_result
    target = (2 / 2 - 3 / 4) * math.log10(2) / 120
    slope = res.fit.slope if res.fit else float("nan")
    ok = (
        res.fit is not None
        and slope < 0
        and 0.5 * target <= abs(slope) <= 2.0 * target
        and not res.flagged_points()
        and seconds < 15 * 60
    )
    report(5, ok, f"slope {slope:.4e} vs target -{target:.4e} (ratio {abs(slope) / target:.2f}, "
           f"band [0.5, 2])", seconds)
    assert ok


def test_criterion_6_experiment2(report):
    t0 = time.perf_counter()
    cfg = config_from_dict(dict(
        N=400, L=None, L_policy="wlp_formula", c_rip=2.0, trials=10,
        sweep={"m_min": 125, "m_max": 1584, "count": 6},
        quantizer={"scheme": "sigma_delta", "r": 2, "delta": 0.1, "K": 20},
        signal={"kind": "wlp", "p": 1 / 3},
    ))
    res = run_exp2(cfg, threads=THREADS)
    seconds = time.perf_counter() - t0
    slope = res.fit.slope if res.fit else float("nan")
    ok = (
        res.fit is not None
        and abs(abs(slope) - 2.5) <= 0.4 * 2.5
        and not res.flagged_points()
        and seconds < 20 * 60
    )
    Ls = [p.L for p in res.points]
    report(6, ok, f"log-log slope {slope:.3f} vs -2.5 (tolerance 40%), L from {Ls[0]} to {Ls[-1]}",
           seconds)
    assert ok


def test_criterion_7_experiment3(report):
    t0 = time.perf_counter()
    cfg = config_from_dict(dict(EXP1, trials=20, aggregation="max",
                                noise={"dist": "uniform", "epsilon": 0.05}))
    res = run_exp3(cfg, threads=THREADS)
    seconds = time.perf_counter() - t0
    tail = [p.distortion_max for p in res.points[-3:]]
    clean = [p.distortion_max for p in res.reference[-3:]]
    steps = [abs(b - a) / a for a, b in zip(tail, tail[1:])]
    ok = (
        max(steps) < 0.10
        and all(t > c for t, c in zip(tail, clean))
        and not res.flagged_points()
        and seconds < 15 * 60
    )
    report(7, ok, "noisy max error at three largest m "
           + ", ".join(f"{v:.4f}" for v in tail)
           + f" (largest step {max(steps):.1%}); noise-free "
           + ", ".join(f"{v:.4f}" for v in clean), seconds)
    assert ok


def test_criterion_8_comparator(exp1_result, report):
    sd_res, sd_seconds = exp1_result
    t0 = time.perf_counter()
    cfg = config_from_dict(dict(EXP1, quantizer={"scheme": "msq", "delta": 0.1, "K": 20}))
    msq_res = run_exp1(cfg, threads=THREADS)
    seconds = time.perf_counter() - t0 + sd_seconds
    msq_d = [p.distortion_mean for p in msq_res.points]
    sd_d = [p.distortion_mean for p in sd_res.points]
    mid = len(msq_d) // 2
    flat = msq_d[-1] >= 0.5 * msq_d[mid]
    decay = sd_d[0] / sd_d[-1]
    ok = flat and decay >= 2.0 and not msq_res.flagged_points() and seconds < 15 * 60
    report(8, ok, f"MSQ largest/mid distortion {msq_d[-1]:.4f}/{msq_d[mid]:.4f}; "
           f"sigma-delta r=2 decreases {decay:.2f}x ({sd_d[0]:.4f} -> {sd_d[-1]:.4f})", seconds)
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
