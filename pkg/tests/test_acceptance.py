"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the verdict lines are also
collected in the terminal summary).
"""

import math
import threading
import time

import numpy as np
import pytest

from conftest import record
from rdipe.distributions import (bell_distribution, cdf_exact, epsilon2_sweep, loglog_slopes, pauli_distribution,
                                 performance_bound, plan_from_eps, sample_size_plan, tv_distance)
from rdipe.noise import Channel, apply_channel, calibrate, mix_delta, robustness_experiment, robustness_pair
from rdipe.protocol import ProtocolConfig, connect, run_session, serve, simulate_rdipe
from rdipe.rng import derive_seed
from rdipe.states import DenseState, cosine_oracle, make_family, make_w_state, random_cw
from rdipe.verify import (commutant_check, counting_bound, count_high_paulis, entanglement_scaling, lemma_suite,
                          swap_half_traces, twirl_check, w_table_check)

pytestmark = pytest.mark.acceptance


def test_criterion_01_real_state_identity():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(50):
        s = DenseState.random_pure(2 + i % 5, rng, real=True)
        worst = max(worst, tv_distance(pauli_distribution(s), bell_distribution(s)))
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and dt < 60
    record(1, ok, f"max TV(p, q) = {worst:.2e} over 50 real pure states, n = 2..6 ({dt:.1f} s)")
    assert ok


def test_criterion_02_w_table():
    reps = [w_table_check(n) for n in (3, 4, 5, 6)]
    worst = max(r["max_error"] for r in reps)
    ok = all(r["passed"] for r in reps)
    record(2, ok, f"max |<P_a> - closed form| = {worst:.2e} over all 4^n labels, n = 3..6")
    assert ok


def test_criterion_03_cdf_vanishing():
    worst = 0.0
    for n in (4, 6, 8, 10):
        states = [make_w_state(n)] + [random_cw(n, np.random.default_rng([303, n, j])) for j in range(5)]
        for s in states:
            grid = np.linspace(0, 4 / n**2, 400, endpoint=False)
            worst = max(worst, float(np.max(cdf_exact(s, grid))))
            worst = max(worst, float(cdf_exact(s, 4 / n**2 * (1 - 1e-9))))
    ok = worst == 0.0
    record(3, ok, f"max F(eps) for eps < 4/n^2 = {worst} (W and 5 random CW states each, n = 4, 6, 8, 10)")
    assert ok


def _success_count(a, b, n, runs, tag):
    N1, N2 = sample_size_plan(n, 0.1, 3)
    c = cosine_oracle(a, b)
    errs = np.array([abs(simulate_rdipe(a, b, ProtocolConfig(n=n, N1=N1, N2=N2, seed=derive_seed(404, tag, r))).f - c)
                     for r in range(runs)])
    return int((errs <= 0.1).sum()), float(errs.max()), c


def test_criterion_04_protocol_accuracy():
    s = random_cw(8, np.random.default_rng(404))
    good8, max8, _ = _success_count(s, s, 8, 100, 8)
    parts = [f"n=8 identical CW: {good8}/100 (max err {max8:.3f})"]
    ok = good8 >= 95
    for n in (4, 5, 6):
        rho, sigma = robustness_pair("w", n, 404)
        good, mx, c = _success_count(rho, sigma, n, 100, n)
        ok &= good >= 95
        parts.append(f"n={n} CW pair c={c:.3f}: {good}/100 (max {mx:.3f})")
    rng = np.random.default_rng(405)
    a, b = DenseState.random_pure(4, rng), DenseState.random_pure(4, rng)
    good, mx, c = _success_count(a, b, 4, 100, 44)
    ok &= good >= 95
    parts.append(f"n=4 random real pair c={c:.3f}: {good}/100 (max {mx:.3f})")
    record(4, ok, "; ".join(parts))
    assert ok


def _binom_upper_tail(k: int, n: int, p: float) -> float:
    return sum(math.comb(n, j) * p**j * (1 - p) ** (n - j) for j in range(k, n + 1))


def test_criterion_05_error_bound_consistency():
    eps1, eps2, delta, runs = 0.05, 0.0025, 1.0, 200
    N1, N2 = plan_from_eps(eps1, eps2, delta)
    budget = performance_bound(eps1, eps2, N1, N2)
    rho, sigma = robustness_pair("w", 6, 505)
    cases = [("clean CW pair n=6", rho, sigma)]
    rho4, sigma4 = robustness_pair("w", 4, 506)
    ch, _ = calibrate(rho4, Channel("phase"), 0.1)
    cases.append(("phase-noisy pair n=4", apply_channel(rho4, ch), apply_channel(sigma4, ch)))
    ok = True
    parts = []
    for ci, (name, a, b) in enumerate(cases):
        n = a.n
        c = cosine_oracle(a, b)
        F = float((cdf_exact(a, eps2) + cdf_exact(b, eps2)) / 2)
        dtv = mix_delta(a, b)
        threshold = 4 * eps1 + 4 * math.sqrt(eps2) + 2 * F + 6 * dtv
        fs = [simulate_rdipe(a, b, ProtocolConfig(n=n, N1=N1, N2=N2, seed=derive_seed(505, ci, r))).f
              for r in range(runs)]
        k = int(np.sum(np.abs(np.array(fs) - c) > threshold))
        pval = _binom_upper_tail(k, runs, budget)
        ok &= pval >= 1e-3
        parts.append(f"{name}: {k}/{runs} above {threshold:.3f} (p-value {pval:.3g})")
    record(5, ok, f"budget {budget:.3f} at N1={N1}, N2={N2}; " + "; ".join(parts))
    assert ok


def test_criterion_06_lemmas():
    r = lemma_suite(1000, 5, 606)
    ok = r["passed"]
    record(6, ok, f"{r['tv_violations']} TV and {r['cdf_violations']} CDF violations in 1000 pairs "
                  f"(max ratio {r['max_tv_ratio']:.3f}, max CDF excess {r['max_cdf_excess']:.3g})")
    assert ok


def test_criterion_07_twirl_commutant():
    rng = np.random.default_rng(707)
    tw = [twirl_check(n, 20, rng) for n in (1, 2)]
    dev = max(max(r["max_deviation"], r["fixed_point_error"], r["kernel_error"]) for r in tw)
    cm = [commutant_check(n, 50, rng) for n in (1, 2, 3)]
    gram = max(r["gram_error"] for r in cm)
    sw = [swap_half_traces(n) for n in (2, 4)]
    ok = dev < 1e-8 and gram < 1e-10 and all(r["max_commutator"] < 1e-8 for r in cm) and all(r["passed"] for r in sw)
    traces = ", ".join(f"n={r['n']}: {r['tr_swap_psym']:.0f} = 2^{3 * r['n'] // 2}" for r in sw)
    record(7, ok, f"twirl deviation {dev:.1e}; Gram error {gram:.1e}; tr(SWAP P_sym) {traces}")
    assert ok


def test_criterion_08_entanglement_scaling():
    r = entanglement_scaling((4, 6, 8, 10, 12), 200, 808)
    fit = r["fit"]
    rows = "; ".join(f"n={x['n']}: S2={x['mean_entropy']:.3f}+-{x['entropy_stderr']:.3f} "
                     f"(pred {x['predicted_entropy']:.3f})" for x in r["rows"])
    ok = r["passed"]
    record(8, ok, f"slope {fit['slope']:.3f} bits/qubit, R^2 {fit['r2']:.4f}; {rows}")
    assert ok


def test_criterion_09_counting():
    parts, ok = [], True
    for n in (8, 12, 16):
        counts = [count_high_paulis(random_cw(n, np.random.default_rng([909, n, j])), 0.75) for j in range(3)]
        counts.append(count_high_paulis(make_w_state(n), 0.75))
        bound = 2 ** (3 * n / 4)
        ok &= max(counts) < bound and max(counts) <= counting_bound(n)
        parts.append(f"n={n}: max {max(counts)} < {bound:.0f} (binomial {counting_bound(n)})")
    record(9, ok, "; ".join(parts))
    assert ok


def test_criterion_10_robustness():
    rho, sigma = robustness_pair("w", 6, 1010)
    rep = robustness_experiment(rho, sigma, [0.02, 0.05, 0.1], Channel("phase"), runs=100, seed=1010)
    ok = rep["passed"]
    parts = [f"tau={r['tau']}: max err {r['max_error']:.4f} <= {r['bound']:.2f}, "
             f"Delta {r['delta_tv']:.4f} <= {r['delta_bound']:.2f}" for r in rep["rows"]]
    record(10, ok, "; ".join(parts))
    assert ok


def test_criterion_11_resource_scaling():
    ns = list(range(8, 65, 8))
    rows = epsilon2_sweep(lambda n, rng: make_family("dicke2", n, rng), ns, [0.1], 50000, None, 1111)
    inv = np.array([1 / r["epsilon2_optimistic"] for r in rows])
    closed = np.array([math.comb(n, 2) ** 2 / 4 for n in ns])  # smallest nonzero squared expectation 4/C(n,2)^2
    dslopes = loglog_slopes(ns, inv)
    rn = [4, 6, 8, 10, 12]
    rrows = epsilon2_sweep(lambda n, rng: make_family("random", n, rng), rn, [0.1], 50000, None, 1112)
    rslopes = loglog_slopes(rn, [1 / r["epsilon2_optimistic"] for r in rrows])
    dicke_ok = bool(np.all(dslopes <= 4.5) and np.all(np.diff(dslopes) <= 0.05)
                    and np.allclose(inv, closed, rtol=1e-6))
    random_ok = bool(np.all(np.diff(rslopes) > 0))
    ok = dicke_ok and random_ok
    record(11, ok, f"Dicke(n,2) slopes {np.round(dslopes, 2).tolist()} (bounded, -> 4); "
                   f"random dense slopes {np.round(rslopes, 2).tolist()} (increasing)")
    assert ok


def test_criterion_12_distributed_determinism():
    s = random_cw(8, np.random.default_rng(1212))
    cfg = ProtocolConfig(n=8, N1=1000, N2=1000, seed=1212)
    ready, box = threading.Event(), {}

    def alice():
        box["a"] = serve(s, cfg, "127.0.0.1:0", accept_timeout=10, timeout=10, ready=ready)

    t0 = time.perf_counter()
    th = threading.Thread(target=alice, daemon=True)
    th.start()
    assert ready.wait(5)
    fb, tb = connect(s, cfg.for_role("bob"), f"127.0.0.1:{ready.port}")
    th.join(10)
    dt = time.perf_counter() - t0
    fa, ta = box["a"]
    ia, ib = run_session(s, s, cfg, cfg.for_role("bob"))
    sim = simulate_rdipe(s, s, cfg)
    same = fa == fb == ia.f == sim.f and ta.lines() == ia.lines() and tb.lines() == ib.lines()
    ok = same and dt < 10
    record(12, ok, f"socket f = in-process f = {fa!r}; transcripts identical: {same}; loopback {dt:.2f} s")
    assert ok
