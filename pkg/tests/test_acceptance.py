"""End-to-end acceptance checks, one test per criterion.

Each test records its sub-results through the ``criterion`` fixture and the
summary prints one PASS/FAIL line per criterion.  Thresholds are the stated
ones; nothing here is relaxed to turn a result green.
"""

import itertools
import json
import math
import time
import warnings
from fractions import Fraction as F

import numpy as np
import pytest

from dpxor._random import derive, uniform_below
from dpxor.boolfn import (
    TruthTable,
    agreement,
    empirical_xor_zero_rate,
    inner_product,
    pack,
    unpack,
    xor_zero_advantage,
)
from dpxor.bounds import (
    bonferroni_union_bound,
    construct_thm9_family,
    search_counterexample,
    thm8_family_audit,
)
from dpxor.cli import main as cli_main
from dpxor.dp2xor import (
    FRESH,
    WITHIN,
    algo_A,
    beta_profile,
    exact_advantage,
    lemma1_exact_check,
    lemma2_exact_check,
    lemma3_lemma4_exact_check,
    lemma5_exact_check,
    reduce_thm1,
    tape_size_A,
)
from dpxor.gldecode import GLParams, gl_decode_list, gl_decode_single, hadamard_brute_decode
from dpxor.oracles import (
    AdversaryModel,
    RandomizedAlgorithm,
    dp_target,
    mc_success,
    plant_dp_adversary,
    plant_xor_adversary,
)
from dpxor.xor2dp import (
    composed_advantage,
    compose_xor,
    default_list_size,
    list_reduce_thm2,
    nonuniformity_demo,
    reduce_thm2,
)

pytestmark = pytest.mark.acceptance
Z95 = 1.96


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


# 1 ---------------------------------------------------------------------------

def test_c01_xor_zero_rate(criterion):
    def body():
        bad = 0
        checked = 0
        for length in range(1, 9):
            for v in range(1 << length):
                m = [(v >> i) & 1 for i in range(length)]
                omega = F(sum(m), length)
                for k in range(5):
                    checked += 1
                    bad += empirical_xor_zero_rate(m, k) != xor_zero_advantage(omega, k)
        rng = derive(0, "acceptance-1")
        lengths = list(range(9, 257)) + [256] * 40
        for length in lengths:
            m = [int(b) for b in rng.integers(0, 2, length)]
            omega = F(sum(m), length)
            for k in range(5):
                checked += 1
                bad += empirical_xor_zero_rate(m, k, method="transfer") != xor_zero_advantage(omega, k)
        return bad, checked
    (bad, checked), secs = _timed(body)
    criterion(1, bad == 0, f"{checked} (string, k) pairs, {bad} mismatches")
    criterion(1, secs < 30, f"runtime {secs:.1f}s < 30s")
    assert bad == 0 and secs < 30


# 2 ---------------------------------------------------------------------------

def test_c02_lemma1_equality(criterion):
    def body():
        bad = []
        rng = derive(0, "acceptance-2")
        for kind in ("random-subset", "planted-function"):
            for seed in range(20):
                f = TruthTable.random(2, derive(seed, "acceptance-2-f"))
                target = F(int(rng.integers(0, 9)), 16)
                M, achieved = plant_xor_adversary(f, 2, target, AdversaryModel(kind, seed))
                rep = lemma1_exact_check(M, f, 2)
                if not (rep.passed and rep.info["gamma_mean"] == achieved):
                    bad.append((kind, seed))
        return bad
    bad, secs = _timed(body)
    criterion(2, not bad, f"40 adversaries (20 per model), failures {bad}")
    criterion(2, secs < 60, f"runtime {secs:.1f}s < 60s")
    assert not bad and secs < 60


# 3 ---------------------------------------------------------------------------

def test_c03_lemma2_per_tuple(criterion):
    def body():
        total = violations = 0
        worst = None
        for seed in range(3):
            f = TruthTable.random(2, derive(seed, "acceptance-3-f"))
            M, _ = plant_xor_adversary(f, 2, F(1, 4), AdversaryModel("random-subset", seed))
            for v in range(1 << 8):
                rep = lemma2_exact_check(M, f, unpack(v, 2, 4), 2)
                total += 1
                if not rep.passed:
                    violations += 1
                    gap = min(r.lhs - r.rhs for r in rep.rows)
                    worst = gap if worst is None else min(worst, gap)
        for seed in range(3):
            f = TruthTable.random(2, derive(seed, "acceptance-3-f3"))
            M, _ = plant_xor_adversary(f, 3, F(1, 4), AdversaryModel("random-subset", seed))
            rng = derive(seed, "acceptance-3-tuples")
            for _ in range(50):
                xs = unpack(uniform_below(rng, 1 << 12), 2, 6)
                rep = lemma2_exact_check(M, f, xs, 3)
                total += 1
                if not rep.passed:
                    violations += 1
                    gap = min(r.lhs - r.rhs for r in rep.rows)
                    worst = gap if worst is None else min(worst, gap)
        return total, violations, worst
    (total, violations, worst), secs = _timed(body)
    criterion(3, violations == 0,
              f"{violations}/{total} tuples violate the per-tuple bound (worst lhs-rhs {worst})")
    criterion(3, secs < 300, f"runtime {secs:.1f}s < 300s")
    assert violations == 0 and secs < 300


def test_c03_lemma2_counterexample_is_genuine():
    """Independent recomputation of one violating instance without the checker."""
    f = TruthTable(2, (0, 0, 0, 0))
    host = (0, 1, 2, 3)
    wrong = {pack((0, 1), 2), pack((0, 2), 2), pack((0, 3), 2)}
    M = RandomizedAlgorithm.from_table(4, 1, [1 if v in wrong else 0 for v in range(16)])
    # gamma over weight-2 masks: 3 of 6 restrictions wrong -> gamma = 0
    masks = [r for r in range(16) if r.bit_count() == 2]
    right = sum(M(pack(tuple(host[j] for j in range(4) if r >> j & 1), 2)) == 0 for r in masks)
    assert F(right, 6) - F(1, 2) == 0
    # at i = k every split pairs a wrong half with a right half, so A is never correct
    size = tape_size_A(2, 2, 2, WITHIN, unused=0)
    assert size == 6
    assert all(algo_A(M, 2, 2, host, t, WITHIN, host=host, used=0b1111) == 1 for t in range(size))


# 4 ---------------------------------------------------------------------------

def test_c04_lemma3_lemma4(criterion):
    def body():
        out = []
        for k in (2, 3):
            for eps in (F(1, 8), F(1, 4), F(1, 2)):
                f = TruthTable.random(2, derive(k, "acceptance-4-f"))
                M, achieved = plant_xor_adversary(f, k, eps, AdversaryModel("random-subset", 1))
                rep = lemma3_lemma4_exact_check(M, f, k, FRESH)
                out.append((k, achieved, achieved == eps, rep.passed))
        return out
    out, secs = _timed(body)
    for k, achieved, exact, ok in out:
        criterion(4, exact and ok, f"k={k} eps_achieved={achieved}: sizes and mean beta hold")
    criterion(4, secs < 300, f"runtime {secs:.1f}s < 300s")
    assert all(e and ok for _, _, e, ok in out) and secs < 300


# 5 ---------------------------------------------------------------------------

def test_c05_lemma5(criterion):
    def body():
        out = []
        for eps in (F(1, 8), F(1, 4)):
            f = TruthTable.random(2, derive(0, "acceptance-5-f"))
            M, achieved = plant_xor_adversary(f, 2, eps, AdversaryModel("random-subset", 2))
            beta = beta_profile(M, f, 2, "2k")
            bound = F(math.comb(4, 2), 16) * achieved + F(1 + 1, 16) * 2 * achieved**2
            mid = F(math.comb(4, 2), 16) * achieved
            rep = lemma5_exact_check(M, f, 2)
            out.append((achieved, beta.mean, bound, beta.branches[2], mid, rep.passed))
        return out
    out, secs = _timed(body)
    ok_all = True
    for achieved, mean, bound, branch, mid, rep_ok in out:
        ok = achieved in (F(1, 8), F(1, 4)) and mean >= bound and branch == mid and rep_ok
        ok_all &= ok
        criterion(5, ok, f"eps={achieved}: mean beta {mean} >= {bound}, H=k branch {branch} == {mid}")
    criterion(5, secs < 300, f"runtime {secs:.1f}s < 300s")
    assert ok_all and secs < 300


# 6 ---------------------------------------------------------------------------

def _noisy_hadamard(x: int, n: int, wrong: int, rng) -> RandomizedAlgorithm:
    table = [inner_product(x, r) for r in range(1 << n)]
    for r in rng.permutation(1 << n)[:wrong]:
        table[int(r)] ^= 1
    return RandomizedAlgorithm.from_table(n, 1, table)


def test_c06_goldreich_levin(criterion):
    t0 = time.perf_counter()
    ok_all = True
    for n in (4, 6, 8):
        hits = 0
        for s in range(1000):
            rng = derive(s, "acceptance-6a", n)
            x = uniform_below(rng, 1 << n)
            B = _noisy_hadamard(x, n, 0, rng)
            hits += x in gl_decode_list(B, n, F(1, 2), GLParams(seed=s))
        ok = hits >= 990
        ok_all &= ok
        criterion(6, ok, f"(a) n={n}: true x listed in {hits}/1000 >= 990")

    trials, hits = 2000, 0
    for s in range(trials):
        rng = derive(s, "acceptance-6b")
        x = uniform_below(rng, 64)
        B = _noisy_hadamard(x, 6, 16, rng)
        hits += gl_decode_single(B, 6, F(1, 4), GLParams(guess_bits=4, seed=s)) == x
    p = hits / trials
    lower = p - Z95 * math.sqrt(p * (1 - p) / trials)
    ok = lower >= 1 / 32
    ok_all &= ok
    criterion(6, ok, f"(b) n=6 agreement 3/4: frequency {p:.4f}, 95% lower bound {lower:.4f} >= 1/32")

    mism = 0
    for s in range(100):
        rng = derive(s, "acceptance-6c")
        table = [int(b) for b in rng.integers(0, 2, 16)]
        gamma = F(int(rng.integers(0, 5)), 16)
        got = hadamard_brute_decode(table, gamma)
        want = []
        for x in range(16):
            agree = F(sum(inner_product(x, r) == table[r] for r in range(16)), 16)
            if agree >= F(1, 2) + gamma:
                want.append((x, agree))
        want.sort(key=lambda xs: (-xs[1], xs[0]))
        mism += list(got) != want
    ok = mism == 0
    ok_all &= ok
    criterion(6, ok, f"(c) brute decoder vs direct recomputation, {mism}/100 mismatches")
    secs = time.perf_counter() - t0
    criterion(6, secs < 300, f"runtime {secs:.1f}s < 300s")
    assert ok_all and secs < 300


# 7 ---------------------------------------------------------------------------

def _thm1_success(f, k, M, eps, trials, seed, guess_bits=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        Mp = reduce_thm1(M, f.n, k, eps, GLParams(guess_bits, None, seed), "best-parity")
    return mc_success(Mp, dp_target(f, k), trials, seed)


def test_c07_theorem1(criterion):
    t0 = time.perf_counter()
    ok_all = True
    for n in (1, 2, 3):
        for k in (1, 2, 3):
            f = TruthTable.random(n, derive(0, "acceptance-7", n, k))
            M, achieved = plant_xor_adversary(f, k, F(1, 2))
            est = _thm1_success(f, k, M, achieved, 200, 0)
            ok = est.point >= 0.9
            ok_all &= ok
            criterion(7, ok, f"perfect M, n={n} k={k}: success {est.point:.3f} >= 0.9")

    f = TruthTable.random(2, derive(0, "acceptance-7-grid"))
    points = []
    for target in ("1/10", "1/4", "9/20"):
        M, achieved = plant_xor_adversary(f, 3, F(target), AdversaryModel("random-subset", 0))
        est = _thm1_success(f, 3, M, achieved, 400, 1, guess_bits=6)
        points.append((achieved, est))
    mono = all(a.point - b.point <= a.ci95 + b.ci95 for (_, a), (_, b) in zip(points, points[1:]))
    ok_all &= mono
    criterion(7, mono, "grid n=2 k=3: " + ", ".join(f"eps={e} -> {est.point:.3f}+-{est.ci95:.3f}"
                                                     for e, est in points) + " non-decreasing within CIs")

    trials = 1000
    g = f.flip([0, 1])
    M, achieved = plant_xor_adversary(f, 3, 0, AdversaryModel("planted-function", 0, g))
    est = _thm1_success(f, 3, M, achieved, trials, 2, guess_bits=6)
    p0 = 2.0**-3
    half = Z95 * math.sqrt(p0 * (1 - p0) / trials)
    ok = achieved == 0 and abs(est.point - p0) <= half
    ok_all &= ok
    criterion(7, ok, f"eps=0: success {est.point:.4f} vs baseline 1/8, |diff| <= {half:.4f}")
    secs = time.perf_counter() - t0
    criterion(7, secs < 600, f"runtime {secs:.1f}s < 600s")
    assert ok_all and secs < 600


# 8 ---------------------------------------------------------------------------

def test_c08_theorem2(criterion):
    t0 = time.perf_counter()
    f = TruthTable.random(3, derive(0, "acceptance-8-f"))
    Cp, _ = plant_dp_adversary(f, 4, F(1))
    perfect = reduce_thm2(Cp, f, 4, 1, seed=0, warn=False)
    ok1 = perfect.advantage == F(1, 2)
    criterion(8, ok1, f"perfect C': composed advantage {perfect.advantage} == 1/2")

    C, achieved = plant_dp_adversary(f, 4, F(1, 4), AdversaryModel("random-subset", 0))
    seeds = 400
    identity_bad = good = 0
    for s in range(seeds):
        res = reduce_thm2(C, f, 4, achieved, seed=s, warn=False)
        identity_bad += not res.identity_holds
        good += 1 - res.delta_prime >= F(3, 4)
    ok2 = achieved == F(1, 4) and identity_bad == 0
    criterion(8, ok2, f"identity advantage == (1-2d')^k/2 fails on {identity_bad}/{seeds} draws")
    frac = F(good, seeds)
    ok3 = frac >= achieved / 4
    criterion(8, ok3, f"agreement >= 3/4 on {good}/{seeds} seeds, {float(frac):.3f} >= eps/4")

    l = default_list_size(achieved)
    wins = 0
    for meta in range(100):
        res = list_reduce_thm2(C, f, 4, achieved, l, seed=10_000 + meta * l)
        wins += any(1 - m.delta_prime >= F(3, 4) for m in res.members)
    ok4 = l == 32 and wins >= 95
    criterion(8, ok4, f"list wrapper l={l}: contains an agreement >= 3/4 member in {wins}/100 >= 95")
    secs = time.perf_counter() - t0
    criterion(8, secs < 900, f"runtime {secs:.1f}s < 900s")
    assert ok1 and ok2 and ok3 and ok4 and secs < 900


# 9 ---------------------------------------------------------------------------

def test_c09_nonuniformity(criterion):
    rep, secs = _timed(lambda: nonuniformity_demo(1, 3))
    mismatched = 1 - rep.advice_bit
    ok = (rep.matched_advantage == F(1, 2) and rep.b_xor_agreement[mismatched] == F(1, 2)
          and rep.passed)
    criterion(9, ok, f"matched advantage {rep.matched_advantage}, mismatched agreement "
                     f"{rep.b_xor_agreement[mismatched]}")
    criterion(9, secs < 1, f"runtime {secs:.3f}s < 1s")
    assert ok and secs < 1


# 10 --------------------------------------------------------------------------

def test_c10_bounds(criterion):
    t0 = time.perf_counter()
    res = construct_thm9_family(3, 2, F(1, 4), 4, seed=0)
    ok_a = res.report.conclusion_holds
    criterion(10, ok_a, "thm9 family n=3 k=2 delta=1/4 t=4: "
                        + ", ".join(f"{c.label}: {'ok' if c.ok else 'FAIL'}" for c in res.report.conclusions))
    audit = thm8_family_audit(res.family, res.B_table, 2, F(1, 4))
    criterion(10, audit.passed, f"thm8 audit passed (hypotheses hold: {audit.hypotheses_hold})")

    rng = derive(0, "acceptance-10-sets")
    over = 0
    for _ in range(1000):
        universe = int(rng.integers(1, 40))
        t = int(rng.integers(1, 8))
        sets = [set(int(u) for u in np.flatnonzero(rng.random(universe) < rng.random())) for _ in range(t)]
        sizes = [len(s) for s in sets]
        inter = [[len(a & b) for b in sets] for a in sets]
        over += bonferroni_union_bound(sizes, inter) > len(set().union(*sets))
    criterion(10, over == 0, f"Bonferroni above the true union on {over}/1000 systems")

    rep = search_counterexample(2, 2, 10_000, seed=0)
    n_lit = len(rep.literal_violations)
    criterion(10, n_lit == 0, f"search over 10^4 families: {n_lit} Theorem-11 violations "
                              f"(finite {len(rep.finite_violations)}, two-sided "
                              f"{len(rep.two_sided_violations)}, thm6 {len(rep.thm6_violations)})")
    secs = time.perf_counter() - t0
    criterion(10, secs < 600, f"runtime {secs:.1f}s < 600s")
    assert ok_a and audit.passed and over == 0 and n_lit == 0 and secs < 600


# 11 --------------------------------------------------------------------------

def test_c11_determinism(criterion, capsys):
    f = TruthTable.random(2, derive(0, "acceptance-11"))
    M, eps = plant_xor_adversary(f, 3, F(1, 4))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        Mp = reduce_thm1(M, 2, 3, eps, GLParams(6, None, 3), "best-parity")
    ests = {repr(mc_success(Mp, dp_target(f, 3), 120, 5, workers=w)) for w in (1, 2, 8, 1)}
    criterion(11, len(ests) == 1, f"mc_success identical across workers 1/2/8 and reruns ({len(ests)} distinct)")

    outs = set()
    for w in ("1", "2", "8", "1"):
        cli_main(["reduce", "dp2xor", "--n", "2", "--k", "3", "--epsilon", "1/4", "--trials", "60",
                  "--guess-bits", "6", "--workers", w, "--seed", "4"])
        outs.add(capsys.readouterr().out)
    for w in ("1", "8"):
        cli_main(["reduce", "xor2dp", "--n", "3", "--k", "4", "--epsilon", "1/4", "--list-size", "3",
                  "--workers", w])
        outs.add(("xor2dp", capsys.readouterr().out))
    criterion(11, len(outs) == 2, f"CLI reports byte-identical across worker counts ({len(outs)} distinct, want 2)")
    assert len(ests) == 1 and len(outs) == 2
