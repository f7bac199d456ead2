import itertools
import math
from fractions import Fraction

import pytest

from dpxor._random import derive
from dpxor.boolfn import TruthTable, central_binomial_prob, pack, restrict_elements, unpack, xor_eval
from dpxor.dp2xor import (
    FRESH,
    WITHIN,
    algo_A,
    algo_B_2k,
    algo_B_k,
    beta_profile,
    gamma_profile,
    lemma1_exact_check,
    lemma2_exact_check,
    lemma3_lemma4_exact_check,
    lemma5_exact_check,
    reduce_thm1,
    tape_size_A,
    tape_size_B_2k,
    tape_size_B_k,
    thm3_gamma,
)
from dpxor.oracles import AdversaryModel, RandomizedAlgorithm, plant_xor_adversary, xor_target

F = Fraction


def perfect(f, k):
    M, _ = plant_xor_adversary(f, k, F(1, 2))
    return M


@pytest.fixture
def f2():
    return TruthTable.random(2, derive(1, "unit-f"))


@pytest.mark.parametrize("n,k", [(1, 1), (1, 3), (2, 2), (3, 2)])
def test_cancellation_identity(n, k):
    f = TruthTable.random(n, derive(n, k))
    M = perfect(f, k)
    for i in range(k + 1):
        size = tape_size_A(n, k, i, FRESH)
        for v in range(1 << (2 * i * n)):
            xs = unpack(v, n, 2 * i)
            want = xor_eval(f, xs)
            assert all(algo_A(M, n, k, xs, t) == want for t in range(size))


def test_i_zero_calls_cancel(f2):
    M = RandomizedAlgorithm(4, 1, lambda v, t: (v * 2654435761 >> 7) & 1)
    assert all(algo_A(M, 2, 2, (), t) == 0 for t in range(tape_size_A(2, 2, 0)))


def test_within_mode_uses_host_coordinates(f2):
    seen = []
    M = RandomizedAlgorithm(4, 1, lambda v, t: seen.append(v) or 0)
    host = (0, 1, 2, 3)
    algo_A(M, 2, 2, (1, 3), 0, WITHIN, host=host, used=0b1010)
    assert all(set(unpack(v, 2, 2)) <= set(host) for v in seen)
    with pytest.raises(ValueError):
        algo_A(M, 2, 2, (1, 3), 0, WITHIN)
    with pytest.raises(ValueError):
        algo_A(M, 2, 2, (1, 2), 0, WITHIN, host=host, used=0b1010)


def test_algo_errors(f2):
    M = perfect(f2, 2)
    with pytest.raises(ValueError):
        algo_A(M, 2, 2, (0, 1, 2, 3, 0, 1))
    with pytest.raises(ValueError):
        algo_B_k(M, 2, 2, (0, 1), 0b100)
    with pytest.raises(ValueError):
        algo_B_2k(M, 2, 2, (0, 1, 2), 0b1)
    with pytest.raises(ValueError):
        algo_B_k(M, 2, 2, (0, 1), 0b11, mode=WITHIN)


def test_B_k_odd_weight_is_fair_coin(f2):
    M = perfect(f2, 3)
    size = tape_size_B_k(2, 3)
    outs = [algo_B_k(M, 2, 3, (0, 1, 2), 0b001, t) for t in range(size)]
    assert sum(outs) * 2 == size


def test_B_2k_branches(f2):
    k = 2
    M = perfect(f2, k)
    size = tape_size_B_2k(2, k)
    xs = (0, 1, 2, 3)
    fx = sum(f2(x) << j for j, x in enumerate(xs))
    for r in range(16):
        outs = {algo_B_2k(M, 2, k, xs, r, t) for t in range(size)}
        if r.bit_count() % 2 == 0:
            assert outs == {(fx & r).bit_count() & 1}
        if r.bit_count() == k:
            assert outs == {M(pack(restrict_elements(xs, r), 2))}
    assert {algo_B_2k(M, 2, k, xs, 0, t) for t in range(size)} == {0}


def test_gamma_extremes(f2):
    M = perfect(f2, 2)
    prof = gamma_profile(M, f2, 2)
    assert set(prof.values.values()) == {F(1, 2)}
    bad = RandomizedAlgorithm.from_table(4, 1, [1 - b for b in M.table])
    assert set(gamma_profile(bad, f2, 2).values.values()) == {F(-1, 2)}


@pytest.mark.parametrize("kind", ["random-subset", "planted-function"])
def test_lemma1_equality(f2, kind):
    for seed in range(3):
        M, _ = plant_xor_adversary(f2, 2, F(1, 4), AdversaryModel(kind, seed))
        assert lemma1_exact_check(M, f2, 2).passed


def test_beta_matches_direct_recomputation(f2):
    M, _ = plant_xor_adversary(f2, 2, F(1, 8), AdversaryModel("random-subset", 2))
    prof = beta_profile(M, f2, 2)
    size = tape_size_B_k(2, 2)
    for v, b in list(prof.values.items())[:4]:
        xs = unpack(v, 2, 2)
        fx = sum(f2(x) << j for j, x in enumerate(xs))
        hits = sum(algo_B_k(M, 2, 2, xs, r, t) == (fx & r).bit_count() % 2
                   for r in range(4) for t in range(size))
        assert b == F(hits, 4 * size) - F(1, 2)


def test_branch_bookkeeping_and_perfect_mid_branch(f2):
    M = perfect(f2, 2)
    prof = beta_profile(M, f2, 2, "2k")
    assert sum(prof.branches.values()) == prof.mean
    assert prof.branches[2] == central_binomial_prob(2) / 2 == F(3, 16)


def test_zero_advantage_mid_branch_vanishes(f2):
    M, a = plant_xor_adversary(f2, 2, F(0), AdversaryModel("random-subset", 1))
    assert a == 0
    assert beta_profile(M, f2, 2, "2k").branches[2] == 0


def test_lemma2_tight_when_perfect(f2):
    M = perfect(f2, 2)
    r = lemma2_exact_check(M, f2, (0, 1, 2, 3), 2)
    assert r.passed and all(row.lhs == 1 == row.rhs for row in r.rows[1:])


def test_lemma2_counterexample_is_detected():
    # complementary halves with opposite correctness: the i = k case has LHS 0
    f = TruthTable(2, (0, 0, 0, 0))
    host = (0, 1, 2, 3)
    wrong = {pack((0, 1), 2), pack((0, 2), 2), pack((0, 3), 2)}
    M = RandomizedAlgorithm.from_table(4, 1, [1 if v in wrong else 0 for v in range(16)])
    r = lemma2_exact_check(M, f, host, 2)
    assert r.info["gamma"] == 0
    assert r.rows[2].lhs == 0 and not r.passed


@pytest.mark.parametrize("k", [2, 3])
def test_lemma3_lemma4(f2, k):
    M, _ = plant_xor_adversary(f2, k, F(1, 4), AdversaryModel("random-subset", 5))
    rep = lemma3_lemma4_exact_check(M, f2, k)
    assert rep.passed
    assert rep.info["epsilon"] == rep.info["advantage"]


def test_lemma5_even_and_odd(f2):
    M, _ = plant_xor_adversary(f2, 2, F(1, 4), AdversaryModel("random-subset", 5))
    assert lemma5_exact_check(M, f2, 2).passed
    g = TruthTable.random(1, derive(3))
    M, _ = plant_xor_adversary(g, 3, F(1, 4))
    assert not lemma5_exact_check(M, g, 3).asserted


def test_embeddings_meet_their_bounds(f2):
    M, eps = plant_xor_adversary(f2, 2, F(1, 4), AdversaryModel("random-subset", 5))
    assert beta_profile(M, f2, 2, "k").mean >= eps**2 / 2
    assert beta_profile(M, f2, 2, "2k").mean >= thm3_gamma(eps, 2) / 2


def test_thm3_gamma():
    assert thm3_gamma(F(1, 4), 2) == F(5, 32)


def test_thm1_warns_below_threshold(f2):
    M = perfect(f2, 2)
    with pytest.warns(UserWarning):
        reduce_thm1(M, 2, 2, F(1, 8))


def test_tape_sizes_are_lcms():
    assert tape_size_A(2, 2, 1) == math.comb(2, 1) * 4
    size = tape_size_B_k(2, 2)
    assert all(size % tape_size_A(2, 2, i) == 0 for i in range(2)) and size % 2 == 0
    assert tape_size_A(2, 2, 1, WITHIN, unused=2) == 2 * 2
    with pytest.raises(ValueError):
        tape_size_A(2, 2, 3)
