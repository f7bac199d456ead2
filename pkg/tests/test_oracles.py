from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from dpxor._random import derive, uniform_below
from dpxor.boolfn import TruthTable, agreement, xor_zero_advantage
from dpxor.oracles import (
    AdversaryModel,
    RandomizedAlgorithm,
    dp_target,
    exact_success,
    frac_str,
    mc_success,
    parse_fraction,
    plant_dp_adversary,
    plant_xor_adversary,
    xor_target,
)

F = Fraction


def test_parse_fraction():
    assert parse_fraction("3/8") == F(3, 8)
    assert parse_fraction(" 2 ") == 2
    for bad in ("0.3", "1/0", "a/b", ""):
        with pytest.raises(ValueError):
            parse_fraction(bad)
    assert frac_str(F(2, 4)) == "1/2"


def test_derive_is_path_pure():
    a = derive(1, "x", 2).integers(0, 1 << 40)
    derive(1, "y").integers(0, 10)
    assert derive(1, "x", 2).integers(0, 1 << 40) == a
    assert derive(2, "x", 2).integers(0, 1 << 40) != a


def test_uniform_below_large_sizes():
    rng = derive(0, "big")
    vals = [uniform_below(rng, 3 << 70) for _ in range(50)]
    assert all(0 <= v < 3 << 70 for v in vals)
    assert uniform_below(rng, 1) == 0


def test_algorithm_counts_queries():
    A = RandomizedAlgorithm(2, 1, lambda x, t: (x + t) & 1, tape_size=3)
    A(1, 2)
    A.evaluate_many([0, 1, 2], [0, 1, 2])
    assert A.query_count == 4
    A.reset_count()
    assert A.query_count == 0
    assert A.tape_len == 2


def test_table_algorithms_must_be_deterministic():
    with pytest.raises(ValueError):
        RandomizedAlgorithm(1, 1, table=[0, 1], tape_size=2)
    with pytest.raises(ValueError):
        RandomizedAlgorithm(2, 1, table=[0, 1])


def test_exact_success_averages_tapes():
    A = RandomizedAlgorithm(1, 1, lambda x, t: t, tape_size=4)
    assert exact_success(A, [0, 0]).exact == F(1, 4)


def test_mc_is_worker_invariant():
    A = RandomizedAlgorithm(4, 1, lambda x, t: (x ^ t) & 1, tape_size=5)
    runs = {mc_success(A, [0] * 16, 301, 9, workers=w) for w in (1, 2, 8)}
    assert len(runs) == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100), st.integers(0, 32))
def test_random_subset_xor_hits_nearest_count(seed, num):
    f = TruthTable.random(2, derive(seed, "f"))
    eps = F(num, 64)
    M, achieved = plant_xor_adversary(f, 2, eps, AdversaryModel("random-subset", seed))
    assert exact_success(M, xor_target(f, 2)).exact - F(1, 2) == achieved
    assert abs(achieved - eps) <= F(1, 32)


def test_planted_function_xor_uses_lemma_basic():
    f = TruthTable.random(3, derive(2))
    M, achieved = plant_xor_adversary(f, 3, F(1, 8), AdversaryModel("planted-function", 4))
    d = 1 - agreement(f, M.decoy)
    assert achieved == xor_zero_advantage(d, 3) - F(1, 2)
    assert exact_success(M, xor_target(f, 3)).exact - F(1, 2) == achieved


@pytest.mark.parametrize("wrong", ["flip-first", "random-wrong"])
def test_dp_adversary(wrong):
    f = TruthTable.random(2, derive(5))
    C, achieved = plant_dp_adversary(f, 3, F(1, 4), AdversaryModel("random-subset", 1, wrong=wrong))
    assert achieved == F(1, 4)
    assert exact_success(C, dp_target(f, 3)).exact == achieved
    C, achieved = plant_dp_adversary(f, 2, F(9, 16), AdversaryModel("planted-function", 1))
    assert achieved == agreement(f, C.decoy) ** 2


def test_adversary_rejects_bad_targets():
    f = TruthTable.random(2, derive(5))
    with pytest.raises(ValueError):
        plant_xor_adversary(f, 2, F(3, 4))
    with pytest.raises(ValueError):
        plant_dp_adversary(f, 2, F(0))
    with pytest.raises(ValueError):
        AdversaryModel("nope")


def test_model_roundtrip():
    g = TruthTable(2, (0, 1, 1, 1))
    m = AdversaryModel("planted-function", 3, g)
    back, eps = AdversaryModel.from_dict(m.to_dict(F(1, 8)))
    assert back == m and eps == F(1, 8)
