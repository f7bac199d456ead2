"""From a direct-product algorithm C' for f^k to an XOR algorithm for f^{xor k}.

The decoder is a consistency-voting reference implementation: advice is one
anchor tuple with C's answers on it.  To guess f(x) it embeds x into tuples
that reuse some anchor coordinates, and counts a vote only when C' agrees
with the recorded answers on the reused ones.  The result f~ is a
deterministic function of the advice seed, so its agreement with f is exact.
XOR-ing k independent copies of f~ gives advantage (1 - 2 delta')^k / 2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._random import derive, uniform_below
from .boolfn import (
    TruthTable,
    agreement,
    check_cap,
    pack,
    unpack,
)
from .oracles import RandomizedAlgorithm, exact_success, frac_str, xor_target

MAX_VOTES = 4096
HALF = Fraction(1, 2)


@dataclass(frozen=True)
class DecoderParams:
    votes: int | None = None
    subset_size: int | None = None
    delta_target: Fraction = Fraction(1, 4)
    c_const: int = 1

    def __post_init__(self):
        if self.votes is not None and self.votes < 1:
            raise ValueError("votes must be at least 1")
        if self.c_const < 1:
            raise ValueError("c must be positive")

    def resolve(self, n: int, k: int, eps) -> tuple[int, int]:
        eps = Fraction(eps)
        if self.votes is not None:
            votes = self.votes
        else:
            votes = min(MAX_VOTES, math.ceil(16 * n * math.log(2) / float(eps) ** 2))
        subset = k // 2 if self.subset_size is None else self.subset_size
        if not 0 <= subset < k:
            raise ValueError(f"consistency subset size {subset} must lie in [0, k)")
        return votes, subset


@dataclass(frozen=True)
class DecoderAdvice:
    anchor: tuple[int, ...]
    answers: int
    seed: int

    @classmethod
    def draw(cls, C: RandomizedAlgorithm, n: int, k: int, seed: int) -> "DecoderAdvice":
        rng = derive(seed, "advice", n, k)
        v = uniform_below(rng, 1 << (n * k))
        tape = uniform_below(rng, C.tape_size)
        return cls(unpack(v, n, k), C(v, tape), seed)

    def to_dict(self, n: int) -> dict:
        return {"seed": self.seed, "anchor": pack(self.anchor, n),
                "answers": format(self.answers, f"0{len(self.anchor)}b")[::-1]}


def _decide(C: RandomizedAlgorithm, n: int, k: int, advice: DecoderAdvice, votes: int,
            subset: int, x: int) -> int:
    """One f~(x); every random choice comes from (advice seed, x)."""
    rng = derive(advice.seed, "decode", n, k, x)
    pos = rng.integers(0, k, size=votes)
    keys = rng.random((votes, k))
    keys[np.arange(votes), pos] = 2.0
    reused = np.argsort(keys, axis=1)[:, :subset]
    elems = rng.integers(0, 1 << n, size=(votes, k), dtype=np.int64)
    anchor = np.asarray(advice.anchor, dtype=np.int64)
    rows = np.arange(votes)[:, None]
    elems[rows, reused] = anchor[reused]
    elems[np.arange(votes), pos] = x
    packed = (elems << (n * np.arange(k, dtype=np.int64))).sum(axis=1)
    if C.table is not None:
        ans = C.evaluate_many(packed)
    else:
        tapes = [uniform_below(rng, C.tape_size) for _ in range(votes)]
        ans = np.fromiter((C(int(v), t) for v, t in zip(packed, tapes)), dtype=np.int64,
                          count=votes)
    amask = (np.int64(1) << reused).sum(axis=1) if subset else np.zeros(votes, dtype=np.int64)
    consistent = ((ans ^ advice.answers) & amask) == 0
    bit = (ans >> pos) & 1
    ones = int(np.count_nonzero(bit[consistent]))
    counted = int(np.count_nonzero(consistent))
    # ties and zero counted votes fall back to 0
    return int(2 * ones > counted)


def dp_decoder(C: RandomizedAlgorithm, n: int, k: int, eps, params: DecoderParams = DecoderParams(),
               advice_seed: int = 0, advice: DecoderAdvice | None = None) -> RandomizedAlgorithm:
    """f~ for f from C'; deterministic given the advice."""
    if C.input_len != n * k or C.output_len != k:
        raise ValueError("C' must map k-tuples of n-bit strings to k bits")
    votes, subset = params.resolve(n, k, eps)
    if advice is None:
        advice = DecoderAdvice.draw(C, n, k, advice_seed)
    memo: dict[int, int] = {}

    def rule(x: int, tape: int = 0) -> int:
        if x not in memo:
            memo[x] = _decide(C, n, k, advice, votes, subset, x)
        return memo[x]

    ft = RandomizedAlgorithm(n, 1, rule, name=f"decoder[seed={advice.seed}]")
    ft.advice = advice
    ft.votes = votes
    ft.subset_size = subset
    return ft


def decoded_table(ft: RandomizedAlgorithm, n: int) -> TruthTable:
    return TruthTable(n, ft.tabulate())


def compose_xor(ft: RandomizedAlgorithm, k: int) -> RandomizedAlgorithm:
    """XOR of k calls to f~, each reading its own tape digit."""
    n = ft.input_len
    base = ft.tape_size

    def rule(v: int, tape: int) -> int:
        out = 0
        for x in unpack(v, n, k):
            out ^= ft(x, tape % base)
            tape //= base
        return out

    return RandomizedAlgorithm(n * k, 1, rule, tape_size=base**k, name=f"xor{k}[{ft.name}]")


def composed_advantage(C: RandomizedAlgorithm, f: TruthTable, k: int, cap: int | None = None) -> Fraction:
    return exact_success(C, xor_target(f, k), cap).exact - HALF


def lemma_basic_value(delta, k: int) -> Fraction:
    return (1 - 2 * Fraction(delta)) ** k / 2


@dataclass
class Thm2Result:
    algorithm: RandomizedAlgorithm
    decoder: RandomizedAlgorithm
    advice: DecoderAdvice
    delta_prime: Fraction
    advantage: Fraction
    predicted: Fraction
    precondition_ok: bool
    n: int
    k: int
    extra: dict = field(default_factory=dict)

    @property
    def identity_holds(self) -> bool:
        return self.advantage == self.predicted

    def to_dict(self) -> dict:
        return {
            "advice": self.advice.to_dict(self.n),
            "delta_prime": frac_str(self.delta_prime),
            "composed_advantage": frac_str(self.advantage),
            "predicted_advantage": frac_str(self.predicted),
            "identity_holds": self.identity_holds,
            "precondition_ok": self.precondition_ok,
            "votes": self.decoder.votes,
            "subset_size": self.decoder.subset_size,
            **self.extra,
        }


def thm2_threshold(k: int, c: int = 1) -> float:
    return 2.0 ** (-k / (4 * c))


def reduce_thm2(C: RandomizedAlgorithm, f: TruthTable, k: int, eps,
                params: DecoderParams = DecoderParams(), seed: int = 0,
                cap: int | None = None, warn: bool = True) -> Thm2Result:
    """Decode f~ from C', compose k copies, and measure everything exactly.

    ``f`` is used only to measure delta' and the composed advantage.
    """
    n = f.n
    eps = Fraction(eps)
    ok = float(eps) > thm2_threshold(k, params.c_const)
    if warn and not ok:
        warnings.warn(f"eps = {eps} is not above 2^(-k/4c); no guarantee applies", stacklevel=2)
    ft = dp_decoder(C, n, k, eps, params, seed)
    check_cap(1 << (n * k), cap, "composed advantage")
    table = decoded_table(ft, n)
    delta = 1 - agreement(table, f)
    C_xor = compose_xor(ft, k)
    adv = composed_advantage(C_xor, f, k, cap)
    return Thm2Result(C_xor, ft, ft.advice, delta, adv, lemma_basic_value(delta, k), ok, n, k)


@dataclass
class ListResult:
    members: list
    target: Fraction

    @property
    def success(self) -> bool:
        return any(m.advantage > self.target for m in self.members)

    @property
    def best(self) -> Thm2Result:
        return max(self.members, key=lambda m: m.advantage)

    def to_dict(self) -> dict:
        return {"size": len(self.members), "target": frac_str(self.target), "success": self.success,
                "advantages": [frac_str(m.advantage) for m in self.members]}


def member_seed(seed: int, j: int) -> int:
    return int(derive(seed, "list-member", j).integers(0, 1 << 62))


def list_reduce_thm2(C: RandomizedAlgorithm, f: TruthTable, k: int, eps, l: int, seed: int = 0,
                     params: DecoderParams = DecoderParams(), target=0,
                     early_exit: bool = False, cap: int | None = None) -> ListResult:
    """l independent advice draws; success means some member beats ``target``."""
    if l < 1:
        raise ValueError("list size must be at least 1")
    target = Fraction(target)
    members = []
    for j in range(l):
        res = reduce_thm2(C, f, k, eps, params, member_seed(seed, j), cap, warn=False)
        members.append(res)
        if early_exit and res.advantage > target:
            break
    return ListResult(members, target)


def default_list_size(eps) -> int:
    return math.ceil(8 / Fraction(eps))


@dataclass
class NonuniformityReport:
    n: int
    k: int
    half_sizes: tuple[int, int]
    advice_bit: int
    matched_advantage: Fraction
    mismatched_advantage: Fraction
    b_xor_agreement: tuple[Fraction, Fraction]
    no_advice_advantages: tuple[Fraction, Fraction]

    @property
    def passed(self) -> bool:
        a0, a1 = self.no_advice_advantages
        return (self.half_sizes[0] == self.half_sizes[1]
                and self.matched_advantage == HALF
                and self.b_xor_agreement == (HALF, HALF)
                and a0 + a1 == 0)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "k": self.k, "half_sizes": list(self.half_sizes),
            "advice_bit": self.advice_bit,
            "matched_advantage": frac_str(self.matched_advantage),
            "mismatched_advantage": frac_str(self.mismatched_advantage),
            "b_xor_agreement": [frac_str(a) for a in self.b_xor_agreement],
            "no_advice_advantages": [frac_str(a) for a in self.no_advice_advantages],
            "pass": self.passed,
        }


def half_and_half(n: int, k: int) -> RandomizedAlgorithm:
    """f_0^k on the lower half of packed tuples, f_1^k on the upper half (f_b = b)."""
    domain = 1 << (n * k)
    ones = (1 << k) - 1
    return RandomizedAlgorithm.from_table(n * k, k, [0 if v < domain // 2 else ones
                                                     for v in range(domain)], name="half-and-half")


def nonuniformity_demo(n: int = 1, k: int = 3, seed: int = 0) -> NonuniformityReport:
    """Why the XOR-from-direct-product decoder needs advice.

    B fits both constant functions on half the tuples each.  With k odd,
    f_0^{xor k} is the complement of f_1^{xor k}, so any single advice-free
    algorithm has opposite advantages against the two.  One advice bit (the
    anchor's answer) picks the right one.
    """
    if k % 2 == 0:
        raise ValueError("the demonstration needs odd k")
    B = half_and_half(n, k)
    f0, f1 = TruthTable.constant(n, 0), TruthTable.constant(n, 1)
    domain = 1 << (n * k)
    sizes = (sum(1 for v in range(domain) if B(v) == 0), sum(1 for v in range(domain) if B(v) != 0))
    xor_of_B = RandomizedAlgorithm.from_table(n * k, 1, [B(v).bit_count() & 1 for v in range(domain)])
    b_agree = tuple(exact_success(xor_of_B, xor_target(g, k)).exact for g in (f0, f1))

    ft = dp_decoder(B, n, k, 1, DecoderParams(), seed)
    bit = ft.advice.answers & 1
    matched, mismatched = (f1, f0) if bit else (f0, f1)
    C = compose_xor(ft, k)
    adv_matched = composed_advantage(C, matched, k)
    adv_mismatched = composed_advantage(C, mismatched, k)

    blind = dp_decoder(B, n, k, 1, DecoderParams(subset_size=0), seed)
    Cb = compose_xor(blind, k)
    no_advice = (composed_advantage(Cb, f0, k), composed_advantage(Cb, f1, k))
    return NonuniformityReport(n, k, sizes, bit, adv_matched, adv_mismatched, b_agree, no_advice)


def xor_of_outputs(C: RandomizedAlgorithm) -> RandomizedAlgorithm:
    """The trivial XOR algorithm: parity of C's k output bits."""
    return RandomizedAlgorithm(C.input_len, 1, lambda v, t: C(v, t).bit_count() & 1,
                               tape_size=C.tape_size, name=f"parity[{C.name}]")

