"""Goldreich-Levin list decoding of the Hadamard code.

The decoder draws ``l`` reference masks r_1..r_l and, for every nonempty
subset S of them, queries the oracle at ``q_S ^ e_i`` where ``q_S`` is the
XOR of the masks in S.  For a guess b of the inner products <x, r_j>, bit i
of the candidate is the majority over S of ``B(q_S ^ e_i) ^ <b, S>``.  All
2^l guesses are scored at once with a Walsh-Hadamard transform over S.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable

import numpy as np

from ._random import derive, uniform_below
from .boolfn import TruthTable
from .oracles import RandomizedAlgorithm

MAX_GUESS_BITS = 12


def default_guess_bits(n: int, gamma) -> int:
    gamma = float(gamma)
    return max(1, min(MAX_GUESS_BITS, math.ceil(math.log2(n / gamma**2))))


@dataclass(frozen=True)
class GLParams:
    guess_bits: int | None = None
    votes_per_bit: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.guess_bits is not None and not 1 <= self.guess_bits <= 20:
            raise ValueError("guess_bits must lie in [1, 20]")
        if self.votes_per_bit is not None and self.votes_per_bit < 1:
            raise ValueError("votes_per_bit must be positive")

    def with_seed(self, seed: int) -> "GLParams":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class CandidateList:
    n: int
    candidates: tuple[int, ...]
    scores: tuple[float, ...]
    multiplicity: tuple[int, ...] = ()
    queries: int = 0

    def __len__(self) -> int:
        return len(self.candidates)

    def __contains__(self, x: int) -> bool:
        return x in self.candidates

    def __iter__(self):
        return iter(zip(self.candidates, self.scores))

    def score_of(self, x: int):
        return self.scores[self.candidates.index(x)]

    def best(self) -> int:
        return self.candidates[0]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "candidates": [format(x, f"0{self.n}b")[::-1] for x in self.candidates],
            "scores": [float(s) for s in self.scores],
        }


def walsh_hadamard(values: np.ndarray) -> np.ndarray:
    """Unnormalised WHT: out[b] = sum_S values[S] * (-1)^{popcount(b & S)}."""
    out = np.array(values, dtype=np.int64, copy=True)
    h = 1
    size = out.shape[0]
    while h < size:
        view = out.reshape(-1, 2, h, *out.shape[1:])
        a = view[:, 0].copy()
        view[:, 0] += view[:, 1]
        view[:, 1] = a - view[:, 1]
        h *= 2
    return out


def _popcount_parity(values: np.ndarray) -> np.ndarray:
    v = values.copy()
    p = np.zeros_like(v)
    while np.any(v):
        p ^= v & 1
        v >>= 1
    return p


def gl_decode_list(B: RandomizedAlgorithm, n: int, gamma, params: GLParams = GLParams()) -> CandidateList:
    if n < 1:
        raise ValueError("cannot decode a 0-bit string")
    if B.input_len != n or B.output_len != 1:
        raise ValueError("oracle must map n-bit masks to one bit")
    if Fraction(gamma) <= 0 and params.guess_bits is None:
        raise ValueError("gamma must be positive")
    if n > 62:
        raise ValueError("mask length above 62 bits is not supported")
    l = params.guess_bits or default_guess_bits(n, gamma)
    rng = derive(params.seed, "gl", n, l)
    refs = [uniform_below(rng, 1 << n) for _ in range(l)]
    size = 1 << l
    q = [0] * size
    for S in range(1, size):
        low = (S & -S).bit_length() - 1
        q[S] = q[S & (S - 1)] ^ refs[low]
    subsets = np.arange(1, size)
    if params.votes_per_bit is not None and params.votes_per_bit < size - 1:
        subsets = np.sort(rng.choice(subsets, size=params.votes_per_bit, replace=False))
    signs = np.zeros((size, n), dtype=np.int64)
    if B.table is not None:
        points = np.array(q, dtype=np.int64)[subsets][:, None] ^ (1 << np.arange(n, dtype=np.int64))
        signs[subsets] = 1 - 2 * B.evaluate_many(points)
    else:
        for S in subsets:
            S = int(S)
            for i in range(n):
                tape = uniform_below(rng, B.tape_size)
                signs[S, i] = 1 - 2 * B(q[S] ^ (1 << i), tape)
    used = len(subsets)
    W = walsh_hadamard(signs)
    # bit i of the candidate for guess b is 1 iff noisy votes for 1 win strictly
    guess_bits = (W < 0).astype(np.int64)
    weights = 1 << np.arange(n, dtype=np.int64)
    cand = guess_bits @ weights
    distinct, counts = np.unique(cand, return_counts=True)
    # coordinates c_x = (<x, r_j>)_j locate each candidate's own agreement row in W
    ref_arr = np.array(refs, dtype=np.int64)
    c = np.zeros(distinct.shape, dtype=np.int64)
    for j in range(l):
        c |= _popcount_parity(distinct & ref_arr[j]) << j
    xbits = (distinct[:, None] >> np.arange(n)) & 1
    rows = W[c]
    agree = (used + np.where(xbits == 0, rows, -rows)).sum(axis=1) / 2
    scores = agree / (used * n)
    order = np.lexsort((distinct, -scores))
    return CandidateList(
        n=n,
        candidates=tuple(int(x) for x in distinct[order]),
        scores=tuple(float(s) for s in scores[order]),
        multiplicity=tuple(int(m) for m in counts[order]),
        queries=used * n,
    )


def gl_decode_single(B: RandomizedAlgorithm, n: int, gamma, params: GLParams = GLParams(),
                     mode: str = "uniform", key: Callable[[int, float], tuple] | None = None) -> int:
    """One string from the decoded list.

    ``uniform`` draws an entry uniformly (the single-output contract).
    ``best`` is a heuristic: the top entry by score, or by ``key(x, score)``
    when given.
    """
    cl = gl_decode_list(B, n, gamma, params)
    if mode == "uniform":
        rng = derive(params.seed, "gl-pick")
        return cl.candidates[int(rng.integers(len(cl)))]
    if mode == "best":
        if key is None:
            return cl.best()
        return max(zip(cl.candidates, cl.scores), key=lambda cs: key(*cs))[0]
    raise ValueError(f"unknown selection mode {mode!r}")


def hadamard_brute_decode(B_table, gamma=0) -> CandidateList:
    """Every x whose exact agreement <x, .> vs B_table is at least 1/2 + gamma."""
    bits = B_table.table if isinstance(B_table, TruthTable) else tuple(int(b) for b in B_table)
    n = len(bits).bit_length() - 1
    if len(bits) != 1 << n or n < 1:
        raise ValueError("oracle table length must be a power of two")
    if n > 16:
        raise ValueError("brute-force decoding is limited to n <= 16")
    signs = 1 - 2 * np.array(bits, dtype=np.int64)
    W = walsh_hadamard(signs)
    total = 1 << n
    threshold = Fraction(1, 2) + Fraction(gamma)
    found = []
    for x in range(total):
        score = Fraction(total + int(W[x]), 2 * total)
        if score >= threshold:
            found.append((x, score))
    found.sort(key=lambda xs: (-xs[1], xs[0]))
    return CandidateList(n=n, candidates=tuple(x for x, _ in found), scores=tuple(s for _, s in found))
