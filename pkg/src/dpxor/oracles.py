"""Randomized algorithms as pure (input, tape) maps, success measurement, planted adversaries.

A tape is an integer drawn uniformly from ``range(tape_size)``.  Tape sizes
need not be powers of two, which lets exact enumeration cover uniform choices
over sets like "all i-subsets of 2i positions" without rejection sampling.
"""

from __future__ import annotations

import math
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ._random import derive, uniform_below
from .boolfn import (
    TruthTable,
    agreement,
    check_cap,
    direct_product_eval,
    distance,
    unpack,
    xor_eval,
    xor_zero_advantage,
)

Z95 = 1.959963984540054

_FRACTION_RE = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_fraction(text: str | Fraction | int) -> Fraction:
    """Parse ``"p/q"`` or an integer; decimal strings are rejected on purpose."""
    if isinstance(text, (Fraction, int)):
        return Fraction(text)
    m = _FRACTION_RE.match(str(text))
    if not m:
        raise ValueError(f"expected a rational 'p/q', got {text!r}")
    den = int(m.group(2)) if m.group(2) else 1
    if den == 0:
        raise ValueError("zero denominator")
    return Fraction(int(m.group(1)), den)


def frac_str(x: Fraction | int) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


class RandomizedAlgorithm:
    """A pure map ``(input, tape) -> output`` with a thread-safe query counter."""

    def __init__(
        self,
        input_len: int,
        output_len: int,
        rule: Callable[[int, int], int] | None = None,
        *,
        tape_len: int | None = None,
        tape_size: int | None = None,
        table: Sequence[int] | None = None,
        name: str = "",
    ):
        if tape_size is None:
            tape_size = 1 << (tape_len or 0)
        elif tape_len is not None and tape_size != 1 << tape_len:
            raise ValueError("give tape_len or tape_size, not conflicting both")
        if tape_size < 1:
            raise ValueError("tape_size must be positive")
        if table is not None:
            if len(table) != 1 << input_len:
                raise ValueError("table length must be 2^input_len")
            if tape_size != 1:
                raise ValueError("table-backed algorithms are deterministic")
            table = tuple(int(v) for v in table)
            rule = _table_rule(table)
        if rule is None:
            raise ValueError("need a rule or a table")
        self.input_len = input_len
        self.output_len = output_len
        self.tape_size = tape_size
        self.rule = rule
        self.table = table
        self.name = name
        self._calls = 0
        self._lock = threading.Lock()
        self._array = None

    @classmethod
    def from_table(cls, input_len: int, output_len: int, table: Sequence[int], name: str = ""):
        return cls(input_len, output_len, table=table, name=name)

    @property
    def tape_len(self) -> int:
        return (self.tape_size - 1).bit_length()

    @property
    def deterministic(self) -> bool:
        return self.tape_size == 1

    @property
    def query_count(self) -> int:
        return self._calls

    def reset_count(self) -> None:
        with self._lock:
            self._calls = 0

    def _tally(self, amount: int) -> None:
        with self._lock:
            self._calls += amount

    def __call__(self, x: int, tape: int = 0) -> int:
        self._tally(1)
        return self.rule(x, tape)

    def evaluate_many(self, xs, tapes=None) -> np.ndarray:
        """Vectorised evaluation; counts one query per input."""
        xs = np.asarray(xs, dtype=np.int64)
        if self.table is not None:
            if self._array is None:
                self._array = np.asarray(self.table, dtype=np.int64)
            self._tally(xs.size)
            return self._array[xs]
        if tapes is None:
            tapes = np.zeros_like(xs)
        return np.fromiter((self(int(x), int(t)) for x, t in zip(xs.ravel(), np.ravel(tapes))),
                           dtype=np.int64, count=xs.size).reshape(xs.shape)

    def tabulate(self, cap: int | None = None) -> tuple[int, ...]:
        if not self.deterministic:
            raise ValueError("only deterministic algorithms can be tabulated")
        if self.table is not None:
            return self.table
        check_cap(1 << self.input_len, cap, "tabulation")
        return tuple(self(x) for x in range(1 << self.input_len))

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return (f"<RandomizedAlgorithm{label} in={self.input_len} out={self.output_len} "
                f"tape_size={self.tape_size}>")


def _table_rule(table):
    def rule(x, tape=0):
        return table[x]
    return rule


@dataclass(frozen=True)
class SuccessEstimate:
    point: float
    method: str
    trials: int
    ci95: float
    exact: Fraction | None = None

    def __post_init__(self):
        if not 0 <= self.point <= 1:
            raise ValueError("success probability outside [0, 1]")
        if self.method == "exact" and (self.ci95 != 0 or self.exact is None):
            raise ValueError("exact estimates carry a value and no confidence radius")

    @property
    def low(self) -> float:
        return self.point - self.ci95

    @property
    def high(self) -> float:
        return self.point + self.ci95

    def to_dict(self) -> dict:
        return {
            "point": self.point,
            "method": self.method,
            "trials": self.trials,
            "ci95": self.ci95,
            "exact": frac_str(self.exact) if self.exact is not None else None,
        }


def _target_fn(target):
    if isinstance(target, TruthTable):
        return target.table.__getitem__
    if callable(target):
        return target
    return tuple(target).__getitem__


def exact_success(alg: RandomizedAlgorithm, target, cap: int | None = None) -> SuccessEstimate:
    """Exact Pr over uniform input and tape that ``alg`` matches ``target``."""
    size = (1 << alg.input_len) * alg.tape_size
    check_cap(size, cap, "exact success")
    want = _target_fn(target)
    if alg.table is not None:
        got = alg.evaluate_many(np.arange(1 << alg.input_len))
        expected = np.fromiter((want(x) for x in range(1 << alg.input_len)), dtype=np.int64)
        hits = int(np.count_nonzero(got == expected))
    else:
        hits = 0
        for x in range(1 << alg.input_len):
            w = want(x)
            for tape in range(alg.tape_size):
                hits += alg(x, tape) == w
    value = Fraction(hits, size)
    return SuccessEstimate(float(value), "exact", 0, 0.0, value)


def draw_trial(seed: int, j: int, input_len: int, tape_size: int) -> tuple[int, int]:
    rng = derive(seed, "trial", j)
    return uniform_below(rng, 1 << input_len), uniform_below(rng, tape_size)


def mc_success(
    alg: RandomizedAlgorithm,
    target,
    trials: int,
    seed: int,
    workers: int = 1,
) -> SuccessEstimate:
    """Monte-Carlo success with a normal-approximation 95% radius.

    Trial ``j`` draws its input and tape from ``(seed, j)`` alone, so the
    estimate is identical for any worker count or execution order.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    want = _target_fn(target)

    def run(lo: int, hi: int) -> int:
        hits = 0
        for j in range(lo, hi):
            x, tape = draw_trial(seed, j, alg.input_len, alg.tape_size)
            hits += alg(x, tape) == want(x)
        return hits

    if workers <= 1:
        hits = run(0, trials)
    else:
        bounds = [trials * w // workers for w in range(workers + 1)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(run, bounds[:-1], bounds[1:]))
    p = hits / trials
    return SuccessEstimate(p, "monte-carlo", trials, Z95 * math.sqrt(p * (1 - p) / trials))


@dataclass(frozen=True)
class AdversaryModel:
    """How planted adversaries are built.

    ``random-subset`` answers correctly on a seeded random set of tuples of
    the right size; ``planted-function`` answers for a decoy ``g`` everywhere.
    ``wrong`` picks the incorrect answer of a direct-product adversary:
    ``flip-first`` flips output bit 0, ``random-wrong`` draws a uniform wrong string.
    """

    kind: str = "random-subset"
    seed: int = 0
    decoy: TruthTable | None = None
    wrong: str = "flip-first"

    def __post_init__(self):
        if self.kind not in ("random-subset", "planted-function"):
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        if self.wrong not in ("flip-first", "random-wrong"):
            raise ValueError(f"unknown wrongness convention {self.wrong!r}")
        if self.decoy is not None and self.kind != "planted-function":
            raise ValueError("a decoy table only applies to the planted-function model")

    def to_dict(self, epsilon_target: Fraction | None = None) -> dict:
        out = {"kind": self.kind, "seed": self.seed}
        if epsilon_target is not None:
            out["epsilon_target"] = frac_str(epsilon_target)
        if self.decoy is not None:
            out["decoy"] = self.decoy.to_dict()
        if self.wrong != "flip-first":
            out["wrong"] = self.wrong
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> tuple["AdversaryModel", Fraction | None]:
        decoy = TruthTable.from_dict(obj["decoy"]) if obj.get("decoy") else None
        model = cls(obj["kind"], int(obj.get("seed", 0)), decoy, obj.get("wrong", "flip-first"))
        eps = obj.get("epsilon_target")
        return model, (parse_fraction(eps) if eps is not None else None)


def _nearest_count(target: Fraction, domain: int) -> int:
    # round half up on the exact rational
    return math.floor(target * domain + Fraction(1, 2))


def _auto_decoy(f: TruthTable, score: Callable[[Fraction], Fraction], rng, max_flips: int):
    """Decoy g = f with j flipped positions, j chosen to minimise ``score(j / 2^n)``."""
    size = len(f)
    best = min(range(max_flips + 1), key=lambda j: (score(Fraction(j, size)), j))
    flips = rng.choice(size, size=best, replace=False) if best else []
    return f.flip(int(p) for p in flips)


def plant_xor_adversary(f: TruthTable, k: int, eps_target, model: AdversaryModel = AdversaryModel(),
                        cap: int | None = None):
    """Deterministic M with exact advantage ``eps_achieved`` for f^{xor k}."""
    eps = Fraction(eps_target)
    if not 0 <= eps <= Fraction(1, 2):
        raise ValueError(f"XOR advantage target {eps} outside [0, 1/2]")
    n = f.n
    domain = 1 << (n * k)
    check_cap(domain, cap, "XOR adversary domain")
    rng = derive(model.seed, "xor-adversary", n, k)
    if model.kind == "random-subset":
        truth = [xor_eval(f, unpack(v, n, k)) for v in range(domain)]
        correct = _nearest_count(Fraction(1, 2) + eps, domain)
        table = [b ^ 1 for b in truth]
        for v in rng.permutation(domain)[:correct]:
            table[int(v)] ^= 1
        achieved = Fraction(correct, domain) - Fraction(1, 2)
        decoy = None
    else:
        decoy = model.decoy
        if decoy is None:
            decoy = _auto_decoy(f, lambda d: abs(xor_zero_advantage(d, k) - Fraction(1, 2) - eps),
                                rng, len(f) // 2)
        if decoy.n != n:
            raise ValueError("decoy arity differs from f")
        table = [xor_eval(decoy, unpack(v, n, k)) for v in range(domain)]
        achieved = xor_zero_advantage(distance(f, decoy), k) - Fraction(1, 2)
    M = RandomizedAlgorithm.from_table(n * k, 1, table, name=f"xor-adversary[{model.kind}]")
    M.decoy = decoy
    return M, achieved


def plant_dp_adversary(f: TruthTable, k: int, eps_target, model: AdversaryModel = AdversaryModel(),
                       cap: int | None = None):
    """Deterministic C' that computes f^k on exactly an ``eps_achieved`` fraction."""
    eps = Fraction(eps_target)
    if not 0 < eps <= 1:
        raise ValueError(f"direct-product success target {eps} outside (0, 1]")
    n = f.n
    domain = 1 << (n * k)
    check_cap(domain, cap, "direct-product adversary domain")
    rng = derive(model.seed, "dp-adversary", n, k)
    if model.kind == "random-subset":
        truth = [direct_product_eval(f, unpack(v, n, k)) for v in range(domain)]
        if model.wrong == "flip-first":
            table = [t ^ 1 for t in truth]
        else:
            offsets = rng.integers(1, 1 << k, size=domain)
            table = [t ^ int(o) for t, o in zip(truth, offsets)]
        correct = _nearest_count(eps, domain)
        for v in rng.permutation(domain)[:correct]:
            table[int(v)] = truth[int(v)]
        achieved = Fraction(correct, domain)
        decoy = None
    else:
        decoy = model.decoy
        if decoy is None:
            decoy = _auto_decoy(f, lambda d: abs((1 - d) ** k - eps), rng, len(f))
        if decoy.n != n:
            raise ValueError("decoy arity differs from f")
        table = [direct_product_eval(decoy, unpack(v, n, k)) for v in range(domain)]
        achieved = agreement(f, decoy) ** k
    C = RandomizedAlgorithm.from_table(n * k, k, table, name=f"dp-adversary[{model.kind}]")
    C.decoy = decoy
    return C, achieved


def xor_target(f: TruthTable, k: int):
    return lambda v: xor_eval(f, unpack(v, f.n, k))


def dp_target(f: TruthTable, k: int):
    return lambda v: direct_product_eval(f, unpack(v, f.n, k))
