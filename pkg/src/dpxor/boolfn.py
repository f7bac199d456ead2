"""Truth tables, k-tuples, masks and the closed-form XOR advantage.

Bit conventions are fixed once for the whole package:

* an n-bit input string ``x`` is an ``int`` with ``x[0]`` the least
  significant bit, so ``table[x]`` is ``f(x)``;
* a k-tuple packs element ``j`` into bits ``[j*n, (j+1)*n)``;
* a mask ``r`` of length m is an ``int`` whose bit ``j`` selects position ``j``.

String literals such as ``"101"`` are read left to right as bit 0, bit 1, ...
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

MAX_ARITY = 20
DEFAULT_CAP = 1 << 28

_cap = DEFAULT_CAP


class ArityError(ValueError):
    pass


class EnumerationCapError(RuntimeError):
    """Raised when exact enumeration would exceed the configured cap."""


def get_cap(cap: int | None = None) -> int:
    return _cap if cap is None else cap


def set_default_cap(cap: int) -> None:
    global _cap
    if cap < 1:
        raise ValueError("enumeration cap must be positive")
    _cap = cap


def check_cap(size: int, cap: int | None = None, what: str = "enumeration") -> None:
    limit = get_cap(cap)
    if size > limit:
        raise EnumerationCapError(f"{what} needs {size} iterations, cap is {limit}")


def bits(s: str) -> int:
    """Parse a bit string, first character is bit 0."""
    if any(c not in "01" for c in s):
        raise ValueError(f"not a bit string: {s!r}")
    return sum(1 << i for i, c in enumerate(s) if c == "1")


def bitstring(value: int, length: int) -> str:
    return "".join("1" if value >> i & 1 else "0" for i in range(length))


def hamming_weight(value: int) -> int:
    return value.bit_count()


def parity(value: int) -> int:
    return value.bit_count() & 1


@dataclass(frozen=True)
class TruthTable:
    n: int
    table: tuple[int, ...]
    packed: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 1 <= self.n <= MAX_ARITY:
            raise ArityError(f"arity {self.n} outside [1, {MAX_ARITY}]")
        table = tuple(int(b) for b in self.table)
        if len(table) != 1 << self.n:
            raise ArityError(f"table has {len(table)} entries, expected {1 << self.n}")
        if any(b not in (0, 1) for b in table):
            raise ValueError("truth table entries must be 0 or 1")
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "packed", sum(b << i for i, b in enumerate(table)))

    @classmethod
    def from_int(cls, n: int, packed: int) -> "TruthTable":
        return cls(n, tuple(packed >> i & 1 for i in range(1 << n)))

    @classmethod
    def from_function(cls, n: int, fn) -> "TruthTable":
        return cls(n, tuple(int(fn(x)) & 1 for x in range(1 << n)))

    @classmethod
    def constant(cls, n: int, value: int) -> "TruthTable":
        return cls(n, (value & 1,) * (1 << n))

    @classmethod
    def parity_function(cls, n: int) -> "TruthTable":
        return cls.from_function(n, parity)

    @classmethod
    def random(cls, n: int, rng) -> "TruthTable":
        """Uniform table from a numpy Generator."""
        return cls(n, tuple(int(b) for b in rng.integers(0, 2, size=1 << n)))

    def __call__(self, x: int) -> int:
        return self.table[x]

    def __len__(self) -> int:
        return len(self.table)

    @property
    def weight(self) -> int:
        return self.packed.bit_count()

    def complement(self) -> "TruthTable":
        return TruthTable(self.n, tuple(1 - b for b in self.table))

    def flip(self, positions: Iterable[int]) -> "TruthTable":
        table = list(self.table)
        for p in positions:
            table[p] ^= 1
        return TruthTable(self.n, tuple(table))

    def to_hex(self) -> str:
        return self.packed.to_bytes(max(1, (1 << self.n) // 8), "little").hex()

    def to_dict(self) -> dict:
        return {"n": self.n, "bits": self.to_hex()}

    @classmethod
    def from_dict(cls, obj: dict) -> "TruthTable":
        n = int(obj["n"])
        raw = bytes.fromhex(obj["bits"])
        if len(raw) != max(1, (1 << n) // 8):
            raise ValueError(f"expected {max(1, (1 << n) // 8)} bytes for n={n}")
        packed = int.from_bytes(raw, "little")
        if packed >> (1 << n):
            raise ValueError("padding bits beyond 2^n must be zero")
        return cls.from_int(n, packed)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "TruthTable":
        return cls.from_dict(json.loads(text))


def pack(elements: Sequence[int], n: int) -> int:
    out = 0
    for j, e in enumerate(elements):
        out |= e << (j * n)
    return out


def unpack(value: int, n: int, k: int) -> tuple[int, ...]:
    mask = (1 << n) - 1
    return tuple(value >> (j * n) & mask for j in range(k))


@dataclass(frozen=True)
class KTuple:
    n: int
    elements: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if any(not 0 <= e < 1 << self.n for e in self.elements):
            raise ArityError(f"tuple element outside {self.n} bits")

    @property
    def k(self) -> int:
        return len(self.elements)

    @property
    def packed(self) -> int:
        return pack(self.elements, self.n)

    @classmethod
    def from_packed(cls, value: int, n: int, k: int) -> "KTuple":
        if value >> (n * k):
            raise ValueError("packed value wider than n*k bits")
        return cls(n, unpack(value, n, k))

    @classmethod
    def from_strings(cls, *strings: str) -> "KTuple":
        n = len(strings[0])
        return cls(n, tuple(bits(s) for s in strings))


@dataclass(frozen=True)
class Mask:
    length: int
    value: int

    def __post_init__(self):
        if self.value < 0 or self.value >> self.length:
            raise ValueError("mask value wider than its length")

    @classmethod
    def from_str(cls, s: str) -> "Mask":
        return cls(len(s), bits(s))

    @classmethod
    def ones(cls, m: int) -> "Mask":
        return cls(m, (1 << m) - 1)

    @property
    def weight(self) -> int:
        return self.value.bit_count()

    def positions(self) -> tuple[int, ...]:
        return tuple(j for j in range(self.length) if self.value >> j & 1)


def _elements(xs) -> tuple[int, ...]:
    return xs.elements if isinstance(xs, KTuple) else tuple(xs)


def _check_arity(f: TruthTable, xs) -> None:
    if isinstance(xs, KTuple) and xs.n != f.n:
        raise ArityError(f"tuple arity {xs.n} != function arity {f.n}")


def evaluate(f: TruthTable, x: int | str) -> int:
    if isinstance(x, str):
        if len(x) != f.n:
            raise ArityError(f"input has {len(x)} bits, function arity is {f.n}")
        x = bits(x)
    if not 0 <= x < 1 << f.n:
        raise ArityError(f"input {x} is not an {f.n}-bit string")
    return f.table[x]


def direct_product_eval(f: TruthTable, xs) -> int:
    """f^k on a tuple; bit j of the result is f(x_j)."""
    _check_arity(f, xs)
    out = 0
    for j, x in enumerate(_elements(xs)):
        out |= evaluate(f, x) << j
    return out


def xor_eval(f: TruthTable, xs) -> int:
    _check_arity(f, xs)
    out = 0
    for x in _elements(xs):
        out ^= evaluate(f, x)
    return out


def restrict_elements(elements: Sequence[int], mask: int) -> tuple[int, ...]:
    return tuple(e for j, e in enumerate(elements) if mask >> j & 1)


def restrict(xs, r: Mask):
    """Sub-tuple at the set positions of ``r`` in ascending order."""
    elements = _elements(xs)
    if r.length != len(elements):
        raise ValueError(f"mask length {r.length} != tuple length {len(elements)}")
    sub = restrict_elements(elements, r.value)
    return KTuple(xs.n, sub) if isinstance(xs, KTuple) else sub


def inner_product(v: int | str, r: Mask | str | int, length: int | None = None) -> int:
    if isinstance(r, str):
        r = Mask.from_str(r)
    if isinstance(v, str):
        if isinstance(r, Mask) and len(v) != r.length:
            raise ValueError("inner product of strings with different lengths")
        v = bits(v)
    if isinstance(r, Mask):
        if v >> r.length:
            raise ValueError("vector longer than mask")
        r = r.value
    elif length is not None and (v >> length or r >> length):
        raise ValueError(f"operands wider than {length} bits")
    return (v & r).bit_count() & 1


def xor_zero_advantage(omega: Fraction, k: int) -> Fraction:
    """Probability that k uniform draws from a string of density omega XOR to 0."""
    omega = Fraction(omega)
    if not 0 <= omega <= 1:
        raise ValueError("density must lie in [0, 1]")
    if k < 0:
        raise ValueError("k must be non-negative")
    return Fraction(1, 2) + (1 - 2 * omega) ** k / 2


def _as_bitlist(m) -> list[int]:
    if isinstance(m, str):
        if not set(m) <= {"0", "1"}:
            raise ValueError(f"not a bit string: {m!r}")
        return [int(c) for c in m]
    if isinstance(m, TruthTable):
        return list(m.table)
    return [int(b) & 1 for b in m]


def empirical_xor_zero_rate(m, k: int, cap: int | None = None, method: str = "auto") -> Fraction:
    """Exact Pr over (i_1..i_k) in [len]^k that m[i_1] ^ ... ^ m[i_k] == 0.

    ``method="brute"`` walks every index tuple and honours the cap.
    ``method="transfer"`` counts the same tuples one coordinate at a time,
    carrying (even, odd) tallies, so it scales to length 256, k = 4.
    ``"auto"`` picks brute when it fits under the cap.
    """
    seq = _as_bitlist(m)
    if not seq:
        raise ValueError("m must be nonempty")
    if k < 0:
        raise ValueError("k must be non-negative")
    size = len(seq) ** k
    if method == "auto":
        method = "brute" if size <= get_cap(cap) else "transfer"
    if method == "brute":
        check_cap(size, cap, "xor-rate enumeration")
        even = 0
        for idx in itertools.product(range(len(seq)), repeat=k):
            acc = 0
            for i in idx:
                acc ^= seq[i]
            even += acc == 0
        return Fraction(even, size)
    if method != "transfer":
        raise ValueError(f"unknown method {method!r}")
    even, odd = 1, 0
    for _ in range(k):
        new_even = new_odd = 0
        for b in seq:
            if b:
                new_even += odd
                new_odd += even
            else:
                new_even += even
                new_odd += odd
        even, odd = new_even, new_odd
    return Fraction(even, size)


def agreement(f: TruthTable, g: TruthTable) -> Fraction:
    if f.n != g.n:
        raise ArityError(f"arity mismatch {f.n} vs {g.n}")
    differ = (f.packed ^ g.packed).bit_count()
    return Fraction(len(f) - differ, len(f))


def distance(f: TruthTable, g: TruthTable) -> Fraction:
    return 1 - agreement(f, g)


def central_binomial_prob(k: int) -> Fraction:
    """Pr[H(r) = k] for uniform r in {0,1}^{2k}."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return Fraction(math.comb(2 * k, k), 4**k)


@lru_cache(maxsize=None)
def masks_of_weight(m: int, w: int) -> tuple[int, ...]:
    return tuple(sum(1 << j for j in c) for c in itertools.combinations(range(m), w))


def all_tuples(n: int, k: int, cap: int | None = None) -> Iterator[tuple[int, ...]]:
    check_cap(1 << (n * k), cap, f"tuple space ({{0,1}}^{n})^{k}")
    return itertools.product(range(1 << n), repeat=k)
