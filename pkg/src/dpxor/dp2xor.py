"""From an XOR oracle M for f^{xor k} to a direct-product algorithm for f^k.

Algorithm A computes f^{xor 2i} on a 2i-tuple with two calls to M that share
k - i filler elements, so the fillers cancel under XOR.  Algorithm B turns A
into a noisy oracle for <f^k(x), r>, and Goldreich-Levin decodes f^k(x)
from it.  The 2k variant answers weight-k masks with M directly.

Tapes are mixed-radix integers.  A's tape is decoded, least significant
digit first, as: which i-subset of its input forms the first half
(``C(2i, i)`` choices; halves keep input order), then the fillers
(``2^{n(k-i)}`` fresh strings, or a ``(k-i)``-subset of the host's unused
positions), then one tape for each of the two calls to M.  B's tape size
is the lcm of its branch sizes, and each branch reads ``tape % size``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

from .boolfn import (
    TruthTable,
    central_binomial_prob,
    check_cap,
    direct_product_eval,
    masks_of_weight,
    pack,
    parity,
    restrict_elements,
    unpack,
    xor_eval,
)
from .gldecode import GLParams, gl_decode_list, gl_decode_single
from .oracles import RandomizedAlgorithm, exact_success, xor_target

FRESH = "fresh-random"
WITHIN = "within-tuple"
FILLER_MODES = (FRESH, WITHIN)

HALF = Fraction(1, 2)


@lru_cache(maxsize=None)
def _halves(two_i: int) -> tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]:
    i = two_i // 2
    out = []
    for ys in combinations(range(two_i), i):
        zs = tuple(j for j in range(two_i) if j not in ys)
        out.append((ys, zs))
    return tuple(out)


@lru_cache(maxsize=None)
def _subsets(size: int, r: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(size), r))


def _check_mode(mode: str) -> None:
    if mode not in FILLER_MODES:
        raise ValueError(f"unknown filler mode {mode!r}")


def tape_size_A(n: int, k: int, i: int, mode: str = FRESH, unused: int | None = None,
                m_tape: int = 1) -> int:
    _check_mode(mode)
    if not 0 <= i <= k:
        raise ValueError(f"restriction half-size {i} outside [0, {k}]")
    if mode == FRESH:
        fill = 1 << (n * (k - i))
    else:
        if unused is None or unused < k - i:
            raise ValueError("within-tuple fillers need k - i unused host coordinates")
        fill = math.comb(unused, k - i)
    return math.comb(2 * i, i) * fill * m_tape * m_tape


def algo_A(M: RandomizedAlgorithm, n: int, k: int, xs, tape: int = 0, mode: str = FRESH,
           host=None, used: int | None = None) -> int:
    """M(t, y) ^ M(t, z) for a random split (y, z) of ``xs`` and shared fillers t.

    In within-tuple mode ``xs`` must equal ``host`` restricted to ``used``;
    the fillers are host coordinates outside ``used`` and each call sees
    its k coordinates in host order.
    """
    _check_mode(mode)
    xs = tuple(xs)
    if len(xs) % 2:
        raise ValueError("algorithm A takes an even-length tuple")
    i = len(xs) // 2
    if i > k:
        raise ValueError(f"input of length {2 * i} exceeds 2k = {2 * k}")
    halves = _halves(2 * i)
    ys, zs = halves[tape % len(halves)]
    tape //= len(halves)
    if mode == FRESH:
        fill = 1 << (n * (k - i))
        fillers = unpack(tape % fill, n, k - i)
        tape //= fill
        first = fillers + tuple(xs[j] for j in ys)
        second = fillers + tuple(xs[j] for j in zs)
    else:
        if host is None or used is None:
            raise ValueError("within-tuple mode needs the host tuple and the used mask")
        host = tuple(host)
        positions = [p for p in range(len(host)) if used >> p & 1]
        if len(positions) != 2 * i or tuple(host[p] for p in positions) != xs:
            raise ValueError("xs is not the host restricted to the used mask")
        unused = [p for p in range(len(host)) if not used >> p & 1]
        choices = _subsets(len(unused), k - i)
        P = [unused[j] for j in choices[tape % len(choices)]]
        tape //= len(choices)
        left = sorted(P + [positions[j] for j in ys])
        right = sorted(P + [positions[j] for j in zs])
        first = tuple(host[p] for p in left)
        second = tuple(host[p] for p in right)
    ms = M.tape_size
    return M(pack(first, n), tape % ms) ^ M(pack(second, n), tape // ms % ms)


def tape_size_B_k(n: int, k: int, m_tape: int = 1) -> int:
    sizes = [2] + [tape_size_A(n, k, h // 2, FRESH, m_tape=m_tape) for h in range(0, k + 1, 2)]
    return math.lcm(*sizes)


def algo_B_k(M: RandomizedAlgorithm, n: int, k: int, xs, r: int, tape: int = 0,
             mode: str = FRESH) -> int:
    """Guess <f^k(xs), r>: a coin for odd H(r), otherwise A on xs|_r."""
    _check_mode(mode)
    xs = tuple(xs)
    if len(xs) != k or r >> k:
        raise ValueError(f"mask must have length k = {k}")
    if mode == WITHIN:
        raise ValueError("within-tuple fillers need a 2k host; use algo_B_2k")
    h = r.bit_count()
    if h % 2:
        return tape % 2
    return algo_A(M, n, k, restrict_elements(xs, r), tape % tape_size_A(n, k, h // 2, FRESH,
                                                                        m_tape=M.tape_size))


def _b2k_branch_size(n: int, k: int, h: int, mode: str, m_tape: int) -> int:
    if h == k:
        return m_tape
    if h % 2:
        return 2
    return tape_size_A(n, k, h // 2, mode, unused=2 * k - h, m_tape=m_tape)


def tape_size_B_2k(n: int, k: int, mode: str = FRESH, m_tape: int = 1) -> int:
    return math.lcm(*(_b2k_branch_size(n, k, h, mode, m_tape) for h in range(2 * k + 1)))


def algo_B_2k(M: RandomizedAlgorithm, n: int, k: int, xs, r: int, tape: int = 0,
              mode: str = FRESH) -> int:
    """Guess <f^{2k}(xs), r>; checks H(r) = k, then odd, then even."""
    _check_mode(mode)
    xs = tuple(xs)
    if len(xs) != 2 * k or r >> (2 * k):
        raise ValueError(f"mask must have length 2k = {2 * k}")
    h = r.bit_count()
    sub = restrict_elements(xs, r)
    if h == k:
        return M(pack(sub, n), tape % M.tape_size)
    if h % 2:
        return tape % 2
    size = _b2k_branch_size(n, k, h, mode, M.tape_size)
    return algo_A(M, n, k, sub, tape % size, mode, host=xs, used=r)


def bind_A(M, n: int, k: int, i: int, mode: str = FRESH) -> RandomizedAlgorithm:
    """A on 2i-tuples with fresh fillers, as a standalone algorithm."""
    if mode != FRESH:
        raise ValueError("standalone A needs fresh fillers; within-tuple A lives inside B_2k")
    size = tape_size_A(n, k, i, FRESH, m_tape=M.tape_size)
    return RandomizedAlgorithm(
        2 * i * n, 1, lambda v, t: algo_A(M, n, k, unpack(v, n, 2 * i), t), tape_size=size,
        name=f"A[i={i}]")


def bind_B_k(M, n: int, k: int) -> RandomizedAlgorithm:
    """B over inputs ``x | r << nk``."""
    low = (1 << (n * k)) - 1
    return RandomizedAlgorithm(
        n * k + k, 1, lambda v, t: algo_B_k(M, n, k, unpack(v & low, n, k), v >> (n * k), t),
        tape_size=tape_size_B_k(n, k, M.tape_size), name="B_k")


def bind_B_2k(M, n: int, k: int, mode: str = FRESH) -> RandomizedAlgorithm:
    low = (1 << (2 * n * k)) - 1
    return RandomizedAlgorithm(
        2 * n * k + 2 * k, 1,
        lambda v, t: algo_B_2k(M, n, k, unpack(v & low, n, 2 * k), v >> (2 * n * k), t, mode),
        tape_size=tape_size_B_2k(n, k, mode, M.tape_size), name="B_2k")


@dataclass(frozen=True)
class AdvantageProfile:
    """Per-tuple advantages, keyed by packed tuple."""

    values: dict
    exact: bool = True
    branches: dict = field(default_factory=dict)

    @property
    def mean(self) -> Fraction:
        return sum(self.values.values(), Fraction(0)) / len(self.values)

    def __post_init__(self):
        if any(not -HALF <= v <= HALF for v in self.values.values()):
            raise ValueError("advantage outside [-1/2, 1/2]")


def _gamma_of(M, n: int, k: int, fx: int, xs) -> Fraction:
    ms = M.tape_size
    masks = masks_of_weight(2 * k, k)
    hits = 0
    for r in masks:
        packed = pack(restrict_elements(xs, r), n)
        want = parity(fx & r)
        for t in range(ms):
            hits += M(packed, t) == want
    return Fraction(hits, len(masks) * ms) - HALF


def gamma_profile(M: RandomizedAlgorithm, f: TruthTable, k: int, cap: int | None = None,
                  hosts=None) -> AdvantageProfile:
    """gamma_x = Pr_{H(r)=k}[M(x|_r) = <f^{2k}(x), r>] - 1/2 for 2k-tuples x."""
    n = f.n
    if M.input_len != n * k:
        raise ValueError("M must take k-tuples of n-bit strings")
    domain = range(1 << (2 * n * k)) if hosts is None else hosts
    check_cap(len(domain) * math.comb(2 * k, k) * M.tape_size, cap, "gamma profile")
    values = {}
    for v in domain:
        xs = unpack(v, n, 2 * k)
        values[v] = _gamma_of(M, n, k, direct_product_eval(f, xs), xs)
    return AdvantageProfile(values, exact=hosts is None)


def beta_profile(M: RandomizedAlgorithm, f: TruthTable, k: int, variant: str = "k",
                 mode: str = FRESH, cap: int | None = None) -> AdvantageProfile:
    """beta_x = Pr_{r, tape}[B(x, r) = <f^m(x), r>] - 1/2 with m = k or 2k.

    ``branches[h]`` is the contribution of masks of weight h to the mean, so
    the branch values sum to ``mean`` exactly.
    """
    n = f.n
    if variant == "k":
        m = k
        size_of = lambda h: 2 if h % 2 else tape_size_A(n, k, h // 2, FRESH, m_tape=M.tape_size)
        run = lambda xs, r, t: algo_B_k(M, n, k, xs, r, t, mode)
    elif variant == "2k":
        m = 2 * k
        size_of = lambda h: _b2k_branch_size(n, k, h, mode, M.tape_size)
        run = lambda xs, r, t: algo_B_2k(M, n, k, xs, r, t, mode)
    else:
        raise ValueError("variant is 'k' or '2k'")
    sizes = [size_of(h) for h in range(m + 1)]
    hosts = 1 << (n * m)
    check_cap(hosts * sum(math.comb(m, h) * s for h, s in enumerate(sizes)), cap, "beta profile")
    values = {}
    branch_hits = [Fraction(0)] * (m + 1)
    for v in range(hosts):
        xs = unpack(v, n, m)
        fx = direct_product_eval(f, xs)
        total = Fraction(0)
        for r in range(1 << m):
            h = r.bit_count()
            want = parity(fx & r)
            s = sizes[h]
            p = Fraction(sum(run(xs, r, t) == want for t in range(s)), s) - HALF
            total += p
            branch_hits[h] += p
        values[v] = total / (1 << m)
    scale = hosts << m
    branches = {h: branch_hits[h] / scale for h in range(m + 1)}
    return AdvantageProfile(values, exact=True, branches=branches)


def exact_advantage(M: RandomizedAlgorithm, f: TruthTable, k: int, cap: int | None = None) -> Fraction:
    return exact_success(M, xor_target(f, k), cap).exact - HALF


@dataclass
class CheckRow:
    label: str
    lhs: Fraction
    rhs: Fraction
    relation: str = ">="

    @property
    def ok(self) -> bool:
        if self.relation == ">=":
            return self.lhs >= self.rhs
        if self.relation == "==":
            return self.lhs == self.rhs
        raise ValueError(self.relation)

    def to_dict(self) -> dict:
        from .oracles import frac_str
        return {"check": self.label, "lhs": frac_str(self.lhs), "rhs": frac_str(self.rhs),
                "relation": self.relation, "pass": self.ok}


@dataclass
class LemmaReport:
    lemma: str
    rows: list
    asserted: bool = True
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(row.ok for row in self.rows)

    def to_dict(self) -> dict:
        from .oracles import frac_str
        info = {key: frac_str(v) if isinstance(v, Fraction) else v for key, v in self.info.items()}
        return {"lemma": self.lemma, "asserted": self.asserted,
                "pass": self.passed if self.asserted else None,
                "rows": [row.to_dict() for row in self.rows], **info}


def lemma1_exact_check(M, f: TruthTable, k: int, cap: int | None = None) -> LemmaReport:
    prof = gamma_profile(M, f, k, cap)
    eps = exact_advantage(M, f, k, cap)
    return LemmaReport("lemma1", [CheckRow("mean gamma == advantage of M", prof.mean, eps, "==")],
                       info={"gamma_mean": prof.mean, "epsilon": eps})


def lemma2_exact_check(M, f: TruthTable, xs, k: int) -> LemmaReport:
    """For one 2k-tuple: Pr_{H(r)=2i, tape}[A(x|_r) correct] >= 1/2 + 2 gamma_x^2, each i."""
    n = f.n
    xs = tuple(xs)
    if len(xs) != 2 * k:
        raise ValueError("Lemma 2 is stated for 2k-tuples")
    fx = direct_product_eval(f, xs)
    gamma = _gamma_of(M, n, k, fx, xs)
    rhs = HALF + 2 * gamma * gamma
    rows = []
    for i in range(k + 1):
        size = tape_size_A(n, k, i, WITHIN, unused=2 * k - 2 * i, m_tape=M.tape_size)
        masks = masks_of_weight(2 * k, 2 * i)
        hits = 0
        for r in masks:
            sub = restrict_elements(xs, r)
            want = parity(fx & r)
            for t in range(size):
                hits += algo_A(M, n, k, sub, t, WITHIN, host=xs, used=r) == want
        rows.append(CheckRow(f"i={i}", Fraction(hits, len(masks) * size), rhs))
    return LemmaReport("lemma2", rows, info={"tuple": pack(xs, n), "gamma": gamma})


def lemma3_lemma4_exact_check(M, f: TruthTable, k: int, mode: str = FRESH,
                              cap: int | None = None) -> LemmaReport:
    """E[A correct] >= 1/2 + 2 eps^2 for every size 2i, and mean beta(B_k) >= eps^2.

    eps is the exact mean of gamma (equal to M's advantage by the
    restriction argument; both are recorded).
    """
    n = f.n
    eps = gamma_profile(M, f, k, cap).mean
    rows = []
    for i in range(k + 1):
        if mode == FRESH:
            A = bind_A(M, n, k, i)
            value = exact_success(A, lambda v, i=i: xor_eval(f, unpack(v, n, 2 * i)), cap).exact
        else:
            hosts = 1 << (2 * n * k)
            size = tape_size_A(n, k, i, WITHIN, unused=2 * k - 2 * i, m_tape=M.tape_size)
            masks = masks_of_weight(2 * k, 2 * i)
            check_cap(hosts * len(masks) * size, cap, "within-tuple Lemma 3")
            hits = 0
            for v in range(hosts):
                xs = unpack(v, n, 2 * k)
                fx = direct_product_eval(f, xs)
                for r in masks:
                    sub = restrict_elements(xs, r)
                    want = parity(fx & r)
                    for t in range(size):
                        hits += algo_A(M, n, k, sub, t, WITHIN, host=xs, used=r) == want
            value = Fraction(hits, hosts * len(masks) * size)
        rows.append(CheckRow(f"lemma3 size={2 * i}", value, HALF + 2 * eps * eps))
    beta = beta_profile(M, f, k, "k", FRESH, cap)
    rows.append(CheckRow("lemma4 mean beta", beta.mean, eps * eps))
    return LemmaReport("lemma3+4", rows, info={"epsilon": eps, "beta_mean": beta.mean,
                                                "advantage": exact_advantage(M, f, k, cap)})


def lemma5_exact_check(M, f: TruthTable, k: int, mode: str = FRESH,
                       cap: int | None = None) -> LemmaReport:
    """mean beta(B_2k) >= Pr[H=k] eps + Pr[H even, != k] 2 eps^2, by branch split.

    Asserted for even k only; odd k is reported.
    """
    eps = exact_advantage(M, f, k, cap)
    beta = beta_profile(M, f, k, "2k", mode, cap)
    p_mid = central_binomial_prob(k)
    p_even = sum((Fraction(math.comb(2 * k, h), 4**k) for h in range(0, 2 * k + 1, 2) if h != k),
                 Fraction(0))
    rows = [
        CheckRow("mean beta >= bound", beta.mean, p_mid * eps + p_even * 2 * eps * eps),
        CheckRow("H(r)=k branch == C(2k,k)/4^k * eps", beta.branches[k], p_mid * eps, "=="),
        CheckRow("branch sum == mean beta", sum(beta.branches.values(), Fraction(0)), beta.mean, "=="),
    ]
    return LemmaReport("lemma5", rows, asserted=k % 2 == 0,
                       info={"epsilon": eps, "beta_mean": beta.mean,
                             "branches": {str(h): str(v) for h, v in beta.branches.items()}})


SELECT_MODES = ("uniform", "best", "best-parity")


def _check_select(select: str) -> None:
    if select not in SELECT_MODES:
        raise ValueError(f"selection mode must be one of {SELECT_MODES}")


def thm1_gamma(eps) -> Fraction:
    eps = Fraction(eps)
    return eps * eps


def thm3_gamma(eps, k: int) -> Fraction:
    eps = Fraction(eps)
    return eps * central_binomial_prob(k) + eps * eps


def _gl_params(params, gamma, n_bits):
    if params.guess_bits is None and gamma <= 0:
        from .gldecode import MAX_GUESS_BITS
        return GLParams(MAX_GUESS_BITS, params.votes_per_bit, params.seed)
    return params


def reduce_thm1(M: RandomizedAlgorithm, n: int, k: int, eps, params: GLParams = GLParams(),
                select: str = "uniform") -> RandomizedAlgorithm:
    """M' for f^k: Goldreich-Levin against r -> B_k(M, x, r) with gamma = eps^2.

    ``uniform`` returns a uniform entry of the decoded list.  ``best`` takes
    the top-scoring entry.  ``best-parity`` (a heuristic) also spends one
    call M(x) and prefers candidates whose parity matches it: B_k gives the
    same answers for f^k(x) and its complement, so only this check can
    separate them, and it only helps for odd k.
    """
    _check_select(select)
    eps = Fraction(eps)
    if eps <= Fraction(1, 2**k):
        warnings.warn(f"eps = {eps} is not above 2^-k; the reduction carries no guarantee",
                      stacklevel=2)
    gamma = thm1_gamma(eps)
    params = _gl_params(params, gamma, k)
    bsize = tape_size_B_k(n, k, M.tape_size)

    def rule(v: int, tape: int) -> int:
        xs = unpack(v, n, k)
        pred = RandomizedAlgorithm(k, 1, lambda r, t: algo_B_k(M, n, k, xs, r, t), tape_size=bsize)
        p = params.with_seed(tape)
        if select == "best-parity":
            m = M(v, tape % M.tape_size)
            return gl_decode_single(pred, k, gamma, p, "best", key=lambda x, s: (parity(x) == m, s))
        return gl_decode_single(pred, k, gamma, p, "best" if select == "best" else "uniform")

    return RandomizedAlgorithm(n * k, k, rule, tape_size=1 << 64, name=f"thm1[{select}]")


def reduce_thm3(M: RandomizedAlgorithm, n: int, k: int, eps, params: GLParams = GLParams(),
                select: str = "uniform", mode: str = FRESH) -> RandomizedAlgorithm:
    """M'' for f^{2k}: Goldreich-Levin against r -> B_2k(M, x, r).

    gamma = eps * C(2k,k)/4^k + eps^2.  Use :func:`truncate` for f^k.
    """
    _check_select(select)
    if select == "best-parity":
        raise ValueError("best-parity applies to the k-wise reduction only")
    eps = Fraction(eps)
    if eps <= Fraction(1, 2**k):
        warnings.warn(f"eps = {eps} is not above 2^-k; the reduction carries no guarantee",
                      stacklevel=2)
    gamma = thm3_gamma(eps, k)
    params = _gl_params(params, gamma, 2 * k)
    bsize = tape_size_B_2k(n, k, mode, M.tape_size)

    def rule(v: int, tape: int) -> int:
        xs = unpack(v, n, 2 * k)
        pred = RandomizedAlgorithm(2 * k, 1, lambda r, t: algo_B_2k(M, n, k, xs, r, t, mode),
                                   tape_size=bsize)
        return gl_decode_single(pred, 2 * k, gamma, params.with_seed(tape), select)

    return RandomizedAlgorithm(2 * n * k, 2 * k, rule, tape_size=1 << 64, name=f"thm3[{select}]")


def truncate(M2: RandomizedAlgorithm, n: int, k: int) -> RandomizedAlgorithm:
    """f^k from an f^{2k} algorithm: pad with k tape-chosen elements, keep the first k bits."""
    pad_size = 1 << (n * k)

    def rule(v: int, tape: int) -> int:
        full = v | (tape % pad_size) << (n * k)
        return M2(full, tape // pad_size) & ((1 << k) - 1)

    return RandomizedAlgorithm(n * k, k, rule, tape_size=pad_size * M2.tape_size,
                               name=f"truncate[{M2.name}]")


def predicate_B_k(M, n: int, k: int, xs) -> RandomizedAlgorithm:
    xs = tuple(xs)
    return RandomizedAlgorithm(k, 1, lambda r, t: algo_B_k(M, n, k, xs, r, t),
                               tape_size=tape_size_B_k(n, k, M.tape_size))


def gl_list_for_tuple(M, n: int, k: int, xs, eps, params: GLParams = GLParams()):
    """Decoded list for one tuple under the k-wise reduction (diagnostics)."""
    gamma = thm1_gamma(eps)
    return gl_decode_list(predicate_B_k(M, n, k, xs), k, gamma, _gl_params(params, gamma, k))
