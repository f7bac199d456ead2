"""Exact audits of the information-theoretic family bounds.

Every probability here is over uniform k-tuples and is computed by full
enumeration, so all comparisons are between rationals.  Audits report
whether their hypotheses hold and pass when hypotheses imply conclusion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from ._random import derive
from .boolfn import ArityError, TruthTable, check_cap, distance, xor_zero_advantage
from .oracles import frac_str

HALF = Fraction(1, 2)


def _coords(n: int, k: int, cap: int | None = None) -> np.ndarray:
    """(2^{nk}, k) array of tuple elements in packed order."""
    size = 1 << (n * k)
    check_cap(size, cap, "tuple enumeration")
    v = np.arange(size, dtype=np.int64)
    return (v[:, None] >> (n * np.arange(k, dtype=np.int64))) & ((1 << n) - 1)


def _dp_values(f: TruthTable, coords: np.ndarray) -> np.ndarray:
    t = np.asarray(f.table, dtype=np.int64)
    return (t[coords] << np.arange(coords.shape[1], dtype=np.int64)).sum(axis=1)


def _xor_values(f: TruthTable, coords: np.ndarray) -> np.ndarray:
    t = np.asarray(f.table, dtype=np.int64)
    return np.bitwise_xor.reduce(t[coords], axis=1)


def dp_agreement(f: TruthTable, g: TruthTable, k: int, cap: int | None = None) -> Fraction:
    """Pr[f^k = g^k], counted over every tuple."""
    c = _coords(f.n, k, cap)
    return Fraction(int(np.count_nonzero(_dp_values(f, c) == _dp_values(g, c))), len(c))


def xor_agreement(f: TruthTable, g: TruthTable, k: int, cap: int | None = None) -> Fraction:
    c = _coords(f.n, k, cap)
    return Fraction(int(np.count_nonzero(_xor_values(f, c) == _xor_values(g, c))), len(c))


@dataclass(frozen=True)
class FunctionFamily:
    n: int
    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        if any(m.n != self.n for m in members):
            raise ArityError("family members must share one arity")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, i: int) -> TruthTable:
        return self.members[i]

    def agreement_matrix(self) -> list[list[Fraction]]:
        return [[1 - distance(f, g) for g in self.members] for f in self.members]

    def distance_matrix(self) -> list[list[Fraction]]:
        return [[distance(f, g) for g in self.members] for f in self.members]

    def min_distance(self) -> Fraction:
        pairs = [distance(f, g) for f, g in combinations(self.members, 2)]
        return min(pairs) if pairs else Fraction(1)

    def max_distance(self) -> Fraction:
        pairs = [distance(f, g) for f, g in combinations(self.members, 2)]
        return max(pairs) if pairs else Fraction(0)

    def to_list(self) -> list:
        return [m.to_dict() for m in self.members]

    def to_json(self) -> str:
        return json.dumps(self.to_list())

    @classmethod
    def from_list(cls, items: list) -> "FunctionFamily":
        members = [TruthTable.from_dict(d) for d in items]
        if not members:
            raise ValueError("a family needs at least one member")
        return cls(members[0].n, tuple(members))

    @classmethod
    def from_json(cls, text: str) -> "FunctionFamily":
        return cls.from_list(json.loads(text))


@dataclass(frozen=True)
class PiecewiseB:
    """B(x) = f_{assignment[i]}^k(x) for packed x in [boundaries[i], boundaries[i+1])."""

    t: int
    boundaries: tuple
    assignment: tuple

    def __post_init__(self):
        b = tuple(self.boundaries)
        if len(b) != self.t + 1 or b[0] != 0 or any(lo > hi for lo, hi in zip(b, b[1:])):
            raise ValueError("boundaries must be t+1 non-decreasing cut points from 0")
        if len(self.assignment) != self.t:
            raise ValueError("one member index per part")
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "assignment", tuple(self.assignment))

    @classmethod
    def near_equal(cls, domain: int, t: int) -> "PiecewiseB":
        return cls(t, tuple(i * domain // t for i in range(t + 1)), tuple(range(t)))

    def part_sizes(self) -> list[int]:
        return [hi - lo for lo, hi in zip(self.boundaries, self.boundaries[1:])]

    def table(self, family: FunctionFamily, k: int, cap: int | None = None) -> np.ndarray:
        c = _coords(family.n, k, cap)
        if self.boundaries[-1] != len(c):
            raise ValueError("partition does not cover the tuple domain")
        out = np.empty(len(c), dtype=np.int64)
        for (lo, hi), m in zip(zip(self.boundaries, self.boundaries[1:]), self.assignment):
            out[lo:hi] = _dp_values(family[m], c[lo:hi])
        return out

    def to_dict(self) -> dict:
        return {"t": self.t, "boundaries": list(self.boundaries), "assignment": list(self.assignment)}

    @classmethod
    def from_dict(cls, obj: dict) -> "PiecewiseB":
        return cls(int(obj["t"]), tuple(obj["boundaries"]), tuple(obj["assignment"]))


@dataclass
class Check:
    label: str
    lhs: Fraction
    rhs: Fraction
    relation: str

    @property
    def ok(self) -> bool:
        return {"<=": self.lhs <= self.rhs, "<": self.lhs < self.rhs,
                ">=": self.lhs >= self.rhs, ">": self.lhs > self.rhs,
                "==": self.lhs == self.rhs}[self.relation]

    def to_dict(self) -> dict:
        return {"check": self.label, "lhs": frac_str(self.lhs), "rhs": frac_str(self.rhs),
                "relation": self.relation, "pass": self.ok}


@dataclass
class AuditReport:
    name: str
    hypotheses: list
    conclusions: list
    info: dict = field(default_factory=dict)
    asserted: bool = True

    @property
    def hypotheses_hold(self) -> bool:
        return all(c.ok for c in self.hypotheses)

    @property
    def conclusion_holds(self) -> bool:
        return all(c.ok for c in self.conclusions)

    @property
    def passed(self) -> bool:
        return not self.hypotheses_hold or self.conclusion_holds

    def to_dict(self) -> dict:
        info = {key: frac_str(v) if isinstance(v, Fraction) else v for key, v in self.info.items()}
        return {"audit": self.name, "hypotheses_hold": self.hypotheses_hold,
                "conclusion_holds": self.conclusion_holds, "pass": self.passed,
                "hypotheses": [c.to_dict() for c in self.hypotheses],
                "conclusions": [c.to_dict() for c in self.conclusions], **info}


def lemma7_check(f: TruthTable, g: TruthTable, k: int, delta, cap: int | None = None) -> AuditReport:
    """Pr[f^k = g^k] == (1-d)^k <= (1-delta)^k, plus the sqrt(eps) form when delta <= 1/4.

    With eps = sqrt(2)(1-2 delta)^{k/2}, p <= sqrt(eps) is checked as
    p^4 <= 2 (1-2 delta)^k, which stays rational.
    """
    delta = Fraction(delta)
    d = distance(f, g)
    if d < delta:
        raise ValueError(f"distance {d} is below delta {delta}")
    p = dp_agreement(f, g, k, cap)
    conclusions = [Check("Pr[f^k=g^k] == (1-d)^k", p, (1 - d) ** k, "=="),
                   Check("Pr[f^k=g^k] <= (1-delta)^k", p, (1 - delta) ** k, "<=")]
    hyp = [Check("distance >= delta", d, delta, ">=")]
    if delta <= Fraction(1, 4):
        conclusions.append(Check("p^4 <= 2(1-2delta)^k", p**4, 2 * (1 - 2 * delta) ** k, "<="))
    return AuditReport("lemma7", hyp, conclusions, {"probability": p, "distance": d})


def _check_system(sizes, pairwise):
    t = len(sizes)
    if len(pairwise) != t or any(len(row) != t for row in pairwise):
        raise ValueError("pairwise matrix must be t x t")
    for i in range(t):
        if sizes[i] < 0:
            raise ValueError("set sizes must be non-negative")
        for j in range(t):
            if i == j:
                continue
            if pairwise[i][j] != pairwise[j][i]:
                raise ValueError("pairwise intersections must be symmetric")
            if not 0 <= pairwise[i][j] <= min(sizes[i], sizes[j]):
                raise ValueError(f"intersection ({i},{j}) exceeds the smaller set")


def bonferroni_union_bound(sizes, pairwise) -> Fraction:
    """sum |A_i| - sum_{i<j} |A_i & A_j|, a lower bound on |union|."""
    sizes = [Fraction(s) for s in sizes]
    pairwise = [[Fraction(v) for v in row] for row in pairwise]
    _check_system(sizes, pairwise)
    t = len(sizes)
    return sum(sizes, Fraction(0)) - sum((pairwise[i][j] for i, j in combinations(range(t), 2)),
                                         Fraction(0))


def greedy_union_bound(sizes, pairwise) -> Fraction:
    """sum_j max(0, |A_j| - sum_{i<j} |A_i & A_j|), also a lower bound on |union|."""
    sizes = [Fraction(s) for s in sizes]
    total = Fraction(0)
    for j, s in enumerate(sizes):
        total += max(Fraction(0), s - sum((Fraction(pairwise[i][j]) for i in range(j)), Fraction(0)))
    return total


def _as_matrix(pairwise_caps, t: int):
    if isinstance(pairwise_caps, (int, Fraction, float)):
        cap = Fraction(pairwise_caps)
        return [[cap] * t for _ in range(t)]
    return [[Fraction(v) for v in row] for row in pairwise_caps]


@dataclass
class PackingReport:
    bonferroni: Fraction
    greedy: Fraction
    domain: Fraction

    @property
    def contradiction(self) -> bool:
        return max(self.bonferroni, self.greedy) > self.domain

    def to_dict(self) -> dict:
        return {"bonferroni": frac_str(self.bonferroni), "greedy": frac_str(self.greedy),
                "domain": frac_str(self.domain), "contradiction": self.contradiction}


def packing_contradiction_check(family_sizes, pairwise_caps, domain_size) -> PackingReport:
    """Whether sets this large with intersections this small cannot fit in the domain.

    ``pairwise_caps`` is a scalar bound or a matrix of upper bounds on
    intersections; both lower bounds on the union use them in place of the
    true intersections, which only weakens the bound.
    """
    sizes = [Fraction(s) for s in family_sizes]
    if not sizes:
        return PackingReport(Fraction(0), Fraction(0), Fraction(domain_size))
    caps = _as_matrix(pairwise_caps, len(sizes))
    t = len(sizes)
    bonf = sum(sizes, Fraction(0)) - sum((caps[i][j] for i, j in combinations(range(t), 2)),
                                         Fraction(0))
    return PackingReport(bonf, greedy_union_bound(sizes, caps), Fraction(domain_size))


def _b_xor_agreements(family: FunctionFamily, B_table, k: int, cap=None) -> list[Fraction]:
    c = _coords(family.n, k, cap)
    B = np.asarray(B_table, dtype=np.int64)
    if B.shape != (len(c),):
        raise ValueError("B must have one entry per k-tuple")
    return [Fraction(int(np.count_nonzero(B == _xor_values(f, c))), len(c)) for f in family.members]


def thm6_family_audit(family: FunctionFamily, B_table, k: int, eps, delta=None,
                      cap: int | None = None) -> AuditReport:
    """Pairwise f_i^k/f_j^k agreement <= sqrt(eps) and B's XOR agreement >= 1/2 + eps/2
    imply t <= 2/eps^2.  With ``delta``, the pairwise-distance version
    t <= 1/(eps^2 - (1-2 delta)^k) is audited as a separate implication.
    """
    eps = Fraction(eps)
    t = len(family)
    hyp = [Check("eps > 2^-k", eps, Fraction(1, 2**k), ">")]
    for i, j in combinations(range(t), 2):
        p = dp_agreement(family[i], family[j], k, cap)
        hyp.append(Check(f"Pr[f{i}^k=f{j}^k]^2 <= eps", p * p, eps, "<="))
    agrees = _b_xor_agreements(family, B_table, k, cap)
    for i, a in enumerate(agrees):
        hyp.append(Check(f"Pr[B=f{i}^xor] >= 1/2+eps/2", a, HALF + eps / 2, ">="))
    concl = [Check("t <= 2/eps^2", Fraction(t), 2 / eps**2, "<=")]
    info = {"t": t, "min_xor_agreement": min(agrees) if agrees else None}
    report = AuditReport("thm6", hyp, concl, info)
    if delta is not None:
        report.info["general"] = thm11_audit(family, B_table, k, eps, delta, cap).to_dict()
    return report


def _precondition_checks(eps: Fraction, delta: Fraction, k: int) -> list:
    """eps > (1-2 delta)^{k/2}, kept rational: squared when k is odd."""
    base = 1 - 2 * delta
    if k % 2 == 0:
        return [Check("eps > (1-2delta)^{k/2}", eps, base ** (k // 2), ">")]
    return [Check("1-2delta >= 0", base, Fraction(0), ">="),
            Check("eps^2 > (1-2delta)^k", eps * eps, base**k, ">")]


def thm11_audit(family: FunctionFamily, B_table, k: int, eps, delta, cap: int | None = None,
                two_sided: bool = False) -> AuditReport:
    """Pairwise distance > delta and B's XOR agreement >= 1/2 + eps/2 with
    eps > (1-2 delta)^{k/2} imply t <= 1/(eps^2 - (1-2 delta)^k).

    ``two_sided`` also requires every distance < 1 - delta, the form that
    survives complementary pairs at even k.
    """
    eps, delta = Fraction(eps), Fraction(delta)
    t = len(family)
    hyp = _precondition_checks(eps, delta, k)
    for i, j in combinations(range(t), 2):
        d = distance(family[i], family[j])
        hyp.append(Check(f"d(f{i},f{j}) > delta", d, delta, ">"))
        if two_sided:
            hyp.append(Check(f"d(f{i},f{j}) < 1-delta", d, 1 - delta, "<"))
    for i, a in enumerate(_b_xor_agreements(family, B_table, k, cap)):
        hyp.append(Check(f"Pr[B=f{i}^xor] >= 1/2+eps/2", a, HALF + eps / 2, ">="))
    gap = eps * eps - (1 - 2 * delta) ** k
    if gap > 0:
        concl = [Check("t <= 1/(eps^2-(1-2delta)^k)", Fraction(t), 1 / gap, "<=")]
    else:
        concl = [Check("eps^2-(1-2delta)^k > 0", gap, Fraction(0), ">")]
    return AuditReport("thm11-two-sided" if two_sided else "thm11", hyp, concl,
                       {"t": t, "eps": eps, "delta": delta})


def thm8_family_audit(family: FunctionFamily, B_table, k: int, eps,
                      cap: int | None = None) -> AuditReport:
    """|A_i| >= eps 2^{nk} and pairwise XOR agreement < 1/2 + eps^6/2 imply t <= 2/eps.

    The greedy replay (each A_j adds >= (eps/2) 2^{nk} new tuples over the
    earlier ones, for j up to 2/eps) is recorded alongside.
    """
    eps = Fraction(eps)
    t = len(family)
    c = _coords(family.n, k, cap)
    D = len(c)
    B = np.asarray(B_table, dtype=np.int64)
    if B.shape != (D,):
        raise ValueError("B must have one entry per k-tuple")
    sets = [B == _dp_values(f, c) for f in family.members]
    hyp = []
    sizes = []
    for i, s in enumerate(sets):
        size = int(np.count_nonzero(s))
        sizes.append(size)
        hyp.append(Check(f"|A_{i}| >= eps*D", Fraction(size), eps * D, ">="))
    for i, j in combinations(range(t), 2):
        a = xor_agreement(family[i], family[j], k, cap)
        hyp.append(Check(f"Pr[f{i}^xor=f{j}^xor] < 1/2+eps^6/2", a, HALF + eps**6 / 2, "<"))
    concl = [Check("t <= 2/eps", Fraction(t), 2 / eps, "<=")]
    covered = np.zeros(D, dtype=bool)
    greedy = []
    for j, s in enumerate(sets[: max(1, math.floor(2 / eps))]):
        new = int(np.count_nonzero(s & ~covered))
        greedy.append({"j": j, "new": new, "needed": frac_str(eps * D / 2),
                       "pass": Fraction(new) >= eps * D / 2})
        covered |= s
    info = {"t": t, "domain": D, "sizes": sizes, "greedy": greedy,
            "union": int(np.count_nonzero(np.logical_or.reduce(sets))) if sets else 0,
            "statement_precondition_eps_gt_2^(-k/12)": float(eps) > 2.0 ** (-k / 12)}
    # the exponent-level precondition is reported, not part of the implication
    return AuditReport("thm8", hyp, concl, info)


def pairwise_far_family(n: int, delta, l: int, seed: int = 0, max_distance=None,
                        budget: int = 100_000) -> FunctionFamily:
    """l seeded random tables with pairwise distance >= delta/2 (and <= max_distance)."""
    delta = Fraction(delta)
    lo = delta / 2
    hi = Fraction(1) if max_distance is None else Fraction(max_distance)
    if l < 1:
        raise ValueError("family size must be at least 1")
    rng = derive(seed, "far-family", n)
    members: list[TruthTable] = []
    for _ in range(budget):
        g = TruthTable.random(n, rng)
        if all(lo <= distance(g, m) <= hi and g != m for m in members):
            members.append(g)
            if len(members) == l:
                return FunctionFamily(n, tuple(members))
    raise RuntimeError(f"found only {len(members)} of {l} members within {budget} draws")


@dataclass
class Thm9Result:
    family: FunctionFamily
    B: PiecewiseB
    B_table: np.ndarray
    report: AuditReport


def construct_thm9_family(n: int, k: int, delta, t: int, seed: int = 0,
                          cap: int | None = None) -> Thm9Result:
    """Far family f_1..f_t and B that copies f_i^k on the i-th near-equal part.

    Members are kept within [delta/2, 1 - delta/2] of each other; the upper
    limit is what makes (1-2d)^k <= (1-delta)^k for even k.
    """
    delta = Fraction(delta)
    family = pairwise_far_family(n, delta, t, seed, max_distance=1 - delta / 2)
    c = _coords(n, k, cap)
    D = len(c)
    B = PiecewiseB.near_equal(D, t)
    table = B.table(family, k, cap)
    floor_share = Fraction(D // t, D)
    checks = []
    for i, f in enumerate(family.members):
        p = Fraction(int(np.count_nonzero(table == _dp_values(f, c))), D)
        checks.append(Check(f"(a) Pr[B=f{i}^k] >= floor(D/t)/D", p, floor_share, ">="))
    for i, j in combinations(range(t), 2):
        a = xor_agreement(family[i], family[j], k, cap)
        d = distance(family[i], family[j])
        checks.append(Check(f"(b) Pr[f{i}^xor=f{j}^xor] <= 1/2+(1-delta)^k/2", a,
                            HALF + (1 - delta) ** k / 2, "<="))
        checks.append(Check(f"(b) lemma-basic identity ({i},{j})", a,
                            xor_zero_advantage(d, k), "=="))
    sizes = B.part_sizes()
    report = AuditReport("thm9", [Check("part sizes differ by <= 1", Fraction(max(sizes) - min(sizes)),
                                        Fraction(1), "<=")], checks,
                         {"t": t, "domain": D, "part_sizes": sizes,
                          "min_distance": family.min_distance(), "max_distance": family.max_distance()})
    return Thm9Result(family, B, table, report)


@dataclass
class SearchReport:
    families: int
    literal_violations: list
    finite_violations: list
    two_sided_violations: list
    thm6_violations: list

    def to_dict(self) -> dict:
        return {"families": self.families,
                "thm11_literal_violations": len(self.literal_violations),
                "thm11_finite_violations": len(self.finite_violations),
                "thm11_two_sided_violations": len(self.two_sided_violations),
                "thm6_violations": len(self.thm6_violations),
                "first_literal": self.literal_violations[:3],
                "first_finite": self.finite_violations[:3],
                "first_two_sided": self.two_sided_violations[:3],
                "first_thm6": self.thm6_violations[:3]}


DELTA_GRID = 64


def _random_family(rng, n: int, k: int):
    t = int(rng.integers(2, 6))
    picks = rng.choice(1 << (1 << n), size=t, replace=False)
    family = FunctionFamily(n, tuple(TruthTable.from_int(n, int(p)) for p in picks))
    c = _coords(n, k)
    style = int(rng.integers(3))
    if style == 0:
        B = _xor_values(family[int(rng.integers(t))], c)
    elif style == 1:
        votes = sum(_xor_values(f, c) for f in family.members)
        B = (2 * votes > t).astype(np.int64)
    else:
        B = rng.integers(0, 2, size=len(c))
    return family, B


def _thm11_violated(t: int, eps: Fraction, delta: Fraction, k: int) -> bool:
    if not all(c.ok for c in _precondition_checks(eps, delta, k)):
        return False
    gap = eps * eps - (1 - 2 * delta) ** k
    return gap <= 0 or t > 1 / gap


def search_counterexample(n: int = 2, k: int = 2, families: int = 10_000, seed: int = 0) -> SearchReport:
    """Seeded random families with B built from their XORs; checks the bounds exactly.

    eps is the largest value condition (2) allows for the family, and delta
    ranges over multiples of 1/64 strictly below the minimum pairwise
    distance.  A family counts once per report, at its smallest bad delta.
    Reports: ``literal`` as stated; ``finite`` keeps delta <= 1/2 with a
    positive denominator; ``two_sided`` also needs every distance < 1 - delta.
    """
    literal, finite, two_sided, thm6 = [], [], [], []
    for s in range(families):
        rng = derive(seed, "search", n, k, s)
        family, B = _random_family(rng, n, k)
        eps = 2 * (min(_b_xor_agreements(family, B, k)) - HALF)
        if eps <= 0:
            continue
        t = len(family)
        dmin, dmax = family.min_distance(), family.max_distance()
        deltas = [Fraction(j, DELTA_GRID) for j in range(DELTA_GRID + 1)]
        deltas = [d for d in deltas if d < dmin]
        hit = next((d for d in deltas if _thm11_violated(t, eps, d, k)), None)
        if hit is not None:
            literal.append({"seed": s, "t": t, "eps": frac_str(eps), "delta": frac_str(hit)})
        hit = next((d for d in deltas if d <= HALF and eps * eps > (1 - 2 * d) ** k
                    and _thm11_violated(t, eps, d, k)), None)
        if hit is not None:
            finite.append({"seed": s, "t": t, "eps": frac_str(eps), "delta": frac_str(hit)})
        hit = next((d for d in deltas if dmax < 1 - d and _thm11_violated(t, eps, d, k)), None)
        if hit is not None:
            two_sided.append({"seed": s, "t": t, "eps": frac_str(eps), "delta": frac_str(hit)})
        if not thm6_family_audit(family, B, k, eps).passed:
            thm6.append({"seed": s, "t": t, "eps": frac_str(eps)})
    return SearchReport(families, literal, finite, two_sided, thm6)
