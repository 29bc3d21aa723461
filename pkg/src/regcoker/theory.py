"""
Limiting probabilities and moments for cokernels of random regular
matrices, evaluated exactly with rigorous truncation bounds.

All probabilities are returned as :class:`Interval` values of exact
fractions; the truncated Euler products are the only source of error and
their tails are bounded by a geometric series.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

from sympy import isprime

from . import abelian
from .abelian import GroupType
from .errors import InvalidInputError

DEFAULT_TERMS = 64

STYLES = ("directed_CL", "symmetric")


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    @classmethod
    def exact(cls, x) -> Interval:
        x = Fraction(x)
        return cls(x, x)

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def __float__(self) -> float:
        return float(self.mid)

    def __add__(self, other: Interval) -> Interval:
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def scale(self, c) -> Interval:
        c = Fraction(c)
        if c < 0:
            raise ValueError("scale factor must be nonnegative")
        return Interval(self.lo * c, self.hi * c)

    def __mul__(self, other: Interval) -> Interval:
        # both operands are nonnegative everywhere in this module
        return Interval(self.lo * other.lo, self.hi * other.hi)

    def contains(self, x) -> bool:
        return self.lo <= Fraction(x) <= self.hi

    def __str__(self) -> str:
        return f"{float(self.mid):.12g} +/- {float(self.width / 2):.2g}"

    def to_json(self) -> dict:
        return {"value": float(self.mid), "lo": float(self.lo), "hi": float(self.hi), "error": float(self.width / 2)}


@dataclass(frozen=True)
class EulerProduct:
    """Truncated product over k of (1 - p^-k) ("all_k", k >= 1) or
    (1 - p^-(2k+1)) ("odd_exponents", k >= 0).

    ``value`` is the partial product of the first ``terms`` factors and
    ``error`` bounds value - (infinite product) from above.
    """

    p: int
    style: str
    terms: int
    value: Fraction
    error: Fraction

    @property
    def interval(self) -> Interval:
        return Interval(self.value - self.error, self.value)


@lru_cache(maxsize=None)
def euler_product(p: int, style: str = "all_k", terms: int = DEFAULT_TERMS) -> EulerProduct:
    if not isprime(p):
        raise InvalidInputError(f"{p} is not prime")
    if style == "all_k":
        exps = range(1, terms + 1)
    elif style == "odd_exponents":
        exps = range(1, 2 * terms, 2)
    else:
        raise InvalidInputError(f"unknown product style {style!r}")
    value = Fraction(1)
    for k in exps:
        value *= 1 - Fraction(1, p**k)
    # prod_{k>K}(1 - x_k) >= 1 - sum x_k and the omitted x_k are dominated
    # by p^-(K+1) * (1 + 1/p + ...)
    error = Fraction(1, p ** (terms + 1)) / (1 - Fraction(1, p))
    return EulerProduct(p, style, terms, value, min(error, value))


def _check_support(v: GroupType, primes) -> tuple[int, ...]:
    primes = tuple(sorted(set(int(p) for p in primes)))
    for p in primes:
        if not isprime(p):
            raise InvalidInputError(f"{p} is not prime")
    extra = set(v.primes) - set(primes)
    if extra:
        raise InvalidInputError(f"group {v} has primes {sorted(extra)} outside P={list(primes)}")
    return primes


def _normaliser(primes, style, terms) -> Interval:
    out = Interval.exact(1)
    for p in primes:
        out = out * euler_product(p, style, terms).interval
    return out


def cl_probability(v: GroupType, primes, terms: int = DEFAULT_TERMS) -> Interval:
    """Cohen-Lenstra mass of V: prod_p prod_k (1 - p^-k) / |Aut V|."""
    primes = _check_support(v, primes)
    return _normaliser(primes, "all_k", terms).scale(Fraction(1, abelian.aut_order(v)))


def sym_probability(v: GroupType, primes, terms: int = DEFAULT_TERMS) -> Interval:
    """Pairing-weighted mass of V:
    #{perfect symmetric pairings} / (|V| |Aut V|) * prod_p prod_k (1 - p^-(2k+1))."""
    primes = _check_support(v, primes)
    if 2 in primes:
        raise InvalidInputError("the symmetric limit is only available for odd primes")
    weight = Fraction(abelian.count_perfect_symmetric_pairings(v), v.order * abelian.aut_order(v))
    return _normaliser(primes, "odd_exponents", terms).scale(weight)


def probability(style: str, v: GroupType, primes, terms: int = DEFAULT_TERMS) -> Interval:
    if style == "directed_CL":
        return cl_probability(v, primes, terms)
    if style == "symmetric":
        return sym_probability(v, primes, terms)
    raise InvalidInputError(f"unknown style {style!r}; choose from {STYLES}")


def predicted_moment_directed(v: GroupType, r: int) -> int:
    if gcd(r, v.order) != 1:
        raise InvalidInputError(
            f"gcd(r={r}, |V|={v.order}) != 1; use predicted_moment_rm for primes dividing r"
        )
    return 1


def predicted_moment_symmetric(v: GroupType, r: int) -> int:
    if v.order % 2 == 0:
        raise InvalidInputError(f"|V| = {v.order} must be odd")
    if gcd(r, v.order) != 1:
        raise InvalidInputError(f"gcd(r={r}, |V|={v.order}) must be 1")
    return abelian.exterior_square(v).order


def predicted_moment_rm(v: GroupType, r: int, m: int, budget: int | None = None) -> int:
    """Sum of |H[r]| over the (r, m)-pairs (V, gamma + H)."""
    return sum(abelian.torsion_count(pair.subgroup_type, r) for pair in abelian.enumerate_rm_pairs(v, r, m, budget))


def p_part_of(n: int, primes) -> int:
    """Largest divisor of n built from the given primes."""
    out = 1
    for p in primes:
        while n % p == 0:
            n //= p
            out *= p
    return out


@dataclass(frozen=True)
class MeasureTable:
    primes: tuple[int, ...]
    style: str
    cutoff: int
    entries: tuple[tuple[GroupType, Interval], ...]

    @property
    def total(self) -> Interval:
        out = Interval.exact(0)
        for _, val in self.entries:
            out = out + val
        return out

    def to_json(self) -> dict:
        return {
            "style": self.style,
            "primes": list(self.primes),
            "cutoff": self.cutoff,
            "entries": {str(g): val.to_json() for g, val in self.entries},
            "total": self.total.to_json(),
        }

    def format(self) -> str:
        lines = [f"{'group':<16} {'probability':>14} {'+/-':>10}"]
        for g, val in self.entries:
            lines.append(f"{str(g):<16} {float(val.mid):>14.8f} {float(val.width / 2):>10.2e}")
        tot = self.total
        lines.append(f"{'total':<16} {float(tot.mid):>14.8f} {float(tot.width / 2):>10.2e}")
        return "\n".join(lines)


def measure_table(style: str, primes, cutoff: int, terms: int = DEFAULT_TERMS) -> MeasureTable:
    if cutoff < 1:
        raise InvalidInputError("cutoff must be >= 1")
    primes = tuple(sorted(set(int(p) for p in primes)))
    groups = abelian.all_group_types(primes, cutoff)
    entries = tuple((g, probability(style, g, primes, terms)) for g in groups)
    return MeasureTable(primes, style, cutoff, entries)


def mass_total(style: str, primes, order_cutoff: int, terms: int = DEFAULT_TERMS) -> Interval:
    """Total limiting mass of all groups on P of order <= cutoff."""
    return measure_table(style, primes, order_cutoff, terms).total


def pairing_mass_identity_check(p: int, order_cutoff: int, terms: int = DEFAULT_TERMS) -> Interval:
    """1 / prod_k (1 - p^-(2k+1)) minus the sum over p-groups W with
    |W| <= cutoff of #pairings(W) / (|W| |Aut W|).

    The sum over all W equals the reciprocal product, so the residual is
    positive and decreases to 0 as the cutoff grows.
    """
    if p == 2 or not isprime(p):
        raise InvalidInputError("p must be an odd prime")
    prod_int = euler_product(p, "odd_exponents", terms).interval
    target = Interval(1 / prod_int.hi, 1 / prod_int.lo)
    partial = sum(
        (
            Fraction(abelian.count_perfect_symmetric_pairings(w), w.order * abelian.aut_order(w))
            for w in abelian.all_group_types([p], order_cutoff)
        ),
        Fraction(0),
    )
    return Interval(target.lo - partial, target.hi - partial)
