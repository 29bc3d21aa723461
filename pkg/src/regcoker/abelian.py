"""
Finite abelian groups in canonical primary form.

A group is stored as a map ``prime -> partition`` (weakly decreasing
exponents), so ``{2: (2, 1), 3: (1,)}`` is Z/4 + Z/2 + Z/3.  Elements are
plain tuples of residues, one per cyclic factor in the order given by
``GroupType.factor_orders``.  Subgroups are handled as frozensets of such
tuples, which is fine for the small targets used as moment indices.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import gcd, prod

import numpy as np
from sympy import factorint, isprime

from .errors import CapacityError, InvalidInputError

#: default bound on |G| for subgroup / coset enumeration
ENUMERATION_BUDGET = 2**12

#: default bound on the number of pairing matrices tried per prime
PAIRING_BUDGET = 2**24


@dataclass(frozen=True)
class GroupType:
    """Isomorphism class of a finite abelian group.

    ``parts`` is a tuple of ``(p, partition)`` sorted by prime; equality of
    two values is equality of the groups up to isomorphism.
    """

    parts: tuple[tuple[int, tuple[int, ...]], ...] = ()

    def __post_init__(self):
        primes = [p for p, _ in self.parts]
        if primes != sorted(set(primes)):
            raise InvalidInputError(f"primes must be strictly increasing: {primes}")
        for p, lam in self.parts:
            if not isprime(p):
                raise InvalidInputError(f"{p} is not prime")
            if not lam or any(x < 1 for x in lam) or list(lam) != sorted(lam, reverse=True):
                raise InvalidInputError(f"bad partition {lam} at p={p}")

    @classmethod
    def from_partitions(cls, mapping) -> GroupType:
        parts = []
        for p in sorted(mapping):
            lam = tuple(sorted((int(x) for x in mapping[p]), reverse=True))
            if lam:
                parts.append((int(p), lam))
        return cls(tuple(parts))

    @classmethod
    def trivial(cls) -> GroupType:
        return cls(())

    @classmethod
    def parse(cls, text: str) -> GroupType:
        return parse_group(text)

    @property
    def partitions(self) -> dict[int, tuple[int, ...]]:
        return dict(self.parts)

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.parts)

    @cached_property
    def factor_orders(self) -> tuple[int, ...]:
        return tuple(p**e for p, lam in self.parts for e in lam)

    @property
    def order(self) -> int:
        return prod(self.factor_orders)

    @property
    def exponent(self) -> int:
        return prod(p ** lam[0] for p, lam in self.parts)

    @property
    def rank(self) -> int:
        return len(self.factor_orders)

    def is_trivial(self) -> bool:
        return not self.parts

    def sylow(self, p: int) -> GroupType:
        lam = self.partitions.get(p)
        return GroupType(((p, lam),)) if lam else GroupType()

    def restrict(self, primes) -> GroupType:
        keep = set(primes)
        return GroupType(tuple((p, lam) for p, lam in self.parts if p in keep))

    def p_rank(self, p: int) -> int:
        return len(self.partitions.get(p, ()))

    def direct_sum(self, other: GroupType) -> GroupType:
        merged = {p: list(lam) for p, lam in self.parts}
        for p, lam in other.parts:
            merged.setdefault(p, []).extend(lam)
        return GroupType.from_partitions(merged)

    def __str__(self) -> str:
        return format_group(self)

    def __repr__(self) -> str:
        return f"GroupType({format_group(self)!r})"


def canonicalize(cyclic_orders) -> GroupType:
    """GroupType of the direct sum of Z/n over the given orders (each >= 2)."""
    parts: dict[int, list[int]] = {}
    for n in cyclic_orders:
        n = int(n)
        if n < 2:
            raise InvalidInputError(f"cyclic order must be >= 2, got {n}")
        for p, e in factorint(n).items():
            parts.setdefault(int(p), []).append(int(e))
    return GroupType.from_partitions(parts)


_TERM = re.compile(r"^Z(\d+)(?:\^(\d+))?$")


def parse_group(text: str) -> GroupType:
    """Parse literals such as ``"Z2^2*Z8"`` or ``"triv"``."""
    s = text.replace(" ", "")
    if s in ("triv", "0", "1"):
        return GroupType()
    orders = []
    for term in s.split("*"):
        m = _TERM.match(term)
        if not m:
            raise InvalidInputError(f"cannot parse group term {term!r} in {text!r}")
        n, k = int(m.group(1)), int(m.group(2) or 1)
        if n == 1:
            continue
        orders.extend([n] * k)
    return canonicalize(orders)


def format_group(g: GroupType) -> str:
    if g.is_trivial():
        return "triv"
    terms = []
    for p, lam in g.parts:
        for e, grp in itertools.groupby(lam):
            k = len(list(grp))
            terms.append(f"Z{p**e}" + (f"^{k}" if k > 1 else ""))
    return "*".join(terms)


# ---------------------------------------------------------------- elements


def zero(g: GroupType) -> tuple[int, ...]:
    return (0,) * g.rank


def reduce(g: GroupType, coords) -> tuple[int, ...]:
    return tuple(int(c) % n for c, n in zip(coords, g.factor_orders))


def add(g: GroupType, x, y) -> tuple[int, ...]:
    return tuple((a + b) % n for a, b, n in zip(x, y, g.factor_orders))


def sub(g: GroupType, x, y) -> tuple[int, ...]:
    return tuple((a - b) % n for a, b, n in zip(x, y, g.factor_orders))


def scale(g: GroupType, k: int, x) -> tuple[int, ...]:
    return tuple((k * a) % n for a, n in zip(x, g.factor_orders))


def elements(g: GroupType):
    return itertools.product(*(range(n) for n in g.factor_orders))


def basis(g: GroupType) -> list[tuple[int, ...]]:
    k = g.rank
    return [tuple(int(i == j) for j in range(k)) for i in range(k)]


def killed_by(g: GroupType, d: int) -> list[tuple[int, ...]]:
    """Elements x with d*x = 0 (d = 0 means no constraint)."""
    if d == 0:
        return list(elements(g))
    steps = [n // gcd(n, d) for n in g.factor_orders]
    return list(itertools.product(*(range(0, n, s) for n, s in zip(g.factor_orders, steps))))


def span(g: GroupType, gens, start=None) -> frozenset:
    """Subgroup generated by ``gens`` (joined with subgroup ``start``)."""
    cur = set(start) if start is not None else {zero(g)}
    for x in gens:
        x = reduce(g, x)
        if x in cur:
            continue
        multiples = [zero(g)]
        y = x
        while y != multiples[0]:
            multiples.append(y)
            y = add(g, y, x)
        cur = {add(g, h, c) for h in cur for c in multiples}
    return frozenset(cur)


def subgroup_type(g: GroupType, subgroup) -> GroupType:
    """Isomorphism type of an explicit subgroup, read off from |H[p^k]|."""
    parts = {}
    for p, lam in g.parts:
        counts = [1]
        for k in range(1, lam[0] + 1):
            q = p**k
            counts.append(sum(1 for h in subgroup if all((q * a) % n == 0 for a, n in zip(h, g.factor_orders))))
        conj = []
        for k in range(1, len(counts)):
            ratio, c = counts[k] // counts[k - 1], 0
            while ratio > 1:
                ratio //= p
                c += 1
            conj.append(c)
        # conj[k-1] = number of parts >= k
        lam_h = [sum(1 for c in conj if c >= i) for i in range(1, (conj[0] if conj else 0) + 1)]
        if lam_h:
            parts[p] = lam_h
    return GroupType.from_partitions(parts)


# ---------------------------------------------------------------- counting


def count_homs(g: GroupType, h: GroupType) -> int:
    """|Hom(G, H)| as a product of gcds over pairs of cyclic factors."""
    total = 1
    hp = h.partitions
    for p, lam in g.parts:
        for a in lam:
            for b in hp.get(p, ()):
                total *= p ** min(a, b)
    return total


def aut_order(g: GroupType) -> int:
    """|Aut(G)|, via the per-prime closed form for abelian p-groups."""
    total = 1
    for p, lam in g.parts:
        e = sorted(lam)
        k = len(e)
        d = [max(i for i in range(k) if e[i] == e[j]) + 1 for j in range(k)]
        c = [min(i for i in range(k) if e[i] == e[j]) + 1 for j in range(k)]
        term = 1
        for j in range(k):
            term *= p ** d[j] - p**j
        for j in range(k):
            term *= p ** (e[j] * (k - d[j]))
        for i in range(k):
            term *= p ** ((e[i] - 1) * (k - c[i] + 1))
        total *= term
    return total


def torsion_count(g: GroupType, r: int) -> int:
    """|G[r]|, the number of elements killed by r."""
    if r < 1:
        raise InvalidInputError("r must be >= 1")
    return prod(gcd(n, r) for n in g.factor_orders)


def exterior_square(g: GroupType) -> GroupType:
    """Type of the exterior square: one Z/p^min(a,b) per pair of factors."""
    parts = {}
    for p, lam in g.parts:
        parts[p] = [min(lam[i], lam[j]) for i in range(len(lam)) for j in range(i + 1, len(lam))]
    return GroupType.from_partitions(parts)


def exterior_square_by_presentation(g: GroupType) -> GroupType:
    """Exterior square computed from scratch as (G (x) G) / <a (x) a>.

    Builds the presentation of the tensor square on the generators
    e_i (x) e_j, adds the relation a (x) a for every element a, and reads
    the quotient off a Smith form.  Intended as an independent check of
    :func:`exterior_square`; cost grows with |G|.
    """
    from .snf import invariant_factors

    orders = g.factor_orders
    k = len(orders)
    idx = {(i, j): i * k + j for i in range(k) for j in range(k)}
    rels = []
    for (i, j), t in idx.items():
        col = [0] * (k * k)
        col[t] = gcd(orders[i], orders[j])
        rels.append(col)
    for a in elements(g):
        col = [0] * (k * k)
        for i in range(k):
            for j in range(k):
                col[idx[i, j]] += a[i] * a[j]
        rels.append(col)
    if k == 0:
        return GroupType()
    mat = [[c[r] for c in rels] for r in range(k * k)]
    diag = invariant_factors(mat)
    return canonicalize([d for d in diag if d != 1])


def _sur_table(h: GroupType) -> tuple[tuple[GroupType, int], ...]:
    """Moebius coefficients so that Sur(G, H) = sum c * |Hom(G, K)|."""
    return _sur_table_cached(h)


@lru_cache(maxsize=None)
def _sur_table_cached(h: GroupType):
    table: dict[GroupType, int] = {}
    frattini = span(h, [scale(h, prod(h.primes), x) for x in basis(h)])
    for sub_set in _all_subgroup_sets(h, ENUMERATION_BUDGET):
        if not frattini <= sub_set:
            continue
        # h/K is elementary abelian; mu = prod_p (-1)^k p^(k choose 2)
        index = h.order // len(sub_set)
        mu = 1
        for p, k in factorint(index).items() if index > 1 else ():
            mu *= (-1) ** k * p ** (k * (k - 1) // 2)
        t = subgroup_type(h, sub_set)
        table[t] = table.get(t, 0) + mu
    return tuple(sorted(table.items(), key=lambda kv: (kv[0].order, str(kv[0]))))


def count_surjections(g: GroupType, h: GroupType) -> int:
    """|Sur(G, H)| by inclusion-exclusion over subgroups of H."""
    if not set(h.primes) <= set(g.primes):
        return 0 if not h.is_trivial() else 1
    total = 1
    for p in h.primes:
        gp, hp = g.sylow(p), h.sylow(p)
        if gp.p_rank(p) < hp.p_rank(p):
            return 0
        total *= sum(c * count_homs(gp, k) for k, c in _sur_table(hp))
        if total == 0:
            return 0
    return total


# ---------------------------------------------------------------- pairings


def _leibniz_det_mod(mats: np.ndarray, p: int) -> np.ndarray:
    k = mats.shape[-1]
    out = np.zeros(mats.shape[0], dtype=np.int64)
    for perm in itertools.permutations(range(k)):
        inv = sum(1 for i in range(k) for j in range(i + 1, k) if perm[i] > perm[j])
        term = np.ones(mats.shape[0], dtype=np.int64)
        for i, j in enumerate(perm):
            term = (term * mats[:, i, j]) % p
        out = (out - term) % p if inv % 2 else (out + term) % p
    return out


def _count_pairings_p(p: int, lam: tuple[int, ...], budget: int) -> int:
    k = len(lam)
    orders = [p**e for e in lam]
    cells = [(i, j) for i in range(k) for j in range(i, k)]
    tries = p ** len(cells)
    if tries > budget:
        raise CapacityError(f"pairing enumeration needs {tries} > budget {budget} (p={p}, partition {lam})")
    # pairing value on (g_i, g_j) is a_ij / gcd(n_i, n_j); the induced map
    # G -> Hom(G, Q/Z) has matrix a_ij * n_j / gcd and is bijective iff it is
    # bijective on G/pG, which only sees a_ij mod p
    lift = prod(gcd(orders[i], orders[j]) // p for i, j in cells)
    weight = np.array([[(orders[j] // gcd(orders[i], orders[j])) % p for j in range(k)] for i in range(k)], dtype=np.int64)
    good = 0
    chunk = 1 << 16
    total = tries
    start = 0
    while start < total:
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        mats = np.zeros((idx.size, k, k), dtype=np.int64)
        rest = idx.copy()
        for i, j in cells:
            digit = rest % p
            rest //= p
            mats[:, i, j] = digit
            mats[:, j, i] = digit
        mats = (mats * weight[None, :, :]) % p
        good += int(np.count_nonzero(_leibniz_det_mod(mats, p)))
        start += chunk
    return good * lift


def count_perfect_symmetric_pairings(g: GroupType, budget: int | None = None) -> int:
    """Number of symmetric bilinear perfect pairings G x G -> Q/Z.

    Pairings are enumerated as symmetric matrices of values on the cyclic
    generators; different primes pair orthogonally, so the count is a
    product over Sylow subgroups.
    """
    budget = PAIRING_BUDGET if budget is None else budget
    return prod(_count_pairings_cached(p, lam, budget) for p, lam in g.parts)


@lru_cache(maxsize=None)
def _count_pairings_cached(p, lam, budget):
    return _count_pairings_p(p, lam, budget)


# ---------------------------------------------------------------- subgroups


@dataclass(frozen=True)
class Coset:
    """The coset ``representative + <subgroup_generators>`` of ``ambient``."""

    ambient: GroupType
    subgroup_generators: tuple[tuple[int, ...], ...]
    representative: tuple[int, ...]

    def __post_init__(self):
        k = self.ambient.rank
        gens = tuple(reduce(self.ambient, x) for x in self.subgroup_generators)
        if any(len(x) != k for x in gens) or len(self.representative) != k:
            raise InvalidInputError("element length does not match the ambient group")
        object.__setattr__(self, "subgroup_generators", gens)
        object.__setattr__(self, "representative", reduce(self.ambient, self.representative))

    @cached_property
    def subgroup(self) -> frozenset:
        return span(self.ambient, self.subgroup_generators)

    @cached_property
    def elements(self) -> frozenset:
        return frozenset(add(self.ambient, self.representative, h) for h in self.subgroup)

    def __contains__(self, x) -> bool:
        return sub(self.ambient, reduce(self.ambient, x), self.representative) in self.subgroup

    def key(self):
        return (self.ambient, self.elements)

    def __str__(self) -> str:
        gens = ",".join(_fmt_el(x) for x in self.subgroup_generators)
        return f"{_fmt_el(self.representative)}+<{gens}>"


def _fmt_el(x) -> str:
    return "(" + ",".join(str(c) for c in x) + ")"


def coset_eq(a: Coset, b: Coset) -> bool:
    return a.ambient == b.ambient and a.elements == b.elements


def _generators_of(g: GroupType, sub_set: frozenset) -> tuple:
    gens = []
    cur = frozenset({zero(g)})
    for x in sorted(sub_set):
        if x not in cur:
            gens.append(x)
            cur = span(g, [x], start=cur)
            if cur == sub_set:
                break
    return tuple(gens)


def _embed(g: GroupType, p: int):
    # maps coordinates of the Sylow p-part into coordinates of g
    offset = 0
    for q, lam in g.parts:
        if q == p:
            lo, hi = offset, offset + len(lam)
            break
        offset += len(lam)
    k = g.rank

    def f(x):
        out = [0] * k
        out[lo:hi] = x
        return tuple(out)

    return f


@lru_cache(maxsize=256)
def _p_subgroup_sets(gp: GroupType) -> tuple[frozenset, ...]:
    cyclics = {span(gp, [x]) for x in elements(gp)}
    cyclics = sorted(cyclics, key=lambda s: (len(s), sorted(s)))
    trivial = frozenset({zero(gp)})
    seen = {trivial}
    frontier = [trivial]
    while frontier:
        nxt = []
        for hsub in frontier:
            for c in cyclics:
                if c <= hsub:
                    continue
                j = frozenset(add(gp, a, b) for a in hsub for b in c)
                if j not in seen:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    return tuple(sorted(seen, key=lambda s: (len(s), sorted(s))))


def _all_subgroup_sets(g: GroupType, budget: int) -> list[frozenset]:
    if g.order > budget:
        raise CapacityError(f"|G| = {g.order} exceeds enumeration budget {budget}")
    per_prime = []
    for p in g.primes:
        emb = _embed(g, p)
        per_prime.append([frozenset(emb(x) for x in s) for s in _p_subgroup_sets(g.sylow(p))])
    out = []
    for combo in itertools.product(*per_prime):
        cur = frozenset({zero(g)})
        for s in combo:
            cur = frozenset(add(g, a, b) for a in cur for b in s)
        out.append(cur)
    return sorted(out, key=lambda s: (len(s), sorted(s)))


def enumerate_subgroups(g: GroupType, budget: int | None = None) -> list[Coset]:
    """Every subgroup of G exactly once, as a coset with zero representative."""
    budget = ENUMERATION_BUDGET if budget is None else budget
    return [Coset(g, _generators_of(g, s), zero(g)) for s in _all_subgroup_sets(g, budget)]


# ---------------------------------------------------------------- (r, m)-pairs


def _rm_conditions(g: GroupType, hsub: frozenset, gamma, r: int, m: int) -> tuple[bool, bool, bool]:
    c1 = all(scale(g, r, e) in hsub for e in basis(g))
    c2 = len(span(g, [gamma], start=hsub)) == g.order
    r_h = {scale(g, r, h) for h in hsub}
    c3 = scale(g, m * r, gamma) in r_h
    return c1, c2, c3


@dataclass(frozen=True)
class RMPair:
    """A group with a coset gamma + H such that r(G/H) = 0, gamma generates
    G/H and m*r*gamma lies in r*H.  Checked on construction."""

    group: GroupType
    coset: Coset
    r: int
    m: int

    def __post_init__(self):
        if self.r < 1 or self.m < 1:
            raise InvalidInputError("r and m must be positive")
        if self.coset.ambient != self.group:
            raise InvalidInputError("coset lives in a different group")
        c1, c2, c3 = _rm_conditions(self.group, self.coset.subgroup, self.coset.representative, self.r, self.m)
        if not c1:
            raise InvalidInputError(f"r*(G/H) != 0 for {self.coset} in {self.group}")
        if not c2:
            raise InvalidInputError(f"representative does not generate G/H for {self.coset}")
        if not c3:
            raise InvalidInputError(f"m*r*gamma not in r*H for {self.coset}")

    @property
    def subgroup_type(self) -> GroupType:
        return subgroup_type(self.group, self.coset.subgroup)


def enumerate_rm_pairs(v: GroupType, r: int, m: int, budget: int | None = None) -> list[RMPair]:
    """All cosets gamma + H of V making (V, gamma + H) an (r, m)-pair."""
    if r < 1 or m < 1:
        raise InvalidInputError("r and m must be positive")
    budget = ENUMERATION_BUDGET if budget is None else budget
    out = []
    for hsub in _all_subgroup_sets(v, budget):
        if not all(scale(v, r, e) in hsub for e in basis(v)):
            continue
        gens = _generators_of(v, hsub)
        covered = set()
        for x in elements(v):
            if x in covered:
                continue
            coset = frozenset(add(v, x, h) for h in hsub)
            covered |= coset
            if all(_rm_conditions(v, hsub, x, r, m)):
                out.append(RMPair(v, Coset(v, gens, x), r, m))
    return out


def all_group_types(primes, max_order: int) -> list[GroupType]:
    """Every group supported on ``primes`` with order <= max_order,
    ordered by order and then by partition."""
    per_prime = []
    for p in sorted(primes):
        opts = []
        k = 0
        while p**k <= max_order:
            for lam in _partitions(k):
                opts.append((p, lam))
            k += 1
        per_prime.append(opts)
    out = []
    for combo in itertools.product(*per_prime):
        g = GroupType.from_partitions({p: lam for p, lam in combo})
        if g.order <= max_order:
            out.append(g)
    out.sort(key=lambda g: (g.order, [(p, tuple(-x for x in lam)) for p, lam in g.parts]))
    return out


def _partitions(k: int, largest: int | None = None):
    if k == 0:
        yield ()
        return
    largest = k if largest is None else largest
    for first in range(min(k, largest), 0, -1):
        for rest in _partitions(k - first, first):
            yield (first,) + rest
