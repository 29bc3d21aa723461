"""
Cokernels Z^n / A(Z^n) of square integer matrices.

The exact route goes through :func:`smith_normal_form`; the per-prime
route (:func:`cokernel_p_part`, :func:`local_cokernel`) eliminates over
Z/p^e and is what the experiment driver uses on large samples.  Both
expose the cokernel as a list of cyclic factor orders (0 for a free
summand) plus the coordinates of each standard basis vector e_i, which is
all that :func:`count_pair_surjections` needs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from math import gcd, prod

import numpy as np

from . import abelian
from .abelian import GroupType, RMPair, canonicalize
from .errors import CapacityError, InvalidInputError
from .matgen import SquareIntMatrix, as_matrix
from .padic import adaptive_local_smith, rank_over_q
from .snf import in_lattice, invariant_factors, matmul, smith_form

#: bound on the number of homomorphisms enumerated by count_pair_surjections
HOM_BUDGET = 2**20


@dataclass(frozen=True)
class SmithDecomposition:
    invariant_factors: tuple[int, ...]
    left_transform: tuple[tuple[int, ...], ...]
    right_transform: tuple[tuple[int, ...], ...]

    def diagonal(self) -> list[list[int]]:
        n = len(self.invariant_factors)
        return [[self.invariant_factors[i] if i == j else 0 for j in range(n)] for i in range(n)]

    def reconstructs(self, a) -> bool:
        a = as_matrix(a).rows()
        left = [list(r) for r in self.left_transform]
        right = [list(r) for r in self.right_transform]
        return matmul(matmul(left, a), right) == self.diagonal()


def smith_normal_form(a) -> SmithDecomposition:
    """Exact Smith normal form with unimodular transforms (left @ A @ right = diag)."""
    a = as_matrix(a)
    diag, left, right = smith_form(a.rows())
    return SmithDecomposition(
        tuple(diag),
        tuple(tuple(r) for r in left),
        tuple(tuple(r) for r in right),
    )


@dataclass(frozen=True)
class CokernelReport:
    """cok A = Z^free_rank + (+)_j Z/d_j, with e_i's coordinates in that sum.

    ``invariant_factors`` lists only the nontrivial finite factors (> 1).
    Coordinates in ``basis_images`` run over those factors first (reduced
    mod d_j) and then over the free summands (exact integers).
    """

    n: int
    free_rank: int
    invariant_factors: tuple[int, ...]
    basis_images: tuple[tuple[int, ...], ...]

    @property
    def factor_orders(self) -> tuple[int, ...]:
        return self.invariant_factors + (0,) * self.free_rank

    @cached_property
    def torsion(self) -> GroupType:
        return canonicalize(self.invariant_factors)

    @property
    def is_finite(self) -> bool:
        return self.free_rank == 0

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "free_rank": self.free_rank,
            "torsion": str(self.torsion),
            "invariant_factors": list(self.invariant_factors),
            "order": prod(self.invariant_factors) if self.free_rank == 0 else None,
        }


def cokernel(a) -> CokernelReport:
    a = as_matrix(a)
    n = a.n
    if n == 0:
        return CokernelReport(0, 0, (), ())
    snf = smith_normal_form(a)
    keep = [j for j, d in enumerate(snf.invariant_factors) if d != 1]
    finite = [j for j in keep if snf.invariant_factors[j] != 0]
    free = [j for j in keep if snf.invariant_factors[j] == 0]
    left = snf.left_transform
    images = []
    for i in range(n):
        coords = [left[j][i] % snf.invariant_factors[j] for j in finite]
        coords += [left[j][i] for j in free]
        images.append(tuple(coords))
    return CokernelReport(
        n=n,
        free_rank=len(free),
        invariant_factors=tuple(snf.invariant_factors[j] for j in finite),
        basis_images=tuple(images),
    )


def is_singular(a) -> bool:
    """True iff det A = 0 over the rationals."""
    a = as_matrix(a)
    return a.n > 0 and rank_over_q(a) < a.n


@dataclass(frozen=True)
class SylowReport:
    """Sylow p-part of cok A: ``torsion`` plus ``free_rank`` copies of Z_p."""

    p: int
    torsion: GroupType
    free_rank: int
    e_used: int

    @property
    def p_corank(self) -> int:
        return self.torsion.p_rank(self.p) + self.free_rank

    @property
    def infinite_part(self) -> int:
        return self.free_rank

    def label(self) -> str:
        s = str(self.torsion)
        return s if self.free_rank == 0 else f"{s}+Zp^{self.free_rank}"


def cokernel_p_part(a, p: int, e_hint: int = 4, free_rank: int | None = None) -> SylowReport:
    """Sylow p-part of cok A via elimination over Z/p^e with adaptive e."""
    ls, free = adaptive_local_smith(as_matrix(a), p, free_rank=free_rank, e_hint=e_hint)
    torsion = GroupType.from_partitions({p: ls.finite}) if ls.finite else GroupType()
    return SylowReport(p, torsion, free, ls.e)


@dataclass(frozen=True)
class LocalCokernel:
    """cok A tensored with Z_p for p in ``primes``, with basis images.

    Factors of valuation >= e (all free, since e is stabilised) get order
    0; they behave like Z for maps into any group of exponent < p^e.
    """

    primes: tuple[int, ...]
    n: int
    free_rank: int
    factor_orders: tuple[int, ...]
    basis_images: tuple[tuple[int, ...], ...]
    sylow: tuple[SylowReport, ...]
    factor_primes: tuple[int, ...] = ()


def local_cokernel(a, primes, free_rank: int | None = None, e_hint: int = 4) -> LocalCokernel:
    a = as_matrix(a)
    n = a.n
    orders: list[int] = []
    fprimes: list[int] = []
    cols: list[np.ndarray] = []
    reports = []
    for p in sorted(set(primes)):
        ls, free_rank = adaptive_local_smith(a, p, free_rank=free_rank, e_hint=e_hint, with_transform=True)
        for t, v in enumerate(ls.exponents):
            if v == 0:
                continue
            fprimes.append(p)
            if v >= ls.e:
                orders.append(0)
                cols.append(ls.transform[t])
            else:
                q = p**v
                orders.append(q)
                cols.append(ls.transform[t] % q)
        fin = ls.finite
        reports.append(SylowReport(p, GroupType.from_partitions({p: fin}) if fin else GroupType(), free_rank, ls.e))
    images = tuple(tuple(int(c[i]) for c in cols) for i in range(n))
    return LocalCokernel(
        tuple(sorted(set(primes))), n, free_rank or 0, tuple(orders), images, tuple(reports), tuple(fprimes)
    )


# ---------------------------------------------------------------- pair structure


@dataclass(frozen=True)
class PairStructure:
    """cok A with the coset e_1 + E, E generated by the e_i - e_j.

    ``representative`` and ``subgroup_generators`` are coordinates in the
    decomposition of ``report``.  ``conditions`` records whether the three
    (r, n)-pair conditions hold; ``flagged`` is set when cok A is infinite.
    """

    report: CokernelReport | LocalCokernel
    representative: tuple[int, ...]
    subgroup_generators: tuple[tuple[int, ...], ...]
    r: int
    n: int
    conditions: tuple[bool, bool, bool] | None

    @property
    def flagged(self) -> bool:
        return self.report.free_rank > 0


def _check_sums(a: SquareIntMatrix, r: int):
    ent = a.entries
    rows = ent.sum(axis=1)
    cols = ent.sum(axis=0)
    if np.any(rows != r) or np.any(cols != r):
        raise InvalidInputError(f"pair structure needs all row and column sums equal to r={r}")


def _relations(orders):
    k = len(orders)
    return [[d if i == j else 0 for i in range(k)] for j, d in enumerate(orders) if d]


def pair_conditions(orders, rep, gens, r: int, m: int) -> tuple[bool, bool, bool]:
    """Check the (r, m)-pair conditions for rep + <gens> inside
    (+)_j Z/orders[j] (order 0 = Z), using exact lattice membership."""
    k = len(orders)
    rels = _relations(orders)
    gens = [list(g) for g in gens]
    units = [[int(i == j) for i in range(k)] for j in range(k)]
    c1 = all(in_lattice(gens, rels, [r * x for x in u]) for u in units)
    full = gens + [list(rep)] + rels
    c2 = k == 0 or _is_full_lattice(full, k)
    c3 = in_lattice([[r * x for x in g] for g in gens], rels, [m * r * x for x in rep])
    return c1, c2, c3


def _is_full_lattice(cols, k) -> bool:
    mat = [[c[i] for c in cols] for i in range(k)]
    diag = invariant_factors(mat)
    return len(diag) >= k and all(d == 1 for d in diag[:k])


def pair_structure(a, r: int, check: bool = True) -> PairStructure:
    """The (r, n)-pair (cok A, e_1 + E) of a matrix whose row and column
    sums all equal r."""
    a = as_matrix(a)
    _check_sums(a, r)
    rep_ = cokernel(a)
    return _make_pair(rep_, r, a.n, check)


def _make_pair(report, r, n, check) -> PairStructure:
    orders = report.factor_orders
    imgs = report.basis_images
    if n == 0:
        return PairStructure(report, (), (), r, n, (True, True, True))

    def red(x):
        return tuple(v % d if d else v for v, d in zip(x, orders))

    e1 = red(imgs[0])
    gens = tuple(red(tuple(x - y for x, y in zip(img, imgs[0]))) for img in imgs[1:])
    gens = tuple(sorted(set(g for g in gens if any(g))))
    conds = pair_conditions(orders, e1, gens, r, n) if check else None
    return PairStructure(report, e1, gens, r, n, conds)


def local_pair_structure(a, r: int, primes, free_rank: int | None = None, e_hint: int = 4) -> PairStructure:
    """Pair structure on the P-part of cok A (cheap; no condition check)."""
    a = as_matrix(a)
    return _make_pair(local_cokernel(a, primes, free_rank=free_rank, e_hint=e_hint), r, a.n, check=False)


def count_pair_surjections(ps: PairStructure, target: RMPair, budget: int | None = None) -> int:
    """Number of surjections cok A -> V carrying e_1 + E onto the target coset.

    Homomorphisms are enumerated through the images of the cyclic
    generators of the cokernel; a map is kept when the images q_i of the
    e_i generate V and their minimal coset q_1 + <q_i - q_j> equals the
    target coset.
    """
    budget = HOM_BUDGET if budget is None else budget
    v = target.group
    report = ps.report
    orders = report.factor_orders
    if v.is_trivial():
        return 1
    expv = v.exponent
    # a p-adic free summand only reaches the Sylow p-part of V
    fprimes = getattr(report, "factor_primes", ()) or (None,) * len(orders)
    choices = [
        abelian.killed_by(v, gcd(d, expv) if d else (_p_part(expv, fp) if fp else expv))
        for d, fp in zip(orders, fprimes)
    ]
    total = prod(len(c) for c in choices)
    if total > budget:
        raise CapacityError(f"{total} homomorphisms to enumerate exceeds budget {budget}")
    vorders = np.array(v.factor_orders, dtype=np.int64)
    basis = np.array([[x % expv for x in img] for img in report.basis_images], dtype=np.int64).reshape(
        report.n, len(orders)
    )
    target_h = target.coset.subgroup
    gamma = target.coset.representative
    vsize = v.order
    span_cache: dict[frozenset, frozenset] = {}
    count = 0
    for combo in itertools.product(*choices):
        phi = np.array(combo, dtype=np.int64).reshape(len(orders), v.rank)
        q = (basis @ phi) % vorders
        q1 = tuple(int(x) for x in q[0])
        diffs = frozenset(tuple(int(x) for x in row) for row in np.unique((q - q[0]) % vorders, axis=0))
        hq = span_cache.get(diffs)
        if hq is None:
            hq = span_cache[diffs] = abelian.span(v, diffs)
        if hq != target_h:
            continue
        if abelian.sub(v, q1, gamma) not in target_h:
            continue
        if len(abelian.span(v, [q1], start=hq)) != vsize:
            continue
        count += 1
    return count


def _p_part(n: int, p: int) -> int:
    out = 1
    while n % p == 0:
        n //= p
        out *= p
    return out


def surjections_from_parts(sylow: dict[int, SylowReport], v: GroupType) -> int:
    """|Sur(cok A, V)| from the Sylow data of cok A at the primes of V.

    A free summand Z_p is replaced by Z/p^(a+1) with p^a the exponent of
    V_p, which has the same maps to V_p.
    """
    total = 1
    for p in v.primes:
        rep = sylow[p]
        vp = v.sylow(p)
        a = vp.partitions[p][0]
        g = rep.torsion.direct_sum(GroupType.from_partitions({p: [a + 1] * rep.free_rank}))
        total *= abelian.count_surjections(g, vp)
        if total == 0:
            break
    return total
