"""
Exact integer linear algebra on lists of Python ints.

Everything here works on rectangular matrices given as lists of rows and
never loses precision.  The Smith form engine pivots on the entry of
smallest nonzero magnitude, which keeps intermediate growth down on the
sparse 0/1-ish matrices produced by the samplers.
"""

from __future__ import annotations

from math import gcd


def identity(n: int) -> list[list[int]]:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(a: list[list[int]], b: list[list[int]]) -> list[list[int]]:
    if not a:
        return []
    cols = list(zip(*b)) if b else []
    return [[sum(x * y for x, y in zip(row, col)) for col in cols] for row in a]


def _swap_rows(m, i, j):
    m[i], m[j] = m[j], m[i]


def _swap_cols(m, i, j):
    for row in m:
        row[i], row[j] = row[j], row[i]


def _add_row(m, dst, src, q):
    # row[dst] += q * row[src]
    rs = m[src]
    m[dst] = [a + q * b for a, b in zip(m[dst], rs)]


def _add_col(m, dst, src, q):
    for row in m:
        row[dst] += q * row[src]


def smith_form(a, transforms: bool = True):
    """Smith normal form of an integer matrix.

    Returns ``(diag, left, right)`` where ``diag`` has length
    ``min(rows, cols)``, is a divisibility chain of nonnegative integers
    (zeros last), and ``left @ a @ right`` is the rectangular diagonal matrix
    carrying ``diag``.  ``left`` and ``right`` are unimodular.  With
    ``transforms=False`` both are returned as ``None``.
    """
    m = [[int(x) for x in row] for row in a]
    nr = len(m)
    nc = len(m[0]) if nr else 0
    left = identity(nr) if transforms else None
    right = identity(nc) if transforms else None

    t = 0
    while t < min(nr, nc):
        pivot = _min_entry(m, t, nr, nc)
        if pivot is None:
            break
        i, j = pivot
        if i != t:
            _swap_rows(m, i, t)
            if transforms:
                _swap_rows(left, i, t)
        if j != t:
            _swap_cols(m, j, t)
            if transforms:
                _swap_cols(right, j, t)

        while True:
            dirty = False
            p = m[t][t]
            for i in range(t + 1, nr):
                if m[i][t]:
                    q = -(m[i][t] // p)
                    _add_row(m, i, t, q)
                    if transforms:
                        _add_row(left, i, t, q)
                    if m[i][t]:
                        dirty = True
            for j in range(t + 1, nc):
                if m[t][j]:
                    q = -(m[t][j] // p)
                    _add_col(m, j, t, q)
                    if transforms:
                        _add_col(right, j, t, q)
                    if m[t][j]:
                        dirty = True
            if dirty:
                # a remainder smaller than the pivot survived; re-pivot on it
                i, j = _min_entry_cross(m, t, nr, nc)
                if i != t:
                    _swap_rows(m, i, t)
                    if transforms:
                        _swap_rows(left, i, t)
                if j != t:
                    _swap_cols(m, j, t)
                    if transforms:
                        _swap_cols(right, j, t)
                continue
            bad = _non_divisible(m, t, nr, nc)
            if bad is None:
                break
            # pull the offending row into row t; its entries then reduce the pivot
            _add_row(m, t, bad, 1)
            if transforms:
                _add_row(left, t, bad, 1)

        if m[t][t] < 0:
            m[t] = [-x for x in m[t]]
            if transforms:
                left[t] = [-x for x in left[t]]
        t += 1

    diag = [m[k][k] if k < t else 0 for k in range(min(nr, nc))]
    return diag, left, right


def _min_entry(m, t, nr, nc):
    best = None
    best_val = 0
    for i in range(t, nr):
        row = m[i]
        for j in range(t, nc):
            v = row[j]
            if v:
                av = -v if v < 0 else v
                if best is None or av < best_val:
                    best, best_val = (i, j), av
                    if av == 1:
                        return best
    return best


def _min_entry_cross(m, t, nr, nc):
    best = (t, t)
    best_val = abs(m[t][t])
    for i in range(t + 1, nr):
        v = abs(m[i][t])
        if v and v < best_val:
            best, best_val = (i, t), v
    for j in range(t + 1, nc):
        v = abs(m[t][j])
        if v and v < best_val:
            best, best_val = (t, j), v
    return best


def _non_divisible(m, t, nr, nc):
    p = m[t][t]
    for i in range(t + 1, nr):
        row = m[i]
        for j in range(t + 1, nc):
            if row[j] % p:
                return i
    return None


def invariant_factors(a) -> list[int]:
    return smith_form(a, transforms=False)[0]


def bareiss_rank(a) -> int:
    """Rank over Q by fraction-free (Bareiss) elimination."""
    m = [[int(x) for x in row] for row in a]
    nr = len(m)
    nc = len(m[0]) if nr else 0
    rank = 0
    prev = 1
    for col in range(nc):
        if rank == nr:
            break
        piv = next((i for i in range(rank, nr) if m[i][col]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        pr = m[rank]
        pv = pr[col]
        for i in range(rank + 1, nr):
            row = m[i]
            f = row[col]
            if f:
                m[i] = [(pv * x - f * y) // prev for x, y in zip(row, pr)]
            else:
                m[i] = [(pv * x) // prev for x in row]
        prev = pv
        rank += 1
    return rank


def in_lattice(generators, relations, x) -> bool:
    """Decide whether vector ``x`` lies in the Z-span of the given columns.

    ``generators`` and ``relations`` are lists of integer vectors of the
    same length as ``x``; the span is taken over both sets together.
    """
    cols = list(generators) + list(relations)
    k = len(x)
    if not cols:
        return all(v == 0 for v in x)
    mat = [[int(c[i]) for c in cols] for i in range(k)]
    diag, left, _ = smith_form(mat)
    y = [sum(l * int(v) for l, v in zip(row, x)) for row in left]
    for i, yi in enumerate(y):
        d = diag[i] if i < len(diag) else 0
        if d == 0:
            if yi:
                return False
        elif yi % d:
            return False
    return True


def gcd_list(values) -> int:
    g = 0
    for v in values:
        g = gcd(g, int(v))
    return g
