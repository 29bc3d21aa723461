"""
Elimination over Z/p^e and over a large prime field, vectorised with numpy.

These are the fast paths used per trial by the experiment driver.  The
local Smith form finds the Sylow p-part of a cokernel together with the
images of the standard basis vectors, without ever forming the full
integer Smith form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .snf import bareiss_rank

#: 2^31 - 1; squares of residues stay inside int64
RANK_PRIME = 2_147_483_647


def _as_array(a) -> np.ndarray:
    arr = getattr(a, "entries", a)
    return np.asarray(arr)


def _fits(q: int) -> bool:
    return (q - 1) * (q - 1) < 2**63 - 1


@dataclass(frozen=True)
class LocalSmith:
    """Smith form of A over Z/p^e.

    ``exponents[t]`` is the p-adic valuation of the t-th invariant factor,
    with the value ``e`` standing for "at least e".  Row t of ``transform``
    (reduced mod p^e) gives the coordinate of every standard basis vector
    in that factor.
    """

    p: int
    e: int
    exponents: tuple[int, ...]
    transform: np.ndarray | None

    @property
    def top(self) -> int:
        return sum(1 for x in self.exponents if x >= self.e)

    @property
    def finite(self) -> tuple[int, ...]:
        return tuple(x for x in self.exponents if 0 < x < self.e)


def local_smith(a, p: int, e: int, with_transform: bool = True) -> LocalSmith:
    q = p**e
    dtype = np.int64 if _fits(q) else object
    src = _as_array(a)
    b = (src.astype(object) % q).astype(dtype) if src.dtype == object else (src.astype(np.int64) % q).astype(dtype)
    n = b.shape[0]
    u = np.eye(n, dtype=dtype) if with_transform else None
    exps: list[int] = []
    t = 0
    k = 0
    mod = q
    while t < n:
        sub = b[t:, t:]
        hits = np.argwhere(sub % p != 0)
        if hits.size == 0:
            if not np.any(sub != 0):
                exps.extend([e] * (n - t))
                break
            # every remaining entry is divisible by p: peel one factor off
            b[t:, t:] = sub // p
            k += 1
            mod //= p
            continue
        i, j = int(hits[0][0]) + t, int(hits[0][1]) + t
        if i != t:
            b[[t, i]] = b[[i, t]]
            if u is not None:
                u[[t, i]] = u[[i, t]]
        if j != t:
            b[:, [t, j]] = b[:, [j, t]]
        inv = pow(int(b[t, t]), -1, mod)
        col = b[t + 1 :, t]
        if np.any(col != 0):
            c = (col * inv) % mod
            b[t + 1 :, t:] = (b[t + 1 :, t:] - np.outer(c, b[t, t:])) % mod
            if u is not None:
                u[t + 1 :] = (u[t + 1 :] - np.outer(c, u[t])) % q
        exps.append(k)
        t += 1
    return LocalSmith(p, e, tuple(exps), u)


def modular_rank(a, prime: int = RANK_PRIME) -> int:
    """Rank of A over the field with ``prime`` elements."""
    b = _as_array(a)
    b = (b.astype(object) % prime).astype(np.int64) if b.dtype == object else b.astype(np.int64) % prime
    n_rows, n_cols = b.shape
    rank = 0
    for col in range(n_cols):
        if rank == n_rows:
            break
        nz = np.flatnonzero(b[rank:, col])
        if nz.size == 0:
            continue
        piv = rank + int(nz[0])
        if piv != rank:
            b[[rank, piv]] = b[[piv, rank]]
        inv = pow(int(b[rank, col]), -1, prime)
        c = (b[rank + 1 :, col] * inv) % prime
        b[rank + 1 :, col:] = (b[rank + 1 :, col:] - np.outer(c, b[rank, col:]) % prime) % prime
        rank += 1
    return rank


def rank_over_q(a) -> int:
    """Exact rank over Q.

    Full rank modulo a prime certifies full rank over Q; otherwise the
    answer comes from fraction-free elimination over the integers.
    """
    arr = _as_array(a)
    n = min(arr.shape) if arr.ndim == 2 else 0
    if n == 0:
        return 0
    if modular_rank(arr) == n:
        return n
    return bareiss_rank(arr.tolist())


def adaptive_local_smith(a, p: int, free_rank: int | None = None, e_hint: int = 4, with_transform: bool = False):
    """Local Smith form at p with e raised until the answer is stable.

    Stable means: the number of factors of valuation >= e equals the free
    rank of the cokernel, and e exceeds the largest finite valuation by at
    least 2.  Returns ``(LocalSmith, free_rank)``; the free rank is computed
    only when the local data cannot certify nonsingularity on its own.
    """
    e = max(1, e_hint)
    while True:
        ls = local_smith(a, p, e, with_transform)
        if free_rank is None:
            free_rank = 0 if ls.top == 0 else _as_array(a).shape[0] - rank_over_q(a)
        fin = ls.finite
        if ls.top == free_rank and (not fin or e >= max(fin) + 2):
            return ls, free_rank
        e *= 2
