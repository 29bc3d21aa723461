"""
Seeded samplers for the random regular matrix models.

Every sampler takes a ``numpy.random.Generator`` and returns a
:class:`SquareIntMatrix`.  Per-trial generators come from
:class:`SeedPolicy`, so trial ``i`` of a run is reproducible on its own
regardless of which worker executes it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, InvalidInputError

PRNG_NAME = "numpy.PCG64"
DEFAULT_RETRY_CAP = 10**6

MODEL_KINDS = (
    "perm_sum",
    "matching_union",
    "config_model_multigraph",
    "uniform_simple_regular",
    "directed_1regular_union",
    "directed_1regular_union_simple",
    "haar_symmetric_mod",
)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finaliser: a bijective 64-bit avalanche mix."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SeedPolicy:
    master_seed: int
    trial_index: int

    def __post_init__(self):
        if not 0 <= self.master_seed <= _MASK64:
            raise InvalidInputError("master_seed must be an unsigned 64-bit integer")
        if self.trial_index < 0:
            raise InvalidInputError("trial_index must be nonnegative")

    @property
    def stream_seed(self) -> int:
        return mix64(self.master_seed ^ ((self.trial_index * _GOLDEN) & _MASK64))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.stream_seed))


class SquareIntMatrix:
    """Dense square integer matrix, read-only after construction.

    Entries are held in an int64 array when they fit, otherwise in an
    object array of Python ints.
    """

    __slots__ = ("entries",)

    def __init__(self, entries):
        arr = np.array(entries, dtype=object) if not isinstance(entries, np.ndarray) else entries
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidInputError(f"matrix must be square, got shape {arr.shape}")
        if arr.dtype == object:
            vals = [int(x) for x in arr.ravel()]
            if all(-(2**62) < x < 2**62 for x in vals):
                arr = np.array(vals, dtype=np.int64).reshape(arr.shape)
            else:
                arr = np.array(vals, dtype=object).reshape(arr.shape)
        elif arr.dtype != np.int64:
            arr = arr.astype(np.int64)
        else:
            arr = arr.copy()
        arr.flags.writeable = False
        self.entries = arr

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def rows(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self.entries]

    def transpose(self) -> SquareIntMatrix:
        return SquareIntMatrix(np.ascontiguousarray(self.entries.T))

    def __eq__(self, other):
        if not isinstance(other, SquareIntMatrix):
            return NotImplemented
        return self.entries.shape == other.entries.shape and bool(np.all(self.entries == other.entries))

    def __hash__(self):
        return hash((self.n, tuple(int(x) for x in self.entries.ravel())))

    def __repr__(self):
        return f"SquareIntMatrix({self.rows()!r})"


def as_matrix(a) -> SquareIntMatrix:
    return a if isinstance(a, SquareIntMatrix) else SquareIntMatrix(a)


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    n: int
    r: int
    p: int | None = None
    e: int | None = None
    condition: str = "none"
    retry_cap: int = field(default=DEFAULT_RETRY_CAP, compare=False)

    def __post_init__(self):
        validate_model(self.kind, self.n, self.r, self.p, self.e, self.condition)


_CONDITIONS = {
    "config_model_multigraph": ("none", "no_loops", "simple"),
    "uniform_simple_regular": ("simple",),
    "directed_1regular_union": ("none", "no_multi"),
    "directed_1regular_union_simple": ("no_multi",),
}


def validate_model(kind, n, r, p=None, e=None, condition="none"):
    if kind not in MODEL_KINDS:
        raise InvalidInputError(f"unknown model {kind!r}; choose from {', '.join(MODEL_KINDS)}")
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    if kind != "haar_symmetric_mod" and r < 1:
        raise InvalidInputError("r must be >= 1")
    allowed = _CONDITIONS.get(kind, ("none",))
    # models whose name fixes the condition also accept the default "none"
    if condition not in allowed and not (len(allowed) == 1 and condition == "none"):
        raise InvalidInputError(f"condition {condition!r} not valid for {kind}; allowed: {allowed}")
    if kind == "matching_union" and n % 2:
        raise InvalidInputError(f"matching_union needs n even, got n={n}")
    if kind in ("config_model_multigraph", "uniform_simple_regular") and (n * r) % 2:
        raise InvalidInputError(f"configuration model needs n*r even, got n={n}, r={r}")
    if kind.startswith("directed_1regular") and n < 2:
        raise InvalidInputError("directed 1-regular unions need n >= 2")
    if kind == "haar_symmetric_mod":
        from sympy import isprime

        if p is None or not isprime(p):
            raise InvalidInputError(f"haar_symmetric_mod needs a prime p, got {p}")
        if e is None or e < 1:
            raise InvalidInputError("haar_symmetric_mod needs e >= 1")


def sample_perm_sum(n: int, r: int, rng: np.random.Generator) -> SquareIntMatrix:
    """Sum of r independent uniform permutation matrices.

    ``Generator.permutation`` is a Fisher-Yates shuffle.
    """
    if n < 1 or r < 1:
        raise InvalidInputError("need n >= 1 and r >= 1")
    a = np.zeros((n, n), dtype=np.int64)
    rows = np.arange(n)
    for _ in range(r):
        np.add.at(a, (rows, rng.permutation(n)), 1)
    return SquareIntMatrix(a)


def sample_matching_union(n: int, r: int, rng: np.random.Generator) -> SquareIntMatrix:
    """Adjacency matrix of the union of r uniform perfect matchings."""
    if n < 2 or n % 2:
        raise InvalidInputError(f"matching_union needs n even and >= 2, got {n}")
    if r < 1:
        raise InvalidInputError("r must be >= 1")
    a = np.zeros((n, n), dtype=np.int64)
    for _ in range(r):
        perm = rng.permutation(n)
        u, v = perm[0::2], perm[1::2]
        np.add.at(a, (u, v), 1)
        np.add.at(a, (v, u), 1)
    return SquareIntMatrix(a)


def _config_once(n, r, rng):
    stubs = np.repeat(np.arange(n), r)
    perm = rng.permutation(stubs)
    u, v = perm[0::2], perm[1::2]
    a = np.zeros((n, n), dtype=np.int64)
    np.add.at(a, (u, v), 1)
    np.add.at(a, (v, u), 1)
    # a loop (u == v) lands twice on the diagonal, i.e. contributes 2
    return a


def sample_config_model(
    n: int, r: int, rng: np.random.Generator, condition: str = "none", retry_cap: int = DEFAULT_RETRY_CAP
) -> SquareIntMatrix:
    """Configuration-model multigraph on n vertices of degree r.

    ``condition="no_loops"`` rejects samples with loops and
    ``condition="simple"`` rejects loops and multiple edges, which yields
    the uniform simple r-regular graph.
    """
    if (n * r) % 2:
        raise InvalidInputError(f"n*r must be even, got n={n}, r={r}")
    if condition not in ("none", "no_loops", "simple"):
        raise InvalidInputError(f"unknown condition {condition!r}")
    for _ in range(retry_cap):
        a = _config_once(n, r, rng)
        if condition == "none":
            return SquareIntMatrix(a)
        if np.any(np.diagonal(a)):
            continue
        if condition == "simple" and np.any(a > 1):
            continue
        return SquareIntMatrix(a)
    raise CapacityError(f"configuration model ({condition}) rejected {retry_cap} samples for n={n}, r={r}")


def _derangement(n, rng, retry_cap):
    idx = np.arange(n)
    for _ in range(retry_cap):
        perm = rng.permutation(n)
        if not np.any(perm == idx):
            return perm
    raise CapacityError(f"no derangement of {n} after {retry_cap} tries")


def sample_directed_union(
    n: int, r: int, rng: np.random.Generator, condition: str = "none", retry_cap: int = DEFAULT_RETRY_CAP
) -> SquareIntMatrix:
    """Sum of r independent uniform loopless 1-regular digraphs.

    Each summand is a uniform permutation conditioned on having no fixed
    point.  With ``condition="no_multi"`` the whole sum is resampled until
    all entries are at most 1.
    """
    if n < 2:
        raise InvalidInputError("need n >= 2")
    if condition not in ("none", "no_multi"):
        raise InvalidInputError(f"unknown condition {condition!r}")
    rows = np.arange(n)
    for _ in range(retry_cap):
        a = np.zeros((n, n), dtype=np.int64)
        for _ in range(r):
            np.add.at(a, (rows, _derangement(n, rng, retry_cap)), 1)
        if condition == "none" or not np.any(a > 1):
            return SquareIntMatrix(a)
    raise CapacityError(f"directed union (no_multi) rejected {retry_cap} samples for n={n}, r={r}")


def sample_haar_symmetric(n: int, p: int, e: int, rng: np.random.Generator) -> SquareIntMatrix:
    """Symmetric matrix with independent uniform entries mod p^e on and above
    the diagonal."""
    if e < 1:
        raise InvalidInputError("e must be >= 1")
    q = p**e
    if q <= 2**62:
        upper = np.triu(rng.integers(0, q, size=(n, n), dtype=np.int64))
        return SquareIntMatrix(upper + np.triu(upper, 1).T)
    rows = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            rows[i][j] = rows[j][i] = _uniform_below(q, rng)
    return SquareIntMatrix(rows)


def _uniform_below(q: int, rng: np.random.Generator) -> int:
    # rejection sampling on q.bit_length() random bits keeps exact uniformity
    bits = q.bit_length()
    nbytes = (bits + 7) // 8
    mask = (1 << bits) - 1
    while True:
        x = int.from_bytes(rng.bytes(nbytes), "little") & mask
        if x < q:
            return x


def sample(spec: ModelSpec, rng: np.random.Generator) -> SquareIntMatrix:
    kind = spec.kind
    if kind == "perm_sum":
        return sample_perm_sum(spec.n, spec.r, rng)
    if kind == "matching_union":
        return sample_matching_union(spec.n, spec.r, rng)
    if kind == "config_model_multigraph":
        return sample_config_model(spec.n, spec.r, rng, spec.condition, spec.retry_cap)
    if kind == "uniform_simple_regular":
        return sample_config_model(spec.n, spec.r, rng, "simple", spec.retry_cap)
    if kind == "directed_1regular_union":
        return sample_directed_union(spec.n, spec.r, rng, spec.condition, spec.retry_cap)
    if kind == "directed_1regular_union_simple":
        return sample_directed_union(spec.n, spec.r, rng, "no_multi", spec.retry_cap)
    if kind == "haar_symmetric_mod":
        return sample_haar_symmetric(spec.n, spec.p, spec.e, rng)
    raise InvalidInputError(f"unknown model {kind!r}")


def matrix_to_json(a: SquareIntMatrix, spec: ModelSpec | None = None, seed: SeedPolicy | None = None) -> dict:
    from . import __version__

    out = {"n": a.n, "entries": a.rows()}
    if spec is not None:
        out.update(model=spec.kind, r=spec.r, condition=spec.condition)
        if spec.kind == "haar_symmetric_mod":
            out.update(p=spec.p, e=spec.e)
    if seed is not None:
        out["seed"] = {
            "master_seed": seed.master_seed,
            "trial_index": seed.trial_index,
            "stream_seed": seed.stream_seed,
        }
    out["prng"] = PRNG_NAME
    out["version"] = __version__
    return out


def matrix_from_json(obj: dict) -> SquareIntMatrix:
    try:
        entries = obj["entries"]
    except (KeyError, TypeError) as exc:
        raise InvalidInputError("matrix JSON needs an 'entries' field") from exc
    if entries and not isinstance(entries[0], list):
        n = int(obj["n"])
        entries = [entries[i * n : (i + 1) * n] for i in range(n)]
    m = SquareIntMatrix(entries if entries else np.zeros((0, 0), dtype=np.int64))
    if "n" in obj and int(obj["n"]) != m.n:
        raise InvalidInputError(f"declared n={obj['n']} but entries are {m.n}x{m.n}")
    return m


def format_grid(a: SquareIntMatrix) -> str:
    return "\n".join(" ".join(str(x) for x in row) for row in a.rows())


def parse_grid(text: str) -> SquareIntMatrix:
    rows = [[int(t) for t in line.split()] for line in text.strip().splitlines() if line.strip()]
    return SquareIntMatrix(rows if rows else np.zeros((0, 0), dtype=np.int64))
