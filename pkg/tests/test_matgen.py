import itertools
import json
import math
from collections import Counter

import numpy as np
import pytest

from regcoker.errors import CapacityError, InvalidInputError
from regcoker.matgen import (
    ModelSpec,
    SeedPolicy,
    SquareIntMatrix,
    format_grid,
    matrix_from_json,
    matrix_to_json,
    mix64,
    parse_grid,
    sample,
    sample_config_model,
    sample_directed_union,
    sample_haar_symmetric,
    sample_matching_union,
    sample_perm_sum,
)

TRIALS = 10_000


def rng(i, master=2024):
    return SeedPolicy(master, i).generator()


def within_3_sigma(count, trials, p):
    se = math.sqrt(p * (1 - p) / trials)
    return abs(count / trials - p) <= 3 * se


# ---------------------------------------------------------------- seeds


def test_mix64_is_a_64_bit_bijection_sample():
    outs = {mix64(i) for i in range(5000)}
    assert len(outs) == 5000
    assert all(0 <= x < 2**64 for x in outs)


def test_seed_policy_determinism():
    a = sample_perm_sum(30, 3, rng(7))
    b = sample_perm_sum(30, 3, rng(7))
    c = sample_perm_sum(30, 3, rng(8))
    assert a == b and hash(a) == hash(b)
    assert a != c
    assert SeedPolicy(1, 2).stream_seed == SeedPolicy(1, 2).stream_seed
    assert SeedPolicy(1, 2).stream_seed != SeedPolicy(2, 1).stream_seed
    with pytest.raises(InvalidInputError):
        SeedPolicy(-1, 0)


# ---------------------------------------------------------------- examples


def test_perm_sum_n1():
    for r in (1, 3, 7):
        assert sample_perm_sum(1, r, rng(0)).rows() == [[r]]


def test_perm_sum_n2_uniform():
    counts = Counter(tuple(map(tuple, sample_perm_sum(2, 1, rng(i)).rows())) for i in range(TRIALS))
    assert set(counts) == {((1, 0), (0, 1)), ((0, 1), (1, 0))}
    assert within_3_sigma(counts[((1, 0), (0, 1))], TRIALS, 0.5)


def test_matching_n2():
    assert sample_matching_union(2, 3, rng(0)).rows() == [[0, 3], [3, 0]]


def test_matching_n4_uniform():
    counts = Counter(tuple(map(tuple, sample_matching_union(4, 1, rng(i)).rows())) for i in range(TRIALS))
    # brute force: the perfect matchings of 4 labelled vertices
    verts = range(4)
    matchings = set()
    for perm in itertools.permutations(verts):
        m = frozenset(frozenset(perm[k : k + 2]) for k in (0, 2))
        matchings.add(m)
    assert len(matchings) == 3 == len(counts)
    for c in counts.values():
        assert within_3_sigma(c, TRIALS, 1 / 3)


def test_matching_odd_rejected():
    with pytest.raises(InvalidInputError):
        sample_matching_union(5, 3, rng(0))
    with pytest.raises(InvalidInputError):
        ModelSpec("matching_union", 5, 3)


def test_directed_union_examples():
    assert sample_directed_union(2, 1, rng(0)).rows() == [[0, 1], [1, 0]]
    counts = Counter(tuple(map(tuple, sample_directed_union(3, 1, rng(i)).rows())) for i in range(TRIALS))
    assert len(counts) == 2
    for c in counts.values():
        assert within_3_sigma(c, TRIALS, 0.5)


def test_haar_examples():
    ones = sum(sample_haar_symmetric(1, 2, 1, rng(i)).rows()[0][0] for i in range(TRIALS))
    assert within_3_sigma(ones, TRIALS, 0.5)
    for i in range(50):
        a = sample_haar_symmetric(7, 5, 3, rng(i)).entries
        assert np.array_equal(a, a.T)
        assert a.min() >= 0 and a.max() < 125


def test_haar_large_modulus_exact():
    a = sample_haar_symmetric(4, 3, 50, rng(1))
    assert a.entries.dtype == object
    assert max(max(r) for r in a.rows()) < 3**50
    assert a == a.transpose()


def test_config_model_k4():
    for i in range(50):
        a = sample_config_model(4, 3, rng(i), "simple").rows()
        assert a == [[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]]


def test_config_model_impossible_raises():
    with pytest.raises(CapacityError, match="rejected"):
        sample_config_model(2, 2, rng(0), "simple", retry_cap=1000)
    with pytest.raises(InvalidInputError):
        sample_config_model(3, 3, rng(0))


def test_directed_no_multi_impossible_raises():
    with pytest.raises(CapacityError):
        sample_directed_union(3, 3, rng(0), "no_multi", retry_cap=500)


def _simple_cubic_graphs_on_6():
    """All labelled 3-regular simple graphs on 6 vertices, by exhaustion."""
    edges = list(itertools.combinations(range(6), 2))
    out = []
    for sub in itertools.combinations(edges, 9):
        deg = [0] * 6
        for u, v in sub:
            deg[u] += 1
            deg[v] += 1
        if all(d == 3 for d in deg):
            a = np.zeros((6, 6), dtype=int)
            for u, v in sub:
                a[u, v] = a[v, u] = 1
            out.append(a)
    return out


def _has_triangle(a):
    return np.trace(np.linalg.matrix_power(a, 3)) > 0


def test_config_simple_uniform_on_6_vertices():
    graphs = _simple_cubic_graphs_on_6()
    prisms = sum(_has_triangle(g) for g in graphs)
    assert len(graphs) == 70 and prisms == 60  # K_{3,3} has 10 labellings
    trials = 3000
    seen = Counter()
    for i in range(trials):
        a = sample_config_model(6, 3, rng(i), "simple").entries
        seen[a.tobytes()] += 1
    labelled = {g.astype(np.int64).tobytes() for g in graphs}
    assert set(seen) <= labelled
    prism_count = sum(c for k, c in seen.items() if _has_triangle(np.frombuffer(k, dtype=np.int64).reshape(6, 6)))
    assert within_3_sigma(prism_count, trials, 60 / 70)
    # per labelled graph: chi-square against uniform, 69 degrees of freedom
    expected = trials / 70
    chi2 = sum((seen.get(g, 0) - expected) ** 2 / expected for g in labelled)
    assert chi2 < 69 + 3 * math.sqrt(2 * 69)


def test_uniform_simple_regular_model():
    for i in range(20):
        a = sample(ModelSpec("uniform_simple_regular", 10, 3), rng(i)).entries
        assert np.array_equal(a, a.T) and a.max() <= 1 and not np.any(np.diag(a))


# ---------------------------------------------------------------- invariants


def test_row_column_sums_fuzz():
    r_gen = np.random.default_rng(99)
    kinds = [
        "perm_sum",
        "matching_union",
        "config_model_multigraph",
        "directed_1regular_union",
    ]
    for i in range(1000):
        kind = kinds[i % len(kinds)]
        n = int(r_gen.integers(2, 25))
        r = int(r_gen.integers(1, 6))
        if kind in ("matching_union",) and n % 2:
            n += 1
        if kind == "config_model_multigraph" and (n * r) % 2:
            n += 1
        a = sample(ModelSpec(kind, n, r), rng(i)).entries
        assert np.all(a.sum(axis=1) == r), kind
        assert np.all(a.sum(axis=0) == r), kind
        assert a.min() >= 0 and a.max() <= r
        if kind in ("matching_union", "config_model_multigraph"):
            assert np.array_equal(a, a.T)
        if kind in ("matching_union", "directed_1regular_union"):
            assert not np.any(np.diag(a))


def test_no_multi_condition():
    for i in range(30):
        a = sample(ModelSpec("directed_1regular_union_simple", 12, 3), rng(i)).entries
        assert a.max() <= 1 and not np.any(np.diag(a))
        assert np.all(a.sum(axis=0) == 3)


def test_perm_sum_transpose_symmetry():
    # (A^2)[0,1] for A and for its transpose must share one distribution
    trials = 4000
    xs, ys = [], []
    for i in range(trials):
        a = sample_perm_sum(6, 3, rng(i)).entries
        sq = a @ a
        xs.append(sq[0, 1])
        ys.append(sq[1, 0])
        assert np.trace(a) == np.trace(a.T)
    xs, ys = np.array(xs, float), np.array(ys, float)
    se = math.sqrt(xs.var(ddof=1) / trials + ys.var(ddof=1) / trials)
    assert abs(xs.mean() - ys.mean()) <= 3 * se
    # same on the upper tail
    assert within_3_sigma(int((ys >= 3).sum()), trials, float((xs >= 3).mean()) or 1 / trials)


# ---------------------------------------------------------------- I/O


def test_json_round_trip():
    spec = ModelSpec("perm_sum", 5, 3)
    seed = SeedPolicy(11, 4)
    a = sample(spec, seed.generator())
    obj = json.loads(json.dumps(matrix_to_json(a, spec, seed)))
    assert matrix_from_json(obj) == a
    assert obj["prng"] and obj["version"] and obj["seed"]["trial_index"] == 4
    assert obj["model"] == "perm_sum" and obj["r"] == 3


def test_grid_round_trip():
    a = SquareIntMatrix([[1, -2], [30, 4]])
    assert parse_grid(format_grid(a)) == a


def test_bad_matrices():
    with pytest.raises(InvalidInputError):
        SquareIntMatrix([[1, 2, 3], [4, 5, 6]])
    with pytest.raises(InvalidInputError):
        matrix_from_json({"n": 3, "entries": [[1, 0], [0, 1]]})
