import math
from fractions import Fraction
from math import gcd

import pytest

from regcoker import abelian, theory
from regcoker.abelian import GroupType, parse_group
from regcoker.errors import InvalidInputError

G = parse_group


def float_product(p, odd=False, terms=400):
    """Plain floating-point Euler product, independent of the exact code."""
    out = 1.0
    for k in range(terms):
        e = 2 * k + 1 if odd else k + 1
        out *= 1 - p ** (-e)
    return out


def close(interval, x, tol=1e-12):
    return abs(float(interval.mid) - x) < tol


# ---------------------------------------------------------------- probabilities


def test_cl_examples():
    eta2 = float_product(2)
    assert abs(eta2 - 0.288788) < 1e-6
    assert close(theory.cl_probability(GroupType(), [2]), eta2)
    assert close(theory.cl_probability(G("Z2"), [2]), eta2)
    val = theory.cl_probability(G("Z3"), [3])
    assert close(val, float_product(3) / 2)
    assert abs(float(val.mid) - 0.280063) < 1e-6


def test_sym_examples():
    eta5 = float_product(5, odd=True)
    assert abs(eta5 - 0.793335) < 1e-6
    assert close(theory.sym_probability(GroupType(), [5]), eta5)
    eta3 = float_product(3, odd=True)
    assert abs(eta3 - 0.639005) < 1e-6
    assert close(theory.sym_probability(G("Z3"), [3]), eta3 * 2 / (3 * 2))
    assert close(theory.sym_probability(G("Z5"), [3, 5]), (4 / (5 * 4)) * eta3 * eta5)


def test_probability_errors():
    with pytest.raises(InvalidInputError):
        theory.sym_probability(GroupType(), [2, 3])
    with pytest.raises(InvalidInputError):
        theory.cl_probability(G("Z3"), [2])
    with pytest.raises(InvalidInputError):
        theory.cl_probability(GroupType(), [4])
    with pytest.raises(InvalidInputError):
        theory.probability("bogus", GroupType(), [2])


def test_cl_mass_by_order_identity():
    # sum over groups of order p^j of 1/|Aut| is p^-j / prod_{i<=j} (1 - p^-i)
    for p in (2, 3, 5):
        groups = abelian.all_group_types([p], p**6)
        for j in range(7):
            lhs = sum(Fraction(1, abelian.aut_order(g)) for g in groups if g.order == p**j)
            rhs = Fraction(1, p**j)
            for i in range(1, j + 1):
                rhs /= 1 - Fraction(1, p**i)
            assert lhs == rhs


def test_cl_total_brackets_one():
    # partial mass plus the tail bound sum_{j>J} p^-j covers 1
    for p, big_j in ((2, 8), (3, 5)):
        total = theory.mass_total("directed_CL", [p], p**big_j)
        tail = Fraction(1, p**big_j * (p - 1))
        assert total.hi <= 1
        assert total.lo + tail >= 1


def test_mass_cutoff_one_is_trivial_probability():
    for style, primes in (("directed_CL", [2]), ("symmetric", [3]), ("directed_CL", [2, 3])):
        assert theory.mass_total(style, primes, 1) == theory.probability(style, GroupType(), primes)


def test_mass_monotone():
    vals = [theory.mass_total("symmetric", [3], c).mid for c in (1, 3, 9, 27, 81)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1


# ---------------------------------------------------------------- moments


def test_directed_moments():
    assert theory.predicted_moment_directed(G("Z5"), 3) == 1
    assert theory.predicted_moment_directed(GroupType(), 4) == 1
    with pytest.raises(InvalidInputError, match="predicted_moment_rm"):
        theory.predicted_moment_directed(G("Z2"), 4)


def test_symmetric_moments():
    assert theory.predicted_moment_symmetric(G("Z5"), 3) == 1
    assert theory.predicted_moment_symmetric(G("Z5^2"), 3) == 5
    assert theory.predicted_moment_symmetric(G("Z3^3"), 4) == 27
    with pytest.raises(InvalidInputError):
        theory.predicted_moment_symmetric(G("Z2"), 3)
    with pytest.raises(InvalidInputError):
        theory.predicted_moment_symmetric(G("Z3"), 3)


def test_rm_moments():
    for m in range(1, 7):
        assert theory.predicted_moment_rm(G("Z2"), 4, m) == 3
    assert theory.predicted_moment_rm(G("Z4"), 2, 1) == 2
    assert theory.predicted_moment_rm(G("Z4"), 2, 2) == 4
    assert theory.predicted_moment_rm(G("Z5"), 3, 1) == 1


def test_rm_moment_coprime_is_one():
    for g in abelian.all_group_types([2, 3, 5, 7], 64):
        for r in (1, 3, 5, 7, 11, 35):
            if gcd(r, g.order) == 1:
                assert theory.predicted_moment_rm(g, r, 1) == 1, (g, r)


def test_p_part_of():
    assert theory.p_part_of(24, [2]) == 8
    assert theory.p_part_of(24, [3, 5]) == 3
    assert theory.p_part_of(7, [2]) == 1


# ---------------------------------------------------------------- Euler products


@pytest.mark.parametrize("p", [2, 3, 5, 7])
@pytest.mark.parametrize("style", ["all_k", "odd_exponents"])
def test_euler_bounds_rigorous(p, style):
    for k in (4, 8, 16, 64):
        short = theory.euler_product(p, style, k)
        long = theory.euler_product(p, style, 2 * k)
        assert short.value - short.error <= long.value <= short.value
        assert long.value - long.error >= short.value - short.error


def test_euler_partial_products_decrease():
    prev = Fraction(2)
    for k in range(1, 20):
        v = theory.euler_product(3, "all_k", k).value
        assert v < prev
        prev = v


def test_euler_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        theory.euler_product(6)
    with pytest.raises(InvalidInputError):
        theory.euler_product(3, "weird")


# ---------------------------------------------------------------- pairing identity


def test_identity_cutoff_one():
    res = theory.pairing_mass_identity_check(3, 1)
    assert abs(float(res.mid) - (1 / float_product(3, odd=True) - 1)) < 1e-12
    assert abs(float(res.mid) - 0.564934) < 1e-6


def test_identity_residual_positive_and_decreasing():
    cutoffs = (1, 3, 9, 27, 81)
    vals = [theory.pairing_mass_identity_check(3, c) for c in cutoffs]
    assert all(v.lo > 0 for v in vals)
    assert all(b.hi < a.lo for a, b in zip(vals, vals[1:]))
    # geometric convergence: each extra factor of 3 in the cutoff cuts the
    # residual by roughly a factor of 3
    ratios = [float(a.mid / b.mid) for a, b in zip(vals, vals[1:])]
    assert all(2 < x < 4 for x in ratios[1:])


def test_identity_rejects_two():
    with pytest.raises(InvalidInputError):
        theory.pairing_mass_identity_check(2, 8)


# ---------------------------------------------------------------- tables


def test_measure_table_order_and_json():
    table = theory.measure_table("directed_CL", [2], 8)
    names = [str(g) for g, _ in table.entries]
    assert names == ["triv", "Z2", "Z4", "Z2^2", "Z8", "Z4*Z2", "Z2^3"]
    js = table.to_json()
    assert set(js["entries"]) == set(names)
    assert math.isclose(js["total"]["value"], sum(v["value"] for v in js["entries"].values()))
    assert "total" in table.format()


def test_interval_arithmetic():
    a = theory.Interval(Fraction(1, 4), Fraction(1, 2))
    b = theory.Interval.exact(2)
    assert (a * b).hi == 1 and (a + b).lo == Fraction(9, 4)
    assert a.contains(Fraction(1, 3)) and not a.contains(1)
    with pytest.raises(ValueError):
        a.scale(-1)
