"""
Test script to verify the pairing expansion of |S|^2, the sixth-moment inequality and its exact
decomposition, and the Cauchy-Schwarz check
"""
import numpy as np
import pytest

from src.character_sampler import CharacterAssignment, eval_S, sample_assignment
from src.errors import InvalidArgumentError, ResourceLimitError
from src.identity_checks import (identity_2_2_sides, pairing_count, sixth_moment_decomposition, verify_cs,
                                 verify_identity_2_2, verify_prop_2_1)
from src.lab_config import LabConfig
from src.moment_counter import SCountParams, exact_moment, product_table


def steinhaus(sieve, limit, seed, index=0):
    return sample_assignment(sieve.primes[sieve.primes <= limit], 'steinhaus', seed, index)


def test_level_zero(small_sieve):
    z = steinhaus(small_sieve, 100, 1)
    assert verify_identity_2_2(small_sieve, 100, 0, z) == 0.0


def test_constant_character(small_sieve):
    primes = small_sieve.primes[small_sieve.primes <= 200]
    one = CharacterAssignment('steinhaus', primes, np.ones(len(primes), dtype=np.complex128), seed=0)
    lhs, rhs = identity_2_2_sides(small_sieve, 200, 2, one)
    assert lhs == rhs
    assert verify_identity_2_2(small_sieve, 200, 2, one) == 0.0


@pytest.mark.parametrize('limit', [50, 200, 500])
@pytest.mark.parametrize('m', [1, 2, 3])
def test_random_assignments(small_sieve, limit, m):
    for index in range(10):
        z = steinhaus(small_sieve, limit, 20240, index)
        assert verify_identity_2_2(small_sieve, limit, m, z) < 1e-9


def test_rademacher_assignment(small_sieve):
    z = sample_assignment(small_sieve.primes[small_sieve.primes <= 300], 'rademacher', 4)
    assert verify_identity_2_2(small_sieve, 300, 2, z) < 1e-9


def test_lhs_is_eval_S_squared(small_sieve):
    z = steinhaus(small_sieve, 400, 9)
    lhs, rhs = identity_2_2_sides(small_sieve, 400, 3, z)
    expected = abs(eval_S(small_sieve, z, 400, 3)) ** 2
    assert lhs.real == pytest.approx(expected, rel=1e-12)
    assert rhs.real == pytest.approx(expected, rel=1e-9)


def test_assignment_must_cover_primes(small_sieve):
    short = steinhaus(small_sieve, 10, 1)
    with pytest.raises(InvalidArgumentError):
        verify_identity_2_2(small_sieve, 100, 1, short)
    gapped = sample_assignment([3, 5, 7], 'steinhaus', 1)
    with pytest.raises(InvalidArgumentError):
        identity_2_2_sides(small_sieve, 10, 1, gapped)


def test_identity_budget(small_sieve):
    z = steinhaus(small_sieve, 500, 1)
    with pytest.raises(ResourceLimitError):
        verify_identity_2_2(small_sieve, 500, 2, z, LabConfig(budget=10))


def test_prop_level_zero(small_sieve):
    result = verify_prop_2_1(small_sieve, 50, 0)
    assert result.lhs == 1
    assert result.first_term == 1
    assert result.correction == 0
    assert result.holds


@pytest.mark.parametrize('limit,m', [(50, 1), (100, 2), (60, 3), (30, 2)])
def test_prop_holds(small_sieve, limit, m):
    result = verify_prop_2_1(small_sieve, limit, m)
    assert result.lhs == exact_moment(small_sieve, limit, m, 3).value
    assert result.holds
    assert result.to_dict()['holds'] is True


def test_prop_caps(small_sieve):
    with pytest.raises(ResourceLimitError):
        verify_prop_2_1(small_sieve, 500, 1)
    with pytest.raises(ResourceLimitError):
        verify_prop_2_1(small_sieve, 100, 4)
    with pytest.raises(ResourceLimitError):
        verify_prop_2_1(small_sieve, 150, 1, LabConfig(prop21_max_limit=100))


def test_pairing_count_brute_force(small_sieve):
    values = small_sieve.elements(40, 2)
    products, counts = product_table(values, values)
    quads = [(w, x, y, v) for w in values.tolist() for x in values.tolist()
             for y in values.tolist() for v in values.tolist()]
    for a, b in ((1, 1), (2, 3), (3, 2), (5, 4), (7, 6)):
        expected = sum(1 for w, x, y, v in quads if w * x * b == y * v * a)
        assert pairing_count(products, counts, a, b) == expected


@pytest.mark.parametrize('limit,m', [(30, 1), (60, 2), (80, 3), (120, 2)])
def test_decomposition_is_exact(small_sieve, limit, m):
    result = sixth_moment_decomposition(small_sieve, limit, m)
    assert result.matches
    assert result.total == exact_moment(small_sieve, limit, m, 3).value


def test_decomposition_bounded_by_inequality(small_sieve):
    decomposition = sixth_moment_decomposition(small_sieve, 100, 2)
    check = verify_prop_2_1(small_sieve, 100, 2)
    assert decomposition.size * decomposition.fourth_moment == check.first_term
    assert decomposition.pairing_sum <= check.correction


def test_cs_check(small_sieve):
    check = verify_cs(small_sieve, SCountParams(4, 4, 4, 4, 1, 1, 1, 1))
    assert check.count == 6
    assert check.pair_a == 6 and check.pair_b == 6
    assert check.holds
    assert check.bound == pytest.approx(32 ** 0.5)
    assert check.ratio == pytest.approx(6 / 32 ** 0.5)
    assert check.to_dict()['count_S'] == '6'


def test_cs_check_swaps_orientation(small_sieve):
    check = verify_cs(small_sieve, SCountParams(5, 5, 6, 6, 1, 1, 1, 1))
    assert check.holds
    assert check.bound == pytest.approx(108 ** 0.5)


@pytest.mark.slow
def test_prop_holds_up_to_two_hundred(small_sieve):
    for limit in range(1, 201):
        for m in range(4):
            assert verify_prop_2_1(small_sieve, limit, m).holds, (limit, m)


@pytest.mark.slow
@pytest.mark.parametrize('limit', [50, 200, 500])
@pytest.mark.parametrize('m', [1, 2, 3])
def test_hundred_random_assignments(small_sieve, limit, m):
    for index in range(100):
        z = steinhaus(small_sieve, limit, 7, index)
        assert verify_identity_2_2(small_sieve, limit, m, z) < 1e-9, index
