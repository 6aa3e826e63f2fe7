"""
Test script to verify the theorem, lemma and Gaussian ratio tables and the report suite
"""
import json
import math

import pytest

from src.almost_prime_counts import count_E
from src.errors import InvalidArgumentError, ResourceLimitError, ZeroDenominatorError
from src.lab_analysis import (C3_CONJECTURE, McSettings, SuiteSettings, build_default_suite, gaussian_constants,
                              gaussian_ratios, lemma33_ratio, lemma33_report, lemma34_lhs, lemma34_ratio,
                              lemma34_report, theorem_ratios, verification_report, write_suite)
from src.lab_config import LabConfig
from src.moment_counter import enumerate_moment


def test_theorem_row_for_ten(small_sieve):
    report = theorem_ratios(small_sieve, [10], [0, 2])
    level_zero, level_two = report.rows
    assert level_zero['M2'] == level_zero['M4'] == level_zero['M6'] == 1
    assert level_zero['M6_over_E3'] == 1.0
    assert level_zero['norm6_over_norm4'] == pytest.approx(1.0)
    assert level_two['E'] == 4
    assert level_two['M4'] == 32
    assert level_two['M6'] == enumerate_moment(small_sieve, 10, 2, 3)
    assert level_two['M6_over_E3'] == pytest.approx(level_two['M6'] / 64)
    assert report.metadata['c3_conjecture'] == C3_CONJECTURE


def test_theorem_skips_empty_rows(small_sieve, caplog):
    report = theorem_ratios(small_sieve, [10], [1, 5])
    assert [row['m'] for row in report.rows] == [1]
    assert 'Skipping theorem row' in caplog.text


def test_theorem_lower_bound(small_sieve):
    report = theorem_ratios(small_sieve, [100, 300], [1, 2, 3])
    assert all(row['M6_over_E3'] >= 1 for row in report.rows)
    assert all(row['M4_over_E2'] >= 1 for row in report.rows)


def test_theorem_propagates_resource_limit(small_sieve):
    with pytest.raises(ResourceLimitError):
        theorem_ratios(small_sieve, [1000], [1], LabConfig(k3_max_limit=500))


def test_lemma33_small_value(small_sieve):
    expected = (1 / 4 + 2 / 9 + 3 / 25 + 4 / 49) / 4
    assert lemma33_ratio(small_sieve, 10, 1) == pytest.approx(expected)
    assert lemma33_ratio(small_sieve, 7, 3) == 0
    with pytest.raises(InvalidArgumentError):
        lemma33_ratio(small_sieve, 10, 0)


def test_lemma34_for_one_hundred(small_sieve):
    primes = [p for p in small_sieve.primes.tolist() if 10 < p <= 100]
    expected = sum(count_E(small_sieve, 100 // p, 1) for p in primes)
    assert lemma34_lhs(small_sieve, 100, 1, 1) == expected
    scale = 25 * math.log(math.log(100))
    assert lemma34_ratio(small_sieve, 100, 1, 1) == pytest.approx(expected / scale)


def test_lemma34_edge_cases(small_sieve):
    # E_{16,4} = {16} and E_{1,2} is empty
    assert lemma34_ratio(small_sieve, 16, 4, 2) == 0
    with pytest.raises(InvalidArgumentError):
        lemma34_ratio(small_sieve, 15, 1, 1)
    with pytest.raises(ZeroDenominatorError):
        lemma34_ratio(small_sieve, 20, 5, 1)


def test_lemma_reports(small_sieve):
    report = lemma33_report(small_sieve, [100, 1000], [1, 2])
    assert len(report.rows) == 4
    assert report.rows[0]['ratio'] == pytest.approx(lemma33_ratio(small_sieve, 100, 1))
    report = lemma34_report(small_sieve, [1000], [1, 2], [1, 3])
    assert [(row['k'], row['k_prime']) for row in report.rows] == [(1, 1), (1, 3), (2, 1), (2, 3)]
    assert all(row['ratio'] > 0 for row in report.rows)


def test_gaussian_constants():
    assert gaussian_constants(2) == {'complex_gaussian': 2.0, 'real_gaussian': 3.0}
    assert gaussian_constants(3) == {'complex_gaussian': 6.0, 'real_gaussian': 15.0}


def test_gaussian_second_moment_ratio_is_one(small_sieve):
    report = gaussian_ratios(small_sieve, [100, 500], [1, 2, 3], 1)
    assert all(row['ratio'] == 1.0 for row in report.rows)
    assert all(row['source'] == 'exact' for row in report.rows)


def test_gaussian_primes(small_sieve):
    report = gaussian_ratios(small_sieve, [1000], [1], 2)
    size = count_E(small_sieve, 1000, 1)
    assert report.rows[0]['ratio'] == pytest.approx((2 * size * size - size) / size ** 2)
    report = gaussian_ratios(small_sieve, [300], [1], 3)
    assert report.rows[0]['ratio'] <= 6


def test_gaussian_rademacher(small_sieve):
    steinhaus = gaussian_ratios(small_sieve, [200], [2], 2)
    rademacher = gaussian_ratios(small_sieve, [200], [2], 2, model='rademacher')
    assert rademacher.name == 'gaussian_k2_rademacher'
    assert rademacher.rows[0]['ratio'] >= steinhaus.rows[0]['ratio']


def test_gaussian_monte_carlo_fallback(small_sieve):
    config = LabConfig(budget=1000)
    with pytest.raises(ResourceLimitError):
        gaussian_ratios(small_sieve, [500], [2], 2, config=config)
    report = gaussian_ratios(small_sieve, [500], [2], 2, McSettings(n_samples=200, seed=3), config=config)
    row = report.rows[0]
    assert row['source'] == 'mc'
    assert row['stderr'] > 0
    assert report.metadata['mc_seed'] == 3


def test_verification_report(small_sieve):
    settings = SuiteSettings(identity_limits=(50, 100), levels=(1, 2), prop_cases=((30, 1),))
    report = verification_report(small_sieve, settings)
    assert {row['check'] for row in report.rows} == {'identity22', 'prop21', 'cs'}
    assert all(row['holds'] for row in report.rows)


def test_suite_written_with_manifest(medium_sieve, tmp_path):
    settings = SuiteSettings(count_limit=1000, approx_limits=(1000, 5000), theorem_limits=(100, 200),
                             levels=(1, 2), lemma_limits=(1000, 5000), helson_limits=(10, 100),
                             identity_limits=(50, 100), prop_cases=((30, 1),), n_samples=50)
    reports = build_default_suite(medium_sieve, settings)
    names = [report.name for report in reports]
    assert names[0] == 'counts' and names[-1] == 'verify'
    assert 'gaussian_k3' in names and 'helson' in names

    manifest_path = write_suite(reports, str(tmp_path), ('csv', 'json'), settings)
    with open(manifest_path, encoding='utf-8') as handle:
        manifest = json.load(handle)
    assert manifest['settings']['seed'] == 0
    assert manifest['reports']['theorem'] == ['theorem.csv', 'theorem.json']
    assert (tmp_path / 'lemma34.csv').exists()


def test_suite_sieve_limit():
    assert SuiteSettings().sieve_limit == 1_000_000


@pytest.mark.slow
def test_lemma_ratios_at_scale(large_sieve):
    for limit in (10 ** 4, 10 ** 5, 10 ** 6):
        for k in (1, 2, 3):
            assert 0 < lemma33_ratio(large_sieve, limit, k) < math.inf
            for k_prime in (1, 2, 3):
                assert 0 < lemma34_ratio(large_sieve, limit, k, k_prime) < math.inf


@pytest.mark.slow
def test_theorem_table_at_scale(medium_sieve):
    report = theorem_ratios(medium_sieve, [500, 1000, 2000], [1, 2, 3])
    for row in report.rows:
        assert 1 <= row['M6_over_E3'] <= 100
        if row['m'] == 1:
            assert row['M6_over_E3'] <= 6
