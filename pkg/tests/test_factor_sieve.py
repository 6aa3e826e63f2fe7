"""
Test script to verify the factor sieve, product keys and the binary sieve cache
"""
import random

import numpy as np
import pytest

from src.errors import CacheFormatError, InvalidArgumentError, OutOfRangeError
from src.factor_sieve import (CACHE_MAGIC, EMPTY_KEY, ProductKey, build_sieve, is_square_key, key_product,
                              load_sieve, save_sieve)
from src.lab_config import reset_lab_config


def trial_division_omega(n):
    count = 0
    d = 2
    while d * d <= n:
        while n % d == 0:
            n //= d
            count += 1
        d += 1
    return count + (1 if n > 1 else 0)


def test_smallest_prime_factors(small_sieve):
    assert small_sieve.spf[12] == 2
    assert small_sieve.spf[35] == 5
    assert small_sieve.spf[97] == 97
    assert small_sieve.spf[961] == 31


def test_primes_below_100(small_sieve):
    primes = small_sieve.primes[small_sieve.primes < 100].tolist()
    assert len(primes) == 25
    assert primes[:5] == [2, 3, 5, 7, 11]
    assert primes[-1] == 97


def test_omega_matches_trial_division(small_sieve):
    expected = [trial_division_omega(n) for n in range(1, 1001)]
    assert small_sieve.omega[1:].tolist() == expected


def test_big_omega_values(small_sieve):
    assert small_sieve.big_omega(1) == 0
    assert small_sieve.big_omega(12) == 3
    assert small_sieve.big_omega(1000) == 6
    assert build_sieve(1024, use_cache=False).big_omega(1024) == 10


def test_factor_key(small_sieve):
    key = small_sieve.factor_key(360)
    assert key.factors == ((2, 3), (3, 2), (5, 1))
    assert key.value == 360
    assert key.omega == 6
    assert str(key) == '2^3 * 3^2 * 5'
    assert small_sieve.factor_key(1) == EMPTY_KEY


def test_product_keys():
    six = ProductKey(((2, 1), (3, 1)))
    ten = ProductKey(((2, 1), (5, 1)))
    product = six * ten
    assert product.factors == ((2, 2), (3, 1), (5, 1))
    assert product.value == 60
    assert key_product([]) == EMPTY_KEY
    assert is_square_key(EMPTY_KEY)
    assert is_square_key(key_product([six, six]))
    assert not is_square_key(product)
    assert product.square_free_kernel() == 15


def test_key_product_matches_integer_product(small_sieve):
    rng = random.Random(2024)
    for _ in range(500):
        a = rng.randint(1, 1000)
        b = rng.randint(1, 1000 // a)
        product = key_product([small_sieve.factor_key(a), small_sieve.factor_key(b)])
        assert product == small_sieve.factor_key(a * b)
        assert product.value == a * b


def test_non_canonical_key_rejected():
    with pytest.raises(InvalidArgumentError):
        ProductKey(((3, 1), (2, 1)))
    with pytest.raises(InvalidArgumentError):
        ProductKey(((2, 0),))


def test_elements(small_sieve):
    assert small_sieve.elements(10, 2).tolist() == [4, 6, 9, 10]
    assert small_sieve.elements(10, 0).tolist() == [1]
    assert small_sieve.elements(7, 3).tolist() == []
    assert small_sieve.elements(100, 1).dtype == np.int64


def test_out_of_range(small_sieve):
    with pytest.raises(OutOfRangeError):
        small_sieve.big_omega(0)
    with pytest.raises(OutOfRangeError):
        small_sieve.factor_key(1001)
    with pytest.raises(OutOfRangeError):
        small_sieve.elements(5000, 1)


def test_invalid_limit():
    with pytest.raises(InvalidArgumentError):
        build_sieve(1, use_cache=False)


def test_cache_round_trip(tmp_path):
    sieve = build_sieve(500, use_cache=False)
    path = tmp_path / 'spf_500.bin'
    save_sieve(sieve, str(path))
    raw = path.read_bytes()
    assert raw[:8] == CACHE_MAGIC
    assert int.from_bytes(raw[8:16], 'little') == 500
    assert len(raw) == 16 + 4 * 501

    loaded = load_sieve(str(path))
    assert loaded.limit == 500
    assert np.array_equal(loaded.spf, sieve.spf)
    assert np.array_equal(loaded.omega, sieve.omega)


def test_cache_rejects_bad_files(tmp_path):
    sieve = build_sieve(100, use_cache=False)
    path = tmp_path / 'spf.bin'
    save_sieve(sieve, str(path))
    raw = path.read_bytes()

    (tmp_path / 'magic.bin').write_bytes(b'NOTSPF01' + raw[8:])
    with pytest.raises(CacheFormatError):
        load_sieve(str(tmp_path / 'magic.bin'))

    (tmp_path / 'short.bin').write_bytes(raw[:-4])
    with pytest.raises(CacheFormatError):
        load_sieve(str(tmp_path / 'short.bin'))

    (tmp_path / 'header.bin').write_bytes(raw[:5])
    with pytest.raises(CacheFormatError):
        load_sieve(str(tmp_path / 'header.bin'))


def test_build_uses_cache_directory(tmp_path, monkeypatch):
    monkeypatch.setenv('RMF_LAB_SIEVE_CACHE_DIR', str(tmp_path))
    reset_lab_config()
    first = build_sieve(300)
    assert (tmp_path / 'spf_300.bin').exists()
    second = build_sieve(300)
    assert np.array_equal(first.spf, second.spf)


@pytest.mark.slow
def test_sieve_to_ten_million():
    sieve = build_sieve(10_000_000, use_cache=False)
    assert len(sieve.primes) == 664579
    assert sieve.big_omega(9_999_991) == 1
