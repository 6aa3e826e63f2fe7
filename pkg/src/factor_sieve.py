"""
Factor Sieve Module
Smallest-prime-factor sieve, Omega lookup and canonical product keys
"""
import logging
import math
import os
import struct
import tempfile
import time
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from .errors import CacheFormatError, InvalidArgumentError, OutOfRangeError
from .lab_config import get_lab_config

logger = logging.getLogger(__name__)

CACHE_MAGIC = b'RMFSPF01'
_HEADER = struct.Struct('<8sQ')


@dataclass(frozen=True)
class ProductKey:
    """Canonical prime-exponent signature of a positive integer"""

    factors: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        previous = 1
        for prime, exponent in self.factors:
            if prime <= previous or exponent < 1:
                raise InvalidArgumentError(f"Non-canonical factor list: {self.factors}")
            previous = prime

    def __mul__(self, other: 'ProductKey') -> 'ProductKey':
        return key_product([self, other])

    @property
    def value(self) -> int:
        """The integer this key represents (1 for the empty key)"""
        result = 1
        for prime, exponent in self.factors:
            result *= prime ** exponent
        return result

    @property
    def omega(self) -> int:
        """Total exponent, i.e. Omega of the represented integer"""
        return sum(exponent for _, exponent in self.factors)

    def square_free_kernel(self) -> int:
        """Product of the primes carrying an odd exponent"""
        result = 1
        for prime, exponent in self.factors:
            if exponent % 2:
                result *= prime
        return result

    def __str__(self) -> str:
        if not self.factors:
            return '1'
        return ' * '.join(f'{p}^{e}' if e > 1 else str(p) for p, e in self.factors)


EMPTY_KEY = ProductKey()


def key_product(keys: Iterable[ProductKey]) -> ProductKey:
    """
    Multiply product keys by adding exponents prime-wise

    Args:
        keys: Any number of keys; none gives the empty key

    Returns:
        Canonical key of the product
    """
    exponents = Counter()
    for key in keys:
        for prime, exponent in key.factors:
            exponents[prime] += exponent
    return ProductKey(tuple(sorted(exponents.items())))


def is_square_key(key: ProductKey) -> bool:
    """True when every exponent is even (the empty key counts as 1 = 1^2)"""
    return all(exponent % 2 == 0 for _, exponent in key.factors)


class FactorSieve:
    """Read-only smallest-prime-factor table for [0, limit]"""

    def __init__(self, limit: int, spf: np.ndarray):
        """
        Wrap a finished spf table; use build_sieve() or load_sieve() instead of calling this

        Args:
            limit: Largest integer covered
            spf: Array of length limit + 1 with spf[n] the smallest prime factor of n >= 2
        """
        self.limit = limit
        self.spf = spf
        self.spf.setflags(write=False)
        self.primes = np.flatnonzero(spf == np.arange(limit + 1, dtype=spf.dtype))
        self.primes = self.primes[self.primes >= 2].astype(np.int64)
        self.primes.setflags(write=False)
        self.omega = _omega_table(spf)
        self.omega.setflags(write=False)

    def __repr__(self) -> str:
        return f'FactorSieve(limit={self.limit}, primes={len(self.primes)})'

    def _check(self, n: int) -> int:
        n = int(n)
        if n < 1 or n > self.limit:
            raise OutOfRangeError(f"n={n} is outside [1, {self.limit}]", n=n, limit=self.limit)
        return n

    def check_limit(self, limit: int) -> int:
        """Validate a counting bound against the sieve range"""
        limit = int(limit)
        if limit < 1 or limit > self.limit:
            raise OutOfRangeError(f"limit={limit} is outside the sieve range [1, {self.limit}]",
                                  limit=limit, sieve_limit=self.limit)
        return limit

    def big_omega(self, n: int) -> int:
        """Number of prime factors of n counted with multiplicity"""
        return int(self.omega[self._check(n)])

    def factor_key(self, n: int) -> ProductKey:
        """
        Factor n by repeated smallest-prime-factor lookups

        Args:
            n: Integer in [1, limit]

        Returns:
            Canonical ProductKey of n
        """
        n = self._check(n)
        factors = []
        while n > 1:
            prime = int(self.spf[n])
            exponent = 0
            while n % prime == 0:
                n //= prime
                exponent += 1
            factors.append((prime, exponent))
        return ProductKey(tuple(factors))

    def elements(self, limit: int, m: int) -> np.ndarray:
        """Sorted int64 array of n <= limit with Omega(n) = m"""
        limit = self.check_limit(limit)
        if m < 0:
            raise InvalidArgumentError(f"m must be non-negative, got {m}")
        if m > 255:
            return np.empty(0, dtype=np.int64)
        return np.flatnonzero(self.omega[1:limit + 1] == m).astype(np.int64) + 1


def _smallest_prime_factors(limit: int) -> np.ndarray:
    spf = np.zeros(limit + 1, dtype=np.uint32)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            multiples = spf[p * p::p]
            multiples[multiples == 0] = p
    unmarked = np.flatnonzero(spf == 0)
    unmarked = unmarked[unmarked >= 2]
    spf[unmarked] = unmarked
    return spf


def _omega_table(spf: np.ndarray) -> np.ndarray:
    # Omega(n) = 1 + Omega(n / spf[n]), peeled one prime at a time over the still-composite rest
    limit = len(spf) - 1
    omega = np.zeros(limit + 1, dtype=np.uint8)
    active = np.arange(2, limit + 1, dtype=np.uint32)
    rest = active.copy()
    while active.size:
        omega[active] += 1
        rest = rest // spf[rest]
        keep = rest > 1
        active = active[keep]
        rest = rest[keep]
    return omega


def build_sieve(limit: int, use_cache: bool = True) -> FactorSieve:
    """
    Build the factorization substrate for [1, limit]

    Args:
        limit: Upper bound, at least 2
        use_cache: Consult RMF_LAB_SIEVE_CACHE_DIR when it is configured

    Returns:
        FactorSieve with spf table, primes and Omega table

    Raises:
        InvalidArgumentError: If limit < 2
    """
    limit = int(limit)
    if limit < 2:
        raise InvalidArgumentError(f"Sieve limit must be at least 2, got {limit}", limit=limit)

    cache_path = _cache_path(limit) if use_cache else None
    if cache_path and os.path.exists(cache_path):
        logger.debug("Loading sieve for limit %d from %s", limit, cache_path)
        return load_sieve(cache_path)

    started = time.perf_counter()
    sieve = FactorSieve(limit, _smallest_prime_factors(limit))
    logger.info("Built sieve to %d (%d primes) in %.2fs",
                limit, len(sieve.primes), time.perf_counter() - started)

    if cache_path:
        save_sieve(sieve, cache_path)
    return sieve


def _cache_path(limit: int) -> Optional[str]:
    cache_dir = get_lab_config().sieve_cache_dir
    if not cache_dir:
        return None
    os.makedirs(cache_dir, exist_ok=True)
    return os.path.join(cache_dir, f'spf_{limit}.bin')


def save_sieve(sieve: FactorSieve, path: str) -> None:
    """Write the spf table atomically: header (magic, u64 limit) then u32 records, little-endian"""
    directory = os.path.dirname(os.path.abspath(path))
    with tempfile.NamedTemporaryFile('wb', dir=directory, delete=False, suffix='.tmp') as handle:
        handle.write(_HEADER.pack(CACHE_MAGIC, sieve.limit))
        handle.write(sieve.spf.astype('<u4').tobytes())
        temp_name = handle.name
    os.replace(temp_name, path)
    logger.debug("Saved sieve for limit %d to %s", sieve.limit, path)


def load_sieve(path: str) -> FactorSieve:
    """
    Read a sieve written by save_sieve()

    Raises:
        CacheFormatError: On a bad header or a truncated body
    """
    with open(path, 'rb') as handle:
        header = handle.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise CacheFormatError(f"{path}: truncated header", path=path)
        magic, limit = _HEADER.unpack(header)
        if magic != CACHE_MAGIC:
            raise CacheFormatError(f"{path}: unexpected magic {magic!r}", path=path)
        spf = np.frombuffer(handle.read(), dtype='<u4')
    if len(spf) != limit + 1:
        raise CacheFormatError(f"{path}: expected {limit + 1} records, found {len(spf)}", path=path)
    return FactorSieve(limit, spf.astype(np.uint32))
