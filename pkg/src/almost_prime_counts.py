"""
Almost-Prime Counts Module
Exact counts of E_{N,m} = {n <= N : Omega(n) = m} and their classical approximations
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List

import numpy as np

from .errors import InvalidArgumentError
from .factor_sieve import FactorSieve
from .ratio_report import RatioReport, default_metadata

logger = logging.getLogger(__name__)

APPROX_COLUMNS = ['N', 'm', 'exact', 'sathe', 'bdn', 'ratio_sathe', 'ratio_bdn']


@dataclass(frozen=True)
class CountTable:
    """|E_{N,m}| for m = 0..floor(log2 N)"""

    limit: int
    counts: List[int]

    def __getitem__(self, m: int) -> int:
        return self.counts[m] if 0 <= m < len(self.counts) else 0

    @property
    def total(self) -> int:
        return sum(self.counts)


class AlmostPrimeCounter:
    """Answers |E_{x,m}| queries in O(1) from per-level cumulative tables"""

    def __init__(self, sieve: FactorSieve):
        self.sieve = sieve
        self._cumulative: Dict[int, np.ndarray] = {}

    def cumulative(self, m: int) -> np.ndarray:
        """
        Cumulative count table for one level

        Args:
            m: Omega level

        Returns:
            Array c of length sieve.limit + 1 with c[x] = |E_{x,m}| (c[0] = 0)
        """
        if m < 0:
            raise InvalidArgumentError(f"m must be non-negative, got {m}")
        table = self._cumulative.get(m)
        if table is None:
            hits = np.zeros(self.sieve.limit + 1, dtype=np.int64)
            hits[1:] = self.sieve.omega[1:] == m
            table = np.cumsum(hits)
            table.setflags(write=False)
            self._cumulative[m] = table
        return table

    def count(self, limit: int, m: int) -> int:
        """|E_{limit,m}|; limits below 1 (empty ranges from floor divisions) give 0"""
        limit = int(limit)
        if limit < 1 or m < 0:
            return 0
        return int(self.cumulative(m)[self.sieve.check_limit(limit)])

    __call__ = count


def count_E(sieve: FactorSieve, limit: int, m: int) -> int:
    """
    Count integers n in [1, limit] with exactly m prime factors (with multiplicity)

    Args:
        sieve: Factor sieve covering limit
        limit: Upper bound N
        m: Omega level

    Returns:
        |E_{limit,m}| as an exact integer
    """
    limit = sieve.check_limit(limit)
    if m < 0:
        raise InvalidArgumentError(f"m must be non-negative, got {m}")
    if m > 255:
        return 0
    return int(np.count_nonzero(sieve.omega[1:limit + 1] == m))


def count_table(sieve: FactorSieve, limit: int) -> CountTable:
    """All level counts for [1, limit] in one pass over the Omega table"""
    limit = sieve.check_limit(limit)
    max_m = limit.bit_length() - 1
    counts = np.bincount(sieve.omega[1:limit + 1], minlength=max_m + 1)
    return CountTable(limit=limit, counts=[int(c) for c in counts[:max_m + 1]])


def sathe_approx(limit: int, m: int) -> float:
    """
    N (log log N)^(m-1) / ((m-1)! log N), natural logarithms, no implied constant

    Raises:
        InvalidArgumentError: If limit <= e or m < 1
    """
    if m < 1:
        raise InvalidArgumentError(f"sathe_approx needs m >= 1, got {m}", m=m)
    if limit <= math.e:
        raise InvalidArgumentError(f"sathe_approx needs N > e so that log log N > 0, got {limit}", limit=limit)
    log_n = math.log(limit)
    log_log_n = math.log(log_n)
    return limit * math.exp((m - 1) * math.log(log_log_n) - math.lgamma(m)) / log_n


def bdn_approx(limit: int, m: int) -> float:
    """
    Uniform-in-m estimate N / (2^m log(N/2^m)) * sum_{j<m} (2 log log(N/2^m))^j / j!

    Raises:
        InvalidArgumentError: If m < 1 or N / 2^m <= e
    """
    if m < 1:
        raise InvalidArgumentError(f"bdn_approx needs m >= 1, got {m}", m=m)
    reduced = limit / 2 ** m
    if reduced <= math.e:
        raise InvalidArgumentError(f"bdn_approx needs N / 2^m > e, got N={limit}, m={m}", limit=limit, m=m)
    log_reduced = math.log(reduced)
    x = 2 * math.log(log_reduced)
    term = 1.0
    total = 0.0
    for j in range(m):
        total += term
        term *= x / (j + 1)
    return reduced / log_reduced * total


def approx_ratio_table(sieve: FactorSieve, limits: Iterable[int], m_values: Iterable[int]) -> RatioReport:
    """
    Exact counts against both approximations for every (N, m) pair

    Args:
        sieve: Factor sieve covering every limit
        limits: Values of N
        m_values: Omega levels, each >= 1

    Returns:
        RatioReport 'approx' with columns N, m, exact, sathe, bdn, ratio_sathe, ratio_bdn
    """
    limits = list(limits)
    m_values = list(m_values)
    counter = AlmostPrimeCounter(sieve)
    report = RatioReport('approx', list(APPROX_COLUMNS),
                         metadata=default_metadata(limits=limits, m_values=m_values, log='natural'))
    for limit in limits:
        for m in m_values:
            exact = counter.count(sieve.check_limit(limit), m)
            sathe = sathe_approx(limit, m)
            bdn = bdn_approx(limit, m)
            report.add_row(N=limit, m=m, exact=exact, sathe=sathe, bdn=bdn,
                           ratio_sathe=exact / sathe, ratio_bdn=exact / bdn)
    logger.debug("approx table: %d rows", len(report.rows))
    return report


def counts_report(sieve: FactorSieve, limit: int, m_max: int) -> RatioReport:
    """Rows (N, m, count) for m = 0..m_max; levels past log2 N are true zero counts"""
    if m_max < 0:
        raise InvalidArgumentError(f"m_max must be non-negative, got {m_max}")
    table = count_table(sieve, limit)
    report = RatioReport('counts', ['N', 'm', 'count'], metadata=default_metadata(limit=limit))
    for m in range(m_max + 1):
        report.add_row(N=table.limit, m=m, count=table[m])
    return report
