"""
Identity Checks Module
Exact verification of the gcd-pairing expansion of |S_{N,m}|^2, the sixth-moment inequality built
on it, and the Cauchy-Schwarz bound for quadruple counts
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from .almost_prime_counts import AlmostPrimeCounter
from .character_sampler import CharacterAssignment
from .errors import InvalidArgumentError, ResourceLimitError
from .factor_sieve import FactorSieve
from .lab_config import LabConfig, get_lab_config
from .moment_counter import (CollisionCounter, SCounter, SCountParams, cs_bound, exact_moment,
                             product_table)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InequalityCheck:
    """Both sides of the sixth-moment inequality as exact integers"""

    limit: int
    m: int
    lhs: int
    first_term: int
    correction: int

    @property
    def rhs(self) -> int:
        return self.first_term + self.correction

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs

    def to_dict(self) -> Dict[str, object]:
        return {
            'N': self.limit,
            'm': self.m,
            'lhs': str(self.lhs),
            'rhs': str(self.rhs),
            'first_term': str(self.first_term),
            'correction': str(self.correction),
            'holds': self.holds,
        }


@dataclass(frozen=True)
class SixthMomentDecomposition:
    """M6 = |E| * M4 + sum over coprime (a, b) of |E_{N/max(a,b), m-k}| * T(a, b)"""

    limit: int
    m: int
    size: int
    fourth_moment: int
    pairing_sum: int
    sixth_moment: int

    @property
    def total(self) -> int:
        return self.size * self.fourth_moment + self.pairing_sum

    @property
    def matches(self) -> bool:
        return self.total == self.sixth_moment


@dataclass(frozen=True)
class CauchySchwarzCheck:
    """count_S against the exact inner-product bound and the implied-constant bound"""

    params: SCountParams
    count: int
    pair_a: int
    pair_b: int
    bound: float

    @property
    def holds(self) -> bool:
        return self.count * self.count <= self.pair_a * self.pair_b

    @property
    def ratio(self) -> float:
        return self.count / self.bound if self.bound > 0 else math.nan

    def to_dict(self) -> Dict[str, object]:
        return {
            'count_S': str(self.count),
            'pair_second_moment_a': str(self.pair_a),
            'pair_second_moment_b': str(self.pair_b),
            'cs_bound': self.bound,
            'cs_ratio': self.ratio,
            'holds': self.holds,
        }


def _coprime_blocks(sieve: FactorSieve, limit: int, m: int) -> Iterator[Tuple[int, np.ndarray, np.ndarray]]:
    """
    For k = 1..m: (k, A, W) with A = E_{N,k} trimmed to the a that leave room for a cofactor and
    W[i, j] = |E_{N/max(a_i, a_j), m-k}| on coprime pairs, 0 elsewhere
    """
    counter = AlmostPrimeCounter(sieve)
    for k in range(1, m + 1):
        reach = limit >> (m - k)
        if reach < 1:
            continue
        values = sieve.elements(reach, k)
        if values.size == 0:
            continue
        cumulative = counter.cumulative(m - k)
        weights = cumulative[limit // np.maximum.outer(values, values)]
        weights = np.where(np.gcd.outer(values, values) == 1, weights, 0)
        yield k, values, weights


def _pairing_work(sieve: FactorSieve, limit: int, m: int) -> int:
    work = 0
    for k in range(1, m + 1):
        reach = limit >> (m - k)
        if reach >= 1:
            work += len(sieve.elements(reach, k)) ** 2
    return work


def identity_2_2_sides(sieve: FactorSieve, limit: int, m: int, z: CharacterAssignment,
                       config: Optional[LabConfig] = None) -> Tuple[complex, complex]:
    """
    Evaluate |S_{N,m}(z)|^2 directly and through the gcd-pairing expansion

    |S|^2 = |E_{N,m}| + sum_{k=1..m} sum_{coprime a, b in E_{N,k}} |E_{N/max(a,b), m-k}| z(a) conj(z(b))

    Returns:
        (lhs, rhs) as complex numbers; rhs has a rounding-level imaginary part
    """
    limit = sieve.check_limit(limit)
    if m < 0:
        raise InvalidArgumentError(f"m must be non-negative, got {m}")
    CollisionCounter(config).guard(f"verify_identity_2_2(N={limit}, m={m})", _pairing_work(sieve, limit, m))
    table = z.table(sieve, limit).astype(np.complex128)
    lhs = abs(table[sieve.elements(limit, m)].sum()) ** 2
    rhs = complex(AlmostPrimeCounter(sieve).count(limit, m))
    for _, values, weights in _coprime_blocks(sieve, limit, m):
        z_values = table[values]
        rhs += complex(z_values @ weights @ np.conj(z_values))
    return complex(lhs), rhs


def verify_identity_2_2(sieve: FactorSieve, limit: int, m: int, z: CharacterAssignment,
                        config: Optional[LabConfig] = None) -> float:
    """
    Relative error |LHS - RHS| / max(1, |LHS|) of the pairing expansion at a concrete assignment

    Raises:
        ResourceLimitError: If the coprime double sum exceeds the budget
    """
    lhs, rhs = identity_2_2_sides(sieve, limit, m, z, config)
    error = abs(lhs - rhs) / max(1.0, abs(lhs))
    logger.debug("identity check N=%d m=%d: lhs=%.6g rhs=%.6g error=%.3g", limit, m, lhs.real, rhs.real, error)
    return error


def _divisor_splits(sieve: FactorSieve, n: int) -> List[Tuple[int, int]]:
    """Ordered pairs (d, n/d) with d | n"""
    divisors = [1]
    for prime, exponent in sieve.factor_key(n).factors:
        divisors = [d * prime ** e for d in divisors for e in range(exponent + 1)]
    return [(d, n // d) for d in sorted(divisors)]


def _check_prop_inputs(sieve: FactorSieve, limit: int, m: int, config: LabConfig) -> int:
    limit = sieve.check_limit(limit)
    if m < 0:
        raise InvalidArgumentError(f"m must be non-negative, got {m}")
    if limit > config.prop21_max_limit or m > 3:
        raise ResourceLimitError(
            f"verify_prop_2_1(N={limit}, m={m})", _pairing_work(sieve, limit, min(m, 8)), config.budget,
            hint=f"sixth-moment inequality checks are capped at N <= {config.prop21_max_limit} and m <= 3 "
                 "(RMF_LAB_PROP21_MAX_LIMIT)")
    return limit


def verify_prop_2_1(sieve: FactorSieve, limit: int, m: int, config: Optional[LabConfig] = None) -> InequalityCheck:
    """
    Check M6 <= M4 * |E| + sum over k, coprime (a, b) in E_{N,k}^2 and ordered splittings
    a = a1'a2', b = b1'b2' of |E_{N/max(a,b), m-k}| * count_S(N/a_i', N/b_i', m - Omega(a_i'), m - Omega(b_i'))

    Args:
        sieve: Factor sieve covering limit
        limit: N, at most RMF_LAB_PROP21_MAX_LIMIT
        m: Omega level, at most 3

    Returns:
        InequalityCheck with exact lhs, first term and correction sum
    """
    config = config or get_lab_config()
    limit = _check_prop_inputs(sieve, limit, m, config)
    # the inequality check itself stays within its own cap
    exact_config = config.with_overrides(k3_max_limit=max(config.k3_max_limit, limit),
                                          k3_max_m=max(config.k3_max_m, m))
    lhs = exact_moment(sieve, limit, m, 3, exact_config).value
    size = AlmostPrimeCounter(sieve).count(limit, m)
    first_term = exact_moment(sieve, limit, m, 2, exact_config).value * size

    quadruples = SCounter(sieve, config)
    memo: Dict[SCountParams, int] = {}
    correction = 0
    for _, values, weights in _coprime_blocks(sieve, limit, m):
        splits = {int(v): [(d, c, sieve.big_omega(d), sieve.big_omega(c))
                           for d, c in _divisor_splits(sieve, int(v))] for v in values}
        rows, cols = np.nonzero(weights)
        for i, j in zip(rows.tolist(), cols.tolist()):
            inner = 0
            for a1, a2, omega_a1, omega_a2 in splits[int(values[i])]:
                for b1, b2, omega_b1, omega_b2 in splits[int(values[j])]:
                    levels = (m - omega_a1, m - omega_a2, m - omega_b1, m - omega_b2)
                    if min(levels) < 0:
                        continue
                    params = SCountParams(limit // a1, limit // a2, limit // b1, limit // b2, *levels)
                    if params not in memo:
                        memo[params] = quadruples.count_S(params)
                    inner += memo[params]
            correction += int(weights[i, j]) * inner
    logger.info("sixth-moment inequality N=%d m=%d: lhs=%d rhs=%d (%d distinct quadruple counts)",
                limit, m, lhs, first_term + correction, len(memo))
    return InequalityCheck(limit, m, lhs, first_term, correction)


def pairing_count(products: np.ndarray, counts: np.ndarray, a: int, b: int) -> int:
    """
    T(a, b) = #{(a1, a2, b1, b2) : a1*a2*b = b1*b2*a} from the ordered pair-product table

    Args:
        products: Distinct products a1*a2, ascending (int64)
        counts: Number of ordered pairs giving each product
        a, b: Coprime positive integers
    """
    mask = products % a == 0
    if not mask.any():
        return 0
    targets = products[mask] // a * b
    index = np.searchsorted(products, targets)
    index = np.minimum(index, len(products) - 1)
    hit = products[index] == targets
    return int(np.dot(counts[mask][hit], counts[index[hit]]))


def sixth_moment_decomposition(sieve: FactorSieve, limit: int, m: int,
                               config: Optional[LabConfig] = None) -> SixthMomentDecomposition:
    """
    Exact form of the pairing argument behind the sixth-moment inequality

    Pairing |S|^4 = sum T(a, b) z(a) conj(z(b)) against the expansion of |S|^2 gives
    M6 = |E| M4 + sum_k sum_{coprime a, b in E_{N,k}} |E_{N/max(a,b), m-k}| T(a, b) with equality.
    """
    config = config or get_lab_config()
    limit = _check_prop_inputs(sieve, limit, m, config)
    exact_config = config.with_overrides(k3_max_limit=max(config.k3_max_limit, limit),
                                          k3_max_m=max(config.k3_max_m, m))
    values = sieve.elements(limit, m)
    products, counts = product_table(values, values)
    size = len(values)
    pairing_sum = 0
    for _, block, weights in _coprime_blocks(sieve, limit, m):
        rows, cols = np.nonzero(weights)
        for i, j in zip(rows.tolist(), cols.tolist()):
            pairing_sum += int(weights[i, j]) * pairing_count(products, counts, int(block[i]), int(block[j]))
    return SixthMomentDecomposition(
        limit=limit,
        m=m,
        size=size,
        fourth_moment=exact_moment(sieve, limit, m, 2, exact_config).value,
        pairing_sum=pairing_sum,
        sixth_moment=exact_moment(sieve, limit, m, 3, exact_config).value,
    )


def verify_cs(sieve: FactorSieve, params: SCountParams, config: Optional[LabConfig] = None) -> CauchySchwarzCheck:
    """
    count_S(params)^2 <= pair_second_moment(a-side) * pair_second_moment(b-side), exactly

    cs_bound is evaluated with the sides swapped when N1'N2' > N1N2.
    """
    quadruples = SCounter(sieve, config)
    count = quadruples.count_S(params)
    pair_a = quadruples.pair_second_moment(*params.a_side)
    pair_b = quadruples.pair_second_moment(*params.b_side)
    counter = AlmostPrimeCounter(sieve)
    oriented = params if params.n1p * params.n2p <= params.n1 * params.n2 else params.swapped()
    bound = cs_bound(counter.count, oriented)
    return CauchySchwarzCheck(params, count, pair_a, pair_b, bound)
