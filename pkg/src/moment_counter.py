"""
Moment Counter Module
Exact even moments of Steinhaus and Rademacher sums over E_{N,m} by collision counting

By orthogonality E|S|^{2k} is the number of 2k-tuples (a_1..a_k, b_1..b_k) from the summation
set with a_1...a_k = b_1...b_k, i.e. sum_p r_k(p)^2 where r_k(p) counts ordered k-tuples with
product p. For the Rademacher model only the square-free kernel of each product matters, so the
same count runs over kernels.
"""
import itertools
import logging
import math
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import InvalidArgumentError, ResourceLimitError
from .factor_sieve import FactorSieve, is_square_key, key_product
from .lab_config import LabConfig, get_lab_config

logger = logging.getLogger(__name__)

MODELS = ('steinhaus', 'rademacher')
INT64_BOUND = 2 ** 63


@dataclass(frozen=True)
class MomentValue:
    """Exact E|S|^{2k}; m is None for the unrestricted sum over [1, N]"""

    limit: int
    m: Optional[int]
    k: int
    value: int
    model: str = 'steinhaus'
    elapsed_ms: float = 0.0
    budget_used: int = 0

    def to_dict(self) -> Dict[str, object]:
        return {
            'N': self.limit,
            'm': self.m,
            'k': self.k,
            'model': self.model,
            'value': str(self.value),
            'elapsed_ms': round(self.elapsed_ms, 3),
            'budget_used': self.budget_used,
        }


@dataclass(frozen=True)
class SCountParams:
    """Bounds and Omega levels of the quadruple count a1*a2 = b1*b2"""

    n1: int
    n2: int
    n1p: int
    n2p: int
    m1: int
    m2: int
    m1p: int
    m2p: int

    def __post_init__(self):
        for name in ('n1', 'n2', 'n1p', 'n2p'):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be at least 1, got {getattr(self, name)}")
        for name in ('m1', 'm2', 'm1p', 'm2p'):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be non-negative, got {getattr(self, name)}")

    @property
    def a_side(self) -> Tuple[int, int, int, int]:
        return self.n1, self.n2, self.m1, self.m2

    @property
    def b_side(self) -> Tuple[int, int, int, int]:
        return self.n1p, self.n2p, self.m1p, self.m2p

    def swapped(self) -> 'SCountParams':
        """Exchange the a- and b-sides (the count is symmetric under this)"""
        return SCountParams(self.n1p, self.n2p, self.n1, self.n2, self.m1p, self.m2p, self.m1, self.m2)


def _check_model(model: str) -> str:
    if model not in MODELS:
        raise InvalidArgumentError(f"Unknown model '{model}'. Supported models: {', '.join(MODELS)}")
    return model


def _kernel_combine(x, y):
    # square-free kernel of x*y for square-free x, y
    g = np.gcd(x, y)
    return (x // g) * (y // g)


def _exact_square_sum(counts: np.ndarray, bound: int) -> int:
    if bound < INT64_BOUND:
        return int(np.dot(counts, counts))
    return sum(c * c for c in counts.tolist())


def _exact_dot(x: np.ndarray, y: np.ndarray) -> int:
    if x.size == 0:
        return 0
    if int(x.sum()) * int(y.max()) < INT64_BOUND:
        return int(np.dot(x, y))
    return sum(a * b for a, b in zip(x.tolist(), y.tolist()))


def _group_sum(products: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Multimap reduce: distinct products (sorted) with summed weights"""
    if products.size == 0:
        return products, weights
    order = np.argsort(products, kind='stable')
    products = products[order]
    weights = weights[order]
    starts = np.flatnonzero(np.concatenate(([True], products[1:] != products[:-1])))
    return products[starts], np.add.reduceat(weights, starts)


def product_table(left: np.ndarray, right: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Multiplicity table of a*b over ordered pairs (a, b) in left x right

    Returns:
        (distinct products ascending, counts) as int64 arrays
    """
    if left.size == 0 or right.size == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    if int(left.max()) * int(right.max()) < INT64_BOUND:
        products, counts = np.unique(np.multiply.outer(left, right).ravel(), return_counts=True)
        return products, counts.astype(np.int64)
    table = Counter(a * b for a in left.tolist() for b in right.tolist())
    keys = sorted(table)
    return np.array(keys, dtype=object), np.array([table[p] for p in keys], dtype=np.int64)


class CollisionCounter:
    """Budget-guarded, partitioned sum_p r_k(p)^2 over a finite multiset of integers"""

    def __init__(self, config: Optional[LabConfig] = None):
        self.config = config or get_lab_config()

    def estimate(self, size: int, k: int) -> int:
        """Elementary steps for k = 1, 2, 3: |E|, |E|^2, |r_2 table| * |E|"""
        if k == 1:
            return size
        if k == 2:
            return size * size
        return size * (size * (size + 1) // 2)

    def guard(self, operation: str, estimate: int) -> int:
        if estimate > self.config.budget:
            raise ResourceLimitError(operation, estimate, self.config.budget)
        return estimate

    def energy(self, values: np.ndarray, k: int, model: str = 'steinhaus',
               multiplicity: Optional[np.ndarray] = None) -> int:
        """
        Number of 2k-tuples whose two halves combine to the same key

        Args:
            values: Distinct positive integers (square-free kernels for the Rademacher model)
            k: Half degree 1, 2 or 3
            model: 'steinhaus' multiplies, 'rademacher' combines kernels
            multiplicity: How many summation-set elements each value stands for (default 1)

        Returns:
            sum over keys p of r_k(p)^2 as an exact integer
        """
        n = len(values)
        if n == 0:
            return 0
        if multiplicity is None:
            if k == 1 and model == 'steinhaus':
                return n
            multiplicity = np.ones(n, dtype=np.int64)
        multiplicity = multiplicity.astype(np.int64)
        total_tuples = int(multiplicity.sum()) ** k
        if int(values.max()) ** k < INT64_BOUND and total_tuples < INT64_BOUND:
            return self._energy_vectorized(values.astype(np.int64), multiplicity, k, model)
        return self._energy_hash_join(values.tolist(), multiplicity.tolist(), k, model)

    def _energy_hash_join(self, values: List[int], weights: List[int], k: int, model: str) -> int:
        # r_{j+1}(p) = sum_{a in E} r_j(p / a), iterating over r_j entries
        if model == 'steinhaus':
            combine = int.__mul__
        else:
            def combine(x, y):
                g = math.gcd(x, y)
                return (x // g) * (y // g)
        base = list(zip(values, weights))
        table = Counter(dict(base))
        for _ in range(k - 1):
            joined = Counter()
            for product, count in table.items():
                for value, weight in base:
                    joined[combine(product, value)] += count * weight
            table = joined
        return sum(c * c for c in table.values())

    def _energy_vectorized(self, values: np.ndarray, multiplicity: np.ndarray, k: int, model: str) -> int:
        combine = np.multiply if model == 'steinhaus' else _kernel_combine
        n = len(values)
        candidates = math.comb(n + k - 1, k)
        partitions = max(1, -(-candidates // self.config.partition_size))
        square_bound = int(multiplicity.sum()) ** (2 * k)
        logger.debug("energy: |E|=%d k=%d model=%s candidates=%d partitions=%d",
                     n, k, model, candidates, partitions)

        if k > 1:
            rows, cols = np.triu_indices(n)
            pair_products = combine(values[rows], values[cols])
            pair_weights = multiplicity[rows] * multiplicity[cols]

        def blocks():
            # unordered k-multisets, weighted by their number of distinct orderings
            if k == 1:
                yield values, multiplicity
            elif k == 2:
                yield pair_products, np.where(rows == cols, 1, 2) * pair_weights
            else:
                pair_equal = rows == cols
                offsets = np.searchsorted(rows, np.arange(n))
                for i in range(n):
                    start = offsets[i]
                    first_equal = rows[start:] == i
                    last_equal = pair_equal[start:]
                    orderings = np.where(first_equal & last_equal, 1, np.where(first_equal | last_equal, 3, 6))
                    yield (combine(values[i], pair_products[start:]),
                           orderings * multiplicity[i] * pair_weights[start:])

        def reduce_partition(index: int) -> int:
            kept_products = []
            kept_weights = []
            for products, weights in blocks():
                if partitions > 1:
                    mask = products % partitions == index
                    products = products[mask]
                    weights = weights[mask]
                kept_products.append(products)
                kept_weights.append(weights.astype(np.int64))
            _, r = _group_sum(np.concatenate(kept_products), np.concatenate(kept_weights))
            return _exact_square_sum(r, square_bound)

        if partitions == 1 or self.config.workers <= 1:
            return sum(reduce_partition(index) for index in range(partitions))
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            return sum(pool.map(reduce_partition, range(partitions)))


def _kernel_multiset(sieve: FactorSieve, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Distinct square-free kernels of the values with their multiplicities"""
    kernels = np.array([sieve.factor_key(int(v)).square_free_kernel() for v in values], dtype=np.int64)
    distinct, multiplicity = np.unique(kernels, return_counts=True)
    return distinct, multiplicity.astype(np.int64)


def _check_k(k: int) -> int:
    if k not in (1, 2, 3):
        raise InvalidArgumentError(f"k must be 1, 2 or 3, got {k}", k=k)
    return k


def _moment(sieve: FactorSieve, values: np.ndarray, limit: int, m: Optional[int], k: int,
            model: str, config: Optional[LabConfig]) -> MomentValue:
    counter = CollisionCounter(config)
    label = f"exact_moment(N={limit}, m={m}, k={k}, model={model})"
    used = counter.guard(label, counter.estimate(len(values), k))
    if k == 3:
        cfg = counter.config
        if limit > cfg.k3_max_limit or (m is not None and m > cfg.k3_max_m):
            raise ResourceLimitError(label, used, cfg.budget,
                                     hint=f"exact 6th moments are capped at N <= {cfg.k3_max_limit}, "
                                          f"m <= {cfg.k3_max_m} (RMF_LAB_K3_MAX_LIMIT / RMF_LAB_K3_MAX_M)")
    started = time.perf_counter()
    if model == 'steinhaus':
        value = counter.energy(values, k, model)
    else:
        kernels, multiplicity = _kernel_multiset(sieve, values)
        value = counter.energy(kernels, k, model, multiplicity)
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    logger.info("%s = %d in %.1f ms", label, value, elapsed_ms)
    return MomentValue(limit, m, k, value, model, elapsed_ms, used)


def exact_moment(sieve: FactorSieve, limit: int, m: int, k: int,
                 config: Optional[LabConfig] = None) -> MomentValue:
    """
    E|S_{N,m}|^{2k} for the Steinhaus model

    Args:
        sieve: Factor sieve covering limit
        limit: N
        m: Omega level
        k: Half degree 1, 2 or 3
        config: Budget overrides (defaults to the process configuration)

    Returns:
        MomentValue with the exact count of solutions a_1..a_k = b_1..b_k in E_{N,m}

    Raises:
        ResourceLimitError: If the estimated work exceeds the budget
    """
    _check_k(k)
    values = sieve.elements(limit, m)
    return _moment(sieve, values, limit, m, k, 'steinhaus', config)


def exact_moment_unrestricted(sieve: FactorSieve, limit: int, k: int,
                              config: Optional[LabConfig] = None) -> MomentValue:
    """E|S_N|^{2k} for the full sum over [1, N]"""
    _check_k(k)
    limit = sieve.check_limit(limit)
    values = np.arange(1, limit + 1, dtype=np.int64)
    return _moment(sieve, values, limit, None, k, 'steinhaus', config)


def exact_moment_rademacher(sieve: FactorSieve, limit: int, m: int, k: int,
                            config: Optional[LabConfig] = None) -> MomentValue:
    """
    E|S_{N,m,f}|^{2k} for the Rademacher model: 2k-tuples from E_{N,m} with square total product

    Two k-tuples pair up exactly when their products have the same square-free kernel, so the
    count is sum over kernels c of (number of k-tuples with kernel c)^2.
    """
    _check_k(k)
    values = sieve.elements(limit, m)
    return _moment(sieve, values, limit, m, k, 'rademacher', config)


def moment(sieve: FactorSieve, limit: int, m: Optional[int], k: int, model: str = 'steinhaus',
           config: Optional[LabConfig] = None) -> MomentValue:
    """Dispatch on model and on whether the sum is restricted to one Omega level"""
    _check_model(model)
    if m is None:
        if model != 'steinhaus':
            raise InvalidArgumentError("The unrestricted sum is only counted for the steinhaus model")
        return exact_moment_unrestricted(sieve, limit, k, config)
    if model == 'rademacher':
        return exact_moment_rademacher(sieve, limit, m, k, config)
    return exact_moment(sieve, limit, m, k, config)


def enumerate_moment(sieve: FactorSieve, limit: int, m: Optional[int], k: int,
                     model: str = 'steinhaus') -> int:
    """
    Direct enumeration oracle: all ordered k-tuples, ProductKey totals, sort and group

    Independent of the collision counter; meant for small N only.
    """
    _check_k(k)
    _check_model(model)
    if m is None:
        values = range(1, sieve.check_limit(limit) + 1)
    else:
        values = sieve.elements(limit, m).tolist()
    keys = [sieve.factor_key(v) for v in values]
    if model == 'steinhaus':
        totals = sorted(key_product(tup).factors for tup in itertools.product(keys, repeat=k))
        return sum(len(list(group)) ** 2 for _, group in itertools.groupby(totals))
    if k == 1:
        return sum(1 for left in keys for right in keys if is_square_key(key_product([left, right])))
    # two halves pair up exactly when their odd-exponent primes agree
    parities = sorted(tuple(p for p, e in key_product(tup).factors if e % 2)
                      for tup in itertools.product(keys, repeat=k))
    return sum(len(list(group)) ** 2 for _, group in itertools.groupby(parities))


class SCounter:
    """Quadruple counts a1*a2 = b1*b2 with per-side product tables cached by (bounds, levels)"""

    def __init__(self, sieve: FactorSieve, config: Optional[LabConfig] = None):
        self.sieve = sieve
        self.counter = CollisionCounter(config)
        self._tables: Dict[Tuple[int, int, int, int], Tuple[np.ndarray, np.ndarray]] = {}
        self._elements: Dict[Tuple[int, int], np.ndarray] = {}

    def elements(self, limit: int, m: int) -> np.ndarray:
        key = (limit, m)
        if key not in self._elements:
            if limit < 1 or m < 0:
                self._elements[key] = np.empty(0, dtype=np.int64)
            else:
                self._elements[key] = self.sieve.elements(limit, m)
        return self._elements[key]

    def side_table(self, n1: int, n2: int, m1: int, m2: int) -> Tuple[np.ndarray, np.ndarray]:
        """Products a1*a2 with a_i in E_{n_i, m_i}, with multiplicities"""
        key = (n1, n2, m1, m2)
        if key not in self._tables:
            self._tables[key] = product_table(self.elements(n1, m1), self.elements(n2, m2))
        return self._tables[key]

    def side_size(self, n1: int, n2: int, m1: int, m2: int) -> int:
        return len(self.elements(n1, m1)) * len(self.elements(n2, m2))

    def count_S(self, params: SCountParams) -> int:
        """
        Number of (a1, a2, b1, b2) with a1*a2 = b1*b2, Omega(a_i) = m_i, Omega(b_i) = m_i',
        a_i <= N_i, b_i <= N_i'

        Raises:
            ResourceLimitError: If the two product tables exceed the budget
        """
        for bound in (params.n1, params.n2, params.n1p, params.n2p):
            self.sieve.check_limit(bound)
        if params.m1 + params.m2 != params.m1p + params.m2p:
            return 0
        self.counter.guard(f"count_S{params.a_side + params.b_side}",
                           self.side_size(*params.a_side) + self.side_size(*params.b_side))
        products_a, counts_a = self.side_table(*params.a_side)
        products_b, counts_b = self.side_table(*params.b_side)
        if products_a.size == 0 or products_b.size == 0:
            return 0
        _, index_a, index_b = np.intersect1d(products_a, products_b, assume_unique=True, return_indices=True)
        return _exact_dot(counts_a[index_a], counts_b[index_b])

    def pair_second_moment(self, n1: int, n2: int, m1: int, m2: int) -> int:
        """#{(n1, n2, n1'', n2'') : n1*n2 = n1''*n2''} with both pairs in E_{N1,m1} x E_{N2,m2}"""
        for bound in (n1, n2):
            self.sieve.check_limit(bound)
        self.counter.guard(f"pair_second_moment({n1}, {n2}, {m1}, {m2})", self.side_size(n1, n2, m1, m2))
        _, counts = self.side_table(n1, n2, m1, m2)
        return _exact_square_sum(counts, self.side_size(n1, n2, m1, m2) ** 2)


def count_S(sieve: FactorSieve, params: SCountParams, config: Optional[LabConfig] = None) -> int:
    """One-shot quadruple count; reuse an SCounter when evaluating many parameter sets"""
    return SCounter(sieve, config).count_S(params)


def pair_second_moment(sieve: FactorSieve, n1: int, n2: int, m1: int, m2: int,
                       config: Optional[LabConfig] = None) -> int:
    return SCounter(sieve, config).pair_second_moment(n1, n2, m1, m2)


def cs_bound(count_provider: Callable[[int, int], int], params: SCountParams) -> float:
    """
    Cauchy-Schwarz bound for count_S with N = N1' * N2' <= N1 * N2:
    sqrt(|E_{N1',m1'}| |E_{N2',m2'}| (|E_{N1,m1}| |E_{N/N1,m2}| + |E_{N/N2,m1}| |E_{N2,m2}|))

    Args:
        count_provider: Callable (limit, m) -> |E_{limit,m}|, returning 0 for limit < 1
        params: Quadruple parameters

    Returns:
        The bound without its implied constant

    Raises:
        InvalidArgumentError: If N1' * N2' > N1 * N2 (swap the sides and retry)
    """
    big_n = params.n1p * params.n2p
    if big_n > params.n1 * params.n2:
        raise InvalidArgumentError(
            f"cs_bound needs N1'N2' <= N1N2 (got {big_n} > {params.n1 * params.n2}); "
            "swap the a- and b-sides with params.swapped()")
    b_side = count_provider(params.n1p, params.m1p) * count_provider(params.n2p, params.m2p)
    a_side = (count_provider(params.n1, params.m1) * count_provider(big_n // params.n1, params.m2)
              + count_provider(big_n // params.n2, params.m1) * count_provider(params.n2, params.m2))
    return math.sqrt(b_side * a_side)
