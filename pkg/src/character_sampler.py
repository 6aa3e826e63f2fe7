"""
Character Sampler Module
Seeded Steinhaus / Rademacher assignments, S_{N,m}(z) evaluation and Monte Carlo moments
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidArgumentError
from .factor_sieve import FactorSieve
from .ratio_report import RatioReport, default_metadata

logger = logging.getLogger(__name__)

MODELS = ('steinhaus', 'rademacher')
SEED_BOUND = 2 ** 64
DEFAULT_BATCH_SIZE = 256


def _check_model(model: str) -> str:
    if model not in MODELS:
        raise InvalidArgumentError(f"Unknown model '{model}'. Supported models: {', '.join(MODELS)}")
    return model


def parse_seed(text: str) -> int:
    """Accept a 64-bit seed written in decimal or 0x-hex"""
    try:
        seed = int(str(text).strip(), 0)
    except ValueError:
        raise InvalidArgumentError(f"Seed must be a decimal or 0x-hex integer, got {text!r}")
    return check_seed(seed)


def check_seed(seed: int) -> int:
    if not 0 <= seed < SEED_BOUND:
        raise InvalidArgumentError(f"Seed must lie in [0, 2^64), got {seed}", seed=seed)
    return int(seed)


def sample_stream(seed: int, sample_index: int) -> np.random.Generator:
    """
    Counter-based stream for one sample

    The Philox key is derived from (seed, sample_index) alone, and the value of the j-th prime is
    the j-th draw of that stream, so results do not depend on batch layout or on how many primes
    a particular N needs.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(sample_index,))))


def _draw_values(uniform: np.ndarray, model: str) -> np.ndarray:
    if model == 'steinhaus':
        return np.exp(2j * np.pi * uniform)
    return np.where(uniform < 0.5, 1.0, -1.0)


@dataclass(frozen=True)
class CharacterAssignment:
    """Values z(p) at the primes of one sample, extended completely multiplicatively"""

    model: str
    primes: np.ndarray
    values: np.ndarray
    seed: int
    sample_index: int = 0

    def as_dict(self) -> Dict[int, complex]:
        """prime -> value mapping"""
        return {int(p): v.item() for p, v in zip(self.primes, self.values)}

    def value(self, sieve: FactorSieve, n: int):
        """z(n) = prod z(p)^e over the factorization of n"""
        result = 1.0 + 0.0j if self.model == 'steinhaus' else 1.0
        for prime, exponent in sieve.factor_key(n).factors:
            result *= self._prime_value(prime) ** exponent
        return result

    def _prime_value(self, prime: int):
        index = int(np.searchsorted(self.primes, prime))
        if index >= len(self.primes) or self.primes[index] != prime:
            raise InvalidArgumentError(f"Assignment does not cover prime {prime}")
        return self.values[index]

    def table(self, sieve: FactorSieve, limit: int) -> np.ndarray:
        """z(n) for every n in [0, limit] (entry 0 unused)"""
        limit = sieve.check_limit(limit)
        needed = int(np.searchsorted(sieve.primes, limit, side='right'))
        if len(self.primes) < needed or not np.array_equal(self.primes[:needed], sieve.primes[:needed]):
            raise InvalidArgumentError(
                f"Assignment over {len(self.primes)} primes does not start with all {needed} primes <= {limit}")
        return multiplicative_table(sieve, limit, self.values[np.newaxis, :], self.model)[0]


def sample_assignment(primes: Sequence[int], model: str, seed: int, sample_index: int = 0) -> CharacterAssignment:
    """
    Draw independent values at each prime

    Args:
        primes: Ascending primes to cover
        model: 'steinhaus' (uniform on the unit circle) or 'rademacher' (+1/-1 with probability 1/2)
        seed: 64-bit seed
        sample_index: Which sample of the seeded family to draw

    Returns:
        CharacterAssignment; equal arguments give identical assignments
    """
    _check_model(model)
    seed = check_seed(seed)
    primes = np.asarray(primes, dtype=np.int64)
    uniform = sample_stream(seed, sample_index).random(len(primes))
    values = _draw_values(uniform, model)
    primes.setflags(write=False)
    values.setflags(write=False)
    return CharacterAssignment(model, primes, values, seed, sample_index)


def _layers(sieve: FactorSieve, limit: int) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Integers in [2, limit] grouped by Omega, each with its smallest prime index and cofactor"""
    omega = sieve.omega[:limit + 1]
    spf = sieve.spf[:limit + 1].astype(np.int64)
    prime_index = np.searchsorted(sieve.primes, spf)
    layers = []
    for level in range(1, int(omega[2:].max(initial=0)) + 1):
        members = np.flatnonzero(omega == level)
        members = members[members >= 2]
        layers.append((members, prime_index[members], members // spf[members]))
    return layers


def multiplicative_table(sieve: FactorSieve, limit: int, prime_values: np.ndarray, model: str,
                         layers: Optional[list] = None) -> np.ndarray:
    """
    Completely multiplicative extension for a batch of samples by prefix products

    z(n) = z(spf(n)) * z(n / spf(n)), filled one Omega layer at a time so every cofactor is
    already known.

    Args:
        sieve: Factor sieve covering limit
        limit: Largest n needed
        prime_values: Array (batch, number of primes >= primes up to limit) of z(p)
        model: Selects complex or real storage

    Returns:
        Array (batch, limit + 1) with column n holding z(n)
    """
    layers = layers if layers is not None else _layers(sieve, limit)
    dtype = np.complex128 if model == 'steinhaus' else np.float64
    batch = prime_values.shape[0]
    table = np.ones((batch, limit + 1), dtype=dtype)
    table[:, 0] = 0
    for members, prime_index, cofactor in layers:
        table[:, members] = prime_values[:, prime_index] * table[:, cofactor]
    return table


def _summation_set(sieve: FactorSieve, limit: int, m: Optional[int]) -> np.ndarray:
    if m is None:
        return np.arange(1, limit + 1, dtype=np.int64)
    return sieve.elements(limit, m)


def eval_S(sieve: FactorSieve, z: CharacterAssignment, limit: int, m: Optional[int] = None):
    """
    S_{N,m}(z) = sum over n in E_{N,m} of z(n); m=None sums over all of [1, N]

    Returns:
        complex for the Steinhaus model, float for the Rademacher model
    """
    limit = sieve.check_limit(limit)
    members = _summation_set(sieve, limit, m)
    total = z.table(sieve, limit)[members].sum()
    return complex(total) if z.model == 'steinhaus' else float(total)


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate of E|S|^q with its standard error"""

    q: float
    n_samples: int
    mean: float
    stderr: float
    seed: int
    limit: int
    m: Optional[int]
    model: str
    elapsed_ms: float = 0.0

    @property
    def target(self) -> Tuple[int, Optional[int], str]:
        return self.limit, self.m, self.model

    def to_dict(self) -> Dict[str, object]:
        return {
            'model': self.model,
            'N': self.limit,
            'm': self.m,
            'q': self.q,
            'n_samples': self.n_samples,
            'seed': self.seed,
            'mean': self.mean,
            'stderr': self.stderr,
        }


def sample_abs_powers(sieve: FactorSieve, limit: int, m: Optional[int], q: float, n_samples: int,
                      seed: int, model: str, batch_size: int = DEFAULT_BATCH_SIZE) -> np.ndarray:
    """|S(z_s)|^q for samples s = 0..n_samples-1 of the seeded family"""
    limit = sieve.check_limit(limit)
    members = _summation_set(sieve, limit, m)
    if members.size == 1:
        # a single term has |z(n)| = 1 for every sample
        return np.ones(n_samples, dtype=np.float64)
    n_primes = int(np.searchsorted(sieve.primes, limit, side='right'))
    layers = _layers(sieve, limit)
    powers = np.empty(n_samples, dtype=np.float64)
    for start in range(0, n_samples, batch_size):
        stop = min(start + batch_size, n_samples)
        uniform = np.stack([sample_stream(seed, s).random(n_primes) for s in range(start, stop)]) \
            if n_primes else np.empty((stop - start, 0))
        table = multiplicative_table(sieve, limit, _draw_values(uniform, model), model, layers)
        sums = table[:, members].sum(axis=1)
        powers[start:stop] = np.abs(sums) ** q
    return powers


def mc_moment(sieve: FactorSieve, limit: int, m: Optional[int], q: float, n_samples: int, seed: int,
              model: str = 'steinhaus', batch_size: int = DEFAULT_BATCH_SIZE) -> McEstimate:
    """
    Monte Carlo estimate of E|S_{N,m}|^q over the Haar measure

    Args:
        sieve: Factor sieve covering limit
        limit: N
        m: Omega level, or None for the unrestricted sum S_N
        q: Exponent > 0 (need not be an even integer)
        n_samples: Number of independent assignments, at least 2
        seed: 64-bit seed
        model: 'steinhaus' or 'rademacher'

    Returns:
        McEstimate with the sample mean and stderr = sample std (ddof=1) / sqrt(n_samples)
    """
    _check_model(model)
    seed = check_seed(seed)
    if not q > 0 or not math.isfinite(q):
        raise InvalidArgumentError(f"q must be a positive real, got {q}", q=q)
    if n_samples < 2:
        raise InvalidArgumentError(f"n_samples must be at least 2, got {n_samples}", n_samples=n_samples)
    if batch_size < 1:
        raise InvalidArgumentError(f"batch_size must be positive, got {batch_size}")
    started = time.perf_counter()
    powers = sample_abs_powers(sieve, limit, m, q, n_samples, seed, model, batch_size)
    mean = float(np.mean(powers))
    stderr = float(np.std(powers, ddof=1) / math.sqrt(n_samples))
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    logger.info("mc_moment(N=%d, m=%s, q=%g, model=%s, samples=%d) = %.6g +- %.2g in %.0f ms",
                limit, m, q, model, n_samples, mean, stderr, elapsed_ms)
    return McEstimate(float(q), n_samples, mean, stderr, seed, limit, m, model, elapsed_ms)


def helson_trend(sieve: FactorSieve, limits: Iterable[int], n_samples: int, seed: int,
                 model: str = 'steinhaus') -> RatioReport:
    """
    E|S_N| / sqrt(N) across N; a trend table only, no limit is asserted

    Returns:
        RatioReport 'helson' with columns N, estimate, stderr, ratio
    """
    limits = list(limits)
    report = RatioReport('helson', ['N', 'estimate', 'stderr', 'ratio'],
                         metadata=default_metadata(seed=seed, n_samples=n_samples, model=model, q=1.0))
    for limit in limits:
        estimate = mc_moment(sieve, limit, None, 1.0, n_samples, seed, model)
        report.add_row(N=limit, estimate=estimate.mean, stderr=estimate.stderr,
                       ratio=estimate.mean / math.sqrt(limit))
    return report
