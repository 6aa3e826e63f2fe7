"""
Lab Analysis Module
Ratio tables for the sixth-moment theorem, the counting lemmas and the Gaussian-limit conjecture,
plus the default report suite
"""
import json
import logging
import math
import os
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from .almost_prime_counts import AlmostPrimeCounter, approx_ratio_table, counts_report
from .character_sampler import DEFAULT_BATCH_SIZE, helson_trend, mc_moment, sample_assignment
from .errors import InvalidArgumentError, ResourceLimitError, ZeroDenominatorError
from .factor_sieve import FactorSieve
from .identity_checks import verify_cs, verify_identity_2_2, verify_prop_2_1
from .lab_config import LabConfig, get_lab_config
from .moment_counter import SCountParams, moment
from .ratio_report import RatioReport, atomic_write_text, default_metadata

logger = logging.getLogger(__name__)

THEOREM_COLUMNS = ['N', 'm', 'E', 'M2', 'M4', 'M6', 'M6_over_E3', 'norm6_over_norm4',
                   'M4_over_E2', 'regime']
GAUSSIAN_COLUMNS = ['N', 'm', 'k', 'model', 'E', 'moment', 'ratio', 'stderr', 'source',
                    'complex_gaussian', 'real_gaussian']

C3_CONJECTURE = 0.25
BETA_NOTE = ('||S||_{2k} ~ ||S||_2 is conjectured for m < beta log log N with beta < c(k); '
             'c(3) = 1/4 is conjectured; no finite table can confirm either')


@dataclass(frozen=True)
class McSettings:
    """Monte Carlo fallback used when an exact moment exceeds the budget"""

    n_samples: int = 2000
    seed: int = 0
    batch_size: int = DEFAULT_BATCH_SIZE


def _log_log(limit: int) -> float:
    if limit <= math.e:
        raise InvalidArgumentError(f"log log N is undefined or non-positive for N={limit}", limit=limit)
    return math.log(math.log(limit))


def _norm_ratio(sixth: int, fourth: int) -> float:
    # M6^(1/6) / M4^(1/4) through logs, the moments can exceed float range
    return math.exp(math.log(sixth) / 6 - math.log(fourth) / 4)


def theorem_ratios(sieve: FactorSieve, limits: Iterable[int], m_values: Iterable[int],
                   config: Optional[LabConfig] = None) -> RatioReport:
    """
    Exact second, fourth and sixth moments with the ratios the sixth-moment theorem is about

    Args:
        sieve: Factor sieve covering every limit
        limits: Values of N
        m_values: Omega levels

    Returns:
        RatioReport 'theorem'; rows with empty E_{N,m} are skipped

    Raises:
        ResourceLimitError: If a sixth moment is beyond the budget or the k = 3 caps
    """
    config = config or get_lab_config()
    limits = list(limits)
    m_values = list(m_values)
    counter = AlmostPrimeCounter(sieve)
    report = RatioReport('theorem', list(THEOREM_COLUMNS), metadata=default_metadata(
        limits=limits, m_values=m_values, budget=config.budget, k3_max_limit=config.k3_max_limit,
        k3_max_m=config.k3_max_m, beta_note=BETA_NOTE, c3_conjecture=C3_CONJECTURE))

    for limit in limits:
        for m in m_values:
            size = counter.count(sieve.check_limit(limit), m)
            if size == 0:
                logger.warning("Skipping theorem row N=%d m=%d: E_{N,m} is empty", limit, m)
                continue
            second, fourth, sixth = (moment(sieve, limit, m, k, 'steinhaus', config).value for k in (1, 2, 3))
            regime = m / _log_log(limit) ** (1 / 3) if limit > math.e else math.nan
            report.add_row(N=limit, m=m, E=size, M2=second, M4=fourth, M6=sixth,
                           M6_over_E3=sixth / size ** 3,
                           norm6_over_norm4=_norm_ratio(sixth, fourth),
                           M4_over_E2=fourth / size ** 2,
                           regime=regime)
    return report


def lemma33_sum(sieve: FactorSieve, limit: int, k: int) -> float:
    """sum over b in E_{N,k} of |E_{b,k}| / b^2"""
    if k < 1:
        raise InvalidArgumentError(f"k must be at least 1, got {k}", k=k)
    values = sieve.elements(limit, k)
    # b is the i-th element of E_{N,k}, so |E_{b,k}| = i
    ranks = np.arange(1, len(values) + 1, dtype=np.float64)
    return float(np.sum(ranks / values.astype(np.float64) ** 2))


def lemma33_ratio(sieve: FactorSieve, limit: int, k: int) -> float:
    """
    (sum over b in E_{N,k} of |E_{b,k}| / b^2) / 2^(2k)

    Args:
        sieve: Factor sieve covering limit
        limit: N
        k: Omega level, at least 1

    Returns:
        The normalized sum; 0 when limit < 2^k
    """
    return lemma33_sum(sieve, limit, k) / 4 ** k


def lemma34_lhs(sieve: FactorSieve, limit: int, k: int, k_prime: int) -> int:
    """sum over b in E_{N,k} with b > sqrt(N) of |E_{N/b, k'}|, exact"""
    limit = sieve.check_limit(limit)
    if k < 1 or k_prime < 1:
        raise InvalidArgumentError(f"k and k' must be at least 1, got k={k}, k'={k_prime}")
    values = sieve.elements(limit, k)
    large = values[values * values > limit]
    if large.size == 0:
        return 0
    cumulative = AlmostPrimeCounter(sieve).cumulative(k_prime)
    return int(cumulative[limit // large].sum())


def lemma34_ratio(sieve: FactorSieve, limit: int, k: int, k_prime: int) -> float:
    """
    LHS / (|E_{N,k}| (log log N)^k' / k'!)

    Raises:
        InvalidArgumentError: If limit < 16
        ZeroDenominatorError: If E_{N,k} is empty
    """
    if limit < 16:
        raise InvalidArgumentError(f"lemma34_ratio needs N >= 16, got {limit}", limit=limit)
    lhs = lemma34_lhs(sieve, limit, k, k_prime)
    size = AlmostPrimeCounter(sieve).count(limit, k)
    if size == 0:
        raise ZeroDenominatorError(f"|E_{{{limit},{k}}}| = 0, the normalizer vanishes", limit=limit, k=k)
    scale = size * _log_log(limit) ** k_prime / math.factorial(k_prime)
    return lhs / scale


def lemma33_report(sieve: FactorSieve, limits: Iterable[int], k_values: Iterable[int]) -> RatioReport:
    limits = list(limits)
    k_values = list(k_values)
    report = RatioReport('lemma33', ['N', 'k', 'sum', 'ratio'],
                         metadata=default_metadata(limits=limits, k_values=k_values, normalizer='2^(2k)'))
    for limit in limits:
        for k in k_values:
            total = lemma33_sum(sieve, limit, k)
            report.add_row(N=limit, k=k, sum=total, ratio=total / 4 ** k)
    return report


def lemma34_report(sieve: FactorSieve, limits: Iterable[int], k_values: Iterable[int],
                   k_prime_values: Iterable[int]) -> RatioReport:
    limits = list(limits)
    k_values = list(k_values)
    k_prime_values = list(k_prime_values)
    report = RatioReport('lemma34', ['N', 'k', 'k_prime', 'lhs', 'ratio'], metadata=default_metadata(
        limits=limits, k_values=k_values, k_prime_values=k_prime_values,
        normalizer="|E_{N,k}| (log log N)^k' / k'!"))
    for limit in limits:
        for k in k_values:
            for k_prime in k_prime_values:
                report.add_row(N=limit, k=k, k_prime=k_prime, lhs=lemma34_lhs(sieve, limit, k, k_prime),
                               ratio=lemma34_ratio(sieve, limit, k, k_prime))
    return report


def gaussian_constants(k: int) -> Dict[str, float]:
    """
    Candidate limits of M_{2k} / |E|^k

    complex_gaussian is k!, the 2k-th absolute moment of a standard complex normal;
    real_gaussian is (2k)! / (2^k k!), the constant of the normal-limit conjecture as stated.
    """
    return {
        'complex_gaussian': float(math.factorial(k)),
        'real_gaussian': math.factorial(2 * k) / (2 ** k * math.factorial(k)),
    }


def gaussian_ratios(sieve: FactorSieve, limits: Iterable[int], m_values: Iterable[int], k: int,
                    mc_fallback: Optional[McSettings] = None, model: str = 'steinhaus',
                    config: Optional[LabConfig] = None) -> RatioReport:
    """
    M_{2k} / |E|^k against both Gaussian constants; neither is asserted

    Args:
        sieve: Factor sieve covering every limit
        limits: Values of N
        m_values: Omega levels
        k: Half degree 1, 2 or 3
        mc_fallback: Monte Carlo settings used when the exact count is refused; None propagates
            the resource-limit error
        model: 'steinhaus' or 'rademacher'

    Returns:
        RatioReport 'gaussian_k{k}' (with a model suffix for rademacher)
    """
    if k not in (1, 2, 3):
        raise InvalidArgumentError(f"k must be 1, 2 or 3, got {k}", k=k)
    config = config or get_lab_config()
    limits = list(limits)
    m_values = list(m_values)
    constants = gaussian_constants(k)
    counter = AlmostPrimeCounter(sieve)
    name = f'gaussian_k{k}' if model == 'steinhaus' else f'gaussian_k{k}_{model}'
    metadata = default_metadata(limits=limits, m_values=m_values, k=k, model=model, budget=config.budget,
                                **constants)
    if mc_fallback is not None:
        metadata.update(mc_seed=mc_fallback.seed, mc_samples=mc_fallback.n_samples)
    report = RatioReport(name, list(GAUSSIAN_COLUMNS), metadata=metadata)

    for limit in limits:
        for m in m_values:
            size = counter.count(sieve.check_limit(limit), m)
            if size == 0:
                logger.warning("Skipping gaussian row N=%d m=%d: E_{N,m} is empty", limit, m)
                continue
            try:
                value = moment(sieve, limit, m, k, model, config).value
                row = dict(moment=value, ratio=value / size ** k, stderr=0.0, source='exact')
            except ResourceLimitError as exc:
                if mc_fallback is None:
                    raise
                logger.warning("Exact M_%d at N=%d m=%d refused (%s); using Monte Carlo", 2 * k, limit, m, exc)
                estimate = mc_moment(sieve, limit, m, 2 * k, mc_fallback.n_samples, mc_fallback.seed,
                                     model, mc_fallback.batch_size)
                row = dict(moment=estimate.mean, ratio=estimate.mean / size ** k,
                           stderr=estimate.stderr / size ** k, source='mc')
            report.add_row(N=limit, m=m, k=k, model=model, E=size, **row, **constants)
    return report


@dataclass(frozen=True)
class SuiteSettings:
    """Parameters of the default report suite; recorded in manifest.json"""

    count_limit: int = 10_000
    approx_limits: Sequence[int] = (10_000, 100_000, 1_000_000)
    theorem_limits: Sequence[int] = (500, 1000, 2000)
    levels: Sequence[int] = (1, 2, 3)
    lemma_limits: Sequence[int] = (10_000, 100_000, 1_000_000)
    helson_limits: Sequence[int] = (100, 1000, 10_000)
    identity_limits: Sequence[int] = (50, 200, 500)
    prop_cases: Sequence[Sequence[int]] = ((50, 1), (100, 2))
    seed: int = 0
    n_samples: int = 500

    @property
    def sieve_limit(self) -> int:
        return max(self.count_limit, *self.approx_limits, *self.theorem_limits, *self.lemma_limits,
                   *self.helson_limits, *self.identity_limits)


def verification_report(sieve: FactorSieve, settings: SuiteSettings,
                        config: Optional[LabConfig] = None) -> RatioReport:
    """
    Exact identity and inequality checks over the suite inputs

    Returns:
        RatioReport 'verify' with one row per check; every holds value is expected to be true
    """
    config = config or get_lab_config()
    report = RatioReport('verify', ['check', 'N', 'm', 'value', 'holds'],
                         metadata=default_metadata(seed=settings.seed, budget=config.budget, tolerance=1e-9))
    for index, limit in enumerate(settings.identity_limits):
        z = sample_assignment(sieve.primes[sieve.primes <= limit], 'steinhaus', settings.seed, index)
        for m in settings.levels:
            error = verify_identity_2_2(sieve, limit, m, z, config)
            report.add_row(check='identity22', N=limit, m=m, value=error, holds=error < 1e-9)
    for limit, m in settings.prop_cases:
        result = verify_prop_2_1(sieve, limit, m, config)
        report.add_row(check='prop21', N=limit, m=m, value=result.rhs - result.lhs, holds=result.holds)
    for limit in settings.identity_limits[:2]:
        side = math.isqrt(limit)
        for m in settings.levels[:2]:
            params = SCountParams(side, side, side, side, m, m, m, m)
            check = verify_cs(sieve, params, config)
            report.add_row(check='cs', N=side, m=m, value=check.count, holds=check.holds)
    return report


def build_default_suite(sieve: FactorSieve, settings: Optional[SuiteSettings] = None,
                        config: Optional[LabConfig] = None) -> List[RatioReport]:
    """Every table of the lab at its default parameters"""
    settings = settings or SuiteSettings()
    config = config or get_lab_config()
    fallback = McSettings(n_samples=settings.n_samples, seed=settings.seed)
    levels = list(settings.levels)
    reports = [
        counts_report(sieve, settings.count_limit, max(levels) + 3),
        approx_ratio_table(sieve, settings.approx_limits, levels),
        theorem_ratios(sieve, settings.theorem_limits, levels, config),
        gaussian_ratios(sieve, settings.theorem_limits, levels, 2, fallback, 'steinhaus', config),
        gaussian_ratios(sieve, settings.theorem_limits, levels, 3, fallback, 'steinhaus', config),
        gaussian_ratios(sieve, settings.theorem_limits, levels, 2, fallback, 'rademacher', config),
        lemma33_report(sieve, settings.lemma_limits, levels),
        lemma34_report(sieve, settings.lemma_limits, levels, levels),
        helson_trend(sieve, settings.helson_limits, settings.n_samples, settings.seed),
        verification_report(sieve, settings, config),
    ]
    logger.info("Built %d reports", len(reports))
    return reports


def write_suite(reports: Sequence[RatioReport], out_dir: str, formats: Sequence[str] = ('csv', 'json'),
                settings: Optional[SuiteSettings] = None, config: Optional[LabConfig] = None) -> str:
    """
    Write each report once per format plus manifest.json

    Returns:
        Path of the manifest
    """
    config = config or get_lab_config()
    files: Dict[str, List[str]] = {}
    for report in reports:
        files[report.name] = []
        for format_type in formats:
            filename = f'{report.name}.{format_type}'
            report.write(os.path.join(out_dir, filename), format_type)
            files[report.name].append(filename)
    manifest = {
        'tool_version': __version__,
        'budget': config.budget,
        'k3_max_limit': config.k3_max_limit,
        'k3_max_m': config.k3_max_m,
        'settings': asdict(settings) if settings else None,
        'reports': files,
    }
    path = os.path.join(out_dir, 'manifest.json')
    atomic_write_text(path, json.dumps(manifest, indent=2, default=list) + '\n')
    return path
