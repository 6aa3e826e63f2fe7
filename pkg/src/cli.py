"""
Lab CLI
Command-line entry point: exact counts, moments, Monte Carlo estimates, verifications and reports
"""
import argparse
import json
import logging
import sys
from typing import Callable, Dict, List, Optional, Sequence

from . import __version__, configure_logging
from .almost_prime_counts import approx_ratio_table, counts_report
from .character_sampler import DEFAULT_BATCH_SIZE, helson_trend, mc_moment, parse_seed, sample_assignment
from .errors import (CacheFormatError, InvalidArgumentError, LabError, ResourceLimitError,
                     ZeroDenominatorError)
from .factor_sieve import FactorSieve, build_sieve
from .identity_checks import sixth_moment_decomposition, verify_cs, verify_identity_2_2, verify_prop_2_1
from .lab_analysis import (McSettings, SuiteSettings, build_default_suite, gaussian_ratios, lemma33_report,
                           lemma34_report, theorem_ratios, write_suite)
from .lab_config import get_lab_config, set_lab_config
from .moment_counter import MODELS, SCountParams, count_S, moment
from .ratio_report import RatioReport, default_metadata

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_INVALID = 2
EXIT_RESOURCE = 3

EXIT_CODES = {
    InvalidArgumentError: EXIT_INVALID,
    ZeroDenominatorError: EXIT_INVALID,
    CacheFormatError: EXIT_INVALID,
    ResourceLimitError: EXIT_RESOURCE,
}


class LabArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors travel as InvalidArgumentError"""

    def error(self, message: str):
        raise InvalidArgumentError(f"{self.prog}: {message}")


def _seed(text: str) -> int:
    try:
        return parse_seed(text)
    except InvalidArgumentError as exc:
        raise argparse.ArgumentTypeError(exc.message)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--format', choices=['csv', 'json'], default='csv', help='Output format (default: csv)')
    common.add_argument('--budget', type=int, default=None,
                        help='Elementary-step budget for exact counting (default: RMF_LAB_BUDGET or 1e9)')
    common.add_argument('--k3-max-limit', type=int, default=None, help='Largest N for exact 6th moments')
    common.add_argument('--k3-max-m', type=int, default=None, help='Largest m for exact 6th moments')
    common.add_argument('--workers', type=int, default=None, help='Threads for partitioned counting')
    common.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING or ERROR')
    return common


def _add_s_params(parser: argparse.ArgumentParser) -> None:
    for name in ('n1', 'n2', 'n1p', 'n2p', 'm1', 'm2', 'm1p', 'm2p'):
        parser.add_argument(f'--{name}', type=int, required=True)


def build_parser() -> LabArgumentParser:
    """
    Build the argument parser

    Returns:
        Parser with one subcommand per lab operation
    """
    parser = LabArgumentParser(prog='rmf-lab',
                               description='Exact and Monte Carlo moments of random multiplicative sums '
                                           'over integers with m prime factors')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    common = _common_options()
    commands = parser.add_subparsers(dest='command', required=True)

    sieve_info = commands.add_parser('sieve-info', parents=[common], help='Sieve summary')
    sieve_info.add_argument('--limit', type=int, required=True)

    counts = commands.add_parser('counts', parents=[common], help='|E_{N,m}| for m = 0..m_max')
    counts.add_argument('--limit', type=int, required=True)
    counts.add_argument('--m-max', type=int, required=True)

    approx = commands.add_parser('approx', parents=[common], help='Exact counts against the two approximations')
    approx.add_argument('--limit', type=int, nargs='+', required=True)
    approx.add_argument('--m', type=int, nargs='+', required=True)

    moment_cmd = commands.add_parser('moment', parents=[common], help='Exact E|S|^(2k)')
    moment_cmd.add_argument('--limit', type=int, required=True)
    moment_cmd.add_argument('--m', type=int, default=None, help='Omega level; omit for the sum over all n <= N')
    moment_cmd.add_argument('--k', type=int, required=True, choices=[1, 2, 3])
    moment_cmd.add_argument('--model', choices=MODELS, default='steinhaus')

    s_count = commands.add_parser('s-count', parents=[common], help='Quadruple count a1*a2 = b1*b2')
    _add_s_params(s_count)

    mc = commands.add_parser('mc', parents=[common], help='Monte Carlo estimate of E|S|^q')
    mc.add_argument('--limit', type=int, required=True)
    mc.add_argument('--m', type=int, default=None, help='Omega level; omit for the sum over all n <= N')
    mc.add_argument('--q', type=float, required=True)
    mc.add_argument('--samples', type=int, required=True)
    mc.add_argument('--seed', type=_seed, default=0, help='Decimal or 0x-hex 64-bit seed')
    mc.add_argument('--model', choices=MODELS, default='steinhaus')
    mc.add_argument('--batch-size', type=int, default=DEFAULT_BATCH_SIZE)

    verify = commands.add_parser('verify', help='Exact identity and inequality checks')
    checks = verify.add_subparsers(dest='check', required=True)
    identity = checks.add_parser('identity22', parents=[common], help='Pairing expansion of |S|^2')
    identity.add_argument('--limit', type=int, required=True)
    identity.add_argument('--m', type=int, required=True)
    identity.add_argument('--seed', type=_seed, default=0)
    identity.add_argument('--trials', type=int, default=10)
    identity.add_argument('--tolerance', type=float, default=1e-9)
    prop = checks.add_parser('prop21', parents=[common], help='Sixth-moment inequality')
    prop.add_argument('--limit', type=int, required=True)
    prop.add_argument('--m', type=int, required=True)
    decomposition = checks.add_parser('decomposition', parents=[common],
                                      help='Exact pairing decomposition of the sixth moment')
    decomposition.add_argument('--limit', type=int, required=True)
    decomposition.add_argument('--m', type=int, required=True)
    cs = checks.add_parser('cs', parents=[common], help='Cauchy-Schwarz bound for a quadruple count')
    _add_s_params(cs)

    ratios = commands.add_parser('ratios', help='Ratio tables')
    tables = ratios.add_subparsers(dest='table', required=True)
    theorem = tables.add_parser('theorem', parents=[common], help='M6/|E|^3 and ||S||_6/||S||_4')
    theorem.add_argument('--limits', type=int, nargs='+', default=[500, 1000, 2000])
    theorem.add_argument('--m-values', type=int, nargs='+', default=[1, 2, 3])
    lemma33 = tables.add_parser('lemma33', parents=[common], help='sum |E_{b,k}|/b^2 over 2^(2k)')
    lemma33.add_argument('--limits', type=int, nargs='+', default=[10_000, 100_000, 1_000_000])
    lemma33.add_argument('--k-values', type=int, nargs='+', default=[1, 2, 3])
    lemma34 = tables.add_parser('lemma34', parents=[common], help="large-b sum over |E_{N,k}|(loglog N)^k'/k'!")
    lemma34.add_argument('--limits', type=int, nargs='+', default=[10_000, 100_000, 1_000_000])
    lemma34.add_argument('--k-values', type=int, nargs='+', default=[1, 2, 3])
    lemma34.add_argument('--k-prime-values', type=int, nargs='+', default=[1, 2, 3])
    gaussian = tables.add_parser('gaussian', parents=[common], help='M_2k/|E|^k against both Gaussian constants')
    gaussian.add_argument('--limits', type=int, nargs='+', default=[500, 1000, 2000])
    gaussian.add_argument('--m-values', type=int, nargs='+', default=[1, 2, 3])
    gaussian.add_argument('--k', type=int, choices=[1, 2, 3], default=2)
    gaussian.add_argument('--model', choices=MODELS, default='steinhaus')
    gaussian.add_argument('--mc-samples', type=int, default=None,
                          help='Fall back to Monte Carlo with this many samples when exact counting is refused')
    gaussian.add_argument('--seed', type=_seed, default=0)
    helson = tables.add_parser('helson', parents=[common], help='E|S_N|/sqrt(N) trend')
    helson.add_argument('--limits', type=int, nargs='+', default=[100, 1000, 10_000])
    helson.add_argument('--samples', type=int, default=500)
    helson.add_argument('--seed', type=_seed, default=0)
    helson.add_argument('--model', choices=MODELS, default='steinhaus')

    report = commands.add_parser('report', parents=[common], help='Write the default suite to a directory')
    report.add_argument('--out', required=True, help='Output directory')
    report.add_argument('--formats', nargs='+', choices=['csv', 'json', 'xlsx'], default=['csv', 'json'])
    report.add_argument('--seed', type=_seed, default=0)
    report.add_argument('--samples', type=int, default=500)
    return parser


def _sieve_for(*limits: int) -> FactorSieve:
    return build_sieve(max(2, *limits))


def _emit(report: RatioReport, args: argparse.Namespace) -> None:
    sys.stdout.write(report.render(args.format))


def _single_row(name: str, row: Dict[str, object], **metadata) -> RatioReport:
    report = RatioReport(name, list(row), metadata=default_metadata(**metadata))
    report.add_row(**row)
    return report


def _run_sieve_info(args) -> int:
    sieve = build_sieve(args.limit)
    _emit(_single_row('sieve', {
        'limit': sieve.limit,
        'primes': len(sieve.primes),
        'largest_prime': int(sieve.primes[-1]),
        'max_omega': int(sieve.omega.max()),
    }), args)
    return EXIT_OK


def _run_counts(args) -> int:
    _emit(counts_report(_sieve_for(args.limit), args.limit, args.m_max), args)
    return EXIT_OK


def _run_approx(args) -> int:
    _emit(approx_ratio_table(_sieve_for(*args.limit), args.limit, args.m), args)
    return EXIT_OK


def _run_moment(args) -> int:
    result = moment(_sieve_for(args.limit), args.limit, args.m, args.k, args.model)
    row = result.to_dict()
    row['m'] = '' if result.m is None else result.m
    row['value'] = result.value
    _emit(_single_row('moment', row, budget=get_lab_config().budget), args)
    return EXIT_OK


def _params(args) -> SCountParams:
    return SCountParams(args.n1, args.n2, args.n1p, args.n2p, args.m1, args.m2, args.m1p, args.m2p)


def _run_s_count(args) -> int:
    params = _params(args)
    sieve = _sieve_for(params.n1, params.n2, params.n1p, params.n2p)
    row = {name: getattr(params, name) for name in ('n1', 'n2', 'n1p', 'n2p', 'm1', 'm2', 'm1p', 'm2p')}
    row['count'] = count_S(sieve, params)
    _emit(_single_row('s_count', row), args)
    return EXIT_OK


def _run_mc(args) -> int:
    estimate = mc_moment(_sieve_for(args.limit), args.limit, args.m, args.q, args.samples, args.seed,
                         args.model, args.batch_size)
    row = estimate.to_dict()
    row['m'] = '' if estimate.m is None else estimate.m
    _emit(_single_row('mc', row, batch_size=args.batch_size), args)
    return EXIT_OK


def _verification_result(report: RatioReport, args) -> int:
    _emit(report, args)
    failed = [row for row in report.rows if not row['holds']]
    if failed:
        sys.stderr.write(json.dumps({'error': 'verification-failed', 'check': report.name,
                                     'failed_rows': len(failed)}) + '\n')
        return EXIT_VERIFICATION_FAILED
    return EXIT_OK


def _run_verify(args) -> int:
    if args.check == 'identity22':
        sieve = _sieve_for(args.limit)
        primes = sieve.primes[sieve.primes <= args.limit]
        report = RatioReport('identity22', ['trial', 'N', 'm', 'error', 'holds'],
                             metadata=default_metadata(seed=args.seed, tolerance=args.tolerance))
        for trial in range(args.trials):
            z = sample_assignment(primes, 'steinhaus', args.seed, trial)
            error = verify_identity_2_2(sieve, args.limit, args.m, z)
            report.add_row(trial=trial, N=args.limit, m=args.m, error=error, holds=error < args.tolerance)
        return _verification_result(report, args)
    if args.check == 'prop21':
        result = verify_prop_2_1(_sieve_for(args.limit), args.limit, args.m)
        row = result.to_dict()
        row.update(lhs=result.lhs, rhs=result.rhs, first_term=result.first_term, correction=result.correction)
        return _verification_result(_single_row('prop21', row), args)
    if args.check == 'decomposition':
        result = sixth_moment_decomposition(_sieve_for(args.limit), args.limit, args.m)
        return _verification_result(_single_row('decomposition', {
            'N': result.limit, 'm': result.m, 'E': result.size, 'M4': result.fourth_moment,
            'pairing_sum': result.pairing_sum, 'total': result.total, 'M6': result.sixth_moment,
            'holds': result.matches,
        }), args)
    params = _params(args)
    check = verify_cs(_sieve_for(params.n1, params.n2, params.n1p, params.n2p), params)
    row = check.to_dict()
    row.update(count_S=check.count, pair_second_moment_a=check.pair_a, pair_second_moment_b=check.pair_b)
    return _verification_result(_single_row('cs', row), args)


def _run_ratios(args) -> int:
    if args.table == 'theorem':
        report = theorem_ratios(_sieve_for(*args.limits), args.limits, args.m_values)
    elif args.table == 'lemma33':
        report = lemma33_report(_sieve_for(*args.limits), args.limits, args.k_values)
    elif args.table == 'lemma34':
        report = lemma34_report(_sieve_for(*args.limits), args.limits, args.k_values, args.k_prime_values)
    elif args.table == 'gaussian':
        fallback = McSettings(n_samples=args.mc_samples, seed=args.seed) if args.mc_samples else None
        report = gaussian_ratios(_sieve_for(*args.limits), args.limits, args.m_values, args.k, fallback,
                                 args.model)
    else:
        report = helson_trend(_sieve_for(*args.limits), args.limits, args.samples, args.seed, args.model)
    _emit(report, args)
    return EXIT_OK


def _run_report(args) -> int:
    settings = SuiteSettings(seed=args.seed, n_samples=args.samples)
    sieve = _sieve_for(settings.sieve_limit)
    reports = build_default_suite(sieve, settings)
    manifest = write_suite(reports, args.out, args.formats, settings)
    failed = [row for row in reports[-1].rows if not row['holds']]
    sys.stdout.write(json.dumps({'manifest': manifest, 'reports': [r.name for r in reports],
                                 'failed_checks': len(failed)}) + '\n')
    return EXIT_VERIFICATION_FAILED if failed else EXIT_OK


HANDLERS: Dict[str, Callable[[argparse.Namespace], int]] = {
    'sieve-info': _run_sieve_info,
    'counts': _run_counts,
    'approx': _run_approx,
    'moment': _run_moment,
    's-count': _run_s_count,
    'mc': _run_mc,
    'verify': _run_verify,
    'ratios': _run_ratios,
    'report': _run_report,
}


def _exit_code(exc: LabError) -> int:
    for error_type, code in EXIT_CODES.items():
        if isinstance(exc, error_type):
            return code
    return EXIT_INVALID


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one lab command

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        0 on success, 1 when a verification fails, 2 on invalid arguments, 3 on resource limits
    """
    argv: List[str] = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        config = get_lab_config()
        configure_logging(args.log_level or config.log_level)
        set_lab_config(config.with_overrides(budget=args.budget, k3_max_limit=args.k3_max_limit,
                                             k3_max_m=args.k3_max_m, workers=args.workers))
        logger.debug("Running %s", argv)
        return HANDLERS[args.command](args)
    except LabError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + '\n')
        return _exit_code(exc)
