"""Command line entry point: geoach run|sweep|offline|ballsbins|coupon|vertex"""
import argparse
import logging
import sys

from core_model import ParameterError
from harness import ConfigError, load_config, render_results, sweep, write_results

logger = logging.getLogger(__name__)

SUBCOMMAND_MODES = {
    'run': 'online',
    'offline': 'offline',
    'ballsbins': 'ballsbins',
    'coupon': 'coupon',
    'vertex': 'vertex',
}

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _add_common(parser):
    parser.add_argument('--config', help="key = value settings file")
    parser.add_argument('--seed', dest='base_seed', type=int, help="base seed (env GEOACH_SEED)")
    parser.add_argument('--trials', type=int)
    parser.add_argument('--workers', type=int)
    parser.add_argument('--out', help="output path; stdout when omitted")
    parser.add_argument('--format', choices=('csv', 'json', 'xlsx'))
    parser.add_argument('--progress', action='store_true', help="show a progress bar")
    parser.add_argument('-v', '--verbose', action='store_true')
    parser.add_argument('-q', '--quiet', action='store_true')
    parser.add_argument('--log-file')


def _add_geometric(parser):
    parser.add_argument('--n', type=int)
    parser.add_argument('--c', help="comma separated density parameters")
    parser.add_argument('--r', help="comma separated radii")
    parser.add_argument('--lam', help="comma separated values of n*r^2")
    parser.add_argument('--strategy')
    parser.add_argument('--choices', type=int)
    parser.add_argument('--K', type=float)
    parser.add_argument('--h', type=int)
    parser.add_argument('--h-exact', type=int)
    parser.add_argument('--slack', type=int)
    parser.add_argument('--list-capacity', type=int)
    parser.add_argument('--danger-mode', choices=('auto', 'exact', 'surrogate'))
    parser.add_argument('--target-eps', type=float)
    parser.add_argument('--sample-every', type=int)


def build_parser():
    parser = argparse.ArgumentParser(
        prog='geoach',
        description="Power-of-choices random geometric graph experiments")
    subparsers = parser.add_subparsers(dest='command', required=True)

    run = subparsers.add_parser('run', help="online process trials")
    _add_common(run)
    _add_geometric(run)

    sweep_parser = subparsers.add_parser('sweep', help="any mode, driven by a config file")
    _add_common(sweep_parser)
    _add_geometric(sweep_parser)
    sweep_parser.add_argument('--mode', choices=('online', 'offline', 'ballsbins', 'coupon', 'vertex'))

    offline = subparsers.add_parser('offline', help="offline selection trials")
    _add_common(offline)
    _add_geometric(offline)

    ballsbins = subparsers.add_parser('ballsbins', help="balls into bins with choices")
    _add_common(ballsbins)
    ballsbins.add_argument('--n-bins', type=int)
    ballsbins.add_argument('--rounds', type=int)
    ballsbins.add_argument('--policy', choices=('greedy', 'one-choice'))
    ballsbins.add_argument('--choices', type=int)

    coupon = subparsers.add_parser('coupon', help="two-choices coupon collector")
    _add_common(coupon)
    coupon.add_argument('--coupons', type=int)
    coupon.add_argument('--stop-remaining', type=int)

    vertex = subparsers.add_parser('vertex', help="vertex process on G(n, m)")
    _add_common(vertex)
    vertex.add_argument('--n', type=int)
    vertex.add_argument('--m', type=int)
    vertex.add_argument('--vertex-strategy',
                        choices=('random', 'min-degree-into-selected', 'greedy-min-merge'))
    return parser


def configure_logging(verbose=False, quiet=False, log_file=None):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


def _overrides(args):
    skip = {'command', 'config', 'progress', 'verbose', 'quiet', 'log_file'}
    overrides = {key: value for key, value in vars(args).items() if key not in skip}
    if args.command in SUBCOMMAND_MODES:
        overrides['mode'] = SUBCOMMAND_MODES[args.command]
    return overrides


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet, args.log_file)

    try:
        config = load_config(args.config, _overrides(args))
    except ConfigError as e:
        for problem in e.problems:
            logger.error("%s", problem)
        return 1

    try:
        result = sweep(config, progress=args.progress)
        if config.out:
            write_results(result, config.out, config.format)
        else:
            sys.stdout.write(render_results(result, config.format))
    except (ConfigError, ParameterError) as e:
        logger.error("%s", e)
        return 1

    return 2 if result.failed else 0


if __name__ == '__main__':
    sys.exit(main())
