"""Command-line entry point: ``vsf <command> [options] [--section.key value]``.

Exit status: 0 success, 1 usage error, 2 data/format error, 3 numeric
failure.
"""
import argparse
import logging
import sys

from vision_state_fusion.cli import commands
from vision_state_fusion.cli.config import (load_config, parse_overrides,
                                            split_assignment)
from vision_state_fusion.errors import (DataFormatError, UsageError,
                                        VisionStateFusionError)
from vision_state_fusion.nets.bases import VARIANTS

logger = logging.getLogger('vision_state_fusion')


class ArgumentParser(argparse.ArgumentParser):
    """Reports argument errors as UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(f'{self.prog}: {message}')


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='file of "key = value" lines')
    parser.add_argument('--set', action='append', default=[],
                        metavar='KEY=VALUE', help='override one config key')
    parser.add_argument('--debug', action='store_true')


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(
        prog='vsf',
        description='Vision-state fusion benchmark kit. Any config key can '
        'be overridden with --section.key value (e.g. --train.epochs 20).')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true')
    verbosity.add_argument('-q', '--quiet', action='store_true')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p = sub.add_parser('gen', help='render a synthetic dataset')
    _add_common(p)
    p.add_argument('--out', required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--seed', type=int)
    p.add_argument('--groups', type=int)
    p.add_argument('--preset', choices=('d2h', 'd2d', 'a2o'))
    p.add_argument('--jobs', type=int, default=1)
    p.set_defaults(func=commands.cmd_gen)

    p = sub.add_parser('augment', help='write augmented copies of a dataset')
    _add_common(p)
    p.add_argument('--data', required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--copies', type=int)
    p.add_argument('--seed', type=int)
    p.add_argument('--jobs', type=int, default=1)
    p.set_defaults(func=commands.cmd_augment)

    p = sub.add_parser('train', help='train one fusion variant')
    _add_common(p)
    p.add_argument('--data', required=True)
    p.add_argument('--val', required=True)
    p.add_argument('--variant', default='stateless', choices=VARIANTS)
    p.add_argument('--arch')
    p.add_argument('--out', required=True)
    p.add_argument('--log', help='history CSV (default: next to --out)')
    p.add_argument('--seed', type=int)
    p.add_argument('--qat', action='store_true',
                   help='quantization-aware fine-tuning after training')
    p.set_defaults(func=commands.cmd_train)

    p = sub.add_parser('eval', help='score a model on a dataset')
    _add_common(p)
    p.add_argument('--model', required=True)
    p.add_argument('--data', required=True)
    p.add_argument('--out', required=True)
    p.set_defaults(func=commands.cmd_eval)

    p = sub.add_parser('costs', help='memory and MAC accounting')
    _add_common(p)
    p.add_argument('--arch', default='frontnet_sym')
    p.add_argument('--variant', default='all')
    p.add_argument('--state-dim', type=int, default=1)
    p.add_argument('--out')
    p.set_defaults(func=commands.cmd_costs)

    p = sub.add_parser('crossval', help='paired multi-seed or leave-one-out')
    _add_common(p)
    p.add_argument('--data', required=True)
    p.add_argument('--mode', default='seeds:5', help='"seeds:N" or "loo"')
    p.add_argument('--variants', nargs='+', choices=VARIANTS)
    p.add_argument('--arch')
    p.add_argument('--augment', action='store_true',
                   help='augment every training split')
    p.add_argument('--out-dir', required=True)
    p.add_argument('--jobs', type=int, default=1)
    p.set_defaults(func=commands.cmd_crossval)

    p = sub.add_parser('report', help='SVG figure from a scores CSV')
    _add_common(p)
    p.add_argument('--scores', required=True)
    p.add_argument('--out', required=True)
    p.set_defaults(func=commands.cmd_report)
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else \
        logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level,
                        format='%(asctime)s %(levelname)s %(name)s: '
                        '%(message)s')


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args, extras = parser.parse_known_args(argv)
        configure_logging(args.verbose, args.quiet)
        overrides = parse_overrides(extras)
        overrides += [split_assignment(s) for s in args.set]
        config = load_config(args.config, overrides,
                             preset=getattr(args, 'preset', None))
        return args.func(args, config)
    except VisionStateFusionError as e:
        logger.error('%s: %s', type(e).__name__, e)
        return e.exit_code
    except OSError as e:
        logger.error('%s', e)
        return DataFormatError.exit_code


if __name__ == '__main__':
    sys.exit(main())
