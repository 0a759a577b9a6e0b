"""
Main entry point for lerw-lab.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from colorama import Fore, Style, init

from . import __version__
from .cli.commands import HANDLERS, JSON_COMMANDS
from .cli.output import ResultWriter
from .core.config import get_settings, load_config_file
from .core.errors import LabError, PreconditionViolation, UsageError
from .core.parallel import ReplicaRunner

init(autoreset=True)

logger = logging.getLogger(__name__)

EXIT_USAGE = UsageError.exit_code
EXIT_PRECONDITION = PreconditionViolation.exit_code
EXIT_DEFECT = 4

GREEN_MODES = ('eval', 'integrate')

REQUIRED = {
    'lerw-sample': ('n',),
    'estimate-mn': ('n',),
    'fit-exponent': ('n',),
    'mn-ratio': ('n', 'eps'),
    'tightness': ('n',),
    'edge-prob': ('n',),
    'occupation': ('z', 'eps', 'n'),
    'es': ('n',),
    'hit-prob': ('z', 'eps'),
    'metrics': ('curve_a', 'curve_b'),
    'lp-distance': ('measure_a', 'measure_b'),
}

class LabArgumentParser(argparse.ArgumentParser):
    """Raises UsageError instead of printing usage and exiting."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


EPILOG = """
Examples:
  # Mean LERW length to radius 64 from 10^4 samples on 8 workers
  lerw-lab estimate-mn --n 64 --samples 10000 --workers 8 --seed 7

  # Growth exponent fit
  lerw-lab fit-exponent --n 16 32 64 128 256 --samples 10000

  # Edge-visit field against G(z) = |z|^(-3/4), with a plot
  lerw-lab edge-prob --n 128 --samples 100000 --plot field.png

  # Conditional occupation of B(0.4, eps) for three radii
  lerw-lab occupation --z 0.4,0 --eps 0.125 0.0625 0.03125 --n 256

  # Escape probability exponent
  lerw-lab es --n 256 --eps 0.25 0.125 0.0625

  # Green's function value, and its integral against the lattice edge field
  lerw-lab green eval --kappa 2 --z 0.5,0
  lerw-lab green integrate --n 128 --annulus 0.2,0.8

  # Every flag can also come from a JSON file (flags win)
  lerw-lab tightness --config tightness.json
"""


def _common_parser() -> LabArgumentParser:
    common = LabArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help='Run seed (default: LERW_LAB_SEED or 0)')
    common.add_argument('--samples', type=int, help='Number of replicas')
    common.add_argument('--workers', type=int, help='Worker processes (results do not depend on it)')
    common.add_argument('--out', '-o', type=str,
                        help='Output file (default: <output_dir>/<command>.csv or .json)')
    common.add_argument('--config', type=str, help='JSON file whose keys mirror the flags')
    common.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    return common


def _floats(parser: argparse.ArgumentParser, name: str, help_text: str, **kwargs) -> None:
    parser.add_argument(name, type=float, nargs='+', help=help_text, **kwargs)


def build_parser() -> Tuple[argparse.ArgumentParser, Dict[str, argparse.ArgumentParser]]:
    """
    Argument parser with one subcommand per experiment or utility.

    Returns:
        (top-level parser, subcommand parsers by name)
    """
    parser = LabArgumentParser(
        prog='lerw-lab',
        description="lerw-lab - Monte Carlo laboratory for loop-erased random walk and radial SLE(2)",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG,
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    common = _common_parser()
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True
    commands: Dict[str, argparse.ArgumentParser] = {}

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        commands[name] = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        return commands[name]

    p = add('lerw-sample', 'Sample loop-erased walks to radius n (JSON)')
    p.add_argument('--n', type=int, help='Exit radius')
    p.add_argument('--plot', type=str, help='Save a figure of the samples')
    p.add_argument('--speed', choices=['empirical', 'ideal'], default='empirical',
                   help='Edge mass 1/c_n of the saved occupation measure')
    p.add_argument('--measure-out', type=str, help='Write the mean occupation measure (CSV)')
    p.add_argument('--raster-out', type=str, help='Write the mean occupation measure binned on square cells (CSV)')
    p.add_argument('--cell', type=float, default=0.05, help='Cell side for --raster-out')

    p = add('sle-sample', 'Sample approximate radial SLE traces (JSON)')
    p.add_argument('--kappa', type=float, default=2.0)
    p.add_argument('--T', type=float, default=4.0, help='Capacity horizon')
    p.add_argument('--dt', type=float, default=1e-3, help='Driving step')
    p.add_argument('--parametrization', choices=['capacity', 'finite-lifetime'], default='finite-lifetime')
    p.add_argument('--uniform-start', action='store_true', help='Uniform boundary starting point')
    p.add_argument('--check-inverse', action='store_true',
                   help='Cross-check tips against the backward flow')
    p.add_argument('--plot', type=str, help='Save a figure of the traces')

    p = add('estimate-mn', 'Mean and quantiles of the LERW length M_n')
    p.add_argument('--n', type=int, nargs='+', help='Exit radii')

    p = add('fit-exponent', 'Fit log E[M_n] against log n')
    p.add_argument('--n', type=int, nargs='+', help='Exit radii (at least three)')
    p.add_argument('--bootstrap', type=int, default=1000, help='Bootstrap replicates for the half-width')

    p = add('mn-ratio', 'E[M_{eps n}] / E[M_n] against eps^(5/4)')
    p.add_argument('--n', type=int)
    _floats(p, '--eps', 'Scale factors in (0, 1)')

    p = add('tightness', 'Quantiles of M_n / E[M_n] across n')
    p.add_argument('--n', type=int, nargs='+')

    p = add('edge-prob', 'Edge-visit frequencies against the Green function')
    p.add_argument('--n', type=int)
    p.add_argument('--annulus', type=str, default='0,1', help="Region 'inner,outer' of reported edges")
    p.add_argument('--speed', choices=['empirical', 'ideal'], default='empirical')
    _floats(p, '--bins', 'Radial bin centres', default=[0.3, 0.5, 0.7])
    p.add_argument('--bin-width', type=float, default=0.05)
    p.add_argument('--domain', type=str, help='DomainSpec JSON of a centred disk')
    p.add_argument('--plot', type=str, help='Save the radial profile figure')

    p = add('occupation', 'Steps in B(z, eps) given that the LERW hits it')
    p.add_argument('--z', type=str, help="Ball centre 'x,y'")
    _floats(p, '--eps', 'Ball radii')
    p.add_argument('--n', type=int)
    p.add_argument('--speed', choices=['empirical', 'ideal'], default='empirical')
    p.add_argument('--min-hits', type=int, default=100)
    p.add_argument('--no-containment', action='store_true', help='Skip the B(z, 2 eps) inside-disk check')

    p = add('es', 'Escape probabilities Es(n), Es(m, n) and their eps exponent')
    p.add_argument('--n', type=int)
    p.add_argument('--m', type=int, help='Inner radius for Es(m, n)')
    _floats(p, '--eps', 'Fit Es(eps n, n) against eps')
    p.add_argument('--factorization', action='store_true',
                   help='Compare Es(n) with Es(eps n) Es(eps n, n) at the first eps')
    p.add_argument('--bootstrap', type=int, default=1000)

    p = add('hit-prob', 'Probability that the curve meets B(z, eps)')
    p.add_argument('--z', type=str)
    p.add_argument('--eps', type=float)
    p.add_argument('--n', type=int, nargs='+', default=[64])
    p.add_argument('--model', choices=['lerw', 'sle'], default='lerw')
    p.add_argument('--kappa', type=float, default=2.0)
    p.add_argument('--T', type=float, default=6.0)
    p.add_argument('--dt', type=float, default=1e-3)

    p = add('domain-markov', 'Chi-square test of the domain Markov property')
    p.add_argument('--domain', type=str, help='DomainSpec JSON')
    p.add_argument('--square', type=float, default=4.0, help='Side of a centred square (without --domain)')
    p.add_argument('--scale', type=int, default=1, help='Lattice scale of the grid approximation')
    p.add_argument('--j', type=int, default=1, help='Prefix length')
    p.add_argument('--comparator', choices=['slit', 'unslit', 'fresh'], default='slit')
    p.add_argument('--min-prefix', type=int, default=500)

    p = add('martingale-check', "Mean of the Green's observable along radial SLE")
    p.add_argument('--kappa', type=float, default=2.0)
    p.add_argument('--z', type=str, default='0.5,0')
    _floats(p, '--times', 'Capacity times', default=[0.1, 0.2, 0.3, 0.4, 0.5])
    p.add_argument('--dt', type=float, help='Driving step (1e-3, or 1e-4 with --capacity)')
    p.add_argument('--capacity', action='store_true', help="Check |g_T'(0)| = e^T instead")
    p.add_argument('--T', type=float, default=1.0, help='Horizon for --capacity')

    green = sub.add_parser('green', help="Evaluate or integrate the SLE Green's function",
                           description="Evaluate or integrate the SLE Green's function")
    modes = green.add_subparsers(dest='mode', metavar='MODE')
    modes.required = True
    p = modes.add_parser(GREEN_MODES[0], parents=[common], help='G(z) in the unit disk or a scaled disk')
    commands['green eval'] = p
    p.add_argument('--kappa', type=float, default=2.0)
    p.add_argument('--z', type=str, default='0.5,0')
    p.add_argument('--radius', type=float, help='Disk radius r (scaling map z -> z / r)')
    p = modes.add_parser(GREEN_MODES[1], parents=[common],
                         help='Integral of G over an annulus against its lattice Riemann sum')
    commands['green integrate'] = p
    p.add_argument('--kappa', type=float, default=2.0)
    p.add_argument('--n', type=int, default=64, help='Lattice scale')
    p.add_argument('--annulus', type=str, default='0,1')

    p = add('metrics', 'Distances between two curves (JSON)')
    p.add_argument('--curve-a', type=str)
    p.add_argument('--curve-b', type=str)
    p.add_argument('--resolution', type=float, default=0.01, help='Piece length of the occupation measures')
    p.add_argument('--level', type=int, default=7, help='Dyadic level of the test family')

    p = add('lp-distance', 'Levy-Prokhorov bracket between two occupation measures (CSV)')
    p.add_argument('--measure-a', type=str)
    p.add_argument('--measure-b', type=str)
    p.add_argument('--level', type=int, default=7)

    return parser, commands


def _default_green_mode(argv: List[str]) -> List[str]:
    """`green` without a mode means `green eval`."""
    if argv[:1] == ['green'] and (len(argv) == 1 or argv[1] not in GREEN_MODES + ('-h', '--help')):
        return ['green', 'eval'] + argv[1:]
    return argv


def _command_key(args: argparse.Namespace) -> str:
    mode = getattr(args, 'mode', None)
    return f"{args.command} {mode}" if mode else args.command


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """
    Parse flags, merging a ``--config`` file underneath them.

    File keys are applied as subcommand defaults and the command line is
    parsed again, so explicit flags always win. Required flags may come from
    either source.
    """
    parser, commands = build_parser()
    argv = _default_green_mode(list(sys.argv[1:] if argv is None else argv))
    args = parser.parse_args(argv)
    command_parser = commands[_command_key(args)]
    if args.config:
        values = load_config_file(Path(args.config))
        values.pop('config', None)
        actions = {action.dest: action for action in command_parser._actions}
        unknown = sorted(set(values) - set(actions))
        if unknown:
            command_parser.error(f"unknown config keys: {', '.join(unknown)}")
        for key, value in values.items():
            if actions[key].nargs == '+' and not isinstance(value, list):
                values[key] = [value]
        command_parser.set_defaults(**values)
        args = parser.parse_args(argv)

    missing = [flag for flag in REQUIRED.get(args.command, ()) if getattr(args, flag) is None]
    if missing:
        flags = ', '.join('--' + m.replace('_', '-') for m in missing)
        command_parser.error(f"missing required flags: {flags}")

    settings = get_settings()
    if args.seed is None:
        args.seed = settings.seed
    if args.workers is None:
        args.workers = settings.workers
    if args.out is None:
        suffix = '.json' if args.command in JSON_COMMANDS else '.csv'
        args.out = str(Path(settings.output_dir) / f"{args.command}{suffix}")
    return args


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, get_settings().log_level.upper(), logging.WARNING)
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def _report_error(error: str, message: str, exit_code: int) -> int:
    print(json.dumps({'error': error, 'message': message, 'exit_code': exit_code}), file=sys.stderr)
    return exit_code


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point; returns the process exit code."""
    try:
        args = parse_arguments(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    except LabError as e:
        return _report_error(type(e).__name__, str(e), e.exit_code)
    except (OSError, ValueError) as e:
        return _report_error(type(e).__name__, str(e), EXIT_USAGE)

    _configure_logging(args.verbose)
    config = {key: value for key, value in vars(args).items() if key not in ('verbose',)}
    writer = ResultWriter(Path(args.out), args.command, config, args.seed)
    runner = ReplicaRunner(workers=args.workers)

    try:
        result = HANDLERS[args.command](args, runner, writer)
    except LabError as e:
        return _report_error(type(e).__name__, str(e), e.exit_code)
    except ValueError as e:
        return _report_error(type(e).__name__, str(e), EXIT_PRECONDITION)
    except OSError as e:
        return _report_error(type(e).__name__, str(e), EXIT_USAGE)
    except Exception as e:
        logger.exception(f"{args.command} failed")
        return _report_error(type(e).__name__, str(e), EXIT_DEFECT)

    if result.table is not None:
        print(writer.write_table(result.table), end='')
    elif result.document is not None:
        writer.write_json(result.document)
    manifest = writer.finish()

    if result.summary:
        print(f"{Fore.CYAN}{result.summary}{Style.RESET_ALL}")
    print(f"{Fore.GREEN}✓ {args.command} wrote {writer.out} (manifest {manifest.name}){Style.RESET_ALL}")
    return 0


if __name__ == '__main__':
    sys.exit(main())
