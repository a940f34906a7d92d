"""
Command line entry point: ``instantonpy <command> [options]``.

Commands write JSON or CSV artifacts and exit with 0 on success, 1 when a
verification check fails and 2 for invalid configuration or arguments.
"""
import argparse
import json
import logging
import sys

import numpy as np

from instantonpy import __version__
from instantonpy.config import Settings
from instantonpy.errors import ConfigError, InstantonError
from instantonpy.connections import Adhm, BumpForm, GaugeTransform, Perturbed, basic_connection, gauge_act
from instantonpy.energy import ym_alpha, charge_report
from instantonpy.sphere import SphereGrid, RadialGrid
from instantonpy.dilation import profile
from instantonpy.flow import run_flow, perturbed_basic
from instantonpy.coulomb import coulomb_project

ALPHA_RANGE = (1.0, 2.0)
LAMBDA_RANGE = (1.0, 1e4)


class UsageError(ValueError):
    pass


def _alpha(text):
    value = float(text)
    if not ALPHA_RANGE[0] <= value <= ALPHA_RANGE[1]:
        raise argparse.ArgumentTypeError("alpha must lie in [{}, {}]".format(*ALPHA_RANGE))
    return value


def _lambda(text):
    value = float(text)
    if not LAMBDA_RANGE[0] <= value <= LAMBDA_RANGE[1]:
        raise argparse.ArgumentTypeError("lambda must lie in [{}, {}]".format(*LAMBDA_RANGE))
    return value


def _scale(text):
    value = float(text)
    if not (np.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError("scale must be positive and finite, got {}".format(text))
    return value


def _lambda_grid(text):
    """ 'a:b:n' -> n log-spaced values from a to b """
    try:
        a, b, n = text.split(':')
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError("lambda grid must look like a:b:n, got {}".format(text))
    if not (LAMBDA_RANGE[0] <= a <= b <= LAMBDA_RANGE[1]) or n < 1:
        raise argparse.ArgumentTypeError("lambda grid must satisfy {} <= a <= b <= {} and n >= 1".format(
            *LAMBDA_RANGE))
    return np.geomspace(a, b, n) if n > 1 else np.array([a])


def _settings(args):
    overrides = {'seed': args.seed, 'output': args.out}
    if args.config:
        return Settings.load(args.config, **overrides)
    return Settings(**overrides)


def _write(text, path):
    if path is None or path == '-':
        sys.stdout.write(text + '\n')
    else:
        with open(path, 'w') as f:
            f.write(text + '\n')
        logging.info("Written {}".format(path))


def cmd_verify(args):
    from instantonpy.verify import run_suite
    settings = _settings(args)
    if args.tolerance is not None:
        settings.update(tolerance=args.tolerance)
    report = run_suite(settings, args.only)
    report.save(settings.output, timings=args.timings)
    if not report.passed:
        logging.info("Failed checks: {}".format(", ".join(report.failed)))
    return 0 if report.passed else 1


def cmd_energy(args):
    settings = _settings(args)
    xi, lam = args.adhm[:-1], args.adhm[-1]
    if len(xi) not in (0, 1, 4):
        raise UsageError("--adhm takes LAMBDA, XI LAMBDA or XI1 XI2 XI3 XI4 LAMBDA")
    if not lam > 0:
        raise UsageError("ADHM scale must be positive")
    center = np.zeros(4)
    if len(xi) == 1:
        center[0] = xi[0]
    elif len(xi) == 4:
        center[:] = xi
    c = Adhm(center, lam)
    grid = RadialGrid(settings.radial_nodes) if c.is_radial else SphereGrid(*settings.sphere_nodes)
    report = ym_alpha(c, args.alpha, grid=grid)
    out = report.to_dict()
    out['model'] = c.describe()
    _write(json.dumps(out, sort_keys=True, indent=2), args.out)
    return 0


def cmd_profile(args):
    frame = profile(args.alpha, args.lambda_grid)
    if args.out:
        frame.to_csv(args.out, index=False)
        logging.info("Profile written to {}".format(args.out))
    else:
        frame.to_csv(sys.stdout, index=False)
    return 0


def cmd_flow(args):
    settings = _settings(args)
    rng = settings.generator(0)
    c0 = perturbed_basic(args.perturb, rng=rng, nodes=settings.radial_nodes)
    cfg = settings.flow_config(alpha=args.alpha, lam=args.lam)
    state = run_flow(c0, cfg, trajectory_path=args.out)
    if not args.out:
        state.to_frame().to_csv(sys.stdout, index=False)
    return 0


def _decorated(settings, amplitude):
    rng = settings.generator(1)
    transform = GaugeTransform.bump(amplitude * rng.standard_normal(3), None, 0.6 * settings.lattice_half_width)
    return gauge_act(transform, basic_connection())


def cmd_gaugefix(args):
    settings = _settings(args)
    if args.perturb:
        bump = BumpForm.random(settings.generator(2), None, 1.0)
        c = Perturbed(_decorated(settings, args.amplitude), bump, args.perturb)
    else:
        c = _decorated(settings, args.amplitude)
    result = coulomb_project(c, tol=settings.coulomb_tol, max_outer=settings.coulomb_max_outer,
                             lattice=settings.lattice(), log_path=args.out)
    if not args.out:
        result.to_frame().to_csv(sys.stdout, index=False)
    logging.info("Coulomb projection: {}".format(result.to_dict()))
    return 0


def cmd_charge(args):
    settings = _settings(args)
    try:
        c = Adhm(args.xi, args.lam)
    except ValueError as e:
        raise UsageError(str(e))
    grid = RadialGrid(settings.radial_nodes) if c.is_radial else SphereGrid(*settings.sphere_nodes)
    out = charge_report(c, grid=grid).to_dict()
    out['model'] = c.describe()
    _write(json.dumps(out, sort_keys=True, indent=2), args.out)
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--verbose', action='store_true', help="log at DEBUG level")
    common.add_argument('--seed', type=int, default=None, help="override the configured seed")
    common.add_argument('--config', type=str, default=None, help="path to an INI settings file")
    common.add_argument('--out', type=str, default=None, help="output path (stdout when omitted)")

    parser = argparse.ArgumentParser(
        prog='instantonpy',
        description="Yang-Mills alpha-energy computations for the charge one bundle over S^4",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument('--version', action='version', version=__version__)
    sub = parser.add_subparsers(dest='command')

    p = sub.add_parser('verify', parents=[common], formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                       help="run the acceptance suite and write a JSON report")
    p.add_argument('--only', nargs='+', default=None, help="check ids or prefixes to run")
    p.add_argument('--tolerance', type=float, default=None, help="override the quadrature tolerance")
    p.add_argument('--timings', action='store_true', help="include runtimes in the report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser('energy', parents=[common], formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                       help="alpha-energy of an ADHM instanton")
    p.add_argument('--alpha', type=_alpha, default=1.0, help="energy exponent in [1, 2]")
    p.add_argument('--adhm', type=float, nargs='+', default=[1.0], metavar='XI LAMBDA',
                   help="center components followed by the scale")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser('profile', parents=[common], formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                       help="dilation profile table")
    p.add_argument('--alpha', type=_alpha, nargs='+', default=[1.5], help="energy exponents in [1, 2]")
    p.add_argument('--lambda-grid', type=_lambda_grid, default='1:10:10', help="a:b:n log-spaced dilations")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser('flow', parents=[common], formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                       help="alpha-flow from a perturbed basic connection")
    p.add_argument('--alpha', type=_alpha, default=1.1, help="energy exponent in [1, 2]")
    p.add_argument('--lam', type=_lambda, default=1.0, help="dilation weight of the flowed energy")
    p.add_argument('--perturb', type=float, default=0.05, help="size of the radial perturbation")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser('gaugefix', parents=[common], formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                       help="Coulomb projection of a gauge-decorated basic connection")
    p.add_argument('--amplitude', type=float, default=0.3, help="size of the gauge bump")
    p.add_argument('--perturb', type=float, default=0.0, help="additional non-gauge perturbation")
    p.set_defaults(func=cmd_gaugefix)

    p = sub.add_parser('charge', parents=[common], formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                       help="topological charge of an ADHM instanton")
    p.add_argument('--xi', type=float, nargs=4, default=[0.0, 0.0, 0.0, 0.0], help="center")
    p.add_argument('--lam', type=_scale, default=1.0, help="scale")
    p.set_defaults(func=cmd_charge)
    return parser


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        parser.print_help(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(levelname)-8s %(message)s',
                        datefmt='%a, %d %b %Y %H:%M:%S')
    try:
        return args.func(args)
    except (ConfigError, UsageError) as e:
        logging.error(str(e))
        return 2
    except InstantonError as e:
        logging.error("{}: {}".format(type(e).__name__, e))
        return 1


if __name__ == '__main__':
    sys.exit(main())
