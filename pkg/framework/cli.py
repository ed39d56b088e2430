"""
Resampling CLI
Command-line surface over the execution engine
"""

import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from pointcloud.errors import PointCloudError
from pointcloud.io import FORMATS
from pointcloud.shapes import SHAPE_KINDS

from .execution_engine import CONTOUR_METHODS, ConfigError, ExecutionEngine, build_run_config, load_yaml

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

LOG_FILE = 'resampling.log'

# CLI dest -> RunConfig field where the names differ
_RENAMED = {'synthetic': 'experiment'}
_NOT_PARAMS = ('command', 'config', 'log_level', 'param')


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _key_value(text: str):
    if '=' not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got '{text}'")
    key, value = text.split('=', 1)
    return key.strip(), yaml.safe_load(value)


class ResamplingCLI:
    """Command line interface for graph-based point cloud resampling"""

    def build_parser(self) -> argparse.ArgumentParser:
        parser = _Parser(
            prog='run_resampling.py',
            description='Graph-based resampling of 3D point clouds'
        )
        subparsers = parser.add_subparsers(dest='command', help='Available commands')

        common = _Parser(add_help=False)
        common.add_argument('--config', help='YAML configuration file')
        common.add_argument('--output', help='Output directory')
        common.add_argument('--output-format', choices=FORMATS, help='Format of written clouds')
        common.add_argument('--seed', type=int, help='Root random seed')
        common.add_argument('--threads', type=int, help='Workers for k-d tree queries (-1 = all cores)')
        common.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                            help='Logging level')

        graph = _Parser(add_help=False)
        graph.add_argument('--sigma', type=float, help='Gaussian kernel width')
        graph.add_argument('--tau', type=float, help='Neighbourhood distance threshold')
        graph.add_argument('--k-neighbors', type=int, help='Neighbour rank for the automatic sigma')
        graph.add_argument('--tau-factor', type=float, help='tau = factor * sigma when tau is omitted')
        graph.add_argument('--isolated-policy', choices=['self-loop', 'strict'],
                           help='Handling of isolated nodes in the transition shift')
        graph.add_argument('--dump-graph', action='store_true', default=None,
                           help='Write the graph edge list')

        source = _Parser(add_help=False)
        source.add_argument('--input', help='Input point cloud')
        source.add_argument('--input-format', choices=FORMATS, help='Override format inference')

        budget = _Parser(add_help=False)
        group = budget.add_mutually_exclusive_group()
        group.add_argument('--samples', type=int, help='Number of draws M')
        group.add_argument('--ratio', type=float, help='Draws as a fraction of the cloud size')

        strategy = _Parser(add_help=False)
        strategy.add_argument('--beta', type=float, help='Uniform floor mixed into the distribution')
        strategy.add_argument('--c', type=float, help='Coordinate spectral norm override')
        strategy.add_argument('--exponent', type=int, choices=[1, 2], help='High-pass score exponent')
        strategy.add_argument('--bandwidth', type=int, help='Ideal low-pass bandwidth')
        strategy.add_argument('--include-attrs', action='store_true', default=None,
                              help='Filter attributes alongside coordinates')

        resample = subparsers.add_parser('resample', parents=[common, source, graph, budget, strategy],
                                         help='Resample a cloud')
        choice = resample.add_mutually_exclusive_group()
        choice.add_argument('--strategy', help='Registered strategy name')
        choice.add_argument('--bank', help='Filter-bank specification file')

        evaluate = subparsers.add_parser('evaluate', parents=[common, source, graph, budget, strategy],
                                         help='Compare strategies by reconstruction error')
        evaluate.add_argument('--strategies', nargs='+', help='Strategies to compare')
        evaluate.add_argument('--target', help='Strategy whose features are reconstructed')
        evaluate.add_argument('--trials', type=int, help='Monte-Carlo trials')

        contour = subparsers.add_parser('contour', parents=[common, source, graph],
                                        help='Per-point contour scores')
        contour.add_argument('--methods', nargs='+', choices=CONTOUR_METHODS, help='Score methods')
        contour.add_argument('--r-small', type=float, help='Small radius for difference of normals')
        contour.add_argument('--r-large', type=float, help='Large radius for difference of normals')
        contour.add_argument('--top-fraction', type=float, help='Fraction reported as contour')
        contour.add_argument('--include-attrs', action='store_true', default=None,
                             help='Filter attributes alongside coordinates')

        sphere = subparsers.add_parser('fit-sphere', parents=[common, source],
                                       help='Fit a sphere, or run the noisy-ball sweep')
        sphere.add_argument('--experiment', action='store_true', default=None,
                            help='Run the synthetic noisy-sphere sweep')
        sphere.add_argument('--seeds', type=int, help='Number of consecutive seeds')
        sphere.add_argument('--points', type=int, help='Points on the synthetic sphere')
        sphere.add_argument('--noise-variance', type=float, help='Per-coordinate noise variance')
        sphere.add_argument('--ratio', type=float, help='Resampling ratio')
        sphere.add_argument('--bandwidth', type=int, help='Ideal low-pass bandwidth')
        sphere.add_argument('--passes', type=int, help='Low-pass denoising passes')
        sphere.add_argument('--sigma', type=float, help='Graph kernel width')
        sphere.add_argument('--tau', type=float, help='Graph distance threshold')

        register = subparsers.add_parser('register', parents=[common],
                                         help='ICP registration of two views')
        register.add_argument('--source', help='Cloud to move')
        register.add_argument('--target', dest='target_cloud', help='Reference cloud')
        register.add_argument('--input-format', choices=FORMATS, help='Override format inference')
        register.add_argument('--synthetic', action='store_true', default=None,
                              help='Use the synthetic two-view scene with known ground truth')
        register.add_argument('--resample', help='Strategy used to reduce the source')
        register.add_argument('--compare', nargs='+', help='Further strategies for the synthetic sweep')
        register.add_argument('--ratio', type=float, help='Resampling ratio')
        register.add_argument('--seeds', type=int, help='Number of consecutive seeds')
        register.add_argument('--points', type=int, help='Points in the synthetic scene')
        register.add_argument('--overlap', type=float, help='Shared fraction between the views')
        register.add_argument('--rotation-deg', type=float, help='Applied rotation angle')
        register.add_argument('--shift', type=float, help='Applied translation length')
        register.add_argument('--max-iter', type=int, help='ICP iteration cap')
        register.add_argument('--tol', type=float, help='ICP stopping tolerance')

        shape = subparsers.add_parser('make-shape', parents=[common], help='Write a synthetic fixture')
        shape.add_argument('--shape', choices=SHAPE_KINDS, help='Fixture kind')
        shape.add_argument('--points', type=int, help='Number of points')
        shape.add_argument('--name', help='Output file stem (defaults to the shape kind)')
        shape.add_argument('--param', type=_key_value, action='append',
                           help='Shape parameter key=value (repeatable, YAML values)')

        subparsers.add_parser('list', parents=[common], help='List registered strategies')
        return parser

    def _overrides(self, args: argparse.Namespace) -> Dict[str, Any]:
        overrides = {}
        for key, value in vars(args).items():
            if key in _NOT_PARAMS or value is None:
                continue
            overrides[_RENAMED.get(key, key)] = value
        if args.command == 'make-shape' and args.param:
            overrides['shape_params'] = dict(args.param)
        return overrides

    def _configure_logging(self, level: Optional[str], log_dir: Optional[str]):
        root = logging.getLogger()
        if level:
            root.setLevel(getattr(logging, level))
        if log_dir:
            Path(log_dir).mkdir(parents=True, exist_ok=True)
            handler = logging.FileHandler(Path(log_dir) / LOG_FILE)
            handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
            root.addHandler(handler)

    def run(self, argv: Optional[List[str]] = None) -> int:
        """
        Main CLI entry point

        Returns:
            Exit code: 0 success, 1 usage error, 2 runtime error
        """
        parser = self.build_parser()
        try:
            args = parser.parse_args(argv)
            if not args.command:
                parser.print_help()
                return EXIT_USAGE
            config = build_run_config(args.command, load_yaml(args.config), self._overrides(args))
            self._configure_logging(args.log_level, config.logs)
            engine = ExecutionEngine(config)
            summary = engine.execute()
        except (UsageError, ConfigError) as e:
            logger.error(f"Usage error: {str(e)}")
            return EXIT_USAGE
        except PointCloudError as e:
            logger.error(f"Execution failed: {type(e).__name__}: {str(e)}")
            return EXIT_RUNTIME
        except Exception as e:
            logger.error(f"Execution failed: {str(e)}", exc_info=True)
            return EXIT_RUNTIME

        print_console_report(config.command, summary, engine)
        return EXIT_OK


def print_console_report(command: str, summary: Dict[str, Any], engine: ExecutionEngine):
    """Print a command summary to the console"""
    print("\n" + "=" * 60)
    print(f"GRAPH RESAMPLING: {command.upper()}")
    print("=" * 60)

    if command == 'list':
        for name, description in summary['strategies'].items():
            print(f"  {name:<16}{description}")
    elif command == 'resample':
        print(f"Input points: {summary['n_points']}")
        print(f"Draws: {summary['draws']}  Unique points: {summary['unique']}")
    elif command == 'evaluate':
        print(engine.results_processor.format_evaluation(summary))
    elif command == 'contour':
        for method, info in summary['methods'].items():
            print(f"  {method}: max {info['max']:.6g} at point {info['argmax']}, "
                  f"{len(info['top_indices'])} points in top {info['top_fraction']:.0%}")
    elif command == 'fit-sphere':
        if 'fit' in summary:
            fit = summary['fit']
            print(f"Radius: {fit['radius']:.6f}")
            print(f"Center: {', '.join(f'{x:.6f}' for x in fit['center'])}")
            print(f"RMS residual: {fit['rms_residual']:.3e}")
        else:
            print(engine.results_processor.format_sweep(summary['pipelines']))
            print(f"Median radius error reduction: {summary['radius_error_reduction']:.1%}")
    elif command == 'register':
        if 'registration' in summary:
            reg = summary['registration']
            print(f"RMSE: {reg['rmse']:.6g}  Iterations: {reg['iterations']}  "
                  f"Converged: {reg['converged']}")
        else:
            print(engine.results_processor.format_sweep(summary['strategies']))
    elif command == 'make-shape':
        print(f"{summary['shape']}: {summary['n_points']} points "
              f"({summary['contour_points']} on the contour)")

    if 'output_dir' in summary:
        print(f"\nOutputs in {summary['output_dir']}: {', '.join(summary['outputs'])}")
    print("=" * 60)
