"""
Execution Engine
Merges configuration layers and runs the resampling pipelines
"""

import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from pointcloud.apps import (
    REGISTRATION_STRATEGIES,
    fit_sphere,
    icp_register,
    registration_experiment,
    resample_for_registration,
    sphere_experiment,
)
from pointcloud.core import apply_transform
from pointcloud.features import don_scores, local_variation, pairwise_variation, top_fraction_mask
from pointcloud.filterbank import merge_draws, passthrough_synthesis, run_bank
from pointcloud.io import FORMATS, load_cloud
from pointcloud.resampling import (
    dist_invariant,
    mse_closed_form,
    sample,
    unbiasedness_check,
)
from pointcloud.shapes import SHAPE_KINDS, make_shape, shape_contour
from strategies.base_strategy import StrategyContext

from .bank_loader import BankLoader
from .report_generator import ReportGenerator
from .results_processor import ResultsProcessor
from .strategy_registry import StrategyRegistry

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = Path(__file__).parent.parent / 'config' / 'execution_config.yaml'

COMMANDS = ('resample', 'evaluate', 'contour', 'fit-sphere', 'register', 'make-shape', 'list')
CONTOUR_METHODS = ('highpass', 'pairwise', 'don')

# YAML key -> RunConfig field, per section
_SECTIONS = {
    'graph': {
        'sigma': 'sigma', 'tau': 'tau', 'k_neighbors': 'k_neighbors',
        'sigma_subsample': 'sigma_subsample', 'tau_factor': 'tau_factor',
        'isolated_policy': 'isolated_policy',
    },
    'resampling': {
        'strategy': 'strategy', 'ratio': 'ratio', 'samples': 'samples', 'seed': 'seed',
        'beta': 'beta', 'c': 'c', 'exponent': 'exponent', 'bandwidth': 'bandwidth',
        'include_attrs': 'include_attrs',
    },
    'evaluation': {
        'trials': 'trials', 'samples': 'samples', 'ratio': 'ratio',
        'strategies': 'strategies', 'target': 'target',
    },
    'contour': {
        'methods': 'methods', 'r_small': 'r_small', 'r_large': 'r_large',
        'top_fraction': 'top_fraction',
    },
    'sphere': {
        'noise_variance': 'noise_variance', 'ratio': 'ratio', 'bandwidth': 'bandwidth',
        'passes': 'passes', 'seeds': 'seeds', 'points': 'points',
    },
    'registration': {
        'ratio': 'ratio', 'resample': 'resample', 'compare': 'compare',
        'rotation_deg': 'rotation_deg', 'shift': 'shift', 'max_iter': 'max_iter',
        'tol': 'tol', 'seeds': 'seeds', 'overlap': 'overlap', 'points': 'points',
    },
    'paths': {'reports': 'output', 'logs': 'logs'},
    'runtime': {'threads': 'threads'},
}

# Sections read by each command, lowest precedence first
_COMMAND_SECTIONS = {
    'resample': ['graph', 'resampling'],
    'evaluate': ['graph', 'resampling', 'evaluation'],
    'contour': ['graph', 'resampling', 'contour'],
    'fit-sphere': ['resampling', 'sphere'],
    'register': ['graph', 'resampling', 'registration'],
    'make-shape': ['resampling'],
    'list': [],
}

_PAIRED = (('samples', 'ratio'), ('strategy', 'bank'))


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (a usage error)"""
    pass


@dataclass
class RunConfig:
    """Merged, validated parameters of one command"""
    command: str
    input: Optional[str] = None
    input_format: Optional[str] = None
    output: str = 'reports'
    output_format: Optional[str] = None
    logs: Optional[str] = None

    # graph
    sigma: Optional[float] = None
    tau: Optional[float] = None
    k_neighbors: int = 10
    sigma_subsample: int = 1000
    tau_factor: float = 2.0
    isolated_policy: str = 'self-loop'
    dump_graph: bool = False

    # resampling
    strategy: Optional[str] = None
    bank: Optional[str] = None
    samples: Optional[int] = None
    ratio: Optional[float] = None
    seed: int = 0
    beta: float = 0.0
    c: Optional[float] = None
    exponent: int = 2
    bandwidth: int = 50
    include_attrs: bool = False

    # evaluation
    trials: int = 10000
    strategies: List[str] = field(default_factory=lambda: ['uniform', 'allpass', 'highpass', 'pairwise'])
    target: str = 'highpass'

    # contour
    methods: List[str] = field(default_factory=lambda: ['highpass', 'pairwise'])
    r_small: Optional[float] = None
    r_large: Optional[float] = None
    top_fraction: float = 0.1

    # experiments and fixtures
    experiment: bool = False
    seeds: int = 1
    points: Optional[int] = None
    noise_variance: float = 0.02
    passes: int = 1
    shape: Optional[str] = None
    shape_params: Dict[str, Any] = field(default_factory=dict)
    name: Optional[str] = None

    # registration
    source: Optional[str] = None
    target_cloud: Optional[str] = None
    resample: str = 'highpass'
    compare: List[str] = field(default_factory=list)
    rotation_deg: float = 5.0
    shift: float = 0.1
    max_iter: int = 100
    tol: float = 1e-10
    overlap: float = 0.4

    # runtime
    threads: Optional[int] = None

    def validate(self) -> 'RunConfig':
        """Check cross-field invariants; raises ConfigError"""
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command '{self.command}'")
        if self.samples is not None and self.ratio is not None:
            raise ConfigError("give either samples or ratio, not both")
        if self.samples is not None and self.samples < 1:
            raise ConfigError(f"samples must be positive, got {self.samples}")
        if self.ratio is not None and not 0.0 < self.ratio <= 1.0:
            raise ConfigError(f"ratio must lie in (0, 1], got {self.ratio}")

        for fmt in (self.input_format, self.output_format):
            if fmt is not None and fmt not in FORMATS:
                raise ConfigError(f"unknown format '{fmt}' (expected one of {FORMATS})")

        if self.command == 'resample':
            if (self.strategy is None) == (self.bank is None):
                raise ConfigError("resample needs exactly one of --strategy or --bank")
        if self.command in ('resample', 'evaluate'):
            if self.samples is None and self.ratio is None:
                raise ConfigError(f"{self.command} needs --samples or --ratio")
        if self.command in ('resample', 'evaluate', 'contour') and not self.input:
            raise ConfigError(f"{self.command} needs --input")
        if self.command == 'fit-sphere' and not (self.input or self.experiment):
            raise ConfigError("fit-sphere needs --input or --experiment")
        if self.command == 'register':
            if not (self.source or self.experiment):
                raise ConfigError("register needs --source/--target or --synthetic")
            if self.source and not (self.target_cloud or self.input):
                raise ConfigError("register needs a --target cloud")
            for name in [self.resample] + list(self.compare):
                if name not in REGISTRATION_STRATEGIES:
                    raise ConfigError(f"unknown registration strategy '{name}' "
                                      f"(expected one of {REGISTRATION_STRATEGIES})")
            if self.ratio is None:
                raise ConfigError("register needs --ratio")
        if self.command == 'contour':
            unknown = [m for m in self.methods if m not in CONTOUR_METHODS]
            if unknown:
                raise ConfigError(f"unknown contour methods {unknown} (expected {CONTOUR_METHODS})")
            if 'don' in self.methods and (self.r_small is None or self.r_large is None):
                raise ConfigError("difference-of-normals scores need --r-small and --r-large")
        if self.command == 'make-shape':
            if self.shape not in SHAPE_KINDS:
                raise ConfigError(f"unknown shape '{self.shape}' (expected one of {SHAPE_KINDS})")
            if not self.points:
                raise ConfigError("make-shape needs --points")
        if self.seeds < 1:
            raise ConfigError(f"seeds must be positive, got {self.seeds}")
        if self.threads is not None and self.threads < -1:
            raise ConfigError(f"threads must be -1 (all cores) or nonnegative, got {self.threads}")
        return self

    def sample_count(self, n_points: int) -> int:
        return self.samples if self.samples is not None else math.ceil(self.ratio * n_points)

    def settings(self) -> Dict[str, Any]:
        """Graph and strategy settings handed to StrategyContext"""
        return {
            'sigma': self.sigma, 'tau': self.tau, 'k_neighbors': self.k_neighbors,
            'sigma_subsample': self.sigma_subsample, 'tau_factor': self.tau_factor,
            'isolated_policy': self.isolated_policy, 'c': self.c, 'beta': self.beta,
            'exponent': self.exponent, 'bandwidth': self.bandwidth,
            'include_attrs': self.include_attrs, 'workers': self.threads,
        }

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def load_yaml(config_file: Optional[str]) -> Dict[str, Any]:
    """Read a YAML config; a missing default file yields an empty config"""
    path = Path(config_file) if config_file else DEFAULT_CONFIG
    if not path.exists():
        if config_file:
            raise ConfigError(f"config file not found: {config_file}")
        return {}
    with open(path, 'r') as f:
        config = yaml.safe_load(f) or {}
    if not isinstance(config, dict):
        raise ConfigError(f"{path} must contain a mapping at top level")
    return config


def build_run_config(command: str, yaml_config: Dict[str, Any],
                     overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Merge defaults, YAML sections and CLI overrides (highest precedence)

    samples and ratio are one budget and strategy and bank one selection: a
    layer that sets either member of a pair replaces both.

    Args:
        command: Subcommand name
        yaml_config: Parsed YAML document
        overrides: CLI values; None entries are ignored

    Returns:
        Validated RunConfig
    """
    known = {f.name for f in fields(RunConfig)}
    values: Dict[str, Any] = {}

    def apply(layer: Dict[str, Any]):
        layer = {k: v for k, v in layer.items() if v is not None}
        for pair in _PAIRED:
            if any(key in layer for key in pair):
                for key in pair:
                    values[key] = layer.get(key)
        for key, value in layer.items():
            values[key] = value

    for section in ['paths', 'runtime'] + _COMMAND_SECTIONS.get(command, []):
        raw = yaml_config.get(section) or {}
        mapping = _SECTIONS[section]
        unknown = set(raw) - set(mapping)
        if unknown:
            logger.warning(f"Ignoring unknown keys in config section '{section}': {sorted(unknown)}")
        apply({mapping[k]: v for k, v in raw.items() if k in mapping})

    if overrides:
        bad = set(overrides) - known
        if bad:
            raise ConfigError(f"unknown parameters: {sorted(bad)}")
        apply(overrides)

    values['command'] = command
    try:
        config = RunConfig(**values)
    except TypeError as e:
        raise ConfigError(str(e)) from None
    return config.validate()


class ExecutionEngine:
    """Runs one command of the resampling framework"""

    def __init__(self, config: RunConfig, registry: Optional[StrategyRegistry] = None):
        """
        Initialize execution engine

        Args:
            config: Merged run configuration
            registry: Strategy registry (discovered on first use when None)
        """
        self.config = config
        self.registry = registry or StrategyRegistry()
        self.results_processor = ResultsProcessor()

    @classmethod
    def from_files(cls, command: str, config_file: Optional[str] = None,
                   overrides: Optional[Dict[str, Any]] = None) -> 'ExecutionEngine':
        return cls(build_run_config(command, load_yaml(config_file), overrides))

    def execute(self) -> Dict[str, Any]:
        """
        Run the configured command

        Returns:
            Command summary (also written to the output directory)
        """
        handlers = {
            'resample': self.resample,
            'evaluate': self.evaluate,
            'contour': self.contour,
            'fit-sphere': self.fit_sphere,
            'register': self.register,
            'make-shape': self.make_shape,
            'list': self.list_strategies,
        }
        command = self.config.command
        self._check_strategy_names()
        logger.info(f"Executing command: {command}")
        start = time.perf_counter()
        summary = handlers[command]()
        logger.info(f"Command {command} finished in {time.perf_counter() - start:.2f}s")
        return summary

    # ------------------------------------------------------------------ helpers

    def _check_strategy_names(self):
        cfg = self.config
        if cfg.command == 'resample' and cfg.strategy:
            names = [cfg.strategy]
        elif cfg.command == 'evaluate':
            names = list(cfg.strategies) + [cfg.target]
        else:
            return
        if not self.registry.strategies:
            self.registry.discover()
        unknown = [n for n in names if n not in self.registry.strategies]
        if unknown:
            raise ConfigError(f"unknown strategies {unknown} "
                              f"(available: {', '.join(self.registry.list_strategies())})")

    def _load_input(self):
        return load_cloud(self.config.input, self.config.input_format)

    def _cloud_name(self, stem: str) -> str:
        ext = '.ply' if self.config.output_format == 'ascii-ply' else '.csv'
        return f"{stem}{ext}"

    def _context(self, cloud) -> StrategyContext:
        return StrategyContext(cloud, settings=self.config.settings())

    def _finish(self, report: ReportGenerator, summary: Dict[str, Any],
                inputs: List[Optional[str]]) -> Dict[str, Any]:
        report.write_manifest(self.config.command, self.config.to_dict(), self.config.seed,
                              [p for p in inputs if p])
        summary['output_dir'] = str(report.output_dir)
        summary['outputs'] = sorted(report.outputs)
        return summary

    # ----------------------------------------------------------------- commands

    def list_strategies(self) -> Dict[str, Any]:
        if not self.registry.strategies:
            self.registry.discover()
        return {
            'strategies': {
                name: self.registry.strategies[name].description
                for name in self.registry.list_strategies()
            }
        }

    def resample(self) -> Dict[str, Any]:
        """Resample one cloud with a strategy or a filter bank"""
        cfg = self.config
        cloud = self._load_input()
        report = ReportGenerator(cfg.output)
        context = self._context(cloud)

        if cfg.bank:
            specs = BankLoader(cfg.bank).load()
            bank = run_bank(cloud, context.get_graph(), specs, cfg.seed, cfg.c, cfg.isolated_policy)
            output = passthrough_synthesis(bank, cloud)
            for k, subband in enumerate(bank.subbands):
                report.write_distribution(subband.distribution, f"distribution_{k}.csv")
                report.write_draws(subband.result, f"draws_{k}.csv")
            report.write_table(
                ({'slot': s, 'index': i, 'weight': w, 'subband': t}
                 for s, (i, w, t) in enumerate(zip(bank.indices, bank.weights, bank.tags))),
                ['slot', 'index', 'weight', 'subband'], 'draws.csv'
            )
            summary = {'bank': bank.to_dict()}
            draws = bank.count
        else:
            strategy = self.registry.get_strategy(cfg.strategy, cfg.settings())
            dist = strategy.distribution(context)
            result = sample(dist, cfg.sample_count(cloud.n_points), cfg.seed)
            output = merge_draws(cloud, result.indices, result.weights)
            report.write_distribution(dist, 'distribution.csv')
            report.write_draws(result, 'draws.csv')
            summary = {'distribution': dist.to_dict(), 'result': result.to_dict()}
            draws = result.M

        if cfg.dump_graph:
            report.write_edges(context.get_graph())
        report.write_cloud(output, self._cloud_name('resampled'), cfg.output_format)

        summary.update({'n_points': cloud.n_points, 'draws': draws, 'unique': output.n_points})
        logger.info(f"Resampled {cloud.n_points} points to {draws} draws ({output.n_points} unique)")
        return self._finish(report, summary, [cfg.input, cfg.bank])

    def evaluate(self) -> Dict[str, Any]:
        """
        Compare strategies on the features of a target strategy

        Every strategy's distribution is scored on the same feature rows: the
        closed-form expected error, the Monte-Carlo error and the relative
        bias of the rescaled reconstruction. An 'optimal' row uses the
        feature-norm distribution, which minimizes the closed form.
        """
        cfg = self.config
        cloud = self._load_input()
        report = ReportGenerator(cfg.output)
        context = self._context(cloud)

        features = self.registry.get_strategy(cfg.target, cfg.settings()).features(context)
        M = cfg.sample_count(cloud.n_points)

        candidates = [(name, self.registry.get_strategy(name, cfg.settings()).distribution(context))
                      for name in cfg.strategies]
        candidates.append(('optimal', dist_invariant(features, cfg.beta)))

        rows = []
        for name, dist in candidates:
            closed = mse_closed_form(features, dist, samples=M)
            if math.isfinite(closed):
                check = unbiasedness_check(features, dist, M, cfg.trials, cfg.seed)
                empirical, bias = check.mean_error, check.relative_bias
                ratio = empirical / closed if closed > 0 else 1.0
            else:
                empirical, bias, ratio = math.inf, math.nan, math.nan
            rows.append({'strategy': name, 'closed_form_mse': closed, 'empirical_mse': empirical,
                         'mse_ratio': ratio, 'relative_bias': bias})
            logger.info(f"Evaluated {name}: closed-form {closed:.6g}, empirical {empirical:.6g}")

        processed = self.results_processor.process(rows)
        report.write_table(rows, ['strategy', 'closed_form_mse', 'empirical_mse', 'mse_ratio',
                                  'relative_bias'], 'evaluation.csv')
        report.write_json({'statistics': processed['statistics'], 'samples': M,
                           'trials': cfg.trials, 'target': cfg.target}, 'evaluation.json')
        return self._finish(report, processed, [cfg.input])

    def contour(self) -> Dict[str, Any]:
        """Per-point contour scores for each requested method"""
        cfg = self.config
        cloud = self._load_input()
        report = ReportGenerator(cfg.output)
        context = self._context(cloud)

        summary: Dict[str, Any] = {'methods': {}}
        for method in cfg.methods:
            if method == 'highpass':
                scores = local_variation(context.shift('transition'), cloud, cfg.include_attrs).values
            elif method == 'pairwise':
                scores = pairwise_variation(context.get_graph(), cloud).values
            else:
                scores = don_scores(cloud, cfg.r_small, cfg.r_large, workers=cfg.threads)
            scores = np.asarray(scores, dtype=float)
            report.write_scores(scores, f"scores_{method}.csv")
            top = np.flatnonzero(top_fraction_mask(scores, cfg.top_fraction))
            summary['methods'][method] = {
                'min': float(scores.min()),
                'max': float(scores.max()),
                'argmax': int(np.argmax(scores)),
                'top_fraction': cfg.top_fraction,
                'top_indices': top.tolist(),
            }
            logger.info(f"Contour scores ({method}): max {scores.max():.6g} at point {int(np.argmax(scores))}")

        if cfg.dump_graph:
            report.write_edges(context.get_graph())
        report.write_json(summary, 'contour.json')
        return self._finish(report, summary, [cfg.input])

    def fit_sphere(self) -> Dict[str, Any]:
        """Fit a sphere to a cloud, or run the noisy-ball sweep"""
        cfg = self.config
        report = ReportGenerator(cfg.output)

        if not cfg.experiment:
            fit = fit_sphere(self._load_input())
            summary = {'fit': fit.to_dict()}
            report.write_json(summary, 'sphere_fit.json')
            return self._finish(report, summary, [cfg.input])

        rows = []
        for offset in range(cfg.seeds):
            seed = cfg.seed + offset
            result = sphere_experiment(
                seed, n_points=cfg.points or 1200, noise_variance=cfg.noise_variance,
                ratio=cfg.ratio if cfg.ratio is not None else 0.1,
                bandwidth=cfg.bandwidth, passes=cfg.passes, sigma=cfg.sigma, tau=cfg.tau,
                workers=cfg.threads
            )
            for pipeline, errors in (('uniform', result.uniform_errors), ('lowpass', result.lowpass_errors)):
                rows.append(dict({'seed': seed, 'pipeline': pipeline}, **errors))

        metrics = [k for k in rows[0] if k not in ('seed', 'pipeline')]
        report.write_table(rows, ['seed', 'pipeline'] + metrics, 'sphere_experiment.csv')
        summary = {'pipelines': self.results_processor.summarize_sweep(rows, metrics, 'pipeline')}
        uniform_median = summary['pipelines']['uniform']['radius_median']
        lowpass_median = summary['pipelines']['lowpass']['radius_median']
        summary['radius_error_reduction'] = (
            1.0 - lowpass_median / uniform_median if uniform_median > 0 else 0.0
        )
        report.write_json(summary, 'sphere_summary.json')
        return self._finish(report, summary, [])

    def register(self) -> Dict[str, Any]:
        """ICP registration of two clouds, or the synthetic two-view sweep"""
        cfg = self.config
        report = ReportGenerator(cfg.output)

        if not cfg.experiment:
            source = load_cloud(cfg.source, cfg.input_format)
            target_path = cfg.target_cloud or cfg.input
            target = load_cloud(target_path, cfg.input_format)
            reduced = resample_for_registration(source, cfg.resample, cfg.ratio, cfg.seed, cfg.threads)
            result = icp_register(reduced, target, max_iter=cfg.max_iter, tol=cfg.tol,
                                  workers=cfg.threads)
            report.write_cloud(apply_transform(source, result.recovered),
                               self._cloud_name('registered'), cfg.output_format)
            summary = {'registration': result.to_dict(), 'strategy': cfg.resample,
                       'source_points': reduced.n_points}
            report.write_json(summary, 'registration.json')
            return self._finish(report, summary, [cfg.source, target_path])

        strategies = list(dict.fromkeys([cfg.resample] + list(cfg.compare)))
        rows = []
        for offset in range(cfg.seeds):
            seed = cfg.seed + offset
            for strategy in strategies:
                result = registration_experiment(
                    seed, strategy, ratio=cfg.ratio, n_points=cfg.points or 4000,
                    overlap=cfg.overlap, rotation_deg=cfg.rotation_deg, shift=cfg.shift,
                    max_iter=cfg.max_iter, tol=cfg.tol, workers=cfg.threads
                )
                rows.append({'seed': seed, 'strategy': strategy, 'rmse': result.rmse,
                             'shift_error': result.shift_error,
                             'rotation_error': result.rotation_error,
                             'iterations': result.iterations, 'converged': result.converged})
                if not result.converged:
                    logger.warning(f"ICP did not converge for seed {seed} ({strategy})")

        metrics = ['rmse', 'shift_error', 'rotation_error']
        report.write_table(rows, ['seed', 'strategy'] + metrics + ['iterations', 'converged'],
                           'registration.csv')
        summary = {'strategies': self.results_processor.summarize_sweep(rows, metrics)}
        report.write_json(summary, 'registration.json')
        return self._finish(report, summary, [])

    def make_shape(self) -> Dict[str, Any]:
        """Write a synthetic fixture and its analytic contour mask"""
        cfg = self.config
        report = ReportGenerator(cfg.output)
        params = dict(cfg.shape_params)
        params.setdefault('seed', cfg.seed)

        cloud = make_shape(cfg.shape, cfg.points, params)
        name = self._cloud_name(cfg.name or cfg.shape)
        report.write_cloud(cloud, name, cfg.output_format)
        mask = shape_contour(cfg.shape, cfg.points, params)
        if mask.any():
            report.write_scores(mask.astype(int), 'contour_mask.csv', column='contour')
        summary = {'shape': cfg.shape, 'n_points': cloud.n_points, 'cloud': name,
                   'contour_points': int(mask.sum())}
        return self._finish(report, summary, [])
