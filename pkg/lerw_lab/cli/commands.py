"""
Command Handlers - One function per CLI command.

Each handler receives the parsed arguments, a replica runner and the result
writer, and returns a ``CommandResult``; the entry point writes the primary
output, echoes it and stamps the manifest.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from ..core.curve import Curve, SpeedFunction, dist_rho, dist_sup, hausdorff, map_T
from ..core.errors import BallOutsideDisk, PreconditionViolation, UsageError
from ..core.green import (Annulus, ConformalMap, SleParams, green_disk, green_domain,
                          origin_cell_mass_bound, radial_integral, riemann_sum)
from ..core.lattice import DomainSpec, grid_approximation, open_ball_domain
from ..core.loewner import sample_sle_trace
from ..core.measure import (OccupationMeasure, TestFamily, levy_prokhorov_bracket,
                            occupation_from_edges, rasterize, total_mass_gap)
from ..core.parallel import ReplicaRunner
from ..core.rng import RngStream
from ..core.walk import LerwSample, sample_lerw
from ..experiments.edges import estimate_domain_edge_probability, estimate_edge_probability
from ..experiments.escape import escape_factorization, estimate_es, estimate_es2, fit_es_exponent
from ..experiments.growth import (estimate_mn, estimate_mn_ratio, fit_growth_exponent,
                                  tightness_table)
from ..experiments.hitting import estimate_hit_probability
from ..experiments.markov import domain_markov_test
from ..experiments.martingale import capacity_check, martingale_check
from ..experiments.occupation import BoundScan, estimate_conditional_occupation
from ..experiments.reports import ExperimentConfig
from .output import ResultWriter
from .plots import plot_curves, plot_radial_profile

logger = logging.getLogger(__name__)


@dataclass
class CommandResult:
    """Primary output of a command: a table (CSV) or a JSON document."""

    table: Optional[pd.DataFrame] = None
    document: Any = None
    summary: Optional[str] = None


Handler = Callable[[Any, ReplicaRunner, ResultWriter], CommandResult]


def parse_point(value: Any) -> complex:
    """Accept 'x,y', [x, y] or a complex number."""
    if isinstance(value, complex):
        return value
    if isinstance(value, str):
        parts = value.split(',')
        if len(parts) != 2:
            raise ValueError(f"expected a point as 'x,y', got {value!r}")
        return complex(float(parts[0]), float(parts[1]))
    x, y = value
    return complex(float(x), float(y))


def parse_pair(value: Any) -> tuple:
    if isinstance(value, str):
        a, b = value.split(',')
        return float(a), float(b)
    a, b = value
    return float(a), float(b)


def _as_list(value: Any) -> List[Any]:
    if value is None:
        return []
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _samples(args, default: int) -> int:
    return args.samples if args.samples is not None else default


_PLUMBING_FIELDS = ('samples', 'seed', 'workers', 'speed')


def experiment_config(args, default_samples: int, **fields: Any) -> ExperimentConfig:
    """
    Validate the experiment plumbing of a command.

    Raises:
        BallOutsideDisk: If a requested ball B(z, eps) leaves the unit disk
        PreconditionViolation: If a scale or eps is out of range
        UsageError: If samples, seed or workers are out of range
    """
    try:
        return ExperimentConfig(samples=_samples(args, default_samples), seed=args.seed,
                                workers=args.workers, **fields)
    except ValidationError as e:
        err = e.errors()[0]
        # the only model-level check is the ball placement
        if not err['loc']:
            raise BallOutsideDisk(err['msg']) from e
        message = f"{args.command}: {err['loc'][0]}: {err['msg']}"
        if err['loc'][0] in _PLUMBING_FIELDS:
            raise UsageError(message) from e
        raise PreconditionViolation(message) from e


def mean_occupation(docs: Sequence[Dict[str, Any]], n: int, c_n: float) -> OccupationMeasure:
    """Average of the samples' occupation measures, mass 1/c_n per step and weight 1/len(docs) each."""
    measures = [occupation_from_edges(LerwSample.from_json(d), n, c_n) for d in docs]
    return OccupationMeasure(np.concatenate([m.starts for m in measures]),
                             np.concatenate([m.ends for m in measures]),
                             np.concatenate([m.masses for m in measures]) / len(measures))


def _load_domain(path: Path) -> DomainSpec:
    with open(path, 'r', encoding='utf-8') as f:
        return DomainSpec.model_validate(json.load(f))


def _load_measure(path: Path) -> OccupationMeasure:
    frame = pd.read_csv(path)
    missing = {'x1', 'y1', 'x2', 'y2', 'mass'} - set(frame.columns)
    if missing:
        raise UsageError(f"measure file {path} lacks columns {sorted(missing)}")
    return OccupationMeasure(frame['x1'].to_numpy() + 1j * frame['y1'].to_numpy(),
                             frame['x2'].to_numpy() + 1j * frame['y2'].to_numpy(),
                             frame['mass'].to_numpy())


def _load_curve(path: Path) -> Curve:
    return Curve.from_json(Path(path).read_text(encoding='utf-8'))


# Replica functions (module level so worker processes can import them)

def lerw_sample_document(stream: RngStream, n: int) -> Dict[str, Any]:
    return sample_lerw(n, stream).to_json()


def sle_trace_document(stream: RngStream, kappa: float, T: float, dt: float, parametrization: str,
                       uniform_start: bool, check_inverse: bool) -> Dict[str, Any]:
    trace = sample_sle_trace(kappa, T, dt, stream, parametrization=parametrization,
                             uniform_start=uniform_start, check_inverse=check_inverse)
    doc = trace.curve.to_json()
    doc.update({
        'seed': stream.seed,
        'stream_index': stream.stream_index,
        'kappa': kappa,
        'parametrization': parametrization,
        'offset': trace.offset,
        'inverse_discrepancy': trace.inverse_discrepancy,
        'flagged': trace.flagged,
    })
    return doc


# Samplers

def run_lerw_sample(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    cfg = experiment_config(args, 1, n_values=[args.n], speed=args.speed)
    docs = runner.map(lerw_sample_document, cfg.seed, cfg.samples, (args.n,))
    if args.plot:
        curves = [np.array([complex(x, y) for x, y in d['points']]) / args.n for d in docs]
        writer.add_output(plot_curves(curves, Path(args.plot), title=f"LERW to radius {args.n}"))
    mean = sum(d['M_n'] for d in docs) / len(docs)
    if args.measure_out or args.raster_out:
        c_n = mean if cfg.speed == 'empirical' else SpeedFunction.ideal(args.n).c
        mu = mean_occupation(docs, args.n, c_n)
        if args.measure_out:
            writer.write_table(mu.to_frame(), Path(args.measure_out))
        if args.raster_out:
            raster = rasterize(mu, args.cell, bounds=(-1.5, 1.5, -1.5, 1.5))
            writer.write_table(raster, Path(args.raster_out))
    return CommandResult(document=docs, summary=f"{len(docs)} LERW samples, mean M_n = {mean:.2f}")


def run_sle_sample(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    cfg = experiment_config(args, 1)
    docs = runner.map(sle_trace_document, cfg.seed, cfg.samples,
                      (args.kappa, args.T, args.dt, args.parametrization, args.uniform_start,
                       args.check_inverse))
    if args.plot:
        curves = [np.array([complex(x, y) for x, y in d['vertices']]) for d in docs]
        writer.add_output(plot_curves(curves, Path(args.plot), title=f"radial SLE({args.kappa:g})"))
    flagged = sum(bool(d['flagged']) for d in docs)
    return CommandResult(document=docs, summary=f"{len(docs)} traces, {flagged} flagged")


# Growth

def run_estimate_mn(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    cfg = experiment_config(args, 1000, n_values=args.n)
    rows = [estimate_mn(n, cfg.samples, cfg.seed, runner).to_row() for n in cfg.n_values]
    return CommandResult(table=pd.DataFrame(rows))


def run_fit_exponent(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    cfg = experiment_config(args, 1000, n_values=args.n)
    reports = [estimate_mn(n, cfg.samples, cfg.seed, runner) for n in cfg.n_values]
    fit = fit_growth_exponent(cfg.n_values, reports, seed=cfg.seed, bootstrap=args.bootstrap)
    table = pd.DataFrame([r.to_row() for r in reports])
    table['residual'] = fit.residuals
    for key, value in fit.to_row().items():
        table[key] = value
    return CommandResult(table=table,
                         summary=f"slope {fit.slope:.4f} +- {fit.half_width:.4f} (target 1.25)")


def run_mn_ratio(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    cfg = experiment_config(args, 1000, n_values=[args.n], eps=_as_list(args.eps))
    reports = estimate_mn_ratio(args.n, cfg.eps, cfg.samples, cfg.seed, runner)
    return CommandResult(table=pd.DataFrame([r.to_row() for r in reports]))


def run_tightness(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    cfg = experiment_config(args, 1000, n_values=args.n)
    return CommandResult(table=tightness_table(cfg.n_values, cfg.samples, cfg.seed, runner))


# Edge field and occupation

def run_edge_prob(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    cfg = experiment_config(args, 1000, n_values=[args.n], speed=args.speed)
    samples = cfg.samples
    if args.domain:
        spec = _load_domain(Path(args.domain))
        edge_field = estimate_domain_edge_probability(spec, args.n, samples, cfg.seed,
                                                      speed=cfg.speed, runner=runner)
    else:
        edge_field = estimate_edge_probability(args.n, samples, cfg.seed,
                                               annulus=parse_pair(args.annulus), speed=cfg.speed,
                                               bins=args.bins, bin_width=args.bin_width, runner=runner)
    writer.write_table(edge_field.edges, writer.sibling('.edges.csv'))
    if args.plot:
        title = f"n={args.n}, c_n={edge_field.c_n:.2f} ({cfg.speed})"
        writer.add_output(plot_radial_profile(edge_field.edges, edge_field.bins, Path(args.plot), title))
    table = edge_field.bins.copy()
    extra = {
        'n': args.n, 'speed': edge_field.speed, 'c_n': edge_field.c_n,
        'mean_steps': edge_field.mean_steps, 'consistency_gap': edge_field.consistency_gap,
        'count': samples, 'seed': cfg.seed,
    }
    for key, value in extra.items():
        table[key] = value
    return CommandResult(table=table)


def run_occupation(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    z = parse_point(args.z)
    cfg = experiment_config(args, 10000, n_values=[args.n], eps=_as_list(args.eps), z=[(z.real, z.imag)],
                            speed=args.speed)
    results = [estimate_conditional_occupation(z, eps, args.n, cfg.samples, cfg.seed, speed=cfg.speed,
                                               enforce_containment=not args.no_containment,
                                               min_hits=args.min_hits, runner=runner)
               for eps in cfg.eps]
    table = pd.concat([r.to_frame() for r in results], ignore_index=True)
    summary = None
    if len(results) > 1:
        spread = BoundScan(results).spread
        table['bound_spread'] = spread
        summary = f"bound quotient relative spread across eps: {spread:.3f}"
    return CommandResult(table=table, summary=summary)


# Escape and hitting

def run_es(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    cfg = experiment_config(args, 10000, n_values=[args.n], eps=_as_list(args.eps))
    samples, eps = cfg.samples, cfg.eps
    if eps and args.factorization:
        return CommandResult(table=escape_factorization(args.n, eps[0], samples, cfg.seed, runner))
    if eps:
        fit, reports = fit_es_exponent(args.n, eps, samples, cfg.seed, runner, bootstrap=args.bootstrap)
        table = pd.DataFrame([r.to_row() for r in reports])
        for key, value in fit.to_row().items():
            table[key] = value
        return CommandResult(table=table, summary=f"Es exponent {fit.slope:.3f} +- {fit.half_width:.3f}")
    if args.m is not None:
        report = estimate_es2(args.m, args.n, samples, cfg.seed, runner)
    else:
        report = estimate_es(args.n, samples, cfg.seed, runner)
    return CommandResult(table=pd.DataFrame([report.to_row()]))


def run_hit_prob(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    z = parse_point(args.z)
    cfg = experiment_config(args, 1000, n_values=args.n)
    samples = cfg.samples
    if args.model == 'sle':
        reports = [estimate_hit_probability(z, args.eps, 0, samples, cfg.seed, model='sle',
                                            kappa=args.kappa, T=args.T, dt=args.dt, runner=runner)]
    else:
        reports = [estimate_hit_probability(z, args.eps, n, samples, cfg.seed, runner=runner)
                   for n in args.n]
    return CommandResult(table=pd.DataFrame([r.to_row() for r in reports]))


# Domain Markov and Loewner checks

def run_domain_markov(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    spec = _load_domain(Path(args.domain)) if args.domain else DomainSpec(kind='square', side=args.square)
    dom = grid_approximation(spec, args.scale)
    cfg = experiment_config(args, 100000, n_values=[args.scale])
    result = domain_markov_test(dom, args.j, cfg.samples, cfg.seed,
                                comparator=args.comparator, min_prefix=args.min_prefix, runner=runner)
    writer.write_table(result.categories, writer.sibling('.categories.csv'))
    return CommandResult(table=pd.DataFrame([result.to_row()]), summary=f"p = {result.p_value:.4g}")


def run_martingale_check(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    cfg = experiment_config(args, 1000)
    samples = cfg.samples
    if args.capacity:
        dt = args.dt if args.dt is not None else 1e-4
        table = capacity_check(samples, cfg.seed, kappa=args.kappa, T=args.T, dt=dt, runner=runner)
        return CommandResult(table=table)
    dt = args.dt if args.dt is not None else 1e-3
    table = martingale_check(args.kappa, parse_point(args.z), samples, cfg.seed,
                             times=args.times, dt=dt, runner=runner)
    return CommandResult(table=table)


# Utilities

def run_green(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    params = SleParams(args.kappa)
    if args.mode == 'integrate':
        inner, outer = parse_pair(args.annulus)
        dom = open_ball_domain(args.n)
        region = Annulus(inner, outer)
        approx = riemann_sum(lambda z: green_disk(z, params), dom, region)
        exact = radial_integral(inner, outer, params)
        table = pd.DataFrame([{'kappa': args.kappa, 'n': args.n, 'inner': inner, 'outer': outer,
                               'riemann_sum': approx, 'integral': exact,
                               'origin_cell_bound': origin_cell_mass_bound(args.n, params)}])
        return CommandResult(table=table, summary=f"riemann sum {approx:.7f}, integral {exact:.7f}")
    z = parse_point(args.z)
    conformal_map = ConformalMap.scaling(args.radius) if args.radius else ConformalMap.identity()
    value = green_domain(z, conformal_map, params)
    table = pd.DataFrame([{'kappa': args.kappa, 'x': z.real, 'y': z.imag, 'value': value}])
    return CommandResult(table=table, summary=f"{value:.7f}")


def run_metrics(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    a, b = _load_curve(Path(args.curve_a)), _load_curve(Path(args.curve_b))
    _, mu = map_T(a, args.resolution)
    _, nu = map_T(b, args.resolution)
    bracket = levy_prokhorov_bracket(mu, nu, TestFamily(args.level))
    row = {
        'dist_sup': dist_sup(a, b),
        'dist_rho': dist_rho(a, b, refine=True),
        'hausdorff': hausdorff(a, b),
        'lp_lower': bracket.lower,
        'lp_upper': bracket.upper,
        'lp_resolution': bracket.resolution,
        'lifetime_gap': abs(a.lifetime - b.lifetime),
    }
    return CommandResult(table=pd.DataFrame([row]))


def run_lp_distance(args, runner: ReplicaRunner, writer: ResultWriter) -> CommandResult:
    mu, nu = _load_measure(Path(args.measure_a)), _load_measure(Path(args.measure_b))
    bracket = levy_prokhorov_bracket(mu, nu, TestFamily(args.level))
    row = {'lower': bracket.lower, 'upper': bracket.upper, 'resolution': bracket.resolution,
           'total_mass_gap': total_mass_gap(mu, nu)}
    return CommandResult(table=pd.DataFrame([row]))


HANDLERS: Dict[str, Handler] = {
    'lerw-sample': run_lerw_sample,
    'sle-sample': run_sle_sample,
    'estimate-mn': run_estimate_mn,
    'fit-exponent': run_fit_exponent,
    'mn-ratio': run_mn_ratio,
    'tightness': run_tightness,
    'edge-prob': run_edge_prob,
    'occupation': run_occupation,
    'es': run_es,
    'hit-prob': run_hit_prob,
    'domain-markov': run_domain_markov,
    'martingale-check': run_martingale_check,
    'green': run_green,
    'metrics': run_metrics,
    'lp-distance': run_lp_distance,
}

JSON_COMMANDS: Sequence[str] = ('lerw-sample', 'sle-sample')
