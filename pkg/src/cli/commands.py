"""
The command registry: one function per job command, each returning the
artifacts it produces. run() executes a JobConfig and writes them.
"""
import logging
import math
from dataclasses import dataclass, field
from multiprocessing.pool import Pool
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from .. import precision
from ..errors import PrecisionExhausted, PreconditionError, SolverFailure, ToolkitError
from ..families import MapFamily, ParamPoint, check_strong_tangency_eigen, theta_window
from ..manifolds import PLUS, Accuracy, fold_points, grow_stable, grow_unstable, HORIZONTAL, VERTICAL
from ..newhouse import (
    Scanner,
    build_boxes,
    default_generations,
    nh_sample,
    return_time,
    reverify,
    sink_window_scan,
    strong_sink_curve,
)
from ..orbits import find_periodic
from ..diagnostics import (
    adding_machine_test,
    embedded_1d,
    fit_quadratic,
    lyapunov,
    quadratic,
    renorm_return_map,
    superstable_cascade,
)
from ..orbits import PhaseBox
from ..tangency import (
    FoldSelector,
    LeafSelector,
    TangencyCurve,
    TangencyProblem,
    UnfoldingOptions,
    continue_double_tangency,
    continue_tangency,
    double_tangency,
    find_bracket,
    primary_curve,
    solve_tangency,
    unfolding_conditions,
)
from ..utils import col, resolve_out_dir, write_csv, write_json
from .config import JobConfig, Option, Schema
from .svg import plot

logger = logging.getLogger(__name__)

NUMERIC_ERRORS: tuple[type[Exception], ...] = (np.linalg.LinAlgError, ArithmeticError)

UNITS: dict[str, str] = {
    'a': 'param', 'b': 'param', 'tau': 'param', 't': 'param',
    'a_lo': 'param', 'a_hi': 'param', 't_lo': 'param', 't_hi': 'param',
    'center': 'param', 'width': 'param', 'sa_n': 'param', 'a_k': 'param',
    'x0': 'phase', 'x1': 'phase', 'x2': 'phase', 'arclen': 'phase',
    'x_in': 'phase', 'x_out': 'phase',
    'gap': 'phase', 'gapQ': '1/phase', 'curvature': '1/phase',
    'n': 'count', 'k': 'count', 'period': 'count', 'step': 'count',
    'index': 'count', 'depth': 'count', 'generation': 'count', 'sinks': 'count',
    'log_growth': 'log', 'bound': 'log',
}


def _label(name: str, units: dict[str, str]) -> str:
    return col(name, units.get(name, UNITS.get(name, '1')))


@dataclass
class Result:
    tables: dict[str, tuple[list[dict], list[str], dict[str, str]]] = field(default_factory=dict)
    documents: dict[str, dict] = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)
    # set when part of the result hit the precision floor; artifacts are still written
    exhausted: Optional[str] = None

    def table(
        self,
        name: str,
        rows: list[dict],
        columns: list[str],
        units: Optional[dict[str, str]] = None,
    ) -> None:
        self.tables[name] = (rows, columns, units or {})

    def write(self, out: Path, config: JobConfig) -> list[Path]:
        written: list[Path] = []
        for name, (rows, columns, units) in sorted(self.tables.items()):
            labelled = [{_label(k, units): v for k, v in row.items()} for row in rows]
            written.append(write_csv(out / f"{name}.csv", labelled, [_label(c, units) for c in columns]))
        for name, payload in sorted(self.documents.items()):
            written.append(write_json(out / f"{name}.json", payload, config.as_dict()))
        return written


@dataclass(frozen=True)
class Command:
    func: Callable[[JobConfig, MapFamily, Scanner], Result]
    schema: Schema
    help: str = ''


# Shared option groups

SEED: Schema = {
    'seed_point': Option('floats', (-2.0, -2.0), 'Newton seed of the saddle'),
    'period': Option('int', 1),
    'tol': Option('float', 1e-10),
}

UNFOLDING: Schema = {
    'fold_index': Option('int', 1, '0 outer fold, 1 inner fold'),
    'arc_budget': Option('float', 15.5),
    'footprint': Option('float', 0.5),
    'guess': Option('float', 2.0, 'starting value of the free parameter'),
    'step': Option('float', 1e-3, 'initial bracket half-width'),
    'tol': Option('float', 1e-10),
}

WINDOWS: Schema = {
    **UNFOLDING,
    'n_range': Option('ints', (6, 10)),
    'N': Option('int', 0, 'return time; 0 computes it'),
    'capture': Option('float', 0.05),
}

BOXES: Schema = {
    **WINDOWS,
    'n_range': Option('ints', (4, 6)),
    'generations': Option('int', 0, '0 picks 2 (double) or 3 (extended)'),
    'budget': Option('int', 3),
    'm_range': Option('ints', (2, 6)),
    'spread': Option('float', 1e-3),
    't_samples': Option('int', 5),
}


def _unfolding_options(config: JobConfig) -> UnfoldingOptions:
    return UnfoldingOptions(
        fold_index = config['fold_index'],
        budget = config['arc_budget'],
        footprint = config['footprint'],
    )


def _primary(fam: MapFamily, p: ParamPoint, config: JobConfig, options: UnfoldingOptions):
    problem = TangencyProblem(fam, p, options.free, FoldSelector(options), LeafSelector(options))
    bracket = find_bracket(problem.gap_at, config['guess'], config['step'])
    return solve_tangency(
        fam, p, options.free, bracket,
        fold_selector = FoldSelector(options),
        leaf_selector = LeafSelector(options),
        tol = config['tol'],
    )


def _n_range(config: JobConfig, key: str = 'n_range') -> Optional[tuple[int, int]]:
    values = config[key]
    if len(values) == 0:
        return None
    if len(values) != 2:
        raise PreconditionError(f"{key} needs two integers, got {values}!")
    lo, hi = values
    return (lo, hi) if hi >= lo else None


def _return_time(fam: MapFamily, p: ParamPoint, record, config: JobConfig, options: UnfoldingOptions) -> int:
    if config['N'] > 0:
        return config['N']
    return return_time(fam, p, record, capture=config['capture'], leg=options.leg, saddle_seed=options.saddle_seed)


WINDOW_COLUMNS: list[str] = ['n', 't', 'a_lo', 'a_hi', 'center', 'width', 'sa_n', 'mu', 'lambda1']


# Commands

def family_info(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    p = fam.params()
    result = Result()
    info: dict[str, Any] = {
        'name': fam.name,
        'dim': fam.dim,
        'params': p.as_dict(),
        'jacobian_error': fam.check_jacobian(p, samples=config['samples'], seed=config.seed),
        'invertible': fam.is_invertible(p),
    }
    if fam.is_invertible(p):
        info['inverse_error'] = fam.check_inverse(p, samples=config['samples'], seed=config.seed)
    result.summary.append(f"jacobian error: {info['jacobian_error']:.3e}")

    if len(config['seed_point']) == fam.dim:
        try:
            saddle = find_periodic(fam, p, config['period'], config['seed_point'])
            info['orbit'] = saddle.record()
            report = check_strong_tangency_eigen(saddle.multipliers, order=config['order'])
            info['strong_tangency_eigen'] = report._asdict()
            lam, mu = abs(saddle.multipliers.lam1), abs(saddle.multipliers.mu)
            if 0 < lam < 1 < mu:
                window = theta_window(lam, lam, mu, mu, strict=False)
                info['theta_window'] = {'theta0': window.theta0, 'theta1': window.theta1, 'valid': window.valid}
            result.summary.append(f"orbit class: {saddle.stability}")
            result.summary.append(f"strong tangency conditions: {report.ok}")
        except ToolkitError as e:
            info['orbit_error'] = str(e)
            result.summary.append(f"no orbit at seed: {e}")
    result.documents['family_info'] = info
    return result


def orbit(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    p = fam.params()
    found = find_periodic(fam, p, config['period'], config['seed_point'], tol=config['tol'])
    row: dict = {'period': found.period}
    point = precision.to_float(found.point)
    for j in range(fam.dim):
        row[f"x{j}"] = float(point[j])
    for j, m in enumerate(found.multipliers.multipliers):
        row[f"mult{j}_re"] = float(m.real)
        row[f"mult{j}_im"] = float(m.imag)
    row.update({'trace': float(found.trace), 'residual': float(found.residual), 'class': found.stability})

    result = Result()
    result.table('orbit', [row], list(row))
    result.documents['orbit'] = found.record()
    result.summary.append(f"point: {', '.join(f'{v:.12g}' for v in point)}")
    result.summary.append(f"multipliers: {', '.join(f'{abs(m):.12g}' for m in found.multipliers.multipliers)}")
    result.summary.append(f"class: {found.stability}")
    return result


def manifold(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    p = fam.params()
    saddle = find_periodic(fam, p, config['period'], config['seed_point'], tol=config['tol'])
    acc = Accuracy(config['h_max'], math.radians(config['phi_max']))
    grow = grow_stable if config['stable'] else grow_unstable
    arc = grow(fam, p, saddle, config['budget'], acc=acc, leg=config['leg'])

    result = Result()
    rows = arc.rows()
    result.table('manifold', rows, list(rows[0]) if rows else ['index'])
    folds = [f for axis in (VERTICAL, HORIZONTAL) for f in fold_points(arc, axis, skip_degenerate=True)] if fam.dim == 2 and len(arc) >= 3 else []
    fold_rows = [
        {'index': f.index, 'x0': float(f.position[0]), 'x1': float(f.position[1]), 'arclen': f.arclength, 'q': f.q, 'axis': f.axis}
        for f in folds
    ]
    result.table('folds', fold_rows, ['index', 'x0', 'x1', 'arclen', 'q', 'axis'])
    result.summary.append(f"arc points: {len(arc)}")
    result.summary.append(f"arclength: {float(arc.arclength[-1]):.6g}")
    result.summary.append(f"folds: {len(folds)}")
    if arc.unresolved:
        result.summary.append(f"unresolved segments: {arc.unresolved}")
        result.exhausted = f"{arc.unresolved} arc intervals cannot be resolved in {precision.get_precision()} precision"
    return result


def tangency_find(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    p = fam.params()
    options = _unfolding_options(config)
    record = _primary(fam, p, config, options)
    report = unfolding_conditions(fam, record, options)

    result = Result()
    result.documents['tangency'] = {**record.record(), 'unfolding': report._asdict(), 'unfolding_ok': report.ok}
    result.summary.append(f"tangency at {record.param}")
    result.summary.append(f"gap: {record.gap:.3e}, gapQ: {record.gapQ:.6g}")
    result.summary.append(f"unfolding conditions: {report.ok}")
    return result


def tangency_continue(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    p = fam.params()
    options = _unfolding_options(config)
    start = _primary(fam, p, config, options)
    bounds = config['bounds']
    curve = continue_tangency(
        fam, start, (options.free, options.transversal),
        steps = config['steps'],
        max_step = config['max_step'],
        direction = config['direction'],
        bounds = bounds if bounds else None,
        tol = config['tol'],
    )

    result = Result()
    rows = curve.rows()
    result.table('tangency_curve', rows, ['step', options.free, options.transversal, 'gap', 'gapQ', 'slope'])
    document: dict = {
        'records': [r.record() for r in curve.records],
        'failures': curve.failures,
        'truncated': curve.truncated,
    }
    if len(curve) >= 2:
        values, ts = curve.values(options.free), curve.values(options.transversal)
        order = np.argsort(np.abs(ts))
        (t0, a0), (t1, a1) = (ts[order[0]], values[order[0]]), (ts[order[1]], values[order[1]])
        if t1 != t0:
            document['extrapolated_at_zero'] = float(a0 - t0 * (a1 - a0) / (t1 - t0))
            result.summary.append(f"extrapolated {options.free} at {options.transversal}=0: {document['extrapolated_at_zero']:.8g}")
    result.documents['tangency_curve'] = document
    result.summary.append(f"records: {len(curve)} (failures {curve.failures}, truncated {curve.truncated})")
    return result


def windows(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    result = Result()
    n_range = _n_range(config)
    if n_range is None:
        result.table('windows', [], WINDOW_COLUMNS)
        result.summary.append("windows: 0")
        return result

    p = fam.params()
    options = _unfolding_options(config)
    record = _primary(fam, p, config, options)
    N = _return_time(fam, p, record, config, options)
    curve = TangencyCurve(names=(options.free, options.transversal), records=[record])
    t = float(record.param[options.transversal])
    found = sink_window_scan(fam, curve, t, n_range, N, options=options, scanner=scanner)

    result.table('windows', [w.row() for w in found], WINDOW_COLUMNS)
    result.documents['windows'] = {
        'N': N,
        'tangency': record.record(),
        'windows': [w.record() for w in found],
    }
    result.summary.append(f"return time N: {N}")
    for w in found:
        result.summary.append(f"n={w.n}: [{w.a_lo:.16g}, {w.a_hi:.16g}] width {w.width:.3e}")
    short = [w.n for w in found if w.precision_exhausted]
    if short:
        result.exhausted = f"windows of order {short} are narrower than the precision floor"
    return result


def strong_sink(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    p = fam.params()
    options = _unfolding_options(config)
    record = _primary(fam, p, config, options)
    N = _return_time(fam, p, record, config, options)
    t = float(record.param[options.transversal])
    t_range = config['t_range'] if config['t_range'] else (t, t)
    curve = primary_curve(fam, p, sorted({t, *t_range}), record.value, config['step'], options, config['tol'])
    n = config['n']
    found = sink_window_scan(fam, curve, t, (n, n), N, options=options)
    if not found:
        raise PreconditionError(f"No window of order {n} at {options.transversal}={t}!")
    sinks = strong_sink_curve(fam, found[0], tuple(t_range), config['samples'])

    result = Result()
    result.table('strong_sink', sinks.rows(), ['t', 'sa_n', 'dtrace_da', 'max_modulus', 'strong'])
    result.documents['strong_sink'] = {
        'window': found[0].record(),
        'points': sinks.rows(),
        'slopes': sinks.slopes().tolist(),
    }
    result.summary.append(f"strong sinks: {len(sinks)} of {config['samples']}")
    return result


def _box_tree(config: JobConfig, fam: MapFamily, scanner: Scanner):
    p = fam.params()
    options = _unfolding_options(config)
    record = _primary(fam, p, config, options)
    N = _return_time(fam, p, record, config, options)
    t = float(record.param[options.transversal])
    spread = config['spread']
    ts = np.linspace(t - spread, t + spread, config['t_samples'])
    curve = primary_curve(fam, p, ts, record.value, config['step'], options, config['tol'])
    n_range = _n_range(config)
    if n_range is None:
        raise PreconditionError("boxes need a nonempty n_range!")
    tree = build_boxes(
        fam, curve, t, n_range, N,
        generations = config['generations'] or None,
        budget = config['budget'],
        m_range = tuple(config['m_range']),
        spread = spread,
        t_samples = config['t_samples'],
        options = options,
        scanner = scanner,
    )
    return tree, N


def boxes(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    tree, N = _box_tree(config, fam, scanner)
    options = _unfolding_options(config)
    free, transversal = options.free, options.transversal
    rows = [
        {
            'generation': node.generation,
            'n': node.labels[-1][0],
            'a_lo': node.rect[free][0],
            'a_hi': node.rect[free][1],
            't_lo': node.rect[transversal][0],
            't_hi': node.rect[transversal][1],
            'sinks': len(node.sinks),
        }
        for node in tree.walk() if node.generation >= 1
    ]
    result = Result()
    result.table('boxes', rows, ['generation', 'n', 'a_lo', 'a_hi', 't_lo', 't_hi', 'sinks'])
    result.documents['boxes'] = {'N': N, 'tree': tree.record()}
    result.summary.append(f"boxes: {len(rows)} (depth {tree.depth})")
    requested = config['generations'] or default_generations()
    if tree.exhausted and tree.depth < requested:
        result.exhausted = f"box tree reached generation {tree.depth} of {requested}"
    return result


def nh_samples(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    tree, N = _box_tree(config, fam, scanner)
    samples = nh_sample(tree)
    checked = [reverify(fam, s) for s in samples]
    rows = [
        {
            **s.param.as_dict(),
            'generation': s.generation,
            'periods': ' '.join(str(k.period) for k in s.sinks),
            'reverified': ok,
        }
        for s, ok in zip(samples, checked)
    ]
    columns = list(fam.param_names) + ['generation', 'periods', 'reverified']
    result = Result()
    result.table('nh_sample', rows, columns)
    result.documents['nh_sample'] = {
        'N': N,
        'samples': [{**s.record(), 'reverified': ok} for s, ok in zip(samples, checked)],
    }
    result.summary.append(f"samples: {len(samples)} ({sum(checked)} re-verified)")
    return result


def lyapunov_cmd(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    spectrum = lyapunov(fam, fam.params(), config['x0'], config['iters'], burn=config['burn'])
    result = Result()
    rows = spectrum.rows()
    exponents = [f"lambda{i}" for i in range(fam.dim)]
    result.table('lyapunov', rows, ['n'] + exponents, {name: '1/iter' for name in exponents})
    result.documents['lyapunov'] = {**spectrum.record(), 'sum_error': spectrum.sum_error}
    result.summary.append(f"exponents: {', '.join(f'{e:.6g}' for e in spectrum.exponents)}")
    result.summary.append(f"half-sample discrepancy: {spectrum.discrepancy:.3e}")
    return result


def cascade(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    f = embedded_1d(fam) if config['embedded'] else quadratic
    report = superstable_cascade(config['k_max'], f, critical=config['critical'])
    result = Result()
    result.table('cascade', report.rows(), ['k', 'period', 'a_k', 'ratio'])
    result.documents['cascade'] = report.record()
    result.summary.append(f"levels: {report.k_max + 1} (truncated {report.truncated})")
    result.summary.append(f"a_inf: {report.a_inf:.12g}")
    if report.ratios:
        result.summary.append(f"last ratio: {report.ratios[-1]:.8g}")
    if report.precision_exhausted:
        result.exhausted = f"cascade levels beyond k={report.k_max} are below the precision floor"
    return result


def adding_machine(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    burn = config['burn'] if config['burn'] >= 0 else None
    report = adding_machine_test(
        fam, fam.params(), config['x0'], config['iters'], config['k_max'],
        burn = burn,
        coordinate = config['coordinate'],
    )
    result = Result()
    result.documents['adding_machine'] = report.record()
    result.summary.append(f"band counts: {report.band_counts}")
    result.summary.append(f"passed: {report.passed}" + ('' if report.passed else f" (fails at level {report.failed_level})"))
    return result


def _component(fam, p, config, options, fold: int, leaf: int, guess: float):
    fold_selector = FoldSelector(options, fold)
    leaf_selector = LeafSelector(options, None if leaf < 0 else leaf)
    problem = TangencyProblem(fam, p, options.free, fold_selector, leaf_selector)
    bracket = find_bracket(problem.gap_at, guess, config['step'])
    return solve_tangency(
        fam, p, options.free, bracket,
        fold_selector = fold_selector,
        leaf_selector = leaf_selector,
        tol = config['tol'],
    )


def double_tangency_cmd(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    p = fam.params()
    options = _unfolding_options(config)
    seeds = (
        _component(fam, p, config, options, config['fold_a'], config['leaf_a'], config['guess']),
        _component(fam, p, config, options, config['fold_b'], config['leaf_b'], config['guess_b']),
    )
    names = (options.free, options.transversal)
    point = double_tangency(fam, seeds, names, tol=config['tol'])
    residuals = [abs(s.problem.gap(point)) for s in seeds]

    result = Result()
    document: dict = {
        'point': point.as_dict(),
        'residuals': residuals,
        'seeds': [s.record() for s in seeds],
    }
    if config['tau_values']:
        path = continue_double_tangency(fam, seeds, config['tau_values'], names, tol=config['tol'])
        rows = [q.as_dict() for q in path]
        result.table('double_tangency', rows, list(fam.param_names))
        document['path'] = rows
    result.documents['double_tangency'] = document
    result.summary.append(f"double tangency at {point}")
    result.summary.append(f"residuals: {', '.join(f'{r:.3e}' for r in residuals)}")
    return result


def return_map(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    box = PhaseBox(np.asarray(config['center'], dtype=float), np.asarray(config['half_widths'], dtype=float))
    graph = renorm_return_map(fam, fam.params(), box, config['n'], config['samples'], config['axis'])
    result = Result()
    result.table('return_map', graph.rows(), ['x_in', 'x_out'])
    document: dict = {'n': graph.n, 'truncated': graph.truncated, 'samples': len(graph)}
    if len(graph) >= 3:
        document['fit'] = fit_quadratic(graph)._asdict()
        result.summary.append(f"quadratic fit residual: {document['fit']['residual']:.3e}")
    result.documents['return_map'] = document
    result.summary.append(f"samples: {len(graph)} (truncated {graph.truncated})")
    return result


def plot_cmd(config: JobConfig, fam: MapFamily, scanner: Scanner) -> Result:
    out = resolve_out_dir(config.out) / config['name']
    plot(config['inputs'], config['kind'], out)
    result = Result()
    result.summary.append(f"wrote {out.name}")
    return result


COMMANDS: dict[str, Command] = {
    'family-info': Command(family_info, {
        'samples': Option('int', 100),
        'seed_point': Option('floats', (-2.0, -2.0)),
        'period': Option('int', 1),
        'order': Option('int', 4),
    }, 'map checks, saddle and multiplier conditions'),
    'orbit': Command(orbit, dict(SEED), 'periodic orbit by Newton'),
    'manifold': Command(manifold, {
        **SEED,
        'budget': Option('float', 8.0),
        'leg': Option('str', PLUS),
        'stable': Option('bool', False),
        'h_max': Option('float', 1e-3),
        'phi_max': Option('float', 2.0, 'degrees'),
    }, 'invariant manifold arc and its folds'),
    'tangency-find': Command(tangency_find, dict(UNFOLDING), 'primary tangency at fixed transversal'),
    'tangency-continue': Command(tangency_continue, {
        **UNFOLDING,
        'steps': Option('int', 20),
        'max_step': Option('float', 5e-3),
        'direction': Option('int', -1),
        'bounds': Option('floats', ()),
    }, 'tangency curve by pseudo-arclength'),
    'windows': Command(windows, dict(WINDOWS), 'sink windows'),
    'strong-sink': Command(strong_sink, {
        **WINDOWS,
        'n': Option('int', 6),
        't_range': Option('floats', ()),
        'samples': Option('int', 5),
    }, 'trace-zero curve of one window'),
    'boxes': Command(boxes, dict(BOXES), 'Newhouse box tree'),
    'nh-sample': Command(nh_samples, dict(BOXES), 'deepest box centers with sinks'),
    'lyapunov': Command(lyapunov_cmd, {
        'x0': Option('floats', (0.3, 0.3)),
        'iters': Option('int', 100000),
        'burn': Option('int', 1000),
    }, 'Lyapunov spectrum'),
    'cascade': Command(cascade, {
        'k_max': Option('int', 10),
        'embedded': Option('bool', False),
        'critical': Option('float', 0.0),
    }, 'superstable period-doubling cascade'),
    'adding-machine': Command(adding_machine, {
        'x0': Option('floats', (0.0, 0.0)),
        'iters': Option('int', 100000),
        'k_max': Option('int', 6),
        'burn': Option('int', -1, '-1 burns a tenth of iters'),
        'coordinate': Option('int', 0),
    }, '2-adic adding machine band test'),
    'double-tangency': Command(double_tangency_cmd, {
        **UNFOLDING,
        'fold_a': Option('int', 1),
        'leaf_a': Option('int', -1, '-1 is the tangency leaf, k >= 0 the level leaf V_k'),
        'fold_b': Option('int', 0),
        'leaf_b': Option('int', -1),
        'guess_b': Option('float', 2.0),
        'tau_values': Option('floats', ()),
    }, 'double tangency by 2D Newton'),
    'return-map': Command(return_map, {
        'center': Option('floats', (0.0, 0.0)),
        'half_widths': Option('floats', (1.0, 1.0)),
        'n': Option('int', 1),
        'samples': Option('int', 201),
        'axis': Option('int', 0),
    }, 'sampled return graph'),
    'plot': Command(plot_cmd, {
        'inputs': Option('strs', ()),
        'kind': Option('str', 'curve'),
        'name': Option('str', 'plot.svg'),
    }, 'deterministic SVG of CSV artifacts'),
}

SCHEMAS: dict[str, Schema] = {name: command.schema for name, command in COMMANDS.items()}


def make_pool(threads: int, mode: str) -> Optional[Pool]:
    """
    Worker pool whose processes run in the given precision mode; None for a
    single thread.
    """
    if threads <= 1:
        return None
    return Pool(
        threads,
        initializer = precision.set_precision,
        initargs = (mode,),
    )


def run(config: JobConfig, show_progress: bool = False) -> int:
    """
    Executes the job and writes its artifacts once at the end. Returns the
    exit status: 0 on success, else the exit code of the raised error.
    Numerical breakdowns outside the toolkit's own checks (singular
    matrices, overflow) report as solver failures.
    """
    command: Command = COMMANDS[config.command]
    print(f"Running '{config.command}' on {config.family}:")

    pool: Optional[Pool] = None
    try:
        with precision.precision(config.precision):
            pool = make_pool(config.threads, config.precision)
            fam = config.make_family()
            scanner = Scanner(show_progress=show_progress, pool=pool, desc=config.command)
            result: Result = command.func(config, fam, scanner)
    except ToolkitError as e:
        logger.error("%s failed: %s", config.command, e)
        print(f"> error: {e}")
        return e.exit_code
    except NUMERIC_ERRORS as e:
        logger.exception("%s broke down numerically", config.command)
        print(f"> error: {type(e).__name__}: {e}")
        return SolverFailure.exit_code
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    out = resolve_out_dir(config.out)
    for path in result.write(out, config):
        print(f"> wrote: {path.name}")
    for line in result.summary:
        print(f"> {line}")
    if result.exhausted:
        logger.warning("%s: %s", config.command, result.exhausted)
        print(f"> precision exhausted: {result.exhausted}")
        return PrecisionExhausted.exit_code
    return 0
