"""
One-parameter tangency solver and two-parameter continuation of tangency
curves.
"""
import math
import logging
from typing import Callable, Optional, Sequence

import numpy as np
from numpy import ndarray

from ..errors import BracketError, PreconditionError, SolverFailure, ToolkitError
from ..families import MapFamily, ParamPoint
from .gap import FoldSelector, LeafSelector, TangencyProblem
from .records import PRIMARY, TangencyCurve, TangencyRecord

logger = logging.getLogger(__name__)

DEFAULT_TOL: float = 1e-10
MAX_HALVINGS: int = 6
MAX_CORRECTOR: int = 8
FD_STEP: float = 1e-7
BRACKET_GROWTH: float = 2.0
BRACKET_STEPS: int = 40


def find_bracket(
    f: Callable[[float], float],
    guess: float,
    step: float,
    growth: float = BRACKET_GROWTH,
    max_steps: int = BRACKET_STEPS,
) -> tuple[float, float]:
    """
    Symmetric search around guess with geometrically growing half-width
    until f changes sign. Evaluation errors count as no sign change.
    """
    def safe(x: float) -> float:
        try:
            return f(x)
        except ToolkitError as e:
            logger.debug("bracket trial at %.16g failed: %s", x, e)
            return math.nan

    f0 = safe(guess)
    if f0 == 0.0:
        return guess, guess
    h: float = step
    for _ in range(max_steps):
        lo, hi = guess - h, guess + h
        f_lo, f_hi = safe(lo), safe(hi)
        if f0 * f_hi <= 0.0:
            return guess, hi
        if f0 * f_lo <= 0.0:
            return lo, guess
        if f_lo * f_hi <= 0.0:
            return lo, hi
        h *= growth
    raise BracketError(f"No sign change within +-{h / growth:.3e} of {guess:.16g}!")


def solve_tangency(
    fam: MapFamily,
    p_fixed: ParamPoint,
    free_name: str,
    bracket: tuple[float, float],
    fold_selector: FoldSelector,
    leaf_selector: LeafSelector,
    tol: float = DEFAULT_TOL,
    kind: str = PRIMARY,
    **labels,
) -> TangencyRecord:
    """
    Root of the gap in the free parameter by Brent's method inside bracket.
    Manifolds are recomputed at every trial through the selectors.
    """
    from scipy.optimize import brentq

    if not tol > 0:
        raise PreconditionError(f"tol must be positive, got {tol}!")
    problem = TangencyProblem(
        fam = fam,
        base = fam.params(p_fixed),
        free = free_name,
        fold_selector = fold_selector,
        leaf_selector = leaf_selector,
        kind = kind,
        **labels,
    )

    lo, hi = sorted(float(v) for v in bracket)
    g_lo, g_hi = problem.gap_at(lo), problem.gap_at(hi)
    if g_lo * g_hi > 0.0:
        raise BracketError(
            f"gap has the same sign at {free_name}={lo:.16g} ({g_lo:.3e}) "
            f"and {free_name}={hi:.16g} ({g_hi:.3e})!"
        )

    if g_lo == 0.0:
        root = lo
    elif g_hi == 0.0:
        root = hi
    else:
        root = brentq(
            problem.gap_at, lo, hi,
            xtol = min(1e-3 * tol, 1e-15),
            rtol = 4 * np.finfo(float).eps,
            maxiter = 200,
        )

    record: TangencyRecord = problem.record(problem.at(root))
    if abs(record.gap) > tol:
        raise SolverFailure(
            f"Tangency residual {abs(record.gap):.3e} above tol {tol:.1e} at {record.param}!",
            abs(record.gap),
        )
    logger.info("tangency at %s: gapQ %.4g", record.param, record.gapQ)
    return record


def _gradient(G: Callable[[ndarray], float], x: ndarray, h: float = FD_STEP) -> ndarray:
    grad = np.empty(len(x))
    for i in range(len(x)):
        step = h * max(1.0, abs(x[i]))
        e = np.zeros(len(x))
        e[i] = step
        grad[i] = (G(x + e) - G(x - e)) / (2 * step)
    return grad


def _tangent(grad: ndarray) -> ndarray:
    T = np.array([-grad[1], grad[0]])
    norm = np.linalg.norm(T)
    if norm == 0.0:
        raise SolverFailure("Tangency gap has a vanishing gradient; curve direction undefined!")
    return T / norm


def _limit(x: ndarray, T: ndarray, h: float, bounds: Optional[Sequence]) -> tuple[float, bool]:
    """
    Shortens h so the predictor stays inside bounds; flags the last step.
    """
    if bounds is None:
        return h, False
    last = False
    for j, bound in enumerate(bounds):
        if bound is None or T[j] == 0.0:
            continue
        lo, hi = bound
        edge = hi if T[j] > 0 else lo
        reach = (edge - x[j]) / T[j]
        if reach <= h:
            h, last = max(reach, 0.0), True
    return h, last


def continue_tangency(
    fam: MapFamily,
    start: TangencyRecord,
    free_names: tuple[str, str],
    steps: int,
    max_step: float,
    direction: int = 1,
    bounds: Optional[Sequence] = None,
    tol: float = DEFAULT_TOL,
) -> TangencyCurve:
    """
    Pseudo-arclength continuation of gap = 0 in two parameters. direction
    fixes the sense of the second parameter on the first step; bounds is an
    optional ((lo, hi) or None) pair per parameter at which the curve stops.
    """
    if start.problem is None:
        raise PreconditionError("Start record carries no tangency problem to continue!")
    if steps < 0 or not max_step > 0:
        raise PreconditionError("Need steps >= 0 and max_step > 0!")
    if abs(start.gap) > 10 * tol:
        raise PreconditionError("Start record is not converged!")

    problem: TangencyProblem = start.problem
    first, second = free_names
    base: ParamPoint = start.param

    def point(x: ndarray) -> ParamPoint:
        return base.replace(**{first: float(x[0]), second: float(x[1])})

    def G(x: ndarray) -> float:
        return problem.gap(point(x))

    curve = TangencyCurve(names=(first, second), records=[start])
    x: ndarray = np.array([float(base[first]), float(base[second])])
    T_prev: Optional[ndarray] = None

    for k in range(steps):
        try:
            T = _tangent(_gradient(G, x))
        except ToolkitError as e:
            logger.warning("continuation stopped at step %d: %s", k, e)
            curve.truncated = True
            break

        if T_prev is None:
            if (T[1] != 0.0 and np.sign(T[1]) != np.sign(direction)) or (T[1] == 0.0 and direction < 0):
                T = -T
        elif T @ T_prev < 0.0:
            T = -T
        if k == 0:
            curve.slopes.append(T[0] / T[1] if T[1] != 0.0 else math.inf)

        h, last = _limit(x, T, max_step, bounds)
        if h <= 0.0:
            break

        accepted: Optional[ndarray] = None
        for _ in range(MAX_HALVINGS + 1):
            y = x + h * T
            try:
                for _ in range(MAX_CORRECTOR):
                    g = G(y)
                    grad = _gradient(G, y)
                    J = np.array([grad, T])
                    r = np.array([g, T @ (y - x) - h])
                    dy = np.linalg.solve(J, -r)
                    y = y + dy
                    if abs(G(y)) <= tol and np.linalg.norm(dy) <= 1e-12 * max(1.0, np.linalg.norm(y)) + tol:
                        accepted = y
                        break
            except (ToolkitError, np.linalg.LinAlgError) as e:
                logger.debug("corrector failed at h=%.3e: %s", h, e)
            if accepted is not None:
                break
            curve.failures += 1
            h *= 0.5
            last = False

        if accepted is None:
            curve.truncated = True
            logger.warning(
                "tangency curve truncated after %d steps: %d halvings failed", k, MAX_HALVINGS
            )
            break

        record = problem.record(point(accepted))
        curve.records.append(record)
        curve.step_sizes.append(float(np.linalg.norm(accepted - x)))
        secant = accepted - x
        curve.slopes.append(secant[0] / secant[1] if secant[1] != 0.0 else math.inf)
        logger.debug("continuation step %d: %s", k, record.param)

        T_prev, x = T, accepted
        if last:
            break

    return curve
