"""
Superstable period-doubling cascades of one-dimensional families and the
2-adic adding-machine band test for orbits.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy import ndarray

from .. import precision
from ..errors import EscapeError, PreconditionError
from ..families import MapFamily, ParamPoint
from ..orbits import ESCAPE_RADIUS

logger = logging.getLogger(__name__)

Map1D = Callable[[float, float], float]

FEIGENBAUM_DELTA: float = 4.669201609102990
SCAN_POINTS: int = 400
FIRST_BOUND: float = 2.0
BAND_FACTOR: float = 10.0
# resolvable spacing of consecutive a_k, in machine epsilons
PRECISION_FLOOR: float = 1e3


def quadratic(a: float, x: float) -> float:
    return a - x * x


@dataclass(frozen=True)
class EmbeddedMap:
    """
    The family restricted to the diagonal y = x of its first two
    coordinates, as a map of the first coordinate; exact for Hénon at b = 0.
    """
    fam: MapFamily
    base: ParamPoint
    free: str = 'a'

    def __call__(self, a: float, x: float) -> float:
        p = self.base.replace(**{self.free: a})
        X = np.full(self.fam.dim, x, dtype=float)
        return float(precision.to_float(self.fam.map(p, X))[0])


def embedded_1d(fam: MapFamily, base: Optional[ParamPoint] = None, free: str = 'a') -> EmbeddedMap:
    return EmbeddedMap(fam, fam.params(base), free)


@dataclass
class CascadeReport:
    values: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    a_inf: float = math.nan
    truncated: bool = False
    precision_exhausted: bool = False

    @property
    def k_max(self) -> int:
        return len(self.values) - 1

    @property
    def periods(self) -> list[int]:
        return [2**k for k in range(len(self.values))]

    def rows(self) -> list[dict]:
        return [
            {
                'k': k,
                'period': 2**k,
                'a_k': a,
                'ratio': self.ratios[k - 2] if k >= 2 else math.nan,
            }
            for k, a in enumerate(self.values)
        ]

    def record(self) -> dict:
        return {
            'values': self.values,
            'ratios': self.ratios,
            'a_inf': self.a_inf,
            'truncated': self.truncated,
            'precision_exhausted': self.precision_exhausted,
        }


def _superstable_offset(f: Map1D, a: float, period: int, critical: float) -> float:
    x = critical
    for _ in range(period):
        x = f(a, x)
        if not math.isfinite(x) or abs(x) > ESCAPE_RADIUS:
            return math.nan
    return x - critical


def _richardson(values: list[float], ratios: list[float]) -> float:
    if len(values) < 2:
        return math.nan
    delta = ratios[-1] if ratios else FEIGENBAUM_DELTA
    return values[-1] + (values[-1] - values[-2]) / (delta - 1.0)


def superstable_cascade(
    k_max: int,
    f: Map1D = quadratic,
    critical: float = 0.0,
    a_start: float = -0.5,
    tol: float = 1e-15,
) -> CascadeReport:
    """
    Parameters a_k at which the critical point is periodic with period 2^k,
    k = 0..k_max, each the first root of f_a^{2^k}(c) - c beyond a_{k-1}.
    """
    from scipy.optimize import brentq

    if k_max < 2:
        raise PreconditionError(f"k_max must be >= 2, got {k_max}!")

    report = CascadeReport()
    for k in range(k_max + 1):
        period: int = 2**k
        g = lambda a: _superstable_offset(f, a, period, critical)

        if k == 0:
            lo, hi = a_start, FIRST_BOUND
        elif k == 1:
            lo, hi = report.values[0] + 1e-9, FIRST_BOUND
        else:
            step = report.values[-1] - report.values[-2]
            floor = PRECISION_FLOOR * np.finfo(float).eps * max(1.0, abs(report.values[-1]))
            if step / FEIGENBAUM_DELTA < floor:
                logger.warning("a_%d would lie within %.3e of a_%d; stopping at the precision floor", k, floor, k - 1)
                report.truncated = True
                report.precision_exhausted = True
                break
            lo, hi = report.values[-1] + step / 10.0, report.values[-1] + step / 1.5

        grid: ndarray = np.linspace(lo, hi, SCAN_POINTS)
        values: ndarray = np.array([g(a) for a in grid])
        with np.errstate(invalid='ignore'):
            crossings = np.nonzero(values[:-1] * values[1:] <= 0.0)[0]
        if len(crossings) == 0:
            logger.warning("superstable bracket lost at k=%d", k)
            report.truncated = True
            break
        i = int(crossings[0])
        if values[i] == 0.0:
            a_k = float(grid[i])
        else:
            a_k = float(brentq(g, grid[i], grid[i + 1], xtol=tol, rtol=4 * np.finfo(float).eps))

        report.values.append(a_k)
        if k >= 2:
            v = report.values
            report.ratios.append((v[-2] - v[-3]) / (v[-1] - v[-2]))
        logger.debug("superstable period %d at a=%.15f", period, a_k)

    report.a_inf = _richardson(report.values, report.ratios)
    return report


# Adding machine

@dataclass
class AddingMachineReport:
    band_counts: list[int]
    passed: bool
    failed_level: Optional[int] = None

    def record(self) -> dict:
        return {
            'band_counts': self.band_counts,
            'passed': self.passed,
            'failed_level': self.failed_level,
        }


def _orbit_tail(fam: MapFamily, p: ParamPoint, x0, iters: int, burn: int) -> ndarray:
    tail: ndarray = np.empty((iters, fam.dim))
    with precision.precision('double'), \
            np.errstate(over='ignore', invalid='ignore'):
        x: ndarray = np.asarray(x0, dtype=float)
        for k in range(burn + iters):
            if k >= burn:
                tail[k - burn] = x
            x = precision.to_float(fam.map(p, x))
            size = float(np.max(np.abs(x)))
            if not math.isfinite(size) or size > ESCAPE_RADIUS:
                raise EscapeError(f"Orbit escaped after {k + 1} steps!", k + 1)
    return tail


def band_labels(values: ndarray, count: int, factor: float = BAND_FACTOR) -> Optional[ndarray]:
    """
    Splits values into count bands at the count - 1 widest gaps between
    sorted neighbours; None when one of them is not a gap, i.e. not wider
    than factor times the median spacing.
    """
    order: ndarray = np.argsort(values, kind='stable')
    gaps: ndarray = np.diff(values[order])
    if count - 1 > len(gaps):
        return None
    threshold: float = factor * float(np.median(gaps)) if len(gaps) else 0.0
    widest: ndarray = np.sort(np.argsort(gaps, kind='stable')[len(gaps) - (count - 1):]) if count > 1 else np.zeros(0, dtype=int)
    if count > 1 and not np.all(gaps[widest] > threshold):
        return None
    band_of_sorted: ndarray = np.zeros(len(values), dtype=int)
    for b in widest:
        band_of_sorted[b + 1:] += 1
    labels: ndarray = np.empty(len(values), dtype=int)
    labels[order] = band_of_sorted
    return labels


def _is_cycle(labels: ndarray, count: int) -> bool:
    """
    The orbit moves band i to a fixed band sigma(i), and sigma is one cycle
    of length count.
    """
    sigma: dict[int, int] = {}
    for u, v in zip(labels[:-1], labels[1:]):
        if sigma.setdefault(int(u), int(v)) != int(v):
            return False
    if len(sigma) != count:
        return False
    seen, b = set(), 0
    for _ in range(count):
        if b in seen or b not in sigma:
            return False
        seen.add(b)
        b = sigma[b]
    return b == 0 and len(seen) == count


def adding_machine_test(
    fam: MapFamily,
    p: ParamPoint,
    x0,
    iters: int,
    k_max: int,
    burn: Optional[int] = None,
    coordinate: int = 0,
) -> AddingMachineReport:
    """
    Level k passes when the orbit tail splits into 2^k bands (along the
    given coordinate) that the map permutes as one 2^k-cycle. Stops at the
    first failing level.
    """
    if k_max < 1:
        raise PreconditionError(f"k_max must be >= 1, got {k_max}!")
    if iters < 2**(k_max + 1):
        raise PreconditionError(f"{iters} iterates cannot resolve 2^{k_max} bands!")

    p = fam.params(p)
    burn = iters // 10 if burn is None else burn
    values: ndarray = _orbit_tail(fam, p, x0, iters, burn)[:, coordinate]

    counts: list[int] = []
    for k in range(1, k_max + 1):
        count: int = 2**k
        labels = band_labels(values, count)
        if labels is None or not _is_cycle(labels, count):
            found = 1 if labels is None else len(set(labels.tolist()))
            counts.append(found)
            logger.info("adding machine fails at level %d", k)
            return AddingMachineReport(band_counts=counts, passed=False, failed_level=k)
        counts.append(count)

    return AddingMachineReport(band_counts=counts, passed=True)
