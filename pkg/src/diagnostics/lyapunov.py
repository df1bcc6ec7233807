"""
Lyapunov spectra by QR re-orthonormalisation and the finite-time
Collet-Eckmann growth screen.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy import ndarray

from .. import precision
from ..errors import EscapeError, PreconditionError
from ..families import MapFamily, ParamPoint
from ..orbits import ESCAPE_RADIUS

logger = logging.getLogger(__name__)

DEFAULT_BURN: int = 1000
DEFAULT_KAPPA: float = 0.05
CHECKPOINTS: int = 100


@dataclass
class LyapSpectrum:
    exponents: ndarray
    iterations: int
    burn: int
    discrepancy: float
    mean_log_det: float
    checkpoints: ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    running: ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @property
    def top(self) -> float:
        return float(self.exponents[0])

    @property
    def sum_error(self) -> float:
        """
        Relative mismatch between the exponent sum and the mean log|det DF|.
        """
        total = float(np.sum(self.exponents))
        if not (math.isfinite(total) and math.isfinite(self.mean_log_det)):
            return 0.0 if total == self.mean_log_det else math.inf
        return abs(total - self.mean_log_det) / max(abs(self.mean_log_det), 1e-300)

    def rows(self) -> list[dict]:
        out: list[dict] = []
        for n, values in zip(self.checkpoints, self.running):
            row: dict = {'n': int(n)}
            for i, value in enumerate(values):
                row[f"lambda{i}"] = float(value)
            out.append(row)
        return out

    def record(self) -> dict:
        return {
            'exponents': [float(e) for e in self.exponents],
            'iterations': self.iterations,
            'burn': self.burn,
            'discrepancy': self.discrepancy,
            'mean_log_det': self.mean_log_det,
        }


def _escaped(x: ndarray) -> bool:
    size = float(np.max(np.abs(x)))
    return not math.isfinite(size) or size > ESCAPE_RADIUS


def lyapunov(
    fam: MapFamily,
    p: ParamPoint,
    x0,
    iters: int,
    burn: int = DEFAULT_BURN,
    checkpoints: int = CHECKPOINTS,
) -> LyapSpectrum:
    """
    Exponents as averaged log |R_ii| of the QR factorisation of DF Q,
    re-orthonormalised every step. Runs in double precision.
    """
    if iters < 2:
        raise PreconditionError(f"iters must be >= 2, got {iters}!")
    if burn < 0:
        raise PreconditionError(f"burn must be >= 0, got {burn}!")

    p = fam.params(p)
    m: int = fam.dim
    every: int = max(1, iters // max(1, checkpoints))

    with precision.precision('double'), \
            np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        x: ndarray = np.asarray(x0, dtype=float)
        for k in range(burn):
            x = precision.to_float(fam.map(p, x))
            if _escaped(x):
                raise EscapeError(f"Orbit escaped during burn-in after {k + 1} steps!", k + 1)

        Q: ndarray = np.eye(m)
        sums: ndarray = np.zeros(m)
        half: Optional[ndarray] = None
        log_det: float = 0.0
        marks: list[int] = []
        running: list[ndarray] = []

        for k in range(1, iters + 1):
            J = precision.to_float(fam.jacobian(p, x))
            Q, R = np.linalg.qr(J @ Q)
            d = np.diag(R)
            # keep R's diagonal positive so Q stays continuous
            signs = np.where(d < 0.0, -1.0, 1.0)
            Q = Q * signs
            sums += np.log(np.abs(d))
            det = abs(float(np.linalg.det(J)))
            log_det += math.log(det) if det > 0.0 else -math.inf
            x = precision.to_float(fam.map(p, x))
            if _escaped(x):
                raise EscapeError(f"Orbit escaped after {burn + k} steps!", burn + k)
            if k == iters // 2:
                half = sums.copy()
            if k % every == 0:
                marks.append(k)
                running.append(np.sort(sums / k)[::-1])

    exponents: ndarray = np.sort(sums / iters)[::-1]
    first = np.sort(half / (iters // 2))[::-1]
    second = np.sort((sums - half) / (iters - iters // 2))[::-1]
    with np.errstate(invalid='ignore'):
        gaps = np.abs(first - second)
    discrepancy: float = float(np.nanmax(gaps)) if np.any(np.isfinite(gaps)) else 0.0

    spectrum = LyapSpectrum(
        exponents = exponents,
        iterations = iters,
        burn = burn,
        discrepancy = discrepancy,
        mean_log_det = log_det / iters,
        checkpoints = np.array(marks, dtype=int),
        running = np.array(running),
    )
    logger.info("lyapunov at %s: %s (+-%.2e)", p, exponents, discrepancy)
    return spectrum


@dataclass
class GrowthProfile:
    """
    Finite-time proxy only: log|DF^n v| for n = 1..n_max against kappa n.
    """
    log_growth: ndarray
    kappa: float
    passed: bool
    first_failure: Optional[int] = None

    def rows(self) -> list[dict]:
        return [
            {'n': n, 'log_growth': float(g), 'bound': self.kappa * n}
            for n, g in enumerate(self.log_growth, start=1)
        ]

    def record(self) -> dict:
        return {
            'kappa': self.kappa,
            'passed': self.passed,
            'first_failure': self.first_failure,
            'log_growth': [float(g) for g in self.log_growth],
            'finite_time_proxy': True,
        }


def collet_eckmann_test(
    fam: MapFamily,
    p: ParamPoint,
    z,
    v,
    n_max: int,
    kappa: float = DEFAULT_KAPPA,
) -> GrowthProfile:
    """
    Passes iff log|DF^n(z) v| >= kappa n for every 1 <= n <= n_max. The
    vector is renormalised each step, so the growth never overflows.
    """
    v = np.asarray(v, dtype=float)
    if abs(float(np.linalg.norm(v)) - 1.0) > 1e-12:
        raise PreconditionError(f"v must be a unit vector, |v| = {np.linalg.norm(v)}!")
    if n_max < 1:
        raise PreconditionError(f"n_max must be >= 1, got {n_max}!")

    p = fam.params(p)
    growth: ndarray = np.zeros(n_max)
    total: float = 0.0

    with precision.precision('double'), \
            np.errstate(over='ignore', invalid='ignore'):
        x: ndarray = np.asarray(z, dtype=float)
        for n in range(n_max):
            v = precision.to_float(fam.jacobian(p, x)) @ v
            norm = float(np.linalg.norm(v))
            total += math.log(norm) if norm > 0.0 else -math.inf
            growth[n] = total
            if norm > 0.0:
                v = v / norm
            x = precision.to_float(fam.map(p, x))
            if _escaped(x):
                raise EscapeError(f"Orbit escaped after {n + 1} steps!", n + 1)

    bounds: ndarray = kappa * np.arange(1, n_max + 1)
    failing = np.nonzero(growth < bounds)[0]
    first: Optional[int] = int(failing[0]) + 1 if len(failing) else None
    return GrowthProfile(
        log_growth = growth,
        kappa = kappa,
        passed = first is None,
        first_failure = first,
    )
