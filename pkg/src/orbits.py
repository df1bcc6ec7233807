"""
Periodic orbits: Newton location, monodromy and multipliers, stability
classes, parameter continuation and a sampled contraction certificate.
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np
from numpy import ndarray

from . import precision
from .errors import DegenerateOrbitError, EscapeError, PreconditionError, SolverFailure
from .families import EigenData, MapFamily, ParamPoint

logger = logging.getLogger(__name__)

DEFAULT_TOL: float = 1e-10
MAX_NEWTON: int = 50
MAX_DAMPING: int = 8
EPS_CLASS: float = 1e-9
ESCAPE_RADIUS: float = 1e6
RESCALE_AT: float = 1e100

SINK: str = 'sink'
SADDLE: str = 'saddle'
SOURCE: str = 'source'
NONHYPERBOLIC: str = 'nonhyperbolic'


class Monodromy(NamedTuple):
    """
    DF^period accumulated along an orbit; the true matrix is
    exp(log_scale) * matrix and its determinant det_sign * exp(log_abs_det).
    """
    points: ndarray
    end: ndarray
    matrix: ndarray
    log_scale: float
    log_abs_det: float
    det_sign: int

    def scaled(self) -> ndarray:
        return self.matrix * precision.scalar(math.exp(self.log_scale))

    @property
    def det(self) -> float:
        return signed_exp(self.det_sign, self.log_abs_det)


def signed_exp(sign: int, log_abs: float) -> float:
    """
    sign * exp(log_abs), saturating to +-inf and 0 instead of raising.
    """
    if sign == 0 or log_abs == -math.inf:
        return 0.0
    try:
        return sign * math.exp(log_abs)
    except OverflowError:
        return sign * math.inf


def monodromy(
    fam: MapFamily,
    p: ParamPoint,
    x: ndarray,
    period: int,
) -> Monodromy:
    """
    Iterates x period times, chaining Jacobians with periodic rescaling.
    The determinant is accumulated as a log modulus and a sign.
    """
    x = precision.array(x)
    M: ndarray = precision.identity(fam.dim)
    log_scale: float = 0.0
    log_abs_det: float = 0.0
    det_sign: int = 1
    points: list[ndarray] = []

    for k in range(period):
        points.append(x)
        J = fam.jacobian(p, x)
        M = J @ M
        d = precision.det(J)
        if d == 0:
            det_sign, log_abs_det = 0, -math.inf
        elif det_sign != 0:
            det_sign *= 1 if d > 0 else -1
            log_abs_det += float(precision.log(abs(d)))
        x = fam.map(p, x)

        size = precision.sup_norm(x)
        if not math.isfinite(size) or size > ESCAPE_RADIUS:
            raise EscapeError(f"Orbit left radius {ESCAPE_RADIUS:g} after {k + 1} steps!", k + 1)

        norm = precision.sup_norm(M)
        if norm > RESCALE_AT:
            M = M / precision.scalar(norm)
            log_scale += math.log(norm)

    return Monodromy(np.stack(points), x, M, log_scale, log_abs_det, det_sign)


def classify(moduli: Iterable[float], eps: float = EPS_CLASS) -> str:
    moduli = np.asarray(list(moduli), dtype=float)
    if np.any(np.abs(moduli - 1.0) <= eps):
        return NONHYPERBOLIC
    if np.all(moduli < 1.0):
        return SINK
    if np.all(moduli > 1.0):
        return SOURCE
    return SADDLE


@dataclass(frozen=True)
class PeriodicOrbit:
    param: ParamPoint
    points: ndarray
    period: int
    multipliers: EigenData
    trace: float
    residual: float
    stability: str
    det: float = 0.0
    log_abs_det: float = 0.0
    det_sign: int = 1

    @property
    def point(self) -> ndarray:
        return self.points[0]

    @property
    def moduli(self) -> ndarray:
        return self.multipliers.moduli

    @property
    def is_sink(self) -> bool:
        return self.stability == SINK

    def record(self) -> dict:
        return {
            'param': self.param.as_dict(),
            'period': self.period,
            'points': precision.to_float(self.points).tolist(),
            'multipliers': [[m.real, m.imag] for m in self.multipliers.multipliers],
            'trace': float(self.trace),
            'residual': float(self.residual),
            'class': self.stability,
            'log_abs_det': float(self.log_abs_det),
            'det_sign': int(self.det_sign),
        }


def orbit_from_point(
    fam: MapFamily,
    p: ParamPoint,
    x: ndarray,
    period: int,
    eps_class: float = EPS_CLASS,
) -> PeriodicOrbit:
    """
    Builds the orbit record at x without correcting it.
    """
    mono: Monodromy = monodromy(fam, p, x, period)
    residual: float = precision.sup_norm(mono.end - precision.array(x))
    eig = EigenData.from_matrix(
        mono.matrix,
        period = period,
        log_scale = mono.log_scale,
        log_det = (mono.det_sign, mono.log_abs_det),
    )
    trace: float = float(np.trace(precision.to_float(mono.matrix))) * math.exp(mono.log_scale)
    return PeriodicOrbit(
        param = p,
        points = mono.points,
        period = period,
        multipliers = eig,
        trace = trace,
        residual = residual,
        stability = classify(eig.moduli, eps_class),
        det = mono.det,
        log_abs_det = mono.log_abs_det,
        det_sign = mono.det_sign,
    )


def find_periodic(
    fam: MapFamily,
    p: ParamPoint,
    period: int,
    seed: Sequence[float],
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_NEWTON,
    eps_class: float = EPS_CLASS,
) -> PeriodicOrbit:
    """
    Damped Newton on x -> F^period(x) - x.
    """
    if period < 1:
        raise PreconditionError(f"period must be >= 1, got {period}!")
    if not tol > 0:
        raise PreconditionError(f"tol must be positive, got {tol}!")

    x: ndarray = precision.array(seed)
    I: ndarray = precision.identity(fam.dim)
    floor: float = 1e3 * precision.machine_epsilon()

    mono: Monodromy = monodromy(fam, p, x, period)
    G: ndarray = mono.end - x
    residual: float = precision.sup_norm(G)

    for it in range(max_iter):
        if residual <= tol:
            break

        try:
            step = precision.solve(mono.scaled() - I, -G)
        except np.linalg.LinAlgError:
            raise DegenerateOrbitError(
                f"Singular Newton matrix at iteration {it} (period {period}, {p})!",
                residual,
            )

        scale: float = 1.0
        for _ in range(MAX_DAMPING + 1):
            trial = x + precision.scalar(scale) * step
            try:
                trial_mono = monodromy(fam, p, trial, period)
            except EscapeError:
                scale *= 0.5
                continue
            trial_G = trial_mono.end - trial
            trial_res = precision.sup_norm(trial_G)
            if trial_res < residual:
                break
            scale *= 0.5
        else:
            # no decrease: accept only when already at rounding level
            if precision.sup_norm(step) <= floor * max(1.0, precision.sup_norm(x)):
                break
            raise SolverFailure(
                f"Newton stalled at residual {residual:.3e} (period {period}, {p})!",
                residual,
            )

        x, mono, G, residual = trial, trial_mono, trial_G, trial_res
        logger.debug("newton %d: residual %.3e (damping %g)", it, residual, scale)

    if residual > tol:
        raise SolverFailure(
            f"Newton did not converge: residual {residual:.3e} > {tol:.1e} "
            f"(period {period}, {p})!",
            residual,
        )

    return orbit_from_point(fam, p, x, period, eps_class)


def cyclic_shift(orbit: PeriodicOrbit, k: int) -> ndarray:
    return np.roll(orbit.points, -k, axis=0)


def same_orbit(u: PeriodicOrbit, v: PeriodicOrbit, tol: float) -> bool:
    """
    Unordered comparison of the point sets.
    """
    if u.period != v.period:
        return False
    P = precision.to_float(u.points)
    Q = precision.to_float(v.points)
    d = np.abs(P[:, None, :] - Q[None, :, :]).max(axis=-1)
    return bool(np.all(d.min(axis=1) <= tol) and np.all(d.min(axis=0) <= tol))


# Continuation

FOLD: str = 'fold'
PERIOD_DOUBLING: str = 'period-doubling'
SADDLE_NODE: str = 'saddle-node'
NEIMARK_SACKER: str = 'neimark-sacker'

MAX_JUMP: float = 0.5
MAX_HALVINGS: int = 8
FOLD_TOL: float = 0.1


@dataclass
class OrbitBranch:
    steps: list[tuple[ParamPoint, PeriodicOrbit]] = field(default_factory=list)
    crossings: list[tuple[int, str]] = field(default_factory=list)
    truncated: bool = False
    fold: bool = False

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def orbits(self) -> list[PeriodicOrbit]:
        return [o for _, o in self.steps]

    @property
    def params(self) -> list[ParamPoint]:
        return [q for q, _ in self.steps]


def _param_vector(q: ParamPoint) -> ndarray:
    return np.array([float(v) for v in q.values])


def _param_from(base: ParamPoint, values: ndarray) -> ParamPoint:
    return ParamPoint(tuple(zip(base.names, (float(v) for v in values))))


def _crossing(prev: EigenData, cur: EigenData) -> Optional[str]:
    """
    Bifurcation type when a multiplier crosses the unit circle.
    """
    a, b = prev.moduli, cur.moduli
    for u, v in zip(prev.multipliers, cur.multipliers):
        if (abs(u) - 1.0) * (abs(v) - 1.0) < 0.0:
            real = abs(u.imag) < 1e-12 and abs(v.imag) < 1e-12
            if not real:
                return NEIMARK_SACKER
            return PERIOD_DOUBLING if (u.real + v.real) < 0 else SADDLE_NODE
    if np.any((a - 1.0) * (b - 1.0) < 0.0):
        return NEIMARK_SACKER
    return None


def _jump(prev: EigenData, cur: EigenData) -> float:
    return float(np.max(np.abs(prev.moduli - cur.moduli)))


def fold_distance(fam: MapFamily, orbit: PeriodicOrbit) -> float:
    """
    Smallest singular value of DF^p - I at the orbit, relative to the
    largest one when that exceeds 1. Vanishes at a fold of the branch.
    """
    mono = monodromy(fam, orbit.param, orbit.point, orbit.period)
    if mono.log_scale > 700.0:
        return math.inf
    A = precision.to_float(mono.matrix) * math.exp(mono.log_scale) - np.eye(fam.dim)
    s = np.linalg.svd(A, compute_uv=False)
    return float(s[-1] / max(1.0, s[0]))


def continue_orbit(
    fam: MapFamily,
    orbit: PeriodicOrbit,
    path: Sequence[ParamPoint],
    max_step: float,
    tol: float = DEFAULT_TOL,
    fold_tol: float = FOLD_TOL,
) -> OrbitBranch:
    """
    Follows the orbit along a polyline in parameter space. Secant predictor,
    Newton corrector, step halving on failure or on multiplier jumps larger
    than MAX_JUMP.

    When halving runs out the branch is returned truncated with fold set if
    DF^p - I is near singular at the last orbit (fold_distance below
    fold_tol); otherwise the continuation failed and SolverFailure is raised.
    """
    if not max_step > 0:
        raise PreconditionError("max_step must be positive!")
    if len(path) == 0:
        raise PreconditionError("Empty parameter path!")

    start = path[0]
    if orbit.residual > 10 * tol:
        raise PreconditionError("Orbit not converged at path start!")

    branch = OrbitBranch(steps=[(start, orbit)])
    current: ndarray = _param_vector(start)
    previous_x: Optional[ndarray] = None
    previous_q: Optional[ndarray] = None

    for target in path[1:]:
        goal: ndarray = _param_vector(target)
        if np.linalg.norm(goal - current) <= 1e-15:
            _, orb_old = branch.steps[-1]
            orb_new = find_periodic(fam, target, orbit.period, orb_old.point, tol=tol)
            branch.steps.append((target, orb_new))
            continue

        while np.linalg.norm(goal - current) > 1e-15:
            q_old, orb_old = branch.steps[-1]
            h: float = min(max_step, float(np.linalg.norm(goal - current)))
            direction: ndarray = (goal - current) / np.linalg.norm(goal - current)

            accepted = False
            for _ in range(MAX_HALVINGS + 1):
                q_new: ndarray = current + h * direction
                x_pred: ndarray = precision.to_float(orb_old.point)
                if previous_x is not None:
                    dq = np.linalg.norm(current - previous_q)
                    if dq > 0:
                        slope = (x_pred - previous_x) / dq
                        x_pred = x_pred + h * slope

                try:
                    orb_new = find_periodic(
                        fam, _param_from(start, q_new), orbit.period, x_pred, tol=tol,
                    )
                except (SolverFailure, EscapeError):
                    h *= 0.5
                    continue

                if _jump(orb_old.multipliers, orb_new.multipliers) > MAX_JUMP:
                    h *= 0.5
                    continue

                accepted = True
                break

            if not accepted:
                distance = fold_distance(fam, orb_old)
                if distance >= fold_tol:
                    raise SolverFailure(
                        f"Continuation stalled at {orb_old.param} away from a fold "
                        f"(sigma_min(DF^p - I) = {distance:.3g})!",
                        residual = orb_old.residual,
                    )
                branch.truncated = True
                branch.fold = True
                logger.warning("orbit branch folds at %s (sigma_min %.3g)", orb_old.param, distance)
                return branch

            kind = _crossing(orb_old.multipliers, orb_new.multipliers)
            if kind is not None:
                branch.crossings.append((len(branch.steps), kind))
                logger.info("multiplier crossing (%s) near %s", kind, orb_new.param)

            previous_x = precision.to_float(orb_old.point)
            previous_q = current
            current = q_new
            branch.steps.append((orb_new.param, orb_new))

    return branch


# Contraction certificate

@dataclass(frozen=True)
class PhaseBox:
    """
    Box center + basis @ [-r_1, r_1] x ... x [-r_m, r_m]. With the identity
    basis this is an axis-aligned phase box.
    """
    center: ndarray
    half_widths: ndarray
    basis: Optional[ndarray] = None

    @classmethod
    def from_bounds(cls, lo: Sequence[float], hi: Sequence[float]) -> 'PhaseBox':
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        return cls(0.5 * (lo + hi), 0.5 * (hi - lo))

    @property
    def frame(self) -> ndarray:
        m = len(self.center)
        return np.eye(m) if self.basis is None else np.asarray(self.basis, dtype=float)

    def to_local(self, x: ndarray) -> ndarray:
        return np.linalg.solve(self.frame, (np.asarray(x) - self.center).T).T

    def to_phase(self, u: ndarray) -> ndarray:
        return self.center + np.asarray(u) @ self.frame.T


def sink_box(orbit: PeriodicOrbit, radius: float) -> PhaseBox:
    """
    Square box around the first orbit point in the real Jordan basis of the
    monodromy, where its norm equals its spectral radius.
    """
    eig: EigenData = orbit.multipliers
    vecs = eig.vectors
    if eig.is_real():
        basis = vecs.real
    else:
        basis = np.stack([vecs[:, 0].real, vecs[:, 0].imag], axis=1)
    m = orbit.points.shape[1]
    if basis.shape[1] != m or abs(np.linalg.det(basis)) < 1e-12:
        basis = np.eye(m)
    return PhaseBox(
        center = precision.to_float(orbit.point),
        half_widths = np.full(m, float(radius)),
        basis = basis,
    )


def contraction_certificate(
    fam: MapFamily,
    p: ParamPoint,
    box: PhaseBox,
    period: int,
    grid: int = 5,
) -> bool:
    """
    Sampled check: F^period maps every grid sample strictly inside the box
    and the largest operator norm of DF^period (in the box's basis) is < 1.
    Not a rigorous proof.
    """
    if grid < 2:
        raise PreconditionError(f"grid must be >= 2, got {grid}!")

    m: int = len(box.center)
    axes = [np.linspace(-r, r, grid) for r in box.half_widths]
    U: ndarray = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, m)
    X: ndarray = box.to_phase(U)

    J: ndarray = np.broadcast_to(np.eye(m), (len(X), m, m)).copy()
    Y: ndarray = X.copy()
    with np.errstate(over='ignore', invalid='ignore'):
        for _ in range(period):
            J = precision.to_float(fam.jacobian(p, Y)) @ J
            Y = precision.to_float(fam.map(p, Y))

    if not np.all(np.isfinite(Y)):
        return False

    inside: bool = bool(np.all(np.abs(box.to_local(Y)) < box.half_widths))
    if not inside:
        return False

    P = box.frame
    local = np.linalg.inv(P) @ J @ P
    norms = np.linalg.svd(local, compute_uv=False)[..., 0]
    return bool(np.max(norms) < 1.0)
