"""
One-dimensional invariant manifolds of saddles.

A manifold is parametrised by a chart s -> G^floor(s)(seed(s - floor(s))),
G = F^power, whose seed runs over a fundamental segment next to the saddle.
Arcs are adaptive samples of a chart controlled by segment length and
turning angle.
"""
import math
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from numpy import ndarray

from .. import precision
from ..errors import PreconditionError, UnsupportedOperation
from ..families import InverseFamily, MapFamily, ParamPoint
from ..orbits import SADDLE, PeriodicOrbit

logger = logging.getLogger(__name__)

UNSTABLE: str = 'unstable'
STABLE: str = 'stable'
PLUS: str = 'plus'
MINUS: str = 'minus'

SEED_EPS: float = 1e-8
SEED_NEIGHBOURHOOD: float = 1e-4
INITIAL_SAMPLES: int = 16
MAX_PASSES: int = 60
MAX_CHUNKS: int = 400
ESCAPE_RADIUS: float = 1e6
# t-gap below which an interval counts as unresolved
RESOLUTION_GAP: float = 4 * np.finfo(float).eps


class Accuracy(NamedTuple):
    h_max: float = 1e-3
    phi_max: float = math.radians(2.0)

    def halved(self) -> 'Accuracy':
        return Accuracy(0.5 * self.h_max, 0.5 * self.phi_max)


DEFAULT_ACCURACY: Accuracy = Accuracy()


class ManifoldChart:
    """
    Chart of the branch of W^u(origin) leaving along direction. The seed
    starts eps / multiplier out, so the fundamental segment ends about eps
    from the origin whatever the expansion.
    """

    def __init__(
        self,
        fam: MapFamily,
        p: ParamPoint,
        origin: ndarray,
        direction: ndarray,
        multiplier: float,
        power: int,
        eps: float = SEED_EPS,
    ):
        assert multiplier > 1.0
        self.fam: MapFamily = fam
        self.p: ParamPoint = p
        self.origin: ndarray = np.asarray(origin, dtype=float)
        self.direction: ndarray = np.asarray(direction, dtype=float) / np.linalg.norm(direction)
        self.multiplier: float = float(multiplier)
        self.power: int = int(power)
        self.eps: float = float(eps) / self.multiplier

        self.start: ndarray = self.origin + self.eps * self.direction
        self.delta: ndarray = self._G(self.start[None, :])[0] - self.start

    def _F(self, x: ndarray) -> ndarray:
        return precision.to_float(self.fam.map(self.p, x))

    def _DF(self, x: ndarray) -> ndarray:
        return precision.to_float(self.fam.jacobian(self.p, x))

    def _G(self, x: ndarray) -> ndarray:
        for _ in range(self.power):
            x = self._F(x)
        return x

    def seed(self, t: ndarray) -> tuple[ndarray, ndarray]:
        """
        Seed points and d/dt on the fundamental segment, t in [0, 1].
        """
        mu: float = self.multiplier
        t = np.asarray(t, dtype=float)
        w = (mu**t - 1.0) / (mu - 1.0)
        dw = math.log(mu) * mu**t / (mu - 1.0)
        X = self.start + w[..., None] * self.delta
        T = dw[..., None] * self.delta
        return X, T

    def evaluate(
        self,
        depth: ndarray,
        t: ndarray,
    ) -> tuple[ndarray, ndarray]:
        """
        Points and chart derivatives at (depth, t); depth counts applications
        of G. Keeping depth and t apart preserves the resolution of t.
        """
        depth = np.asarray(depth, dtype=int)
        t = np.asarray(t, dtype=float)
        depth, t = np.broadcast_arrays(depth, t)
        X, T = self.seed(t)
        X, T = X.copy(), T.copy()

        with precision.precision('double'), \
                np.errstate(over='ignore', invalid='ignore'):
            for j in range(int(depth.max(initial=0))):
                mask = depth > j
                if not np.any(mask):
                    break
                Y, S = X[mask], T[mask]
                for _ in range(self.power):
                    J = self._DF(Y)
                    S = np.einsum('...ij,...j->...i', J, S)
                    Y = self._F(Y)
                X[mask], T[mask] = Y, S
        return X, T

    def __call__(self, s: ndarray) -> tuple[ndarray, ndarray]:
        s = np.asarray(s, dtype=float)
        depth = np.floor(s).astype(int)
        return self.evaluate(depth, s - depth)


def unstable_chart(
    fam: MapFamily,
    p: ParamPoint,
    saddle: PeriodicOrbit,
    leg: str = PLUS,
    eps: float = SEED_EPS,
) -> ManifoldChart:
    if saddle.stability != SADDLE:
        raise PreconditionError(
            f"Manifolds need a hyperbolic saddle, got class '{saddle.stability}'!"
        )
    mu: complex = saddle.multipliers.multipliers[0]
    if abs(mu.imag) > 1e-12:
        raise PreconditionError("Unstable multiplier is not real!")

    v: ndarray = saddle.multipliers.unstable_vector
    if leg == MINUS:
        v = -v
    m2: int = 2 if mu.real < 0 else 1
    return ManifoldChart(
        fam = fam,
        p = p,
        origin = precision.to_float(saddle.point),
        direction = v,
        multiplier = abs(mu.real)**m2,
        power = saddle.period * m2,
        eps = eps,
    )


@dataclass(eq=False)
class ManifoldArc:
    positions: ndarray
    arclength: ndarray
    tangents: ndarray
    curvature: ndarray
    depth: ndarray
    params: ndarray
    side: str = UNSTABLE
    leg: str = PLUS
    accuracy: Accuracy = DEFAULT_ACCURACY
    chart: Optional[ManifoldChart] = None
    near_seed: bool = False
    unresolved: int = 0

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def length(self) -> float:
        return float(self.arclength[-1]) if len(self) else 0.0

    @property
    def h_max(self) -> float:
        return self.accuracy.h_max

    @property
    def phi_max(self) -> float:
        return self.accuracy.phi_max

    @classmethod
    def from_points(
        cls,
        points: Sequence[Sequence[float]],
        side: str = UNSTABLE,
        leg: str = PLUS,
        accuracy: Accuracy = DEFAULT_ACCURACY,
    ) -> 'ManifoldArc':
        """
        Arc through given vertices, tangents by finite differences.
        """
        X: ndarray = np.asarray(points, dtype=float)
        if len(X) < 2:
            raise PreconditionError("An arc needs at least two vertices!")
        seg = np.linalg.norm(np.diff(X, axis=0), axis=1)
        ell = np.concatenate([[0.0], np.cumsum(seg)])
        T = np.gradient(X, ell, axis=0)
        T = T / np.linalg.norm(T, axis=1, keepdims=True)
        return cls(
            positions = X,
            arclength = ell,
            tangents = T,
            curvature = _curvature(T, ell),
            depth = np.zeros(len(X), dtype=int),
            params = ell.copy(),
            side = side,
            leg = leg,
            accuracy = accuracy,
        )

    def segment_lengths(self) -> ndarray:
        return np.linalg.norm(np.diff(self.positions, axis=0), axis=1)

    def turning_angles(self) -> ndarray:
        dots = np.sum(self.tangents[:-1] * self.tangents[1:], axis=1)
        return np.arccos(np.clip(dots, -1.0, 1.0))

    def rows(self) -> list[dict]:
        m: int = self.positions.shape[1]
        out: list[dict] = []
        for i in range(len(self)):
            row: dict = {'index': i}
            for j in range(m):
                row[f"x{j}"] = self.positions[i, j]
            row['arclen'] = self.arclength[i]
            for j in range(m):
                row[f"tan_x{j}"] = self.tangents[i, j]
            row['curvature'] = self.curvature[i]
            row['depth'] = int(self.depth[i])
            out.append(row)
        return out


def _curvature(T: ndarray, ell: ndarray) -> ndarray:
    """
    Signed (planar) or unsigned curvature from consecutive unit tangents.
    """
    n: int = len(T)
    kappa: ndarray = np.zeros(n)
    if n < 3:
        return kappa
    a, b = T[:-2], T[2:]
    dl = ell[2:] - ell[:-2]
    angle = np.arccos(np.clip(np.sum(a * b, axis=1), -1.0, 1.0))
    if T.shape[1] == 2:
        angle = angle * np.sign(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    with np.errstate(divide='ignore', invalid='ignore'):
        kappa[1:-1] = np.where(dl > 0, angle / dl, 0.0)
    kappa[0], kappa[-1] = kappa[1], kappa[-2]
    return kappa


def _refine_chunk(
    chart: ManifoldChart,
    depth: int,
    acc: Accuracy,
) -> tuple[ndarray, ndarray, ndarray, int]:
    """
    Adaptive t-grid on one chunk such that consecutive vertices are at most
    h_max apart and their tangents turn by at most phi_max.
    """
    t: ndarray = np.linspace(0.0, 1.0, INITIAL_SAMPLES + 1)
    X, T = chart.evaluate(np.full(len(t), depth), t)
    unresolved: int = 0

    for _ in range(MAX_PASSES):
        finite = np.all(np.isfinite(X), axis=1)
        seg = np.linalg.norm(np.diff(X, axis=0), axis=1)
        U = T / np.linalg.norm(T, axis=1, keepdims=True)
        angle = np.arccos(np.clip(np.sum(U[:-1] * U[1:], axis=1), -1.0, 1.0))
        bad = ((seg > acc.h_max) | (angle > acc.phi_max)) & finite[:-1] & finite[1:]

        gap = np.diff(t)
        tiny = gap <= RESOLUTION_GAP
        unresolved = int(np.count_nonzero(bad & tiny))
        bad &= ~tiny
        if not np.any(bad):
            break

        mids: ndarray = 0.5 * (t[:-1][bad] + t[1:][bad])
        Xm, Tm = chart.evaluate(np.full(len(mids), depth), mids)
        order = np.argsort(np.concatenate([t, mids]), kind='stable')
        t = np.concatenate([t, mids])[order]
        X = np.concatenate([X, Xm])[order]
        T = np.concatenate([T, Tm])[order]

    return t, X, T, unresolved


def _grow(
    chart: ManifoldChart,
    budget: float,
    acc: Accuracy,
    side: str,
    leg: str,
) -> ManifoldArc:
    ts: list[ndarray] = []
    Xs: list[ndarray] = []
    Ts: list[ndarray] = []
    ds: list[ndarray] = []
    total: float = 0.0
    unresolved: int = 0
    last: Optional[ndarray] = None

    for depth in range(MAX_CHUNKS):
        t, X, T, bad = _refine_chunk(chart, depth, acc)
        unresolved += bad
        if depth > 0:
            # first vertex repeats the end of the previous chunk
            t, X, T = t[1:], X[1:], T[1:]

        finite = np.all(np.isfinite(X), axis=1) & (np.abs(X).max(axis=1) < ESCAPE_RADIUS)
        if not np.all(finite):
            k = int(np.argmin(finite))
            t, X, T = t[:k], X[:k], T[:k]
            logger.warning("arc left radius %g at depth %d; truncated", ESCAPE_RADIUS, depth)

        if last is None:
            seg = np.linalg.norm(np.diff(X, axis=0), axis=1)
            cum = np.concatenate([[0.0], np.cumsum(seg)])
        else:
            seg = np.linalg.norm(np.diff(np.vstack([last[None, :], X]), axis=0), axis=1)
            cum = total + np.cumsum(seg)

        if depth > 0 and len(cum) and cum[-1] >= budget:
            k = int(np.searchsorted(cum, budget))
            t, X, T, cum = t[:k + 1], X[:k + 1], T[:k + 1], cum[:k + 1]
            ts.append(t); Xs.append(X); Ts.append(T); ds.append(np.full(len(t), depth))
            total = float(cum[-1])
            break

        ts.append(t); Xs.append(X); Ts.append(T); ds.append(np.full(len(t), depth))
        if len(X) == 0:
            break
        total = float(cum[-1])
        last = X[-1]
        if depth == 0 and budget <= 0.0:
            break
        if not np.all(finite):
            break

    X = np.concatenate(Xs)
    T = np.concatenate(Ts)
    depth_arr = np.concatenate(ds).astype(int)
    params = depth_arr + np.concatenate(ts)
    U = T / np.linalg.norm(T, axis=1, keepdims=True)
    ell = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(X, axis=0), axis=1))])

    reach: float = float(np.max(np.linalg.norm(X - chart.origin, axis=1)))
    near_seed: bool = reach < SEED_NEIGHBOURHOOD
    if near_seed:
        logger.warning("arc budget %g reached inside the seed neighbourhood", budget)
    if unresolved:
        logger.warning("%d arc intervals unresolved at double resolution", unresolved)

    return ManifoldArc(
        positions = X,
        arclength = ell,
        tangents = U,
        curvature = _curvature(U, ell),
        depth = depth_arr,
        params = params,
        side = side,
        leg = leg,
        accuracy = acc,
        chart = chart,
        near_seed = near_seed,
        unresolved = unresolved,
    )


def grow_unstable(
    fam: MapFamily,
    p: ParamPoint,
    saddle: PeriodicOrbit,
    budget: float,
    acc: Accuracy = DEFAULT_ACCURACY,
    leg: str = PLUS,
    eps: float = SEED_EPS,
) -> ManifoldArc:
    """
    Grows the leg of W^u(saddle) until its arclength reaches budget. The
    seed segment is always included.
    """
    if budget < 0:
        raise PreconditionError(f"Arclength budget must be >= 0, got {budget}!")
    chart: ManifoldChart = unstable_chart(fam, p, saddle, leg=leg, eps=eps)
    logger.debug("growing unstable %s leg, budget %g", leg, budget)
    return _grow(chart, budget, acc, UNSTABLE, leg)


def grow_stable(
    fam: MapFamily,
    p: ParamPoint,
    saddle: PeriodicOrbit,
    budget: float,
    acc: Accuracy = DEFAULT_ACCURACY,
    leg: str = PLUS,
    eps: float = SEED_EPS,
) -> ManifoldArc:
    """
    W^s(saddle) grown as the unstable manifold of the inverse family.
    """
    if not fam.is_invertible(p):
        raise UnsupportedOperation(f"{fam.name} has no inverse at {p}; W^s cannot be grown!")
    if budget < 0:
        raise PreconditionError(f"Arclength budget must be >= 0, got {budget}!")
    if saddle.stability != SADDLE:
        raise PreconditionError(
            f"Manifolds need a hyperbolic saddle, got class '{saddle.stability}'!"
        )

    lam: complex = saddle.multipliers.multipliers[1]
    if abs(lam.imag) > 1e-12 or lam.real == 0.0:
        raise PreconditionError("Stable multiplier must be real and nonzero!")

    v: ndarray = saddle.multipliers.stable_vector
    if leg == MINUS:
        v = -v
    m2: int = 2 if lam.real < 0 else 1
    chart = ManifoldChart(
        fam = InverseFamily(fam),
        p = p,
        origin = precision.to_float(saddle.point),
        direction = v,
        multiplier = abs(1.0 / lam.real)**m2,
        power = saddle.period * m2,
        eps = eps,
    )
    return _grow(chart, budget, acc, STABLE, leg)


def tube_distance(arc: ManifoldArc) -> float:
    """
    Largest distance from G(vertex) to the arc over the vertices whose image
    lies inside the grown range.
    """
    from scipy.spatial import cKDTree

    if arc.chart is None or len(arc) < 2:
        return 0.0

    keep = arc.params + 1.0 <= arc.params[-1]
    if not np.any(keep):
        return 0.0
    images = arc.chart._G(arc.positions[keep])
    dist, _ = cKDTree(arc.positions).query(images)
    return float(np.max(dist))
