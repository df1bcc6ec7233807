"""
Stable leaves as graphs over a frame: the local stable manifold, its
preimages at the tangency level and the stack of preimage leaves W_n that
accumulate on it.

Leaves are found by pulling graphs back through F^power, i.e. by solving
F^power(x) in leaf along lines of a frame, so no inverse map is needed.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy import ndarray

from .. import precision
from ..errors import PreconditionError
from ..families import MapFamily, ParamPoint
from ..orbits import PeriodicOrbit

logger = logging.getLogger(__name__)

BISECTION_ROUNDS: int = 60
LOCAL_HALF_WIDTH: float = 5.0
LOCAL_SCAN: float = 1.0
LOCAL_TOL: float = 1e-14
LOCAL_MAX_ITER: int = 50
STACK_REACH: float = 0.5
STACK_MAX_SKIP: int = 200


@dataclass(frozen=True, eq=False)
class Frame:
    """
    Orthonormal frame: x = origin + sigma * e_arg + w * e_val.
    """
    origin: ndarray
    e_arg: ndarray
    e_val: ndarray

    def __post_init__(self):
        if len(self.origin) != 2:
            raise PreconditionError("Graph frames are planar!")

    @classmethod
    def vertical(cls, origin: Sequence[float]) -> 'Frame':
        """
        Graphs x = x0 - w(y): arguments along y, values towards -x.
        """
        return cls(
            origin = np.asarray(origin, dtype=float),
            e_arg = np.array([0.0, 1.0]),
            e_val = np.array([-1.0, 0.0]),
        )

    @classmethod
    def horizontal(cls, origin: Sequence[float] = (0.0, 0.0)) -> 'Frame':
        return cls(
            origin = np.asarray(origin, dtype=float),
            e_arg = np.array([1.0, 0.0]),
            e_val = np.array([0.0, 1.0]),
        )

    @classmethod
    def eigen(cls, saddle: PeriodicOrbit) -> 'Frame':
        """
        Arguments along the stable eigenvector; values along the normal that
        points to the side of the unstable eigenvector.
        """
        v_s: ndarray = saddle.multipliers.stable_vector
        v_s = v_s / np.linalg.norm(v_s)
        normal: ndarray = np.array([-v_s[1], v_s[0]])
        if normal @ saddle.multipliers.unstable_vector < 0:
            normal = -normal
        return cls(precision.to_float(saddle.point), v_s, normal)

    def to_phase(self, sigma: ndarray, w: ndarray) -> ndarray:
        sigma, w = np.broadcast_arrays(np.asarray(sigma, dtype=float), np.asarray(w, dtype=float))
        return self.origin + sigma[..., None] * self.e_arg + w[..., None] * self.e_val

    def to_frame(self, X: ndarray) -> tuple[ndarray, ndarray]:
        d = np.asarray(X, dtype=float) - self.origin
        return d @ self.e_arg, d @ self.e_val

    def along(self, v: ndarray) -> tuple[ndarray, ndarray]:
        """
        Components of a vector (not a point).
        """
        v = np.asarray(v, dtype=float)
        return v @ self.e_arg, v @ self.e_val


@dataclass(eq=False)
class GraphLeaf:
    """
    A leaf w = g(sigma) over [sigma[0], sigma[-1]] in a frame, stored as a
    cubic spline. index is the preimage power that produced it.
    """
    frame: Frame
    sigma: ndarray
    w: ndarray
    index: int = 0
    _spline: object = field(default=None, init=False, repr=False)

    def __post_init__(self):
        from scipy.interpolate import CubicSpline

        self.sigma = np.asarray(self.sigma, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        if len(self.sigma) < 2 or np.any(np.diff(self.sigma) <= 0):
            raise PreconditionError("A graph leaf needs >= 2 increasing arguments!")
        self._spline = CubicSpline(self.sigma, self.w)

    def __len__(self) -> int:
        return len(self.sigma)

    @classmethod
    def from_arc(cls, arc, frame: Frame, index: int = 0) -> 'GraphLeaf':
        """
        Reads an arc as a graph in frame; the arc must be monotone in the
        frame argument.
        """
        sigma, w = frame.to_frame(arc.positions)
        if np.all(np.diff(sigma) < 0):
            sigma, w = sigma[::-1], w[::-1]
        if not np.all(np.diff(sigma) > 0):
            raise PreconditionError("Arc is not a graph over the frame argument!")
        return cls(frame, sigma, w, index)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.sigma[0]), float(self.sigma[-1])

    def covers(self, s) -> ndarray:
        lo, hi = self.domain
        s = np.asarray(s, dtype=float)
        return (s >= lo) & (s <= hi)

    def value(self, s) -> ndarray:
        """
        Graph value; NaN outside the domain.
        """
        s = np.asarray(s, dtype=float)
        inside = self.covers(s)
        out = np.full(s.shape, np.nan)
        out[inside] = self._spline(s[inside])
        return out if out.ndim else float(out)

    def derivative(self, s, nu: int = 1) -> ndarray:
        s = np.asarray(s, dtype=float)
        out = self._spline(s, nu)
        return out if np.ndim(out) else float(out)

    def points(self) -> ndarray:
        return self.frame.to_phase(self.sigma, self.w)

    @property
    def height(self) -> float:
        return float(np.max(np.abs(self.w)))

    @property
    def max_slope(self) -> float:
        return float(np.max(np.abs(self._spline(self.sigma, 1))))

    def height_above(self, other: 'GraphLeaf') -> ndarray:
        """
        w - other(sigma) on this leaf's arguments, NaN where other is absent.
        """
        return self.w - other.value(self.sigma)

    def rows(self) -> list[dict]:
        X = self.points()
        return [
            {'index': i, 'sigma': self.sigma[i], 'w': self.w[i], 'x0': X[i, 0], 'x1': X[i, 1]}
            for i in range(len(self))
        ]


def _iterate(fam: MapFamily, p: ParamPoint, X: ndarray, power: int) -> ndarray:
    with precision.precision('double'), \
            np.errstate(over='ignore', invalid='ignore'):
        for _ in range(power):
            X = precision.to_float(fam.map(p, X))
    return X


def _residual(
    fam: MapFamily,
    p: ParamPoint,
    leaf: GraphLeaf,
    frame: Frame,
    power: int,
    sigma: ndarray,
    w: ndarray,
) -> ndarray:
    """
    Signed leaf-frame offset of F^power(frame point) from the leaf, NaN
    where the image misses the leaf domain.
    """
    Y = _iterate(fam, p, frame.to_phase(sigma, w), power)
    s, v = leaf.frame.to_frame(Y)
    with np.errstate(invalid='ignore'):
        return v - leaf.value(s)


def _longest_run(mask: ndarray) -> slice:
    best, best_len, start = slice(0, 0), 0, None
    for i, ok in enumerate(np.append(mask, False)):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            if i - start > best_len:
                best, best_len = slice(start, i), i - start
            start = None
    return best


def pull_back(
    fam: MapFamily,
    p: ParamPoint,
    leaf: GraphLeaf,
    frame: Frame,
    power: int,
    sigma: ndarray,
    w: ndarray,
    offset: Optional[GraphLeaf] = None,
    rounds: int = BISECTION_ROUNDS,
) -> Optional[GraphLeaf]:
    """
    The graph of {x : F^power(x) in leaf} over sigma in frame. Along every
    line sigma = const the first root of the scan w (ascending, shifted by
    offset(sigma) when given) is taken. Only the longest contiguous run of
    arguments with a root is kept; None when fewer than four remain.
    """
    sigma = np.asarray(sigma, dtype=float)
    w = np.asarray(w, dtype=float)
    base: ndarray = np.zeros(len(sigma)) if offset is None else offset.value(sigma)

    S = np.broadcast_to(sigma[:, None], (len(sigma), len(w)))
    W = base[:, None] + w[None, :]
    R = _residual(fam, p, leaf, frame, power, S, W)

    with np.errstate(invalid='ignore'):
        change = (R[:, :-1] * R[:, 1:] <= 0.0) & np.isfinite(R[:, :-1]) & np.isfinite(R[:, 1:])
    found = change.any(axis=1) & np.isfinite(base)
    j = np.argmax(change, axis=1)
    rows = np.arange(len(sigma))

    lo, hi = W[rows, j], W[rows, j + 1]
    f_lo = R[rows, j]
    exact = f_lo == 0.0
    hi = np.where(exact, lo, hi)

    for _ in range(rounds):
        mid = 0.5 * (lo + hi)
        f_mid = _residual(fam, p, leaf, frame, power, sigma, mid)
        with np.errstate(invalid='ignore'):
            same = f_mid * f_lo > 0.0
        zero = f_mid == 0.0
        lo = np.where(same | zero, mid, lo)
        f_lo = np.where(same, f_mid, f_lo)
        hi = np.where(same, hi, mid)

    root = 0.5 * (lo + hi)
    run = _longest_run(found & np.isfinite(root))
    if run.stop - run.start < 4:
        logger.debug("pull-back of power %d has no root run", power)
        return None
    return GraphLeaf(frame, sigma[run], root[run], index=power)


def local_stable_leaf(
    fam: MapFamily,
    p: ParamPoint,
    saddle: PeriodicOrbit,
    half_width: float = LOCAL_HALF_WIDTH,
    scan: float = LOCAL_SCAN,
    samples: int = 401,
    scan_samples: int = 201,
    tol: float = LOCAL_TOL,
    max_iter: int = LOCAL_MAX_ITER,
) -> GraphLeaf:
    """
    W^s_loc(saddle) as the fixed point of the pull-back graph transform in
    the eigen frame, started from the stable eigen-line.
    """
    frame: Frame = Frame.eigen(saddle)
    sigma: ndarray = np.linspace(-half_width, half_width, samples)
    w: ndarray = np.linspace(-scan, scan, scan_samples)
    leaf = GraphLeaf(frame, sigma, np.zeros(samples), index=0)

    for it in range(max_iter):
        new = pull_back(fam, p, leaf, frame, saddle.period, sigma, w)
        if new is None:
            raise PreconditionError(f"Local stable leaf lost at {p} (iteration {it})!")
        change = np.nanmax(np.abs(new.w - leaf.value(new.sigma)))
        leaf = GraphLeaf(frame, new.sigma, new.w, index=0)
        logger.debug("local stable leaf iteration %d: change %.3e", it, change)
        if change <= tol:
            break
    else:
        logger.warning("local stable leaf not settled to %g after %d iterations", tol, max_iter)

    return leaf


def tangency_leaf(
    fam: MapFamily,
    p: ParamPoint,
    local: GraphLeaf,
    origin: Sequence[float] = (2.0, 0.0),
    half_width: float = LOCAL_HALF_WIDTH,
    scan: float = LOCAL_SCAN,
    samples: int = 401,
    scan_samples: int = 201,
    power: int = 1,
) -> GraphLeaf:
    """
    The preimage F^{-power}(W^s_loc) near origin as a graph x = x0 - w(y).
    """
    frame: Frame = Frame.vertical(origin)
    leaf = pull_back(
        fam, p, local, frame, power,
        sigma = np.linspace(-half_width, half_width, samples),
        w = np.linspace(-scan, scan, scan_samples),
    )
    if leaf is None:
        raise PreconditionError(f"No preimage of the local stable leaf near {tuple(origin)} at {p}!")
    return leaf


def level_leaf(
    fam: MapFamily,
    p: ParamPoint,
    leaf: GraphLeaf,
    power: int,
    sigma: ndarray,
    reach: float = STACK_REACH,
    scan_samples: int = 400,
) -> Optional[GraphLeaf]:
    """
    Nearest preimage F^{-power}(leaf) on the positive side of leaf, in the
    leaf's own frame.
    """
    grid: ndarray = reach * np.logspace(-16, 0, scan_samples)
    return pull_back(fam, p, leaf, leaf.frame, power, sigma, grid, offset=leaf)


@dataclass
class StableLeafStack:
    """
    Preimages W_n = F^{-n}(base) near the local stable leaf, indexed by n.
    Heights are measured from W^s_loc.
    """
    base: GraphLeaf
    local: GraphLeaf
    leaves: list[GraphLeaf] = field(default_factory=list)
    requested: int = 0
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.leaves)

    @property
    def indices(self) -> list[int]:
        return [leaf.index for leaf in self.leaves]

    def leaf(self, n: int) -> GraphLeaf:
        for leaf in self.leaves:
            if leaf.index == n:
                return leaf
        raise KeyError(n)

    @property
    def heights(self) -> ndarray:
        return np.array([np.nanmax(np.abs(leaf.height_above(self.local))) for leaf in self.leaves])

    @property
    def slopes(self) -> ndarray:
        return np.array([leaf.max_slope for leaf in self.leaves])

    def ratios(self) -> ndarray:
        h = self.heights
        return h[1:] / h[:-1]

    def rows(self) -> list[dict]:
        return [
            {'n': n, 'height': h, 'max_slope': s}
            for n, h, s in zip(self.indices, self.heights, self.slopes)
        ]


def stable_leaf_stack(
    fam: MapFamily,
    p: ParamPoint,
    saddle: PeriodicOrbit,
    base: GraphLeaf,
    count: int,
    offset: Optional[int] = 1,
    reach: float = STACK_REACH,
    samples: int = 201,
    scan_samples: int = 400,
    local: Optional[GraphLeaf] = None,
) -> StableLeafStack:
    """
    W_n = F^{-n}(base) for count consecutive n starting at offset, as graphs
    over W^s_loc in the eigen frame. With offset None the stack starts at
    the first n whose leaf lies within reach of W^s_loc. A leaf that cannot
    be found ends the stack.
    """
    if count < 0:
        raise PreconditionError(f"count must be >= 0, got {count}!")
    if local is None:
        local = local_stable_leaf(fam, p, saddle)

    frame: Frame = local.frame
    sigma: ndarray = np.linspace(*local.domain, samples)
    grid: ndarray = reach * np.logspace(-16, 0, scan_samples)
    stack = StableLeafStack(base=base, local=local, requested=count)

    n: int = 1 if offset is None else offset
    skipped: int = 0
    while len(stack) < count:
        leaf = pull_back(fam, p, base, frame, n * saddle.period, sigma, grid, offset=local)
        if leaf is None:
            if offset is None and not stack.leaves and skipped < STACK_MAX_SKIP:
                skipped += 1
                n += 1
                continue
            stack.truncated = True
            logger.warning("stable leaf stack truncated at %d of %d leaves", len(stack), count)
            break
        leaf.index = n
        stack.leaves.append(leaf)
        n += 1

    return stack
