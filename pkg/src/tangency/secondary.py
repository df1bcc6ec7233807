"""
The fold chain z -> z1 -> z2 -> z3 near a sink window, secondary
tangencies of z3 with preimage leaves, and double tangencies.

All chain points live on one base piece through the tip z, the local
quadratic model z + u e_t + q u^2 e_axis, pushed forward K times:

    c'   unstable coordinate of F^{theta n}(u) equals that of F^{-N}(z)
    z1   lowest point of F^{theta n + N} near c'
    z2   F^n of the sub-piece of z1 that stays within L (lam^theta mu)^n
    z3   lowest point of F^{theta n + N + n + N} on that sub-piece

A chain built on a base chain takes the base's z3 as its tip, so chains
nest once per box generation.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy import ndarray

from .. import precision
from ..errors import (
    BracketError,
    ChainLostError,
    ExtrapolationRefused,
    NoTangencyInRange,
    PrecisionExhausted,
    PreconditionError,
    SolverFailure,
    TangentialIntersectionError,
    ToolkitError,
)
from ..families import MapFamily, ParamPoint, theta_window
from ..manifolds import VERTICAL, FoldPoint, GraphLeaf, StableLeafStack, pull_back
from ..manifolds.leaves import STACK_REACH
from ..orbits import PeriodicOrbit
from .frame import DEFAULT_OPTIONS, LEVEL_SAMPLES, MAX_LEVEL, HenonUnfolding, LeafSelector, UnfoldingOptions, unfolding_at
from .gap import TangencyProblem, tangency_gap
from .records import SECONDARY, TangencyRecord
from .solve import DEFAULT_TOL, FD_STEP, solve_tangency

logger = logging.getLogger(__name__)

CHAIN_L: float = 10.0
SLAB_FACTOR: float = 5.0
MAX_NEWTON: int = 30
MAX_DAMPING: int = 8
MAX_CONDITION: float = 1e12
CHAIN_FLOOR: float = 1e3
# steps from the tangency leaf into the reach of the stack
STACK_PULLBACK: int = 2

Orders = tuple[tuple[int, int], ...]


class _Piece:
    """
    Quadratic model of the manifold through a fold, pushed forward.
    """
    u0: float = 0.0
    lead: int = 0

    def __init__(self, fam: MapFamily, p: ParamPoint, z: FoldPoint):
        self.fam = fam
        self.p = p
        self.z = z
        self.e_axis = np.zeros(2)
        self.e_axis[z.component] = 1.0
        self.e_t = np.zeros(2)
        self.e_t[1 - z.component] = 1.0

    @property
    def resolution(self) -> float:
        return 0.0

    def evaluate(self, u, K: int) -> tuple[ndarray, ndarray]:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        q = self.z.q
        X = self.z.position + u[:, None] * self.e_t + (q * u**2)[:, None] * self.e_axis
        T = self.e_t + (2 * q * u)[:, None] * self.e_axis
        with precision.precision('double'), \
                np.errstate(over='ignore', invalid='ignore'):
            for _ in range(K):
                J = precision.to_float(self.fam.jacobian(self.p, X))
                T = np.einsum('...ij,...j->...i', J, T)
                X = precision.to_float(self.fam.map(self.p, X))
        return X, T

    def sub(self, u0: float, lead: int) -> '_SubPiece':
        return _SubPiece(self, u0, lead)


class _SubPiece:
    """
    The piece around base coordinate u0 after lead steps; v = u - u0.
    """

    def __init__(self, base: _Piece, u0: float, lead: int):
        self.base = base
        self.u0 = float(u0)
        self.lead = int(lead)

    @property
    def z(self) -> FoldPoint:
        return self.base.z

    @property
    def resolution(self) -> float:
        return float(np.spacing(abs(self.u0)))

    def evaluate(self, v, K: int) -> tuple[ndarray, ndarray]:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return self.base.evaluate(self.u0 + v, self.lead + K)

    def sub(self, v0: float, lead: int) -> '_SubPiece':
        return _SubPiece(self.base, self.u0 + v0, self.lead + lead)


@dataclass(eq=False)
class FoldChain:
    param: ParamPoint
    n: int
    N: int
    theta: float
    theta_n: int
    z: FoldPoint
    z1: FoldPoint
    z2: ndarray
    z3: FoldPoint
    u_c: float
    u1: float
    interval: tuple[float, float]
    u3: float
    height_z: float
    height_z1: float
    height_z3: float
    piece: object = field(default=None, repr=False)
    parent: Optional['FoldChain'] = field(default=None, repr=False)

    @property
    def K1(self) -> int:
        return self.theta_n + self.N

    @property
    def K2(self) -> int:
        return self.K1 + self.n

    @property
    def K3(self) -> int:
        return self.K2 + self.N

    def lineage(self) -> list['FoldChain']:
        """
        Chains from the one on the primary tip down to this one.
        """
        chains: list[FoldChain] = []
        chain: Optional[FoldChain] = self
        while chain is not None:
            chains.append(chain)
            chain = chain.parent
        return chains[::-1]

    @property
    def generation(self) -> int:
        return len(self.lineage())

    @property
    def orders(self) -> Orders:
        return tuple((c.n, c.N) for c in self.lineage())

    def record(self) -> dict:
        return {
            'param': self.param.as_dict(),
            'n': self.n,
            'N': self.N,
            'generation': self.generation,
            'theta': self.theta,
            'theta_n': self.theta_n,
            'z': [float(v) for v in self.z.position],
            'z1': [float(v) for v in self.z1.position],
            'z2': [float(v) for v in self.z2],
            'z3': [float(v) for v in self.z3.position],
            'height_z': self.height_z,
            'height_z1': self.height_z1,
            'height_z3': self.height_z3,
        }


def default_theta(lam: float, mu: float) -> float:
    return theta_window(abs(lam), abs(lam), abs(mu), abs(mu)).midpoint


def _lowest(f, lo: float, hi: float, name: str) -> float:
    from scipy.optimize import minimize_scalar

    width = hi - lo
    result = minimize_scalar(
        lambda u: f(u) if np.isfinite(f(u)) else 1e300,
        bounds = (lo, hi),
        method = 'bounded',
        options = {'xatol': max(width * 1e-10, 1e-300)},
    )
    u = float(result.x)
    if not np.isfinite(f(u)):
        raise ChainLostError(f"{name} left the tracked region!")
    if min(u - lo, hi - u) <= 1e-6 * width:
        raise ChainLostError(f"{name} sits at the edge of its piece; no fold inside!")
    return u


def _fold_at(piece, u: float, K: int, width: float, role: str) -> FoldPoint:
    du = 1e-3 * width
    X, T = piece.evaluate(np.array([u - du, u, u + du]), K)
    s = np.linalg.norm(T[1]) * du
    c = piece.z.component
    q = (X[0, c] + X[2, c] - 2 * X[1, c]) / (2 * s**2) if s > 0 else 0.0
    return FoldPoint(position=X[1], axis=VERTICAL, q=float(q), role=role)


def fold_chain(
    fam: MapFamily,
    p: ParamPoint,
    n: int,
    N: int,
    theta: Optional[float] = None,
    options: UnfoldingOptions = DEFAULT_OPTIONS,
    L: float = CHAIN_L,
    base: Optional[FoldChain] = None,
) -> FoldChain:
    """
    The fold chain of order n at p; p should lie near the sink window of
    order n so that z1 returns after n + N steps. With a base chain (built
    at the same p) the chain starts from the base's z3 instead of the tip.
    """
    from scipy.optimize import brentq

    if n < 1 or N < 1:
        raise PreconditionError(f"Fold chain needs n >= 1 and N >= 1, got n={n}, N={N}!")
    p = fam.params(p)
    unfolding = unfolding_at(fam, p, options)

    mu: float = abs(unfolding.saddle.multipliers.mu)
    lam: float = abs(unfolding.saddle.multipliers.lam1)
    if theta is None:
        theta = default_theta(lam, mu)
    tn: int = max(1, int(round(theta * n)))
    K1, K2, K3 = tn + N, tn + N + n, tn + 2 * N + n

    eig = unfolding.eigen_frame
    local = unfolding.local_leaf
    leaf = unfolding.tangency_leaf

    def unstable_coordinate(X: ndarray) -> ndarray:
        s, w = eig.to_frame(X)
        return w - local.value(s)

    if base is None:
        z: FoldPoint = unfolding.tip
        chart = unfolding.arc.chart
        if z.depth is None or z.t is None or chart is None:
            raise PreconditionError("Tip fold was not refined on the manifold chart!")
        if chart.power != 1:
            raise PreconditionError("Fold chains need a chart of power 1!")
        if z.depth < N:
            raise ChainLostError(f"Return time {N} exceeds the tip depth {z.depth}!")
        q3, _ = chart.evaluate(np.array([z.depth - N]), np.array([z.t]))
        piece = _Piece(fam, p, z)
        height_z: float = tangency_gap(z, leaf)
    else:
        z = base.z3
        if base.K3 < N:
            raise ChainLostError(f"Return time {N} exceeds the base chain length {base.K3}!")
        q3, _ = base.piece.evaluate(base.u3, base.K3 - N)
        piece = base.piece.sub(base.u3, base.K3)
        height_z = base.height_z3
    level = float(unstable_coordinate(q3)[0])

    def height(u, K: int) -> ndarray:
        X, _ = piece.evaluate(u, K)
        s, w = leaf.frame.to_frame(X)
        return w - leaf.value(s)

    def exit_offset(u: float) -> float:
        X, _ = piece.evaluate(u, tn)
        return float(unstable_coordinate(X)[0]) - level

    # c': right branch of the piece reaching the level of F^{-N}(z)
    u_lo, u_hi = 0.0, max(1e-14, 4 * piece.resolution)
    if not exit_offset(u_lo) < 0.0:
        raise ChainLostError(f"Tip exits before theta n = {tn} steps at {p}; not near a window of order {n}!")
    while True:
        f_hi = exit_offset(u_hi)
        if np.isfinite(f_hi) and f_hi >= 0.0:
            break
        u_lo, u_hi = u_hi, 2 * u_hi
        if u_hi > 1.0:
            raise ChainLostError("c' not found on the right branch!")
    u_c: float = brentq(exit_offset, u_lo, u_hi, xtol=1e-15 * u_hi, rtol=4 * np.finfo(float).eps)

    _, T = piece.evaluate(u_c, tn)
    delta: float = L * lam**tn / float(np.linalg.norm(T[0]))
    if not delta > CHAIN_FLOOR * piece.resolution:
        raise PrecisionExhausted(
            f"Chain of order {n} needs a piece of half-width {delta:.3e}, below the "
            f"double resolution {piece.resolution:.3e} of its base!"
        )
    lo, hi = u_c - delta, u_c + delta

    h1 = lambda u: float(height(u, K1)[0])
    u1: float = _lowest(h1, lo, hi, 'z1')
    height_z1: float = h1(u1)

    rise: float = L * (lam**theta * mu)**n

    def above(u: float) -> float:
        value = h1(u)
        return value - height_z1 - rise if np.isfinite(value) else 1e300

    a, b = lo, hi
    if above(lo) > 0.0:
        a = brentq(above, lo, u1, xtol=1e-12 * delta)
    if above(hi) > 0.0:
        b = brentq(above, u1, hi, xtol=1e-12 * delta)

    z2, _ = piece.evaluate(u1, K2)

    h3 = lambda u: float(height(u, K3)[0])
    u3: float = _lowest(h3, a, b, 'z3')

    chain = FoldChain(
        param = p,
        n = n,
        N = N,
        theta = theta,
        theta_n = tn,
        z = z,
        z1 = _fold_at(piece, u1, K1, hi - lo, 'z1'),
        z2 = z2[0],
        z3 = _fold_at(piece, u3, K3, b - a, 'z3'),
        u_c = u_c,
        u1 = u1,
        interval = (a, b),
        u3 = u3,
        height_z = height_z,
        height_z1 = height_z1,
        height_z3 = h3(u3),
        piece = piece,
        parent = base,
    )
    logger.debug(
        "fold chain n=%d (generation %d) at %s: heights z %.3e, z1 %.3e, z3 %.3e",
        n, chain.generation, p, chain.height_z, chain.height_z1, chain.height_z3,
    )
    return chain


def chain_stack(
    fam: MapFamily,
    p: ParamPoint,
    orders: Orders,
    theta: Optional[float] = None,
    options: UnfoldingOptions = DEFAULT_OPTIONS,
    L: float = CHAIN_L,
) -> FoldChain:
    """
    Nested chains for orders ((n1, N1), (n2, N2), ...), each built on the
    z3 of the previous one; returns the innermost.
    """
    if not orders:
        raise PreconditionError("A chain stack needs at least one order!")
    chain: Optional[FoldChain] = None
    for n, N in orders:
        chain = fold_chain(fam, p, n, N, theta, options, L, base=chain)
    return chain


@dataclass(frozen=True)
class ChainTip:
    """
    Selector for the z3 fold of the chain of order n, nested under the
    chains of the base orders.
    """
    n: int
    N: int
    theta: Optional[float] = None
    options: UnfoldingOptions = DEFAULT_OPTIONS
    L: float = CHAIN_L
    base: Orders = ()

    def __call__(self, fam: MapFamily, p: ParamPoint) -> FoldPoint:
        return chain_stack(fam, p, self.base + ((self.n, self.N),), self.theta, self.options, self.L).z3


def track_z3(
    fam: MapFamily,
    chain: FoldChain,
    p: ParamPoint,
    options: UnfoldingOptions = DEFAULT_OPTIONS,
    saddle: Optional[PeriodicOrbit] = None,
) -> FoldPoint:
    """
    The z3 fold at a parameter near chain.param, re-minimised over the
    sub-intervals of the chain and its bases from the re-bisected tip.
    Grows no arc.
    """
    lineage = chain.lineage()
    reference = unfolding_at(fam, lineage[0].param, options)
    z = reference.refine_tip(p, saddle)
    piece = _Piece(fam, p, FoldPoint(
        position = z.position,
        axis = z.axis,
        q = lineage[0].z.q,
        depth = z.depth,
        t = z.t,
        role = 'z',
    ))
    frame = reference.tangency_leaf.frame

    fold: Optional[FoldPoint] = None
    for link in lineage:
        def w(u: float) -> float:
            X, _ = piece.evaluate(u, link.K3)
            return float(frame.to_frame(X)[1][0])

        a, b = link.interval
        u3 = _lowest(w, a, b, 'z3')
        fold = _fold_at(piece, u3, link.K3, b - a, 'z3')
        piece = piece.sub(u3, link.K3)
    return fold


def stack_level_leaf(unfolding: HenonUnfolding, stack: StableLeafStack, k: int) -> Optional[GraphLeaf]:
    """
    V_k as the short pull-back of the deepest stack leaf W_j below it:
    F^{-(k+1)}(tangency leaf) = F^{-(k+1-j)}(W_j). Levels too shallow for
    the stack fall back to the direct preimage.
    """
    period: int = unfolding.saddle.period
    usable = [j for j in stack.indices if j * period <= k + 1 - STACK_PULLBACK]
    if not usable:
        return unfolding.level_leaf(k)
    j = max(usable)
    half = unfolding.options.footprint
    leaf = pull_back(
        unfolding.fam, unfolding.p, stack.leaf(j), unfolding.tangency_leaf.frame,
        k + 1 - j * period,
        sigma = np.linspace(-half, half, LEVEL_SAMPLES),
        w = STACK_REACH * np.logspace(-16, 0, 400),
        offset = unfolding.tangency_leaf,
    )
    if leaf is not None:
        leaf.index = k + 1
    return leaf


def deepest_leaf(
    fam: MapFamily,
    p: ParamPoint,
    z3: FoldPoint,
    options: UnfoldingOptions,
    k_max: int = MAX_LEVEL,
    stack: Optional[StableLeafStack] = None,
) -> int:
    """
    Smallest k such that z3 lies on or above V_k; the level leaves come
    from the stack when one is given.
    """
    unfolding = unfolding_at(fam, p, options)
    for k in range(k_max):
        leaf = unfolding.level_leaf(k) if stack is None else stack_level_leaf(unfolding, stack, k)
        if leaf is None:
            continue
        try:
            if tangency_gap(z3, leaf) >= 0.0:
                return k
        except ExtrapolationRefused:
            continue
    raise NoTangencyInRange(f"z3 lies below every level leaf up to k={k_max} at {p}!")


def secondary_tangency(
    fam: MapFamily,
    p: ParamPoint,
    n: int,
    N: int,
    theta: Optional[float] = None,
    options: UnfoldingOptions = DEFAULT_OPTIONS,
    width: Optional[float] = None,
    L: float = CHAIN_L,
    tol: float = DEFAULT_TOL,
    stack: Optional[StableLeafStack] = None,
    base: Orders = (),
) -> TangencyRecord:
    """
    Tangency of the z3 fold with the deepest level leaf it reaches, solved
    in the free parameter inside a slab around p. The slab starts at five
    window widths and grows fivefold up to lam^{theta n}.

    stack supplies the leaves the deepest level is read from (built at p,
    see unfolding.stack); the solve itself re-derives V_k at every trial
    parameter. base lists the orders of the chains the z3 fold is nested
    under, outermost first.
    """
    p = fam.params(p)
    chain = chain_stack(fam, p, base + ((n, N),), theta, options, L)
    if chain.height_z3 <= 0.0:
        raise NoTangencyInRange(f"z3 lies below the tangency leaf at {p}!")
    k_star: int = deepest_leaf(fam, p, chain.z3, options, stack=stack)

    lam: float = abs(unfolding_at(fam, p, options).saddle.multipliers.lam1)
    cap: float = lam**chain.theta_n
    half: float = SLAB_FACTOR * width if width else 1e-3 * cap
    free: str = options.free
    center: float = float(p[free])
    tip = ChainTip(n, N, chain.theta, options, L, base)

    while half <= cap:
        for k in (k_star, k_star - 1):
            if k < 0:
                continue
            try:
                record = solve_tangency(
                    fam, p, free, (center - half, center + half),
                    fold_selector = tip,
                    leaf_selector = LeafSelector(options, k),
                    tol = tol,
                    kind = SECONDARY,
                    n = n,
                    n0 = n - k,
                    leaf_id = k,
                )
            except BracketError:
                continue
            except PrecisionExhausted:
                raise
            except ToolkitError as e:
                logger.debug("secondary solve with V_%d over +-%.3e failed: %s", k, half, e)
                continue
            logger.info("secondary tangency n=%d n0=%d at %s", n, n - k, record.param)
            return record
        half *= SLAB_FACTOR

    raise NoTangencyInRange(
        f"No secondary tangency of order {n} within {cap:.3e} of {free}={center:.16g}!"
    )


# Double tangencies

def _newton_pair(
    problems: Sequence[TangencyProblem],
    base: ParamPoint,
    names: tuple[str, str],
    x0: ndarray,
    tol: float,
    max_iter: int = MAX_NEWTON,
) -> ParamPoint:
    def point(x: ndarray) -> ParamPoint:
        return base.replace(**{names[0]: float(x[0]), names[1]: float(x[1])})

    def G(x: ndarray) -> ndarray:
        return np.array([problem.gap(point(x)) for problem in problems])

    def jacobian(x: ndarray) -> ndarray:
        J = np.empty((2, 2))
        for j in range(2):
            h = FD_STEP * max(1.0, abs(x[j]))
            e = np.zeros(2)
            e[j] = h
            J[:, j] = (G(x + e) - G(x - e)) / (2 * h)
        return J

    x: ndarray = np.asarray(x0, dtype=float)
    g: ndarray = G(x)
    for it in range(max_iter):
        J = jacobian(x)
        if not np.all(np.isfinite(J)) or np.linalg.cond(J) > MAX_CONDITION:
            raise TangentialIntersectionError(
                f"Gap Jacobian is singular at {point(x)}; the tangency curves do not cross "
                "transversally!",
                float(np.max(np.abs(g))),
            )
        if np.max(np.abs(g)) <= tol:
            return point(x)

        dx = np.linalg.solve(J, -g)
        scale = 1.0
        for _ in range(MAX_DAMPING + 1):
            trial = x + scale * dx
            try:
                g_trial = G(trial)
            except ToolkitError:
                scale *= 0.5
                continue
            if np.max(np.abs(g_trial)) < np.max(np.abs(g)):
                break
            scale *= 0.5
        else:
            raise SolverFailure(
                f"Double-tangency Newton stalled at {point(x)}!", float(np.max(np.abs(g))),
            )
        x, g = trial, g_trial
        logger.debug("double tangency newton %d: residuals %s", it, g)

    raise SolverFailure(
        f"Double-tangency Newton did not converge: residuals {g} at {point(x)}!",
        float(np.max(np.abs(g))),
    )


def double_tangency(
    fam: MapFamily,
    seeds: tuple[TangencyRecord, TangencyRecord],
    free_names: tuple[str, str] = ('a', 'b'),
    tol: float = DEFAULT_TOL,
    base: Optional[ParamPoint] = None,
) -> ParamPoint:
    """
    Parameter point where both seed tangency conditions hold, by Newton's
    method on the pair of gaps started between the seeds.
    """
    problems = [seed.problem for seed in seeds]
    if any(problem is None for problem in problems):
        raise PreconditionError("Both seeds must carry their tangency problems!")
    if seeds[0].problem is seeds[1].problem:
        raise PreconditionError("Seeds describe the same tangency condition!")

    base = fam.params(base if base is not None else seeds[0].param)
    x0 = np.array([
        0.5 * (float(seeds[0].param[name]) + float(seeds[1].param[name]))
        for name in free_names
    ])
    return _newton_pair(problems, base, free_names, x0, tol)


def continue_double_tangency(
    fam: MapFamily,
    seeds: tuple[TangencyRecord, TangencyRecord],
    tau_values: Sequence[float],
    free_names: tuple[str, str] = ('a', 'b'),
    tau_name: str = 'tau',
    tol: float = DEFAULT_TOL,
) -> list[ParamPoint]:
    """
    Follows the double tangency through the given values of a third
    parameter, each solve seeded by the previous point.
    """
    problems = [seed.problem for seed in seeds]
    if any(problem is None for problem in problems):
        raise PreconditionError("Both seeds must carry their tangency problems!")
    if tau_name not in seeds[0].param:
        raise PreconditionError(f"Family has no parameter '{tau_name}'!")

    points: list[ParamPoint] = []
    current: ParamPoint = double_tangency(fam, seeds, free_names, tol)
    for tau in tau_values:
        base = current.replace(**{tau_name: float(tau)})
        x0 = np.array([float(current[name]) for name in free_names])
        try:
            current = _newton_pair(problems, base, free_names, x0, tol)
        except SolverFailure as e:
            logger.warning("double tangency lost at %s=%g: %s", tau_name, tau, e)
            break
        points.append(current)
    return points
