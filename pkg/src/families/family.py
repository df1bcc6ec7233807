"""
Generic interface for parametrised map families, the parameter point type,
multiplier data of saddles and the eigenvalue conditions checked on them.
"""
import math
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from itertools import combinations, product
from typing import NamedTuple, Optional

import mpmath
import numpy as np
from numpy import ndarray

from .. import precision
from ..errors import EmptyThetaWindow, PreconditionError, UnsupportedOperation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParamPoint:
    """
    Ordered (name, value) pairs, e.g. (('a', 2.0), ('b', 0.05)).
    """
    coords: tuple[tuple[str, object], ...]

    def __post_init__(self):
        names: list[str] = [name for name, _ in self.coords]
        if len(set(names)) != len(names):
            raise PreconditionError(f"Duplicate parameter names in {names}!")
        for name, value in self.coords:
            if not mpmath.isfinite(value):
                raise PreconditionError(f"Parameter '{name}' is not finite!")

    @classmethod
    def of(cls, **values) -> 'ParamPoint':
        return cls(tuple(values.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.coords)

    @property
    def values(self) -> tuple:
        return tuple(value for _, value in self.coords)

    def __getitem__(self, name: str):
        for key, value in self.coords:
            if key == name:
                return value
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def replace(self, **values) -> 'ParamPoint':
        for name in values:
            if name not in self.names:
                raise KeyError(f"Unknown parameter '{name}'!")
        return ParamPoint(tuple(
            (name, values.get(name, value)) for name, value in self.coords
        ))

    def as_dict(self) -> dict[str, float]:
        return {name: float(value) for name, value in self.coords}

    def __str__(self) -> str:
        return ', '.join(f"{n}={float(v):.12g}" for n, v in self.coords)


class MapFamily(ABC):
    """
    A parametrised map x -> F(p, x) on R^m with its Jacobian. Evaluators
    accept phase points of shape (..., m) and broadcast over leading axes.
    """
    name: str = 'family'
    param_names: tuple[str, ...] = ()
    fd_step: float = 1e-7

    def __init__(self, dim: int, default: Optional[ParamPoint] = None):
        self.dim: int = dim
        self.default: Optional[ParamPoint] = default

    def params(self, p: Optional[ParamPoint] = None, **overrides) -> ParamPoint:
        """
        Full parameter point built from p (or the bound default) with
        overrides applied.
        """
        base: Optional[ParamPoint] = p if p is not None else self.default
        if base is None:
            base = ParamPoint(tuple((name, 0.0) for name in self.param_names))
        if base.names != self.param_names:
            raise PreconditionError(
                f"{self.name} expects parameters {self.param_names}, got {base.names}!"
            )
        return base.replace(**overrides) if overrides else base

    def _values(self, p: ParamPoint) -> list:
        return [precision.scalar(p[name]) for name in self.param_names]

    @abstractmethod
    def map(self, p: ParamPoint, x: ndarray) -> ndarray:
        pass

    @abstractmethod
    def jacobian(self, p: ParamPoint, x: ndarray) -> ndarray:
        pass

    def param_jacobian(self, p: ParamPoint, x: ndarray) -> ndarray:
        """
        dF/dp as an (..., m, k) array by central differences with step
        fd_step * max(1, |p_j|).
        """
        x = precision.array(x)
        columns: list[ndarray] = []
        for name in self.param_names:
            value = precision.scalar(p[name])
            h = precision.scalar(self.fd_step * max(1.0, abs(float(value))))
            plus = self.map(p.replace(**{name: value + h}), x)
            minus = self.map(p.replace(**{name: value - h}), x)
            columns.append((plus - minus) / (2 * h))
        return np.stack(columns, axis=-1)

    def is_invertible(self, p: ParamPoint) -> bool:
        return False

    def inverse(self, p: ParamPoint, x: ndarray) -> ndarray:
        raise UnsupportedOperation(f"{self.name} has no inverse at {p}!")

    def inverse_jacobian(self, p: ParamPoint, x: ndarray) -> ndarray:
        """
        Jacobian of the inverse map at x, i.e. DF(F^{-1}(x))^{-1}.
        """
        y = self.inverse(p, x)
        return np.linalg.inv(precision.to_float(self.jacobian(p, y)))

    def iterate(self, p: ParamPoint, x: ndarray, n: int = 1) -> ndarray:
        x = precision.array(x)
        for _ in range(n):
            x = self.map(p, x)
        return x

    def orbit(self, p: ParamPoint, x: ndarray, n: int) -> ndarray:
        """
        Returns the n + 1 points x, F(x), ..., F^n(x).
        """
        x = precision.array(x)
        points: list[ndarray] = [x]
        for _ in range(n):
            x = self.map(p, x)
            points.append(x)
        return np.stack(points)

    def check_jacobian(
        self,
        p: ParamPoint,
        samples: int = 100,
        radius: float = 2.0,
        seed: int = 0,
    ) -> float:
        """
        Largest relative discrepancy between DF and central differences of F
        over random sample points.
        """
        rng = np.random.default_rng(seed)
        x: ndarray = rng.uniform(-radius, radius, size=(samples, self.dim))
        exact: ndarray = precision.to_float(self.jacobian(p, x))

        h: float = 1e-6
        fd: ndarray = np.empty_like(exact)
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = h
            fd[..., j] = (
                precision.to_float(self.map(p, x + e))
                - precision.to_float(self.map(p, x - e))
            ) / (2*h)

        scale: ndarray = np.maximum(1.0, np.abs(exact).max(axis=(-2, -1)))
        return float((np.abs(exact - fd).max(axis=(-2, -1)) / scale).max())

    def check_inverse(
        self,
        p: ParamPoint,
        samples: int = 100,
        radius: float = 2.0,
        seed: int = 0,
    ) -> float:
        """
        Largest |F^{-1}(F(x)) - x| over random sample points.
        """
        rng = np.random.default_rng(seed)
        x: ndarray = rng.uniform(-radius, radius, size=(samples, self.dim))
        back = precision.to_float(self.inverse(p, self.map(p, x)))
        return float(np.abs(back - x).max())

    def __repr__(self) -> str:
        bound = f" at {self.default}" if self.default is not None else ''
        return f"<{type(self).__name__} m={self.dim}{bound}>"


class InverseFamily(MapFamily):
    """
    The inverse of an invertible family, sharing its parameters.
    """

    def __init__(self, family: MapFamily):
        super().__init__(family.dim, family.default)
        self.family: MapFamily = family
        self.name = f"inverse({family.name})"
        self.param_names = family.param_names

    def map(self, p: ParamPoint, x: ndarray) -> ndarray:
        if not self.family.is_invertible(p):
            raise UnsupportedOperation(f"{self.family.name} is not invertible at {p}!")
        return self.family.inverse(p, x)

    def jacobian(self, p: ParamPoint, x: ndarray) -> ndarray:
        y = self.map(p, x)
        J = precision.to_float(self.family.jacobian(p, y))
        return precision.array(np.linalg.inv(J))

    def is_invertible(self, p: ParamPoint) -> bool:
        return self.family.is_invertible(p)

    def inverse(self, p: ParamPoint, x: ndarray) -> ndarray:
        return self.family.map(p, x)


@dataclass(frozen=True)
class EigenData:
    """
    Multipliers of a periodic point sorted by modulus (descending) with the
    matching unit eigenvectors as columns.
    """
    multipliers: tuple[complex, ...]
    vectors: ndarray
    period: int = 1

    @classmethod
    def from_matrix(
        cls,
        M: ndarray,
        period: int = 1,
        log_scale: float = 0.0,
        det: Optional[float] = None,
        log_det: Optional[tuple[int, float]] = None,
    ) -> 'EigenData':
        """
        Eigen-decomposition of a (possibly rescaled) monodromy matrix; the
        true matrix is exp(log_scale) * M. In two dimensions the small
        multiplier is recovered from the determinant when given, since it
        is lost to rounding once |mu/lambda| exceeds 1e16. log_det is
        (sign, log|det|) and takes precedence over det.
        """
        vals, vecs = precision.eig(M)
        order = np.argsort(-np.abs(vals), kind='stable')
        vals, vecs = vals[order], vecs[:, order]
        vals = vals * math.exp(log_scale)

        real_leading = len(vals) == 2 and abs(vals[0]) > 0 \
            and abs(vals[0].imag) <= 1e-12 * abs(vals[0])
        if real_leading and log_det is not None:
            sign, log_abs = log_det
            if sign == 0:
                vals[1] = 0.0
            else:
                log_small = log_abs - math.log(abs(vals[0].real))
                vals[1] = complex(sign * math.copysign(1.0, vals[0].real) * math.exp(min(log_small, 700.0)))
        elif real_leading and det is not None:
            vals[1] = complex(det) / vals[0]

        vecs = vecs / np.linalg.norm(vecs, axis=0, keepdims=True)
        # real eigenvectors with a positive first nonzero entry
        for j in range(vecs.shape[1]):
            if abs(vals[j].imag) <= 1e-12 * max(1.0, abs(vals[j])):
                v = vecs[:, j]
                k = int(np.argmax(np.abs(v) > 1e-14))
                vecs[:, j] = v * (np.conj(v[k]) / abs(v[k]))
        return cls(tuple(complex(v) for v in vals), vecs, period)

    @property
    def moduli(self) -> ndarray:
        return np.abs(np.array(self.multipliers))

    @property
    def mu(self) -> float:
        return self.multipliers[0].real

    @property
    def lam1(self) -> float:
        return self.multipliers[1].real

    @property
    def stable(self) -> tuple[complex, ...]:
        return self.multipliers[1:]

    @property
    def unstable_vector(self) -> ndarray:
        return self.vectors[:, 0].real

    @property
    def stable_vector(self) -> ndarray:
        return self.vectors[:, 1].real

    def is_real(self, tol: float = 1e-12) -> bool:
        return all(abs(v.imag) <= tol * max(1.0, abs(v)) for v in self.multipliers)

    def is_saddle(self) -> bool:
        moduli = self.moduli
        return bool(moduli[0] > 1.0 and np.all(moduli[1:] < 1.0))

    def product(self) -> complex:
        return complex(np.prod(np.array(self.multipliers)))


class ConditionReport(NamedTuple):
    f2: bool
    f2_margin: float
    distinct: bool
    distinct_margin: float
    nonresonant: bool
    resonance_margin: float
    order: int

    @property
    def ok(self) -> bool:
        return self.f2 and self.distinct and self.nonresonant


def check_strong_tangency_eigen(
    eig: EigenData,
    order: int = 4,
    tol: float = 1e-12,
) -> ConditionReport:
    """
    Checks the multiplier conditions of a strong homoclinic tangency:
    |lambda_1| |mu|^3 < 1, pairwise distinct stable multipliers, and
    lambda_j != prod_{i != j} lambda_i^{k_i} for 2 <= |k| <= order (mu counts
    as lambda_0).
    """
    mult: list[complex] = list(eig.multipliers)
    mu: float = abs(mult[0])
    lam1: float = abs(mult[1])

    f2_margin: float = 1.0 - lam1 * mu**3

    stable: list[complex] = mult[1:]
    gaps: list[float] = [abs(u - v) for u, v in combinations(stable, 2)]
    distinct_margin: float = min(gaps) if gaps else math.inf

    resonance_margin: float = math.inf
    m: int = len(mult)
    for j in range(m):
        others: list[complex] = [mult[i] for i in range(m) if i != j]
        for k in product(range(order + 1), repeat=len(others)):
            if not (2 <= sum(k) <= order):
                continue
            value: complex = complex(np.prod([o**e for o, e in zip(others, k)]))
            scale: float = max(abs(mult[j]), abs(value), tol)
            resonance_margin = min(resonance_margin, abs(mult[j] - value) / scale)

    return ConditionReport(
        f2 = f2_margin > 0.0,
        f2_margin = f2_margin,
        distinct = distinct_margin > tol,
        distinct_margin = distinct_margin,
        nonresonant = resonance_margin > tol,
        resonance_margin = resonance_margin,
        order = order,
    )


class ThetaWindow(NamedTuple):
    theta0: float
    theta1: float
    valid: bool

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.theta0 + self.theta1)


def theta_window(
    lamMin: float,
    lamMax: float,
    muMin: float,
    muMax: float,
    strict: bool = True,
) -> ThetaWindow:
    """
    Admissible interval for theta: log(muMax)/log(1/lamMax) < theta <
    (3/2) log(muMin)/log(1/lamMin) < 1/2.
    """
    if not (0.0 < lamMin <= lamMax < 1.0 < muMin <= muMax):
        raise PreconditionError(
            "theta_window needs 0 < lamMin <= lamMax < 1 < muMin <= muMax!"
        )

    theta0: float = math.log(muMax) / math.log(1.0 / lamMax)
    theta1: float = 1.5 * math.log(muMin) / math.log(1.0 / lamMin)
    valid: bool = theta0 < theta1 < 0.5 - 1e-12

    if strict and not valid:
        raise EmptyThetaWindow(
            f"Empty theta window ({theta0:.6g}, {theta1:.6g}): "
            "lambda mu^3 < 1 fails at these bounds!"
        )
    return ThetaWindow(theta0, theta1, valid)


def theta_inequalities(
    theta: float,
    lamMin: float,
    lamMax: float,
    muMin: float,
    muMax: float,
) -> tuple[bool, bool]:
    """
    (lamMin^{2 theta} muMin^3 > 1, lamMax^theta muMax < 1).
    """
    return (
        lamMin**(2*theta) * muMin**3 > 1.0,
        lamMax**theta * muMax < 1.0,
    )


def alpha(lam: float, mu: float, theta: float) -> float:
    """
    Growth rate of the secondary-tangency leaf index:
    log(|lam|^{2 theta} |mu|^3) / log|mu|.
    """
    return math.log(abs(lam)**(2*theta) * abs(mu)**3) / math.log(abs(mu))


def predicted_n0(n: int, lam: float, mu: float, theta: float) -> float:
    return n * alpha(lam, mu, theta)
