"""
Hénon families: the planar map, its m-dimensional extension and the
quadratic Hénon-like perturbation.
"""
import logging
from typing import Optional

import numpy as np
from numpy import ndarray

from .. import precision
from ..errors import InvalidDimension, UnsupportedOperation
from .family import MapFamily, ParamPoint

logger = logging.getLogger(__name__)


def _matrix_field(x: ndarray, m: int) -> ndarray:
    """
    Zero (..., m, m) array of the active scalar type.
    """
    return precision.array(np.zeros(x.shape[:-1] + (m, m)))


class Henon2(MapFamily):
    """
    F(x, y) = (a - x^2 - b y, x).
    """
    name: str = 'henon2'
    param_names: tuple[str, ...] = ('a', 'b')

    def __init__(self, default: Optional[ParamPoint] = None):
        super().__init__(dim=2, default=default)

    def map(self, p: ParamPoint, x: ndarray) -> ndarray:
        a, b = self._values(p)
        x = precision.array(x)
        u, v = x[..., 0], x[..., 1]
        return np.stack([a - u*u - b*v, u], axis=-1)

    def jacobian(self, p: ParamPoint, x: ndarray) -> ndarray:
        _, b = self._values(p)
        x = precision.array(x)
        J = _matrix_field(x, 2)
        J[..., 0, 0] = -2 * x[..., 0]
        J[..., 0, 1] = -b
        J[..., 1, 0] = 1
        return J

    def param_jacobian(self, p: ParamPoint, x: ndarray) -> ndarray:
        x = precision.array(x)
        D = precision.array(np.zeros(x.shape[:-1] + (2, 2)))
        D[..., 0, 0] = 1
        D[..., 0, 1] = -x[..., 1]
        return D

    def is_invertible(self, p: ParamPoint) -> bool:
        return float(p['b']) != 0.0

    def inverse(self, p: ParamPoint, x: ndarray) -> ndarray:
        if not self.is_invertible(p):
            raise UnsupportedOperation(f"{self.name} is not invertible at b = 0!")
        a, b = self._values(p)
        x = precision.array(x)
        u, v = x[..., 0], x[..., 1]
        return np.stack([v, (a - v*v - u) / b], axis=-1)


class HenonND(MapFamily):
    """
    F(x, y, y_3, ..., y_m) = (a - x^2 - b y, x, b^3 y_3, ..., b^m y_m).
    """
    name: str = 'henonND'
    param_names: tuple[str, ...] = ('a', 'b')

    def __init__(self, m: int, default: Optional[ParamPoint] = None):
        if m < 3:
            raise InvalidDimension(f"henonND needs m >= 3, got m = {m}!")
        super().__init__(dim=m, default=default)

    def _powers(self, b) -> list:
        return [b**i for i in range(3, self.dim + 1)]

    def map(self, p: ParamPoint, x: ndarray) -> ndarray:
        a, b = self._values(p)
        x = precision.array(x)
        u, v = x[..., 0], x[..., 1]
        tail = [c * x[..., i] for i, c in enumerate(self._powers(b), start=2)]
        return np.stack([a - u*u - b*v, u] + tail, axis=-1)

    def jacobian(self, p: ParamPoint, x: ndarray) -> ndarray:
        _, b = self._values(p)
        x = precision.array(x)
        J = _matrix_field(x, self.dim)
        J[..., 0, 0] = -2 * x[..., 0]
        J[..., 0, 1] = -b
        J[..., 1, 0] = 1
        for i, c in enumerate(self._powers(b), start=2):
            J[..., i, i] = c
        return J

    def param_jacobian(self, p: ParamPoint, x: ndarray) -> ndarray:
        _, b = self._values(p)
        x = precision.array(x)
        D = precision.array(np.zeros(x.shape[:-1] + (self.dim, 2)))
        D[..., 0, 0] = 1
        D[..., 0, 1] = -x[..., 1]
        for i in range(2, self.dim):
            k = i + 1
            D[..., i, 1] = k * b**(k - 1) * x[..., i]
        return D

    def is_invertible(self, p: ParamPoint) -> bool:
        return float(p['b']) != 0.0

    def inverse(self, p: ParamPoint, x: ndarray) -> ndarray:
        if not self.is_invertible(p):
            raise UnsupportedOperation(f"{self.name} is not invertible at b = 0!")
        a, b = self._values(p)
        x = precision.array(x)
        u, v = x[..., 0], x[..., 1]
        tail = [x[..., i] / c for i, c in enumerate(self._powers(b), start=2)]
        return np.stack([v, (a - v*v - u) / b] + tail, axis=-1)


class QuadHenonLike(MapFamily):
    """
    F(x, y) = (a - x^2 - b y + tau y^2, x). At tau = 0 this is Henon2.
    """
    name: str = 'quadHenonLike'
    param_names: tuple[str, ...] = ('a', 'b', 'tau')

    def __init__(self, default: Optional[ParamPoint] = None):
        super().__init__(dim=2, default=default)

    def map(self, p: ParamPoint, x: ndarray) -> ndarray:
        a, b, tau = self._values(p)
        x = precision.array(x)
        u, v = x[..., 0], x[..., 1]
        return np.stack([a - u*u - b*v + tau*v*v, u], axis=-1)

    def jacobian(self, p: ParamPoint, x: ndarray) -> ndarray:
        _, b, tau = self._values(p)
        x = precision.array(x)
        J = _matrix_field(x, 2)
        J[..., 0, 0] = -2 * x[..., 0]
        J[..., 0, 1] = -b + 2*tau*x[..., 1]
        J[..., 1, 0] = 1
        return J

    def param_jacobian(self, p: ParamPoint, x: ndarray) -> ndarray:
        x = precision.array(x)
        D = precision.array(np.zeros(x.shape[:-1] + (2, 3)))
        D[..., 0, 0] = 1
        D[..., 0, 1] = -x[..., 1]
        D[..., 0, 2] = x[..., 1] * x[..., 1]
        return D

    # The inverse needs a root of tau y^2 - b y + (a - x'^2 - y') with a
    # branch choice; only the tau = 0 case is offered.
    def is_invertible(self, p: ParamPoint) -> bool:
        return float(p['tau']) == 0.0 and float(p['b']) != 0.0

    def inverse(self, p: ParamPoint, x: ndarray) -> ndarray:
        if not self.is_invertible(p):
            raise UnsupportedOperation(
                f"{self.name} is only inverted at tau = 0, b != 0!"
            )
        a, b, _ = self._values(p)
        x = precision.array(x)
        u, v = x[..., 0], x[..., 1]
        return np.stack([v, (a - v*v - u) / b], axis=-1)


def henon2(a: float = 2.0, b: float = 0.0) -> Henon2:
    return Henon2(ParamPoint.of(a=a, b=b))


def henon_nd(a: float = 2.0, b: float = 0.0, m: int = 3) -> HenonND:
    return HenonND(m, ParamPoint.of(a=a, b=b))


def quad_henon_like(a: float = 2.0, b: float = 0.0, tau: float = 0.0) -> QuadHenonLike:
    return QuadHenonLike(ParamPoint.of(a=a, b=b, tau=tau))
