"""
Diagonal linear maps, the linear model of a saddle neighbourhood.
"""
from typing import Iterable

import numpy as np
from numpy import ndarray

from .. import precision
from .family import MapFamily, ParamPoint


class DiagonalLinear(MapFamily):
    """
    x -> diag(d_1, ..., d_m) x. Parameter free.
    """
    name: str = 'linear'
    param_names: tuple[str, ...] = ()

    def __init__(self, diag: Iterable[float]):
        self.diag: tuple[float, ...] = tuple(float(d) for d in diag)
        super().__init__(dim=len(self.diag), default=ParamPoint(()))

    def map(self, p: ParamPoint, x: ndarray) -> ndarray:
        return precision.array(x) * precision.array(self.diag)

    def jacobian(self, p: ParamPoint, x: ndarray) -> ndarray:
        x = precision.array(x)
        J = precision.array(np.zeros(x.shape[:-1] + (self.dim, self.dim)))
        for i, d in enumerate(self.diag):
            J[..., i, i] = d
        return J

    def param_jacobian(self, p: ParamPoint, x: ndarray) -> ndarray:
        x = precision.array(x)
        return precision.array(np.zeros(x.shape[:-1] + (self.dim, 0)))

    def is_invertible(self, p: ParamPoint) -> bool:
        return all(d != 0.0 for d in self.diag)

    def inverse(self, p: ParamPoint, x: ndarray) -> ndarray:
        if not self.is_invertible(p):
            return super().inverse(p, x)
        return precision.array(x) / precision.array(self.diag)

    def __repr__(self) -> str:
        return f"<DiagonalLinear diag={self.diag}>"


def diagonal_linear(*diag: float) -> DiagonalLinear:
    return DiagonalLinear(diag)
