import sys

from pathlib import Path

_this_file: Path = Path(__file__)
if (pkg_path := str(_this_file.parents[1])) not in sys.path:
    sys.path.append(pkg_path)

import numpy as np
import pytest

from src import precision
from src.families import MapFamily, ParamPoint, henon2
from src.manifolds import HORIZONTAL, FoldPoint, Frame, GraphLeaf


class Reinjection(MapFamily):
    """
    (2x, y/2) for x < 1, else (x + 4, y + 5). The saddle at the origin sends
    its fundamental domain [0.5, 1) onto the point (9, 10) after 3 steps.
    """
    name: str = 'reinjection'
    param_names: tuple[str, ...] = ('a',)

    def __init__(self):
        super().__init__(dim=2, default=ParamPoint.of(a=0.0))

    def map(self, p, x):
        x = precision.array(x)
        u, v = x[..., 0], x[..., 1]
        inner = u < 1.0
        return np.stack([np.where(inner, 2*u, u + 4), np.where(inner, v / 2, v + 5)], axis=-1)

    def jacobian(self, p, x):
        x = precision.array(x)
        inner = x[..., 0] < 1.0
        J = np.zeros(x.shape[:-1] + (2, 2))
        J[..., 0, 0] = np.where(inner, 2.0, 1.0)
        J[..., 1, 1] = np.where(inner, 0.5, 1.0)
        return J


class ParabolaFolds:
    """
    Synthetic tangency problems: the fold of y = value - x^2 at
    (0, value - target) against the leaf y = 0.
    """

    def __init__(self, name: str, target: float):
        self.name = name
        self.target = target

    def __call__(self, fam, p) -> FoldPoint:
        height = float(p[self.name]) - self.target
        return FoldPoint(position=np.array([0.0, height]), axis=HORIZONTAL, q=-1.0)


class LineFold:
    """
    Fold at (0, a - slope * b), so gap = 0 along a = slope * b.
    """

    def __init__(self, slope: float):
        self.slope = slope

    def __call__(self, fam, p) -> FoldPoint:
        height = float(p['a']) - self.slope * float(p['b'])
        return FoldPoint(position=np.array([0.0, height]), axis=HORIZONTAL, q=-1.0)


def flat_leaf(fam=None, p=None) -> GraphLeaf:
    sigma = np.linspace(-1.0, 1.0, 21)
    return GraphLeaf(Frame.horizontal(), sigma, np.zeros_like(sigma))


@pytest.fixture
def reinjection() -> Reinjection:
    return Reinjection()


@pytest.fixture
def henon():
    return henon2(2.0, 0.0)


@pytest.fixture(autouse=True)
def double_precision():
    precision.set_precision('double')
    yield
    precision.set_precision('double')
