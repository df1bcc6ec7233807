"""
Result types of the tangency solvers.
"""
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from ..families import ParamPoint

if TYPE_CHECKING:
    from .gap import TangencyProblem

PRIMARY: str = 'primary'
SECONDARY: str = 'secondary'
DOUBLE: str = 'double-component'

GAPQ_FLOOR: float = 1e-10


@dataclass(frozen=True)
class TangencyRecord:
    param: ParamPoint
    point: tuple[float, ...]
    gap: float
    gapQ: float
    kind: str = PRIMARY
    free: str = 'a'
    n: Optional[int] = None
    n0: Optional[int] = None
    leaf_id: Optional[int] = None
    degenerate: bool = False
    problem: Optional['TangencyProblem'] = field(default=None, compare=False, repr=False)

    @property
    def value(self) -> float:
        return float(self.param[self.free])

    def record(self) -> dict:
        return {
            'param': self.param.as_dict(),
            'point': list(self.point),
            'gap': self.gap,
            'gapQ': self.gapQ,
            'type': self.kind,
            'free': self.free,
            'n': self.n,
            'n0': self.n0,
            'leaf': self.leaf_id,
            'degenerate': self.degenerate,
        }


@dataclass
class TangencyCurve:
    names: tuple[str, str]
    records: list[TangencyRecord] = field(default_factory=list)
    slopes: list[float] = field(default_factory=list)
    step_sizes: list[float] = field(default_factory=list)
    failures: int = 0
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.records)

    def values(self, name: str) -> np.ndarray:
        return np.array([float(r.param[name]) for r in self.records])

    def points(self) -> np.ndarray:
        return np.stack([self.values(name) for name in self.names], axis=1)

    def free_at(self, t: float) -> float:
        """
        Free parameter on the curve at transversal value t, by linear
        interpolation between records.
        """
        first, second = self.names
        ts = self.values(second)
        values = self.values(first)
        if len(ts) == 1:
            if not math.isclose(ts[0], t, rel_tol=0.0, abs_tol=1e-15):
                raise ValueError(f"{second}={t} lies outside the curve!")
            return float(values[0])
        order = np.argsort(ts)
        ts, values = ts[order], values[order]
        if not ts[0] - 1e-15 <= t <= ts[-1] + 1e-15:
            raise ValueError(f"{second}={t} lies outside the curve [{ts[0]}, {ts[-1]}]!")
        return float(np.interp(t, ts, values))

    def turning_angles(self) -> np.ndarray:
        """
        Angles (degrees) between consecutive secant directions.
        """
        P = self.points()
        if len(P) < 3:
            return np.zeros(0)
        d = np.diff(P, axis=0)
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        return np.degrees(np.arccos(np.clip(np.sum(d[:-1] * d[1:], axis=1), -1.0, 1.0)))

    def rows(self) -> list[dict]:
        out: list[dict] = []
        for i, r in enumerate(self.records):
            row: dict = {'step': i}
            for name in self.names:
                row[name] = float(r.param[name])
            row['gap'] = r.gap
            row['gapQ'] = r.gapQ
            row['slope'] = self.slopes[i] if i < len(self.slopes) else float('nan')
            out.append(row)
        return out
