"""
Submodule containing the parametrised map families.
"""
from .family import (
    ParamPoint,
    MapFamily,
    InverseFamily,
    EigenData,
    ConditionReport,
    ThetaWindow,
    check_strong_tangency_eigen,
    theta_window,
    theta_inequalities,
    alpha,
    predicted_n0,
)
from .henon import Henon2, HenonND, QuadHenonLike, henon2, henon_nd, quad_henon_like
from .linear import DiagonalLinear, diagonal_linear

FAMILIES: dict = {
    'henon2': henon2,
    'henonND': henon_nd,
    'quadHenonLike': quad_henon_like,
    'linear': diagonal_linear,
}
