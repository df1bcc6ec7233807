"""
Scalar-type switch. In 'double' mode everything is numpy float64; in
'extended' mode scalars are mpmath.mpf with a 128-bit significand and arrays
are numpy object arrays of mpf, so the same numpy expressions evaluate both.
"""
import math
import logging
from contextlib import contextmanager
from typing import Iterator, Union

import mpmath
import numpy as np
from numpy import ndarray

logger = logging.getLogger(__name__)

MODES: dict[str, int] = {
    'double': 53,
    'extended': 128,
}

_state: dict = {'mode': 'double'}

Scalar = Union[float, mpmath.mpf]


def set_precision(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"Unknown precision mode '{mode}'!")
    _state['mode'] = mode
    if mode == 'extended':
        mpmath.mp.prec = MODES['extended']
    logger.debug("precision set to %s (%d bits)", mode, MODES[mode])


def get_precision() -> str:
    return _state['mode']


def is_extended() -> bool:
    return _state['mode'] == 'extended'


@contextmanager
def precision(mode: str) -> Iterator[str]:
    """
    Temporarily switches the scalar type.
    """
    previous_mode: str = get_precision()
    previous_prec: int = mpmath.mp.prec
    set_precision(mode)
    try:
        yield mode
    finally:
        _state['mode'] = previous_mode
        mpmath.mp.prec = previous_prec


def machine_epsilon() -> float:
    return 2.0 ** (1 - MODES[get_precision()])


_to_mpf = np.frompyfunc(mpmath.mpf, 1, 1)


def scalar(value) -> Scalar:
    if is_extended():
        return mpmath.mpf(value)
    return float(value)


def array(values) -> ndarray:
    """
    Converts to the active array type (float64 or object array of mpf).
    """
    if is_extended():
        arr = np.asarray(values, dtype=object)
        return np.asarray(_to_mpf(arr), dtype=object)
    return np.asarray(values, dtype=float)


def to_float(values) -> ndarray:
    return np.asarray(values, dtype=float)


def identity(m: int) -> ndarray:
    return array(np.eye(m))


def _as_mp_matrix(A: ndarray) -> mpmath.matrix:
    return mpmath.matrix(np.asarray(A, dtype=object).tolist())


def solve(A: ndarray, b: ndarray) -> ndarray:
    """
    Solves A x = b. Raises numpy.linalg.LinAlgError when A is singular in
    either mode.
    """
    if A.dtype != object:
        return np.linalg.solve(A, b)

    try:
        x = mpmath.lu_solve(_as_mp_matrix(A), mpmath.matrix(list(b)))
    except ZeroDivisionError as e:
        raise np.linalg.LinAlgError(str(e))
    return np.array([x[i] for i in range(len(b))], dtype=object)


def eig(A: ndarray) -> tuple[ndarray, ndarray]:
    """
    Eigenvalues and column eigenvectors as complex128 arrays.
    """
    if A.dtype != object:
        vals, vecs = np.linalg.eig(np.asarray(A, dtype=float))
        return vals.astype(complex), vecs.astype(complex)

    E, ER = mpmath.eig(_as_mp_matrix(A))
    m: int = A.shape[0]
    vals = np.array([complex(E[i]) for i in range(m)])
    vecs = np.array(
        [[complex(ER[i, j]) for j in range(m)] for i in range(m)]
    )
    return vals, vecs


def det(A: ndarray) -> Scalar:
    if A.dtype != object:
        return float(np.linalg.det(A))
    return mpmath.det(_as_mp_matrix(A))


def log(x: Scalar) -> Scalar:
    return mpmath.log(x) if isinstance(x, mpmath.mpf) else math.log(x)


def sup_norm(x: ndarray) -> float:
    return float(np.max(np.abs(to_float(x)))) if np.size(x) else 0.0
