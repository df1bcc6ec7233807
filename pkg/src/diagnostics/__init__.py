"""
Submodule for attractor diagnostics.
"""
from .lyapunov import (
    DEFAULT_KAPPA,
    LyapSpectrum,
    GrowthProfile,
    lyapunov,
    collet_eckmann_test,
)
from .cascade import (
    FEIGENBAUM_DELTA,
    CascadeReport,
    AddingMachineReport,
    EmbeddedMap,
    quadratic,
    embedded_1d,
    superstable_cascade,
    band_labels,
    adding_machine_test,
)
from .renorm import ReturnGraph, QuadraticFit, renorm_return_map, fit_quadratic
