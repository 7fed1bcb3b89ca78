"""Wave observability on the half-equilateral triangle via a six-tile rectangle covering."""
from .geometry import (
    ALPHA_MAX,
    build_half_equilateral_tiling,
    half_equilateral_triangle,
    rect_strip_region,
    strip_region,
    verify_tiling,
)
from .observability import (
    check_inequality,
    equivalence_check,
    observed_energy,
    strip_constants,
    t_alpha,
)
from .spectral import Basis, Domain, Mode, eigenvalue, folded_basis
from .wave import WaveState, energy_pair, prolong_state, random_state

__version__ = "0.1.0"

__all__ = [
    "ALPHA_MAX",
    "Basis",
    "Domain",
    "Mode",
    "WaveState",
    "build_half_equilateral_tiling",
    "check_inequality",
    "eigenvalue",
    "energy_pair",
    "equivalence_check",
    "folded_basis",
    "half_equilateral_triangle",
    "observed_energy",
    "prolong_state",
    "random_state",
    "rect_strip_region",
    "strip_constants",
    "strip_region",
    "t_alpha",
    "verify_tiling",
    "__version__",
]
