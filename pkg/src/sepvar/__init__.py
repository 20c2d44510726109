"""sepvar: exact formal symplectic groupoids with separation of variables.

Everything is computed over Gaussian rationals on a single chart around
the base point; all identities checked by the test and verification
suites are exact equalities of truncated data.
"""

__version__ = "0.1.0"

from .algebra import (
    DiffOp,
    EpsPair,
    FiberPoly,
    GaussianRational,
    JetSeries,
    NuSeries,
    grat,
    ham_exp,
    poisson_bracket,
    zero_section,
)
from .geometry import (
    DeformedGeometry,
    Geometry,
    PotentialData,
    h_from_psi,
    jacobi_check,
    jacobi_deformed_check,
    metric_from_potential,
    preset_geometry,
)

__all__ = [
    "DeformedGeometry",
    "DiffOp",
    "EpsPair",
    "FiberPoly",
    "GaussianRational",
    "Geometry",
    "JetSeries",
    "NuSeries",
    "PotentialData",
    "__version__",
    "grat",
    "h_from_psi",
    "ham_exp",
    "jacobi_check",
    "jacobi_deformed_check",
    "metric_from_potential",
    "poisson_bracket",
    "preset_geometry",
    "zero_section",
]
