"""Exact truncated-series and graded-operator arithmetic."""

from .diffop import (
    DiffOp,
    NuSeries,
    commutator_over_nu,
    jet_multi_derivative,
    naturality_report,
    op_compose,
    sigma_symbol,
)
from .dual import EpsPair
from .fiber import FiberPoly, ham_exp, poisson_bracket, zero_section
from .jets import JetSeries, min_order, multidegrees, multidegrees_upto
from .scalars import GaussianRational, grat

__all__ = [
    "DiffOp",
    "EpsPair",
    "FiberPoly",
    "GaussianRational",
    "JetSeries",
    "NuSeries",
    "commutator_over_nu",
    "grat",
    "ham_exp",
    "jet_multi_derivative",
    "min_order",
    "multidegrees",
    "multidegrees_upto",
    "naturality_report",
    "op_compose",
    "poisson_bracket",
    "sigma_symbol",
    "zero_section",
]
