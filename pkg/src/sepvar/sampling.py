"""Seeded random polynomial data for the verification suites.

Everything draws from ``random.Random(seed)`` so runs are reproducible;
coefficients are small exact rationals.
"""

from __future__ import annotations

from fractions import Fraction
from random import Random

from .algebra.jets import JetSeries, multidegrees_upto
from .algebra.scalars import GaussianRational


def random_scalar(rng: Random, height: int = 3,
                  allow_imag: bool = True) -> GaussianRational:
    def frac():
        return Fraction(rng.randint(-height, height),
                        rng.randint(1, height))

    return GaussianRational(frac(), frac() if allow_imag else 0)


def random_jet(rng: Random, dim: int = 1, max_degree: int = 2,
               jet_order=None, height: int = 3, density: float = 0.7,
               allow_imag: bool = True) -> JetSeries:
    terms = {}
    for alpha in multidegrees_upto(dim, max_degree):
        for beta in multidegrees_upto(dim, max_degree - sum(alpha)):
            if rng.random() > density:
                continue
            c = random_scalar(rng, height, allow_imag)
            if not c.is_zero():
                terms[(alpha, beta)] = c
    return JetSeries(dim, jet_order, terms)


def random_pairs(rng: Random, count: int, dim: int = 1, max_degree: int = 2,
                 jet_order=None, height: int = 3):
    return [
        (random_jet(rng, dim, max_degree, jet_order, height),
         random_jet(rng, dim, max_degree, jet_order, height))
        for _ in range(count)
    ]


def random_psi(rng: Random, dim: int = 1, max_degree: int = 3,
               jet_order=None, height: int = 2) -> JetSeries:
    """A random real-style deformation potential with a mixed term.

    Guarantees a nonzero mixed Hessian so the induced deformation is
    nontrivial.
    """
    psi = random_jet(rng, dim, max_degree, jet_order, height,
                     allow_imag=False)
    e = tuple(1 if i == 0 else 0 for i in range(dim))
    if psi.coefficient(e, e).is_zero():
        psi = psi + JetSeries.monomial(dim, e, e, 1, jet_order)
    return psi
