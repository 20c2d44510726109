"""Dual-number pairs body + eps*soul with eps^2 = 0.

The pair wraps any value type with +, -, * (jets, fiber polynomials,
scalars); infinitesimal deformations throughout the engine are carried
this way, so the deformed code paths are literally the undeformed ones
run over pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Generic, TypeVar

T = TypeVar("T")


@dataclass(frozen=True)
class EpsPair(Generic[T]):
    body: T
    soul: T

    @staticmethod
    def lift(x) -> "EpsPair":
        """Embed a plain value as body + eps*0."""
        if isinstance(x, EpsPair):
            return x
        return EpsPair(x, x.zero_like())

    def map(self, fn) -> "EpsPair":
        """Apply a linear operation componentwise."""
        return EpsPair(fn(self.body), fn(self.soul))

    def zero_like(self) -> "EpsPair":
        return EpsPair(self.body.zero_like(), self.soul.zero_like())

    def is_zero(self) -> bool:
        return self.body.is_zero() and self.soul.is_zero()

    def __add__(self, other):
        other = EpsPair.lift(other)
        return EpsPair(self.body + other.body, self.soul + other.soul)

    __radd__ = __add__

    def __neg__(self):
        return EpsPair(-self.body, -self.soul)

    def __sub__(self, other):
        return self + (-EpsPair.lift(other))

    def __rsub__(self, other):
        return EpsPair.lift(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, EpsPair):
            # scalar or plain ring element: acts componentwise
            return EpsPair(self.body * other, self.soul * other)
        return EpsPair(
            self.body * other.body,
            self.body * other.soul + self.soul * other.body,
        )

    def __rmul__(self, other):
        # non-EpsPair 'other' commutes with componentwise action
        return EpsPair(other * self.body, other * self.soul)

    def scale(self, c) -> "EpsPair":
        return EpsPair(self.body.scale(c), self.soul.scale(c))

    def __eq__(self, other):
        if not isinstance(other, EpsPair):
            return NotImplemented
        return self.body == other.body and self.soul == other.soul
