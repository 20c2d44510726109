"""Truncated Taylor series ("jets") at the chart origin.

A jet lives on a chart with ``dim`` holomorphic coordinates z^1..z^n and
their formal antiholomorphic partners zbar^1..zbar^n; the two families are
treated as independent variables.  Terms are stored sparsely as
``(alpha, beta) -> GaussianRational`` with ``alpha``/``beta`` the z/zbar
multidegrees.

Truncation bookkeeping: every jet carries an effective ``order`` (``None``
means the jet is an exactly known polynomial).  Differentiation decrements
the order, binary operations take the minimum, and any operation that
would have to combine values below order zero raises
``TruncationInsufficient`` instead of silently producing garbage.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Optional

from ..errors import DimensionMismatch, NonUnitLeading, TruncationInsufficient
from .scalars import GaussianRational, ONE, ZERO

Multidegree = tuple[int, ...]
TermKey = tuple[Multidegree, Multidegree]


def min_order(a: Optional[int], b: Optional[int]) -> Optional[int]:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _check_usable(order: Optional[int], what: str) -> None:
    if order is not None and order < 0:
        raise TruncationInsufficient(
            f"{what} requires information below truncation order 0"
        )


class JetSeries:
    __slots__ = ("dim", "order", "terms")

    def __init__(self, dim: int, order: Optional[int], terms=None):
        if dim < 1:
            raise ValueError("chart dimension must be >= 1")
        self.dim = dim
        self.order = order
        clean: dict[TermKey, GaussianRational] = {}
        if terms:
            for key, val in terms.items():
                val = GaussianRational.coerce(val)
                if val.is_zero():
                    continue
                alpha, beta = key
                if len(alpha) != dim or len(beta) != dim:
                    raise DimensionMismatch(
                        f"multidegree {key} does not match dim {dim}"
                    )
                if order is not None and sum(alpha) + sum(beta) > order:
                    continue
                clean[(tuple(alpha), tuple(beta))] = val
        self.terms = clean

    # ---------------------------------------------------------------- ctors

    @classmethod
    def zero(cls, dim: int, order: Optional[int] = None) -> "JetSeries":
        return cls(dim, order, {})

    @classmethod
    def constant(cls, c, dim: int, order: Optional[int] = None) -> "JetSeries":
        z = (0,) * dim
        return cls(dim, order, {(z, z): GaussianRational.coerce(c)})

    @classmethod
    def one(cls, dim: int, order: Optional[int] = None) -> "JetSeries":
        return cls.constant(1, dim, order)

    @classmethod
    def monomial(cls, dim, alpha, beta, coeff=1, order: Optional[int] = None):
        return cls(dim, order, {(tuple(alpha), tuple(beta)): coeff})

    @classmethod
    def coordinate(cls, dim: int, k: int, order: Optional[int] = None):
        """The coordinate function z^k (0-based index)."""
        alpha = tuple(1 if i == k else 0 for i in range(dim))
        return cls.monomial(dim, alpha, (0,) * dim, 1, order)

    @classmethod
    def coordinate_bar(cls, dim: int, l: int, order: Optional[int] = None):
        beta = tuple(1 if i == l else 0 for i in range(dim))
        return cls.monomial(dim, (0,) * dim, beta, 1, order)

    # ------------------------------------------------------------- queries

    def zero_like(self) -> "JetSeries":
        return JetSeries(self.dim, self.order, {})

    def is_zero(self) -> bool:
        _check_usable(self.order, "zero test")
        return not self.terms

    def constant_term(self) -> GaussianRational:
        _check_usable(self.order, "constant term")
        z = (0,) * self.dim
        return self.terms.get((z, z), ZERO)

    def coefficient(self, alpha, beta) -> GaussianRational:
        return self.terms.get((tuple(alpha), tuple(beta)), ZERO)

    def sorted_terms(self) -> list[tuple[TermKey, GaussianRational]]:
        return sorted(self.terms.items())

    def cache_key(self):
        return (self.dim, self.order, frozenset(self.terms.items()))

    def total_degree_bound(self) -> int:
        return max((sum(a) + sum(b) for a, b in self.terms), default=0)

    def is_holomorphic(self) -> bool:
        return all(sum(b) == 0 for _, b in self.terms)

    def is_antiholomorphic(self) -> bool:
        return all(sum(a) == 0 for a, _ in self.terms)

    # ---------------------------------------------------------- arithmetic

    def _binary_order(self, other: "JetSeries", what: str) -> Optional[int]:
        if self.dim != other.dim:
            raise DimensionMismatch(f"{what}: dim {self.dim} vs {other.dim}")
        order = min_order(self.order, other.order)
        _check_usable(order, what)
        return order

    def __add__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = JetSeries.constant(other, self.dim)
        if not isinstance(other, JetSeries):
            return NotImplemented
        order = self._binary_order(other, "jet addition")
        terms = dict(self.terms)
        for key, val in other.terms.items():
            s = terms.get(key, ZERO) + val
            if s.is_zero():
                terms.pop(key, None)
            else:
                terms[key] = s
        return JetSeries(self.dim, order, terms)

    __radd__ = __add__

    def __neg__(self):
        return JetSeries(
            self.dim, self.order, {k: -v for k, v in self.terms.items()}
        )

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = JetSeries.constant(other, self.dim)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "JetSeries":
        c = GaussianRational.coerce(c)
        if c.is_zero():
            return self.zero_like()
        return JetSeries(
            self.dim, self.order, {k: v * c for k, v in self.terms.items()}
        )

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        if not isinstance(other, JetSeries):
            return NotImplemented
        order = self._binary_order(other, "jet product")
        terms: dict[TermKey, GaussianRational] = {}
        for (a1, b1), v1 in self.terms.items():
            d1 = sum(a1) + sum(b1)
            for (a2, b2), v2 in other.terms.items():
                if order is not None and d1 + sum(a2) + sum(b2) > order:
                    continue
                key = (
                    tuple(x + y for x, y in zip(a1, a2)),
                    tuple(x + y for x, y in zip(b1, b2)),
                )
                s = terms.get(key, ZERO) + v1 * v2
                if s.is_zero():
                    terms.pop(key, None)
                else:
                    terms[key] = s
        return JetSeries(self.dim, order, terms)

    __rmul__ = __mul__

    def pow(self, k: int) -> "JetSeries":
        out = JetSeries.one(self.dim, self.order)
        for _ in range(k):
            out = out * self
        return out

    def derivative(self, var: tuple[str, int]) -> "JetSeries":
        """Partial derivative; var is ("z", k) or ("zbar", l), 0-based."""
        family, idx = var
        if idx < 0 or idx >= self.dim:
            raise DimensionMismatch(f"variable index {idx} out of range")
        slot = 0 if family == "z" else 1
        if family not in ("z", "zbar"):
            raise ValueError(f"unknown variable family {family!r}")
        terms: dict[TermKey, GaussianRational] = {}
        for (alpha, beta), val in self.terms.items():
            src = alpha if slot == 0 else beta
            e = src[idx]
            if e == 0:
                continue
            lowered = tuple(
                x - 1 if i == idx else x for i, x in enumerate(src)
            )
            key = (lowered, beta) if slot == 0 else (alpha, lowered)
            terms[key] = terms.get(key, ZERO) + val * e
        order = None if self.order is None else self.order - 1
        return JetSeries(self.dim, order, terms)

    def truncated(self, new_order: Optional[int]) -> "JetSeries":
        if new_order is None:
            if self.order is not None:
                raise TruncationInsufficient(
                    "cannot promote a truncated jet to an exact polynomial"
                )
            return self
        if self.order is not None and new_order > self.order:
            raise TruncationInsufficient(
                f"cannot extend jet of order {self.order} to {new_order}"
            )
        return JetSeries(self.dim, new_order, self.terms)

    def reciprocal(self, order: Optional[int] = None) -> "JetSeries":
        """Multiplicative inverse up to the (finite) target order."""
        if order is None:
            order = self.order
        if order is None:
            raise ValueError("reciprocal of an exact polynomial needs a target order")
        _check_usable(min_order(self.order, order), "jet reciprocal")
        c0 = self.constant_term()
        if c0.is_zero():
            raise NonUnitLeading("jet has zero constant term")
        u = ONE / c0
        a = self.truncated(min_order(self.order, order))
        r = a.scale(u) - JetSeries.one(self.dim, a.order)  # valuation >= 1
        out = JetSeries.one(self.dim, a.order)
        p = JetSeries.one(self.dim, a.order)
        for _ in range(order):
            p = p * (-r)
            if p.is_zero():
                break
            out = out + p
        return out.scale(u)

    # ----------------------------------------------------------- equality

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = JetSeries.constant(other, self.dim)
        if not isinstance(other, JetSeries):
            return NotImplemented
        if self.dim != other.dim:
            return False
        order = min_order(self.order, other.order)
        _check_usable(order, "jet comparison")
        if order is None:
            return self.terms == other.terms
        keys = set(self.terms) | set(other.terms)
        for key in keys:
            if sum(key[0]) + sum(key[1]) > order:
                continue
            if self.terms.get(key, ZERO) != other.terms.get(key, ZERO):
                return False
        return True

    __hash__ = None  # equality is truncation-sensitive; not hashable

    def __repr__(self):
        if not self.terms:
            body = "0"
        else:
            parts = []
            for (alpha, beta), val in self.sorted_terms()[:8]:
                factors = []
                for i, e in enumerate(alpha):
                    if e:
                        name = "z" if self.dim == 1 else f"z{i + 1}"
                        factors.append(name + (f"^{e}" if e > 1 else ""))
                for i, e in enumerate(beta):
                    if e:
                        name = "zbar" if self.dim == 1 else f"zbar{i + 1}"
                        factors.append(name + (f"^{e}" if e > 1 else ""))
                mono = " ".join(factors) if factors else "1"
                parts.append(f"({val}) {mono}")
            body = " + ".join(parts)
            if len(self.terms) > 8:
                body += " + ..."
        tag = "inf" if self.order is None else self.order
        return f"<jet O({tag}): {body}>"


def multidegrees(dim: int, total: int) -> Iterable[Multidegree]:
    """All multidegrees of the given exact total degree, lexicographic."""
    if dim == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in multidegrees(dim - 1, total - first):
            yield (first,) + rest


def multidegrees_upto(dim: int, bound: int) -> Iterable[Multidegree]:
    for total in range(bound + 1):
        yield from multidegrees(dim, total)
