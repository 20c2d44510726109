"""Fiberwise polynomials on the cotangent bundle near the zero section.

A FiberPoly is a polynomial in the fiber coordinates zeta_1..zeta_n,
zetabar_1..zetabar_n whose coefficients are jets in the base variables.
It carries an explicit ``fiber_order`` (maximum retained total fiber
degree); products and brackets truncate to the minimum of the operands'
fiber orders.

Truncation bookkeeping: the fiber structure is exact (a key that is
absent has coefficient exactly zero); the jets carry the truncation.  A
stored coefficient with no terms but a finite order is a marker recording
"known to vanish up to that order only": arithmetic propagates markers by
the usual min-order rule, so comparisons never trust degrees past what
was actually computed.

The canonical Poisson bracket used everywhere is

    {P,Q} = sum_k (dP/dzeta_k dQ/dz^k - dP/dz^k dQ/dzeta_k)
          + sum_l (dP/dzetabar_l dQ/dzbar^l - dP/dzbar^l dQ/dzetabar_l)

which makes {zeta_k, z^k} = +1.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from ..errors import (
    DimensionMismatch,
    FiberDegreeTooLow,
    TruncationInsufficient,
)
from .dual import EpsPair
from .jets import JetSeries, Multidegree, min_order, _check_usable
from .scalars import GaussianRational

FiberKey = tuple[Multidegree, Multidegree]


def _bump(t: Multidegree, i: int, by: int) -> Multidegree:
    return tuple(x + by if j == i else x for j, x in enumerate(t))


class FiberPoly:
    __slots__ = ("dim", "fiber_order", "terms")

    def __init__(self, dim: int, fiber_order: int, terms=None):
        if fiber_order < 0:
            raise TruncationInsufficient("fiber order must be >= 0")
        self.dim = dim
        self.fiber_order = fiber_order
        clean: dict[FiberKey, JetSeries] = {}
        if terms:
            for key, jet in terms.items():
                p, q = key
                if len(p) != dim or len(q) != dim:
                    raise DimensionMismatch(
                        f"fiber multidegree {key} does not match dim {dim}"
                    )
                if jet.dim != dim:
                    raise DimensionMismatch("coefficient jet has wrong dim")
                if jet.order is not None and jet.order < 0:
                    raise TruncationInsufficient(
                        "coefficient jet exhausted its truncation budget"
                    )
                if sum(p) + sum(q) > fiber_order:
                    continue
                if jet.terms or jet.order is not None:
                    clean[(tuple(p), tuple(q))] = jet
        self.terms = clean

    # ---------------------------------------------------------------- ctors

    @classmethod
    def zero(cls, dim: int, fiber_order: int) -> "FiberPoly":
        return cls(dim, fiber_order, {})

    @classmethod
    def from_jet(cls, jet: JetSeries, fiber_order: int) -> "FiberPoly":
        zero = (0,) * jet.dim
        return cls(jet.dim, fiber_order, {(zero, zero): jet})

    @classmethod
    def zeta(cls, dim: int, k: int, fiber_order: int,
             jet_order: Optional[int] = None) -> "FiberPoly":
        z = (0,) * dim
        p = _bump(z, k, 1)
        return cls(dim, fiber_order, {(p, z): JetSeries.one(dim, jet_order)})

    @classmethod
    def zetabar(cls, dim: int, l: int, fiber_order: int,
                jet_order: Optional[int] = None) -> "FiberPoly":
        z = (0,) * dim
        q = _bump(z, l, 1)
        return cls(dim, fiber_order, {(z, q): JetSeries.one(dim, jet_order)})

    # ------------------------------------------------------------- queries

    def zero_like(self) -> "FiberPoly":
        return FiberPoly(self.dim, self.fiber_order, {})

    def is_zero(self) -> bool:
        return all(jet.is_zero() for jet in self.terms.values())

    def jet_order(self) -> Optional[int]:
        """Minimum effective jet order over all coefficients."""
        order = None
        for jet in self.terms.values():
            order = min_order(order, jet.order)
        return order

    def min_fiber_degree(self) -> Optional[int]:
        degs = [sum(p) + sum(q) for (p, q), jet in self.terms.items()
                if jet.terms]
        return min(degs, default=None)

    def coefficient(self, p, q) -> JetSeries:
        return self.terms.get(
            (tuple(p), tuple(q)), JetSeries.zero(self.dim, None)
        )

    def sorted_terms(self):
        return sorted(self.terms.items())

    def bidegree_component(self, p: int, q: int) -> "FiberPoly":
        """Terms of exact zeta-degree p and zetabar-degree q."""
        return FiberPoly(
            self.dim, self.fiber_order,
            {k: v for k, v in self.terms.items()
             if sum(k[0]) == p and sum(k[1]) == q},
        )

    def degree_component(self, n: int) -> "FiberPoly":
        return FiberPoly(
            self.dim, self.fiber_order,
            {k: v for k, v in self.terms.items()
             if sum(k[0]) + sum(k[1]) == n},
        )

    def truncate_fiber(self, n: int) -> "FiberPoly":
        if n > self.fiber_order:
            raise TruncationInsufficient(
                f"cannot extend fiber order {self.fiber_order} to {n}"
            )
        return FiberPoly(self.dim, n, self.terms)

    def zero_section(self) -> JetSeries:
        """Restrict to the zero section (all fiber variables to 0)."""
        z = (0,) * self.dim
        jet = self.terms.get((z, z))
        if jet is None:
            return JetSeries.zero(self.dim, None)
        return jet

    # ---------------------------------------------------------- arithmetic

    def _merge(self, other: "FiberPoly", what: str) -> int:
        if self.dim != other.dim:
            raise DimensionMismatch(f"{what}: dim {self.dim} vs {other.dim}")
        return min(self.fiber_order, other.fiber_order)

    def __add__(self, other):
        if isinstance(other, JetSeries):
            other = FiberPoly.from_jet(other, self.fiber_order)
        if not isinstance(other, FiberPoly):
            return NotImplemented
        n = self._merge(other, "fiber addition")
        terms = dict(self.terms)
        for key, jet in other.terms.items():
            cur = terms.get(key)
            terms[key] = jet if cur is None else cur + jet
        return FiberPoly(self.dim, n, terms)

    __radd__ = __add__

    def __neg__(self):
        return FiberPoly(
            self.dim, self.fiber_order,
            {k: -v for k, v in self.terms.items()},
        )

    def __sub__(self, other):
        if isinstance(other, JetSeries):
            other = FiberPoly.from_jet(other, self.fiber_order)
        return self + (-other)

    def scale(self, c) -> "FiberPoly":
        c = GaussianRational.coerce(c)
        if c.is_zero():
            # scaling by exact zero erases values but not truncation marks
            return FiberPoly(
                self.dim, self.fiber_order,
                {k: v.zero_like() for k, v in self.terms.items()
                 if v.order is not None},
            )
        return FiberPoly(
            self.dim, self.fiber_order,
            {k: v.scale(c) for k, v in self.terms.items()},
        )

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        if isinstance(other, JetSeries):
            return FiberPoly(
                self.dim, self.fiber_order,
                {k: v * other for k, v in self.terms.items()},
            )
        if not isinstance(other, FiberPoly):
            return NotImplemented
        n = self._merge(other, "fiber product")
        terms: dict[FiberKey, JetSeries] = {}
        for (p1, q1), c1 in self.terms.items():
            d1 = sum(p1) + sum(q1)
            for (p2, q2), c2 in other.terms.items():
                if d1 + sum(p2) + sum(q2) > n:
                    continue
                key = (
                    tuple(x + y for x, y in zip(p1, p2)),
                    tuple(x + y for x, y in zip(q1, q2)),
                )
                prod = c1 * c2
                cur = terms.get(key)
                terms[key] = prod if cur is None else cur + prod
        return FiberPoly(self.dim, n, terms)

    __rmul__ = __mul__

    def derivative_base(self, var: tuple[str, int]) -> "FiberPoly":
        """d/dz^k or d/dzbar^l applied to every coefficient jet."""
        return FiberPoly(
            self.dim, self.fiber_order,
            {k: v.derivative(var) for k, v in self.terms.items()},
        )

    def derivative_fiber(self, var: tuple[str, int]) -> "FiberPoly":
        """d/dzeta_k or d/dzetabar_l."""
        family, idx = var
        slot = 0 if family == "zeta" else 1
        if family not in ("zeta", "zetabar"):
            raise ValueError(f"unknown fiber variable family {family!r}")
        terms: dict[FiberKey, JetSeries] = {}
        for (p, q), jet in self.terms.items():
            src = p if slot == 0 else q
            e = src[idx]
            if e == 0:
                continue
            lowered = _bump(src, idx, -1)
            key = (lowered, q) if slot == 0 else (p, lowered)
            add = jet.scale(e)
            cur = terms.get(key)
            terms[key] = add if cur is None else cur + add
        return FiberPoly(self.dim, self.fiber_order, terms)

    # ----------------------------------------------------------- equality

    def __eq__(self, other):
        if isinstance(other, JetSeries):
            other = FiberPoly.from_jet(other, self.fiber_order)
        if not isinstance(other, FiberPoly):
            return NotImplemented
        if self.dim != other.dim:
            return False
        n = min(self.fiber_order, other.fiber_order)
        exact_zero = JetSeries.zero(self.dim, None)
        for key in set(self.terms) | set(other.terms):
            if sum(key[0]) + sum(key[1]) > n:
                continue
            a = self.terms.get(key, exact_zero)
            b = other.terms.get(key, exact_zero)
            if a != b:
                return False
        return True

    __hash__ = None

    def __repr__(self):
        if not self.terms:
            return f"<fiberpoly N({self.fiber_order}): 0>"
        parts = []
        for (p, q), jet in self.sorted_terms()[:6]:
            factors = []
            for i, e in enumerate(p):
                if e:
                    name = "zeta" if self.dim == 1 else f"zeta{i + 1}"
                    factors.append(name + (f"^{e}" if e > 1 else ""))
            for i, e in enumerate(q):
                if e:
                    name = "zetabar" if self.dim == 1 else f"zetabar{i + 1}"
                    factors.append(name + (f"^{e}" if e > 1 else ""))
            mono = " ".join(factors) if factors else "1"
            parts.append(f"[{jet!r}] {mono}")
        tail = " + ..." if len(self.terms) > 6 else ""
        return (f"<fiberpoly N({self.fiber_order}): "
                + " + ".join(parts) + tail + ">")


# --------------------------------------------------------------- brackets


def _bracket_plain(P: FiberPoly, Q: FiberPoly) -> FiberPoly:
    if P.dim != Q.dim:
        raise DimensionMismatch("poisson bracket: dimension mismatch")
    dim = P.dim
    n = min(P.fiber_order, Q.fiber_order)
    out: dict[FiberKey, JetSeries] = {}

    def accumulate(key: FiberKey, jet: JetSeries) -> None:
        cur = out.get(key)
        out[key] = jet if cur is None else cur + jet

    # cache base derivatives of coefficients, keyed by (fiber key, var)
    dP: dict[tuple, JetSeries] = {}
    dQ: dict[tuple, JetSeries] = {}

    def dbase(poly, cache, key, var):
        ck = (key, var)
        jet = cache.get(ck)
        if jet is None:
            jet = poly.terms[key].derivative(var)
            cache[ck] = jet
        return jet

    def live(jet: JetSeries) -> bool:
        # zero with no truncation mark is exactly zero: contributes nothing
        return bool(jet.terms) or jet.order is not None

    for slot, base_fam in ((0, "z"), (1, "zbar")):
        for i in range(dim):
            var = (base_fam, i)
            for key1, c1 in P.terms.items():
                e1 = key1[slot][i]
                d1 = None
                for key2, c2 in Q.terms.items():
                    e2 = key2[slot][i]
                    # dP/dfiber * dQ/dbase
                    if e1:
                        deg = (sum(key1[0]) + sum(key1[1]) - 1
                               + sum(key2[0]) + sum(key2[1]))
                        if deg <= n:
                            d2 = dbase(Q, dQ, key2, var)
                            if live(d2):
                                low = (
                                    (_bump(key1[0], i, -1), key1[1])
                                    if slot == 0
                                    else (key1[0], _bump(key1[1], i, -1))
                                )
                                fk = (
                                    tuple(x + y for x, y in zip(low[0], key2[0])),
                                    tuple(x + y for x, y in zip(low[1], key2[1])),
                                )
                                accumulate(fk, c1.scale(e1) * d2)
                    # - dP/dbase * dQ/dfiber
                    if e2:
                        deg = (sum(key1[0]) + sum(key1[1])
                               + sum(key2[0]) + sum(key2[1]) - 1)
                        if deg <= n:
                            if d1 is None:
                                d1 = dbase(P, dP, key1, var)
                            if live(d1):
                                low = (
                                    (_bump(key2[0], i, -1), key2[1])
                                    if slot == 0
                                    else (key2[0], _bump(key2[1], i, -1))
                                )
                                fk = (
                                    tuple(x + y for x, y in zip(key1[0], low[0])),
                                    tuple(x + y for x, y in zip(key1[1], low[1])),
                                )
                                accumulate(fk, d1 * c2.scale(-e2))
    return FiberPoly(dim, n, out)


def poisson_bracket(P, Q):
    """Canonical cotangent-bundle bracket; lifts over EpsPair operands."""
    if isinstance(P, EpsPair) or isinstance(Q, EpsPair):
        P = EpsPair.lift(P)
        Q = EpsPair.lift(Q)
        return EpsPair(
            _bracket_plain(P.body, Q.body),
            _bracket_plain(P.body, Q.soul) + _bracket_plain(P.soul, Q.body),
        )
    return _bracket_plain(P, Q)


def _check_generator(K) -> None:
    polys = (K.body, K.soul) if isinstance(K, EpsPair) else (K,)
    for poly in polys:
        # markers count too: a low-degree truncation mark would break the
        # degree-raising argument that makes the exponential terminate
        d = min((sum(p) + sum(q) for p, q in poly.terms), default=None)
        if d is not None and d < 2:
            raise FiberDegreeTooLow(
                f"Hamiltonian generator has fiber degree {d} < 2"
            )


def _has_entries(x) -> bool:
    if isinstance(x, EpsPair):
        return bool(x.body.terms) or bool(x.soul.terms)
    return bool(x.terms)


def ham_exp(K, Q):
    """exp of the Hamiltonian flow of K applied to Q.

    K (and its soul, when present) must have minimal fiber degree >= 2, so
    each bracket application raises fiber degree and the series terminates
    at the fiber truncation order.
    """
    _check_generator(K)
    if isinstance(K, EpsPair) or isinstance(Q, EpsPair):
        K = EpsPair.lift(K)
        Q = EpsPair.lift(Q)
    acc = Q
    term = Q
    bound = (Q.body if isinstance(Q, EpsPair) else Q).fiber_order
    for m in range(1, bound + 2):
        term = poisson_bracket(K, term).scale(Fraction(1, m))
        if not _has_entries(term):
            break
        acc = acc + term
    return acc


def zero_section(P):
    """The dual inclusion map: set all fiber variables to zero."""
    if isinstance(P, EpsPair):
        return P.map(zero_section)
    return P.zero_section()
