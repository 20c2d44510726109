"""Graded formal differential operators A = A_0 + nu A_1 + ... + nu^R A_R.

Each grade is a sparse table ``(dz-multidegree, dzbar-multidegree) -> jet
coefficient``.  The derivative structure is exact: an absent key has
coefficient exactly zero, while a stored empty jet with a finite order is
a truncation marker ("vanishes at least to that order").  Composition
expands by the Leibniz rule, so applying a composite agrees with applying
the factors in sequence up to truncation.

An operator is *natural* when the derivative order of grade r is at most
r; natural operators have a sigma-symbol, the fiber polynomial collecting
the top-order symbols of all grades.
"""

from __future__ import annotations

from itertools import product as iproduct
from math import comb
from typing import Optional, Sequence, Union

from ..errors import (
    DimensionMismatch,
    DivisibilityError,
    NotNatural,
    TruncationInsufficient,
)
from ..reporting import Report
from .fiber import FiberPoly
from .jets import JetSeries, Multidegree
from .scalars import GaussianRational

OpKey = tuple[Multidegree, Multidegree]
GradeTable = dict[OpKey, JetSeries]


def _subdegrees(alpha: Multidegree):
    return iproduct(*(range(a + 1) for a in alpha))


def _multi_comb(alpha: Multidegree, mu: Multidegree) -> int:
    out = 1
    for a, m in zip(alpha, mu):
        out *= comb(a, m)
    return out


def jet_multi_derivative(jet: JetSeries, mu: Multidegree,
                         nu: Multidegree) -> JetSeries:
    out = jet
    for i, e in enumerate(mu):
        for _ in range(e):
            out = out.derivative(("z", i))
    for i, e in enumerate(nu):
        for _ in range(e):
            out = out.derivative(("zbar", i))
    return out


def _live(jet: JetSeries) -> bool:
    """False only for jets that are exactly zero (no truncation mark)."""
    return bool(jet.terms) or jet.order is not None


class DiffOp:
    __slots__ = ("dim", "nu_order", "grades")

    def __init__(self, dim: int, nu_order: int,
                 grades: Sequence[GradeTable] = ()):
        if nu_order < 0:
            raise TruncationInsufficient("nu order must be >= 0")
        self.dim = dim
        self.nu_order = nu_order
        clean: list[GradeTable] = []
        for r in range(nu_order + 1):
            table = grades[r] if r < len(grades) else {}
            kept: GradeTable = {}
            for key, jet in table.items():
                alpha, beta = key
                if len(alpha) != dim or len(beta) != dim:
                    raise DimensionMismatch(
                        f"operator multidegree {key} does not match dim {dim}"
                    )
                if jet.dim != dim:
                    raise DimensionMismatch("coefficient jet has wrong dim")
                if jet.order is not None and jet.order < 0:
                    raise TruncationInsufficient(
                        "operator coefficient exhausted its jet budget"
                    )
                if _live(jet):
                    kept[(tuple(alpha), tuple(beta))] = jet
            clean.append(kept)
        self.grades = tuple(clean)

    # ---------------------------------------------------------------- ctors

    @classmethod
    def zero(cls, dim: int, nu_order: int) -> "DiffOp":
        return cls(dim, nu_order, [])

    @classmethod
    def identity(cls, dim: int, nu_order: int) -> "DiffOp":
        z = (0,) * dim
        return cls(dim, nu_order, [{(z, z): JetSeries.one(dim)}])

    @classmethod
    def mult(cls, jet: JetSeries, nu_order: int) -> "DiffOp":
        """Multiplication operator by a function, at grade zero."""
        z = (0,) * jet.dim
        return cls(jet.dim, nu_order, [{(z, z): jet}])

    @classmethod
    def single(cls, dim: int, nu_order: int, grade: int, alpha, beta,
               coeff: JetSeries) -> "DiffOp":
        grades: list[GradeTable] = [{} for _ in range(grade)]
        grades.append({(tuple(alpha), tuple(beta)): coeff})
        return cls(dim, nu_order, grades)

    # ------------------------------------------------------------- queries

    def zero_like(self) -> "DiffOp":
        return DiffOp(self.dim, self.nu_order, [])

    def is_zero(self) -> bool:
        return all(
            jet.is_zero() for table in self.grades for jet in table.values()
        )

    def grade_order(self, r: int) -> Optional[int]:
        """Max derivative order carried by nonzero grade-r terms."""
        orders = [sum(a) + sum(b) for (a, b), jet in self.grades[r].items()
                  if jet.terms]
        return max(orders, default=None)

    def max_derivative_order(self) -> int:
        return max(
            (sum(a) + sum(b) for table in self.grades for a, b in table),
            default=0,
        )

    def jet_order(self) -> Optional[int]:
        order = None
        for table in self.grades:
            for jet in table.values():
                if jet.order is not None:
                    order = jet.order if order is None else min(order, jet.order)
        return order

    # ---------------------------------------------------------- arithmetic

    def _merge(self, other: "DiffOp", what: str) -> int:
        if self.dim != other.dim:
            raise DimensionMismatch(f"{what}: dim {self.dim} vs {other.dim}")
        return min(self.nu_order, other.nu_order)

    def __add__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        R = self._merge(other, "operator addition")
        grades: list[GradeTable] = []
        for r in range(R + 1):
            table = dict(self.grades[r])
            for key, jet in other.grades[r].items():
                cur = table.get(key)
                table[key] = jet if cur is None else cur + jet
            grades.append(table)
        return DiffOp(self.dim, R, grades)

    def __neg__(self):
        return DiffOp(
            self.dim, self.nu_order,
            [{k: -v for k, v in t.items()} for t in self.grades],
        )

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "DiffOp":
        c = GaussianRational.coerce(c)
        if c.is_zero():
            return DiffOp(
                self.dim, self.nu_order,
                [{k: v.zero_like() for k, v in t.items()
                  if v.order is not None} for t in self.grades],
            )
        return DiffOp(
            self.dim, self.nu_order,
            [{k: v.scale(c) for k, v in t.items()} for t in self.grades],
        )

    def scale_grades(self, fn) -> "DiffOp":
        """Multiply grade r by the exact scalar fn(r)."""
        grades: list[GradeTable] = []
        for r, table in enumerate(self.grades):
            c = GaussianRational.coerce(fn(r))
            if c.is_zero():
                grades.append({k: v.zero_like() for k, v in table.items()
                               if v.order is not None})
            else:
                grades.append({k: v.scale(c) for k, v in table.items()})
        return DiffOp(self.dim, self.nu_order, grades)

    def shifted(self, s: int) -> "DiffOp":
        """Multiply by nu^s; the nu budget grows with the shift."""
        grades: list[GradeTable] = [{} for _ in range(s)]
        grades.extend(dict(t) for t in self.grades)
        return DiffOp(self.dim, self.nu_order + s, grades)

    def truncated_nu(self, R: int) -> "DiffOp":
        if R > self.nu_order:
            raise TruncationInsufficient(
                f"cannot extend nu order {self.nu_order} to {R}"
            )
        return DiffOp(self.dim, R, self.grades[: R + 1])

    def compose(self, other: "DiffOp") -> "DiffOp":
        """Operator composition self after other, by the Leibniz rule."""
        R = self._merge(other, "operator composition")
        grades: list[GradeTable] = [dict() for _ in range(R + 1)]
        # cache multi-derivatives of other's coefficients
        dcache: dict[tuple, JetSeries] = {}

        def dmulti(j, key, mu, nu):
            ck = (j, key, mu, nu)
            jet = dcache.get(ck)
            if jet is None:
                jet = jet_multi_derivative(other.grades[j][key], mu, nu)
                dcache[ck] = jet
            return jet

        for i in range(R + 1):
            if not self.grades[i]:
                continue
            for j in range(R + 1 - i):
                if not other.grades[j]:
                    continue
                out = grades[i + j]
                for (alpha, beta), a in self.grades[i].items():
                    for key_b in other.grades[j]:
                        gamma, delta = key_b
                        for mu in _subdegrees(alpha):
                            cm = _multi_comb(alpha, mu)
                            for nu in _subdegrees(beta):
                                c = cm * _multi_comb(beta, nu)
                                db = dmulti(j, key_b, mu, nu)
                                if not _live(db):
                                    continue
                                key = (
                                    tuple(x - m + g for x, m, g in
                                          zip(alpha, mu, gamma)),
                                    tuple(x - m + g for x, m, g in
                                          zip(beta, nu, delta)),
                                )
                                add = (a * db).scale(c)
                                cur = out.get(key)
                                out[key] = add if cur is None else cur + add
        return DiffOp(self.dim, R, grades)

    def commutator(self, other: "DiffOp") -> "DiffOp":
        return self.compose(other) - other.compose(self)

    def div_nu(self) -> "DiffOp":
        """Divide by nu; grade zero must vanish identically."""
        if self.nu_order < 1:
            raise TruncationInsufficient("no nu budget left to divide")
        if any(jet.terms for jet in self.grades[0].values()):
            raise DivisibilityError(
                "operator has a nonzero nu^0 grade; not divisible by nu"
            )
        return DiffOp(self.dim, self.nu_order - 1, self.grades[1:])

    # --------------------------------------------------------- application

    def apply_grade(self, r: int, f: JetSeries) -> JetSeries:
        out = JetSeries.zero(self.dim, None)
        for (alpha, beta), a in self.grades[r].items():
            df = jet_multi_derivative(f, alpha, beta)
            if _live(df):
                out = out + a * df
        return out

    def apply(self, f: Union[JetSeries, "NuSeries"]) -> "NuSeries":
        if isinstance(f, JetSeries):
            f = NuSeries.from_jet(f, self.nu_order)
        if f.dim != self.dim:
            raise DimensionMismatch("operator application: dimension mismatch")
        R = min(self.nu_order, f.nu_order)
        coeffs = []
        for r in range(R + 1):
            acc = JetSeries.zero(self.dim, None)
            for i in range(r + 1):
                acc = acc + self.apply_grade(i, f.coeffs[r - i])
            coeffs.append(acc)
        return NuSeries(self.dim, coeffs)

    # ------------------------------------------------------------- symbols

    def sigma_symbol(self, fiber_order: Optional[int] = None) -> FiberPoly:
        """Sum of the order-r principal symbols of the grades A_r."""
        rep = self.naturality_report()
        if not rep.passed:
            raise NotNatural(rep.summary())
        if fiber_order is None:
            fiber_order = self.nu_order
        terms = {}
        for r in range(self.nu_order + 1):
            for (alpha, beta), jet in self.grades[r].items():
                if sum(alpha) + sum(beta) == r:
                    key = (alpha, beta)
                    cur = terms.get(key)
                    terms[key] = jet if cur is None else cur + jet
        return FiberPoly(self.dim, fiber_order, terms)

    def naturality_report(self, sharp: bool = False) -> Report:
        """Per-grade order table against ord(A_r) <= r.

        With ``sharp=True`` grades 2k and 2k+1 are both held to order 2k.
        """
        rep = Report("naturality" + (" (sharp)" if sharp else ""))
        for r in range(self.nu_order + 1):
            bound = (r if not sharp else (r if r % 2 == 0 else r - 1))
            got = self.grade_order(r)
            shown = "-" if got is None else str(got)
            rep.add(
                f"grade nu^{r}",
                got is None or got <= bound,
                f"order {shown}, bound {bound}",
            )
        return rep

    # ----------------------------------------------------------- equality

    def __eq__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        if self.dim != other.dim:
            return False
        R = min(self.nu_order, other.nu_order)
        exact_zero = JetSeries.zero(self.dim, None)
        for r in range(R + 1):
            for key in set(self.grades[r]) | set(other.grades[r]):
                a = self.grades[r].get(key, exact_zero)
                b = other.grades[r].get(key, exact_zero)
                if a != b:
                    return False
        return True

    __hash__ = None

    def __repr__(self):
        live = sum(len(t) for t in self.grades)
        return (f"<diffop dim={self.dim} nu_order={self.nu_order} "
                f"terms={live}>")


class NuSeries:
    """A formal function: jets graded by powers of nu."""

    __slots__ = ("dim", "coeffs")

    def __init__(self, dim: int, coeffs: Sequence[JetSeries]):
        if not coeffs:
            raise ValueError("a nu-series needs at least the nu^0 grade")
        for c in coeffs:
            if c.dim != dim:
                raise DimensionMismatch("nu-series coefficient dim mismatch")
        self.dim = dim
        self.coeffs = tuple(coeffs)

    @classmethod
    def from_jet(cls, jet: JetSeries, nu_order: int) -> "NuSeries":
        pads = [JetSeries.zero(jet.dim, None) for _ in range(nu_order)]
        return cls(jet.dim, [jet] + pads)

    @property
    def nu_order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, r: int) -> JetSeries:
        return self.coeffs[r]

    def __add__(self, other: "NuSeries") -> "NuSeries":
        R = min(self.nu_order, other.nu_order)
        return NuSeries(
            self.dim,
            [self.coeffs[r] + other.coeffs[r] for r in range(R + 1)],
        )

    def __neg__(self) -> "NuSeries":
        return NuSeries(self.dim, [-c for c in self.coeffs])

    def __sub__(self, other: "NuSeries") -> "NuSeries":
        return self + (-other)

    def scale(self, c) -> "NuSeries":
        return NuSeries(self.dim, [x.scale(c) for x in self.coeffs])

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def __eq__(self, other):
        if isinstance(other, JetSeries):
            other = NuSeries.from_jet(other, self.nu_order)
        if not isinstance(other, NuSeries):
            return NotImplemented
        R = min(self.nu_order, other.nu_order)
        return all(self.coeffs[r] == other.coeffs[r] for r in range(R + 1))

    __hash__ = None

    def __repr__(self):
        return f"<nuseries order {self.nu_order}: {list(self.coeffs)!r}>"


def op_compose(A: DiffOp, B: DiffOp) -> DiffOp:
    return A.compose(B)


def commutator_over_nu(A: DiffOp, B: DiffOp) -> DiffOp:
    """(1/nu)[A, B]; raises DivisibilityError if [A,B] has a nu^0 part."""
    return A.commutator(B).div_nu()


def sigma_symbol(A: DiffOp, fiber_order: Optional[int] = None) -> FiberPoly:
    return A.sigma_symbol(fiber_order)


def naturality_report(A: DiffOp, sharp: bool = False) -> Report:
    return A.naturality_report(sharp)
