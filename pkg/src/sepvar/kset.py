"""Recursive solver for the fiberwise Hamiltonian generator of the groupoid.

The generator K is the unique fiber-degree >= 2 function whose Hamiltonian
exponential Poisson-commutes with pairs of holomorphic and pairs of
antiholomorphic test functions.  Degree n is recovered from the lower
degrees: with linear test functions the defining equations expose the
full second fiber-derivative tensors of K_n, and the Euler identity for
homogeneous polynomials rebuilds K_n from them, bidegree by bidegree.
Bidegrees reachable from both the holomorphic and the antiholomorphic
family are computed twice and compared.

The deformed solver runs the identical code path over dual numbers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union

from .algebra.dual import EpsPair
from .algebra.fiber import FiberPoly, ham_exp, poisson_bracket
from .algebra.jets import JetSeries, min_order, multidegrees, multidegrees_upto
from .errors import (
    FiberDegreeTooLow,
    InconsistentRecursion,
    PurityError,
    TruncationInsufficient,
)
from .geometry import DeformedGeometry, Geometry
from .groupoid import SourceTargetMap, _check_side
from .reporting import Report

Element = Union[FiberPoly, EpsPair]


@dataclass(frozen=True)
class KElement:
    geometry: Geometry
    fiber_order: int
    value: FiberPoly


@dataclass(frozen=True)
class FElement:
    deformed_geometry: DeformedGeometry
    fiber_order: int
    value: EpsPair  # body K, soul J


def _compositions(total: int, parts: int, lo: int, hi: int) -> Iterable[tuple]:
    if parts == 1:
        if lo <= total <= hi:
            yield (total,)
        return
    for first in range(lo, min(hi, total - lo * (parts - 1)) + 1):
        for rest in _compositions(total - first, parts - 1, lo, hi):
            yield (first,) + rest


def _quadratic_leading(mat, dim: int, fiber_order: int) -> FiberPoly:
    """sum_{k,l} m^{lk} zeta_k zetabar_l."""
    terms = {}
    for l in range(dim):
        for k in range(dim):
            p = tuple(1 if i == k else 0 for i in range(dim))
            q = tuple(1 if i == l else 0 for i in range(dim))
            terms[(p, q)] = mat[l][k]
    return FiberPoly(dim, fiber_order, terms)


def _d2_fiber(x: Element, fam: str, i: int, j: int) -> Element:
    def d(poly):
        return poly.derivative_fiber((fam, i)).derivative_fiber((fam, j))

    return x.map(d) if isinstance(x, EpsPair) else d(x)


def _bidegree(x: Element, p: int, q: int) -> Element:
    if isinstance(x, EpsPair):
        return x.map(lambda v: v.bidegree_component(p, q))
    return x.bidegree_component(p, q)


class _Recursion:
    """Shared recursion engine for plain and dual-number generators."""

    def __init__(self, dim: int, fiber_order: int, quadratic: Element):
        self.dim = dim
        self.N = fiber_order
        self.components: dict[int, Element] = {2: quadratic}
        self._chains: dict[tuple, Element] = {}
        self._tests = {}
        for k in range(dim):
            self._tests[("z", k)] = FiberPoly.from_jet(
                JetSeries.coordinate(dim, k), fiber_order
            )
            self._tests[("zbar", k)] = FiberPoly.from_jet(
                JetSeries.coordinate_bar(dim, k), fiber_order
            )

    def _chain(self, comp: tuple, tid: tuple) -> Element:
        if not comp:
            return self._tests[tid]
        key = (comp, tid)
        val = self._chains.get(key)
        if val is None:
            val = poisson_bracket(
                self.components[comp[0]], self._chain(comp[1:], tid)
            )
            self._chains[key] = val
        return val

    def _rhs(self, n: int, fam: str) -> list[list[Element]]:
        """R[i][j] = second fiber derivatives of K_n from the recursion."""
        dim = self.dim
        out = [[None] * dim for _ in range(dim)]
        for m in range(2, n):
            c = -Fraction(1, 1)
            for x in range(2, m + 1):
                c /= x
            for comp in _compositions(n + m - 1, m, 2, n - 1):
                if any(self.components[i].is_zero() for i in comp):
                    continue
                for i in range(dim):
                    val = self._chain(comp, (fam, i))
                    for j in range(dim):
                        t = poisson_bracket(val, self._tests[(fam, j)])
                        t = t.scale(c)
                        cur = out[i][j]
                        out[i][j] = t if cur is None else cur + t
        zero = self.components[2].zero_like()
        return [[zero if x is None else x for x in row] for row in out]

    def solve_degree(self, n: int) -> Element:
        dim = self.dim
        r_hol = self._rhs(n, "z")
        r_anti = self._rhs(n, "zbar")

        def contract(r, fam):
            acc = None
            for i in range(dim):
                ci = (FiberPoly.zeta(dim, i, self.N) if fam == "z"
                      else FiberPoly.zetabar(dim, i, self.N))
                for j in range(dim):
                    cj = (FiberPoly.zeta(dim, j, self.N) if fam == "z"
                          else FiberPoly.zetabar(dim, j, self.N))
                    t = ci * (cj * r[i][j])
                    acc = t if acc is None else acc + t
            return acc

        t_hol = contract(r_hol, "z")
        t_anti = contract(r_anti, "zbar")

        parts: dict[tuple[int, int], Element] = {}
        for p in range(n + 1):
            q = n - p
            cand_h = cand_a = None
            if p >= 2:
                cand_h = _bidegree(t_hol, p, q).scale(Fraction(1, p * (p - 1)))
            if q >= 2:
                cand_a = _bidegree(t_anti, p, q).scale(Fraction(1, q * (q - 1)))
            if cand_h is not None and cand_a is not None:
                if not (cand_h - cand_a).is_zero():
                    raise InconsistentRecursion(
                        f"degree {n} bidegree ({p},{q}): holomorphic and "
                        f"antiholomorphic reconstructions disagree (input "
                        f"tensor violating Jacobi, or a bug)"
                    )
            chosen = cand_h if cand_h is not None else cand_a
            if chosen is not None and not chosen.is_zero():
                parts[(p, q)] = chosen

        total = None
        for key in sorted(parts):
            total = parts[key] if total is None else total + parts[key]
        if total is None:
            total = (self.components[2].zero_like())

        # certify: the rebuilt component reproduces both derivative tensors
        for fam, r in (("zeta", r_hol), ("zetabar", r_anti)):
            for i in range(dim):
                for j in range(dim):
                    if not (_d2_fiber(total, fam, i, j) - r[i][j]).is_zero():
                        raise InconsistentRecursion(
                            f"degree {n}: reconstructed component does not "
                            f"solve the {fam} recursion equations"
                        )
        if n % 2 == 1 and not total.is_zero():
            raise InconsistentRecursion(
                f"degree {n}: odd component is nonzero (input tensor "
                f"violating Jacobi, or a bug)"
            )
        return total

    def run(self) -> Element:
        acc = self.components[2]
        for n in range(3, self.N + 1):
            comp = self.solve_degree(n)
            self.components[n] = comp
            if not comp.is_zero():
                acc = acc + comp
        return acc


def _budget(jet_order: Optional[int], fiber_order: int,
            out_jet_order: int) -> None:
    if jet_order is not None and jet_order < fiber_order + out_jet_order:
        raise TruncationInsufficient(
            f"input jet order {jet_order} < fiber order {fiber_order} "
            f"+ requested output jet order {out_jet_order}"
        )


def solve_K(g: Geometry, fiber_order: int, out_jet_order: int = 0) -> KElement:
    """The unique admissible generator attached to g, up to fiber degree N."""
    _budget(g.jet_order, fiber_order, out_jet_order)
    quad = _quadratic_leading(g.g_upper, g.dim, fiber_order)
    value = _Recursion(g.dim, fiber_order, quad).run()
    return KElement(g, fiber_order, value)


def solve_F(d: DeformedGeometry, fiber_order: int,
            out_jet_order: int = 0) -> FElement:
    """The dual-number generator K + eps*J attached to g + eps*h.

    Runs exactly the plain recursion over dual-number elements; the soul
    of the result is the linearized component J.
    """
    _budget(d.base.jet_order, fiber_order, out_jet_order)
    quad = EpsPair(
        _quadratic_leading(d.g_upper, d.dim, fiber_order),
        _quadratic_leading(d.h_upper, d.dim, fiber_order),
    )
    value = _Recursion(d.dim, fiber_order, quad).run()
    return FElement(d, fiber_order, value)


def _element_value(F) -> Element:
    if isinstance(F, (KElement, FElement)):
        return F.value
    return F


def membership_report(F, test_degree: int,
                      window: Optional[int] = None) -> Report:
    """Check the defining bracket equations on monomial test functions.

    Residuals are only meaningful up to fiber degree N-2 for a generator
    truncated at N (higher degrees involve dropped components), so the
    report windows them there unless told otherwise.
    """
    value = _element_value(F)
    probe = value.body if isinstance(value, EpsPair) else value
    d = probe.min_fiber_degree()
    if d is None or d < 2:
        raise FiberDegreeTooLow(
            "membership requires minimal fiber degree >= 2"
        )
    dim = probe.dim
    N = probe.fiber_order
    if window is None:
        window = max(N - 2, 0)
    rep = Report(f"membership (test degree <= {test_degree}, "
                 f"residual window {window})")

    def monos(maker):
        for deg in range(1, test_degree + 1):
            for alpha in multidegrees(dim, deg):
                yield alpha, maker(alpha)

    def jet_h(alpha):
        return JetSeries.monomial(dim, alpha, (0,) * dim, 1, None)

    def jet_a(alpha):
        return JetSeries.monomial(dim, (0,) * dim, alpha, 1, None)

    for fam, maker in (("hol", jet_h), ("antihol", jet_a)):
        exps = {}
        for alpha, jet in monos(maker):
            exps[alpha] = ham_exp(value, FiberPoly.from_jet(jet, N))
        for alpha, ea in exps.items():
            for beta, jet2 in monos(maker):
                res = poisson_bracket(ea, FiberPoly.from_jet(jet2, N))
                if isinstance(res, EpsPair):
                    res = res.map(lambda x: x.truncate_fiber(window))
                else:
                    res = res.truncate_fiber(window)
                ok = res.is_zero()
                rep.add(f"{fam} {alpha} vs {beta}", ok,
                        "" if ok else repr(res))
    return rep


def st_from_element(F, a: JetSeries, b: JetSeries, side: str = "source"):
    """Map value on a product a*b of a holomorphic and antiholomorphic jet."""
    _check_side(side)
    value = _element_value(F)
    probe = value.body if isinstance(value, EpsPair) else value
    if not a.is_holomorphic():
        raise PurityError("first factor must be holomorphic")
    if not b.is_antiholomorphic():
        raise PurityError("second factor must be antiholomorphic")
    N = probe.fiber_order
    if side == "source":
        return ham_exp(value, FiberPoly.from_jet(b, N)) * a
    return ham_exp(value, FiberPoly.from_jet(a, N)) * b


def st_map(F, f: JetSeries, side: str = "source"):
    """Extend the factorizable formula to arbitrary jets, monomial-wise."""
    _check_side(side)
    value = _element_value(F)
    probe = value.body if isinstance(value, EpsPair) else value
    dim, N = probe.dim, probe.fiber_order
    groups: dict[tuple, JetSeries] = {}
    for (alpha, beta), c in f.terms.items():
        key = beta if side == "source" else alpha
        mono = (JetSeries.monomial(dim, alpha, (0,) * dim, c, f.order)
                if side == "source"
                else JetSeries.monomial(dim, (0,) * dim, beta, c, f.order))
        cur = groups.get(key)
        groups[key] = mono if cur is None else cur + mono
    out = None
    for key in sorted(groups):
        pure = (JetSeries.monomial(dim, (0,) * dim, key, 1, f.order)
                if side == "source"
                else JetSeries.monomial(dim, key, (0,) * dim, 1, f.order))
        t = ham_exp(value, FiberPoly.from_jet(pure, N)) * groups[key]
        out = t if out is None else out + t
    if out is None:
        zero = FiberPoly.zero(dim, N, f.order)
        out = EpsPair.lift(zero) if isinstance(value, EpsPair) else zero
    return out


def groupoid_maps(F, side_orders: Optional[int] = None):
    """SourceTargetMap pair evaluating through the generator."""
    value = _element_value(F)
    probe = value.body if isinstance(value, EpsPair) else value
    N = side_orders if side_orders is not None else probe.fiber_order
    geom = (F.geometry if isinstance(F, KElement)
            else F.deformed_geometry if isinstance(F, FElement) else None)
    S = SourceTargetMap(geom, "source", N, lambda f: st_map(F, f, "source"))
    T = SourceTargetMap(geom, "target", N, lambda f: st_map(F, f, "target"))
    return S, T


def deformation_from_hamiltonian(K: KElement, J: FiberPoly, f: JetSeries,
                                 side: str = "source") -> FiberPoly:
    """Soul of the deformed map from the transported deformation generator.

    Builds G = sum_m H_K^m J / (m+1)! and brackets it against the
    undeformed map value, monomial by monomial.
    """
    _check_side(side)
    dJ = J.min_fiber_degree()
    if dJ is not None and dJ < 2:
        raise FiberDegreeTooLow("deformation generator has fiber degree < 2")
    value = K.value
    dim, N = value.dim, K.fiber_order
    # G = sum_m H^m J / (m+1)!; successive terms divide by (m+1)
    G = J
    term = J
    m = 0
    while not term.is_zero():
        m += 1
        term = poisson_bracket(value, term).scale(Fraction(1, m + 1))
        G = G + term
    out = None
    for (alpha, beta), c in f.terms.items():
        if side == "source":
            pure = JetSeries.monomial(dim, (0,) * dim, beta, 1, f.order)
            rest = JetSeries.monomial(dim, alpha, (0,) * dim, c, f.order)
        else:
            pure = JetSeries.monomial(dim, alpha, (0,) * dim, 1, f.order)
            rest = JetSeries.monomial(dim, (0,) * dim, beta, c, f.order)
        base = ham_exp(value, FiberPoly.from_jet(pure, N))
        t = poisson_bracket(G, base) * rest
        out = t if out is None else out + t
    if out is None:
        out = FiberPoly.zero(dim, N, f.order)
    return out
