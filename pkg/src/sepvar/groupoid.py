"""Source and target mappings of the (deformed) groupoid on the chart.

The undeformed source map is the fiberwise exponential of the vertical
derivation zeta_k g^{lk} dbar_l applied to a base function; the target map
uses zetabar_l g^{lk} d_k.  Deformations run the same exponential over
dual numbers, with the soul direction generated by h in place of g.

Truncation note: maps built here are complete to their fiber order N, so
product/unit axioms are exact at N while bracket axioms (one Poisson
bracket, which mixes degree N+1 into degree N) are exact to N-1; the
verifier windows its comparisons accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

from .algebra.dual import EpsPair
from .algebra.fiber import FiberPoly, poisson_bracket, zero_section
from .algebra.jets import JetSeries, min_order
from .errors import DimensionMismatch, TruncationInsufficient
from .geometry import DeformedGeometry, Geometry, chart_bracket
from .reporting import Report

SIDES = ("source", "target")


def _check_side(side: str) -> None:
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")


def _vertical_apply(mat, P: FiberPoly, side: str) -> FiberPoly:
    """Apply zeta_k m^{lk} dbar_l (source) or zetabar_l m^{lk} d_k (target)."""
    n = len(mat)
    out = FiberPoly.zero(P.dim, P.fiber_order)
    if side == "source":
        for k in range(n):
            acc = None
            for l in range(n):
                t = mat[l][k] * P.derivative_base(("zbar", l))
                acc = t if acc is None else acc + t
            out = out + FiberPoly.zeta(P.dim, k, P.fiber_order) * acc
    else:
        for l in range(n):
            acc = None
            for k in range(n):
                t = mat[l][k] * P.derivative_base(("z", k))
                acc = t if acc is None else acc + t
            out = out + FiberPoly.zetabar(P.dim, l, P.fiber_order) * acc
    return out


def _budget_check(jet_order: Optional[int], f: JetSeries, n_steps: int) -> None:
    eff = min_order(jet_order, f.order)
    if eff is not None and eff < n_steps:
        raise TruncationInsufficient(
            f"jet order {eff} cannot support {n_steps} derivative applications"
        )


def source_target_exp(g: Geometry, f: JetSeries, side: str = "source",
                      fiber_order: int = 4) -> FiberPoly:
    """exp of the vertical derivation applied to f, truncated fiberwise."""
    _check_side(side)
    if f.dim != g.dim:
        raise DimensionMismatch("function lives on a chart of different dim")
    _budget_check(g.jet_order, f, fiber_order)
    acc = FiberPoly.from_jet(f, fiber_order)
    term = acc
    for m in range(1, fiber_order + 1):
        term = _vertical_apply(g.g_upper, term, side).scale(Fraction(1, m))
        if term.is_zero():
            break
        acc = acc + term
    return acc


def deformed_source_target(d: DeformedGeometry, f: JetSeries,
                           side: str = "source",
                           fiber_order: int = 4) -> EpsPair:
    """The dual-number exponential exp(D + eps E) applied to f."""
    _check_side(side)
    if f.dim != d.dim:
        raise DimensionMismatch("function lives on a chart of different dim")
    _budget_check(d.base.jet_order, f, fiber_order)
    g_mat, h_mat = d.g_upper, d.h_upper

    def step(pair: EpsPair) -> EpsPair:
        return EpsPair(
            _vertical_apply(g_mat, pair.body, side),
            _vertical_apply(h_mat, pair.body, side)
            + _vertical_apply(g_mat, pair.soul, side),
        )

    acc = EpsPair.lift(FiberPoly.from_jet(f, fiber_order))
    term = acc
    for m in range(1, fiber_order + 1):
        term = step(term).scale(Fraction(1, m))
        if term.is_zero():
            break
        acc = acc + term
    return acc


def _field_apply(coeffs: list[FiberPoly], P: FiberPoly, family: str) -> FiberPoly:
    out = None
    for i, c in enumerate(coeffs):
        t = c * P.derivative_base((family, i))
        out = t if out is None else out + t
    return out


def _vertical_field(mat, dim: int, fiber_order: int, side: str):
    """Coefficient list of the vertical derivation for the given tensor."""
    coeffs = []
    n = dim
    if side == "source":
        # direction dbar_l, coefficient sum_k zeta_k m^{lk}
        for l in range(n):
            acc = None
            for k in range(n):
                t = FiberPoly.zeta(dim, k, fiber_order) * mat[l][k]
                acc = t if acc is None else acc + t
            coeffs.append(acc)
        return coeffs, "zbar"
    for k in range(n):
        acc = None
        for l in range(n):
            t = FiberPoly.zetabar(dim, l, fiber_order) * mat[l][k]
            acc = t if acc is None else acc + t
        coeffs.append(acc)
    return coeffs, "z"


def s1_via_ad_series(d: DeformedGeometry, f: JetSeries,
                     side: str = "source", fiber_order: int = 4) -> FiberPoly:
    """Soul of the deformed map via the ad-series form of the derivative.

    Builds the vector field sum_m ad(D)^m(E) / (m+1)! and applies it to
    the undeformed map value.
    """
    _check_side(side)
    n = fiber_order
    V, family = _vertical_field(d.g_upper, d.dim, n, side)
    W, _ = _vertical_field(d.h_upper, d.dim, n, side)

    def ad(A, B):
        return [
            _field_apply(A, B[i], family) - _field_apply(B, A[i], family)
            for i in range(d.dim)
        ]

    total = [w.scale(1) for w in W]
    term = W
    fact = 1
    for m in range(1, n):
        term = ad(V, term)
        fact *= m + 1
        total = [t + x.scale(Fraction(1, fact)) for t, x in zip(total, term)]
        if all(x.is_zero() for x in term):
            break
    s0 = source_target_exp(d.base, f, side, n)
    return _field_apply(total, s0, family)


def s1_via_potential(g: Geometry, psi: JetSeries, f: JetSeries,
                     side: str = "source", fiber_order: int = 4) -> FiberPoly:
    """Soul of the deformed map when h comes from a scalar potential psi.

    source: (psi_p - S0 psi_p) D^p S0 f with D^p = g^{lp} dbar_l;
    target: the conjugate formula with Dbar^q = g^{qk} d_k.
    """
    _check_side(side)
    n = fiber_order
    s0f = source_target_exp(g, f, side, n)
    out = None
    for p in range(g.dim):
        var = ("z", p) if side == "source" else ("zbar", p)
        dpsi = psi.derivative(var)
        pref = source_target_exp(g, dpsi, side, n)
        pref = FiberPoly.from_jet(dpsi, n) - pref
        if side == "source":
            dop = None
            for l in range(g.dim):
                t = g.g_upper[l][p] * s0f.derivative_base(("zbar", l))
                dop = t if dop is None else dop + t
        else:
            dop = None
            for k in range(g.dim):
                t = g.g_upper[p][k] * s0f.derivative_base(("z", k))
                dop = t if dop is None else dop + t
        t = pref * dop
        out = t if out is None else out + t
    return out


@dataclass
class SourceTargetMap:
    """A lazily evaluated source or target mapping.

    ``fn`` maps a plain jet to a FiberPoly (undeformed) or an EpsPair of
    FiberPoly (deformed); __call__ extends over dual-number inputs by
    eps-linearity.
    """

    geometry: Union[Geometry, DeformedGeometry]
    side: str
    fiber_order: int
    fn: Callable[[JetSeries], object]

    def __call__(self, f):
        if isinstance(f, EpsPair):
            body = self(f.body)
            soul = self(f.soul)
            if isinstance(body, EpsPair):
                # eps-linear: the soul argument only contributes its body map
                return EpsPair(body.body, body.soul + soul.body)
            return EpsPair(body, soul)
        return self.fn(f)


def exp_map(g: Geometry, side: str = "source",
            fiber_order: int = 4) -> SourceTargetMap:
    return SourceTargetMap(
        g, side, fiber_order,
        lambda f: source_target_exp(g, f, side, fiber_order),
    )


def deformed_exp_map(d: DeformedGeometry, side: str = "source",
                     fiber_order: int = 4) -> SourceTargetMap:
    return SourceTargetMap(
        d, side, fiber_order,
        lambda f: deformed_source_target(d, f, side, fiber_order),
    )


def recover_tensors(m: SourceTargetMap, jet_order: Optional[int] = None,
                    check: bool = True):
    """Read the tensor(s) back off the map on coordinate functions."""
    dim = m.geometry.dim
    rows_g = []
    rows_h = []
    deformed = False
    for l in range(dim):
        row_g, row_h = [], []
        for k in range(dim):
            if m.side == "source":
                val = m(JetSeries.coordinate_bar(dim, l, jet_order))
                fiber_var = ("zeta", k)
            else:
                val = m(JetSeries.coordinate(dim, k, jet_order))
                fiber_var = ("zetabar", l)
            if isinstance(val, EpsPair):
                deformed = True
                row_g.append(
                    zero_section(val.body.derivative_fiber(fiber_var)))
                row_h.append(
                    zero_section(val.soul.derivative_fiber(fiber_var)))
            else:
                row_g.append(zero_section(val.derivative_fiber(fiber_var)))
        rows_g.append(row_g)
        rows_h.append(row_h)
    g = Geometry(rows_g, check=check)
    if deformed:
        return DeformedGeometry(g, rows_h, check=check)
    return g


def verify_axioms(S: SourceTargetMap, T: SourceTargetMap,
                  d: DeformedGeometry,
                  samples: list[tuple[JetSeries, JetSeries]],
                  window: Optional[int] = None) -> Report:
    """Check the deformed groupoid axioms on sample pairs.

    Every residual must vanish exactly.  ``window`` caps the fiber degree
    at which product/unit axioms are compared; bracket axioms are compared
    one degree lower because a bracket mixes one truncated degree down.
    """
    rep = Report("groupoid axioms")
    if window is None:
        window = min(S.fiber_order, T.fiber_order)
    bw = window - 1

    def residual_zero(name, res, w):
        if isinstance(res, EpsPair):
            res = EpsPair(res.body.truncate_fiber(w), res.soul.truncate_fiber(w))
        else:
            res = res.truncate_fiber(w)
        ok = res.is_zero()
        rep.add(name, ok, "" if ok else repr(res))

    g_mat = d.g_upper
    h_mat = d.h_upper
    for i, (f, g) in enumerate(samples):
        Sf, Sg = EpsPair.lift(S(f)), EpsPair.lift(S(g))
        Tf, Tg = EpsPair.lift(T(f)), EpsPair.lift(T(g))

        # units: E(Sf) = f, E(Tf) = f with vanishing soul
        for name, val in ((f"unit S [{i}]", Sf), (f"unit T [{i}]", Tf)):
            z = zero_section(val)
            ok = z.body == f and z.soul.is_zero()
            rep.add(name, ok, "" if ok else repr(z))

        # multiplicativity
        residual_zero(f"mult S [{i}]", S(f * g) - Sf * Sg, window)
        residual_zero(f"mult T [{i}]", T(f * g) - Tf * Tg, window)

        # Poisson / anti-Poisson morphism with the deformed bracket
        br = EpsPair(chart_bracket(g_mat, f, g), chart_bracket(h_mat, f, g))
        residual_zero(f"bracket S [{i}]",
                      S(br) - poisson_bracket(Sf, Sg), bw)
        residual_zero(f"bracket T [{i}]",
                      T(br) + poisson_bracket(Tf, Tg), bw)

        # source and target values commute
        residual_zero(f"commute [{i}]", poisson_bracket(Sf, Tg), bw)
    return rep
