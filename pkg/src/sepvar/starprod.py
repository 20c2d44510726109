"""Star products with separation of variables and the Berezin pipeline.

A star product is built from a formal potential: the left multiplication
operator by f is the unique graded operator with holomorphic derivatives
only, grade zero equal to multiplication by f, no derivative-free part in
higher grades, commuting with every dbar_l-direction potential operator.
The system is solved grade by grade, top derivative order down, against
the leading-potential Hessian; correctness is certified by the property
and acceptance suites (associativity, unity, commutation of left and
right operators, symbol agreement with the groupoid exponentials).

The formal Berezin transform acts on factorizable monomials through the
star product and is rebuilt as a graded operator by a triangular solve
against the monomial basis.  Its operator logarithm carries one nu grade
more than the transform itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from random import Random
from typing import Optional

from .algebra.diffop import DiffOp, NuSeries, jet_multi_derivative, _multi_comb
from .algebra.fiber import FiberPoly
from .algebra.jets import JetSeries, Multidegree, min_order, multidegrees, \
    multidegrees_upto
from .algebra.scalars import GaussianRational
from .errors import (
    DegenerateHessian,
    DimensionMismatch,
    NotNatural,
    SharedBodyViolation,
    ShapeViolation,
    TruncationInsufficient,
)
from .geometry import (
    DeformedGeometry,
    Geometry,
    PotentialData,
    hessian,
    matrix_inverse,
    metric_from_potential,
)
from .kset import solve_F
from .reporting import Report
from .sampling import random_jet


def _efactorial(alpha: Multidegree) -> int:
    out = 1
    for a in alpha:
        out *= factorial(a)
    return out


def _falling(gamma: Multidegree, alpha: Multidegree) -> int:
    out = 1
    for g, a in zip(gamma, alpha):
        out *= factorial(g) // factorial(g - a)
    return out


class StarProduct:
    """Star product with separation of variables from a formal potential."""

    def __init__(self, potential: PotentialData, nu_order: int):
        self.potential = potential
        self.nu_order = nu_order
        self.dim = potential.dim
        self._hessian = hessian(potential.phi)  # [k][l]
        self.geometry = Geometry(matrix_inverse(self._hessian))
        self._op_cache: dict = {}
        # z/zbar gradients of the potential grades, indexed [grade r][var]
        self._grad_bar = [
            [potential.grade(r).derivative(("zbar", l))
             for l in range(self.dim)]
            for r in range(-1, nu_order)
        ]
        self._grad = [
            [potential.grade(r).derivative(("z", k))
             for k in range(self.dim)]
            for r in range(-1, nu_order)
        ]

    # ------------------------------------------------------ multiplication

    def left_mult_op(self, f: JetSeries, side: str = "left") -> DiffOp:
        """The graded left (or right) star-multiplication operator by f."""
        if side not in ("left", "right"):
            raise ValueError(f"side must be left or right, got {side!r}")
        if f.dim != self.dim:
            raise DimensionMismatch("function lives on a different chart")
        key = (f.cache_key(), side)
        op = self._op_cache.get(key)
        if op is None:
            op = self._solve_mult_op(f, side)
            self._op_cache[key] = op
        return op

    def _solve_mult_op(self, f: JetSeries, side: str) -> DiffOp:
        dim, R = self.dim, self.nu_order
        grads = self._grad_bar if side == "left" else self._grad
        fam = "z" if side == "left" else "zbar"
        # tables: derivative multidegree (pure fam) -> jet coefficient
        zero_key = (0,) * dim
        tables: list[dict[Multidegree, JetSeries]] = [{zero_key: f}]

        def comm_mult(table, u):
            """[table, multiplication by u] on pure-fam tables."""
            out: dict[Multidegree, JetSeries] = {}
            if u.is_zero():
                return out
            for alpha, a in table.items():
                for mu in multidegrees_upto(dim, sum(alpha)):
                    if sum(mu) == 0 or any(m > x for m, x in zip(mu, alpha)):
                        continue
                    du = (jet_multi_derivative(u, mu, zero_key) if fam == "z"
                          else jet_multi_derivative(u, zero_key, mu))
                    if not du.terms:
                        continue
                    key = tuple(x - m for x, m in zip(alpha, mu))
                    add = (a * du).scale(_multi_comb(alpha, mu))
                    cur = out.get(key)
                    out[key] = add if cur is None else cur + add
            return out

        def comm_dvar(table, i):
            """[table, d/dzbar^i] (left) or [table, d/dz^i] (right)."""
            var = ("zbar", i) if side == "left" else ("z", i)
            out = {}
            for alpha, a in table.items():
                da = a.derivative(var)
                out[alpha] = -da
            return out

        def madd(acc, table, sign=1):
            for key, jet in table.items():
                jet = jet if sign > 0 else -jet
                cur = acc.get(key)
                acc[key] = jet if cur is None else cur + jet
            return acc

        g_upper = self.geometry.g_upper
        dmu_cache: dict = {}

        def du_leading(i, mu):
            ck = (i, mu)
            jet = dmu_cache.get(ck)
            if jet is None:
                u = grads[0][i]
                jet = (jet_multi_derivative(u, mu, zero_key) if fam == "z"
                       else jet_multi_derivative(u, zero_key, mu))
                dmu_cache[ck] = jet
            return jet

        for r in range(1, R + 1):
            rhs = []
            for i in range(dim):
                acc: dict[Multidegree, JetSeries] = {}
                madd(acc, comm_mult(tables[r - 1], grads[1][i]), -1)
                madd(acc, comm_dvar(tables[r - 1], i), -1)
                for j in range(1, r):
                    madd(acc, comm_mult(tables[r - 1 - j], grads[j + 1][i]), -1)
                rhs.append(acc)
            solved: dict[Multidegree, JetSeries] = {}
            for d in range(r, 0, -1):
                for beta in multidegrees(dim, d - 1):
                    b = []
                    for i in range(dim):
                        acc = rhs[i].get(beta)
                        if acc is None:
                            acc = JetSeries.zero(dim, None)
                        for alpha, a in solved.items():
                            if sum(alpha) <= d:
                                continue
                            mu = tuple(x - y for x, y in zip(alpha, beta))
                            if any(m < 0 for m in mu) or sum(mu) < 2:
                                continue
                            acc = acc - (a * du_leading(i, mu)).scale(
                                _multi_comb(alpha, mu))
                        b.append(acc)
                    for k in range(dim):
                        alpha = tuple(x + (1 if j == k else 0)
                                      for j, x in enumerate(beta))
                        if alpha in solved:
                            continue
                        val = None
                        for i in range(dim):
                            # left: contract b_l with g^{lk} over l;
                            # right: contract b_k with g^{lk} over k
                            gi = (g_upper[i][k] if side == "left"
                                  else g_upper[k][i])
                            t = b[i] * gi
                            val = t if val is None else val + t
                        solved[alpha] = val.scale(Fraction(1, beta[k] + 1))
            tables.append(solved)

        grades = []
        for r, table in enumerate(tables):
            gt = {}
            for alpha, jet in table.items():
                key = ((alpha, zero_key) if fam == "z" else (zero_key, alpha))
                gt[key] = jet
            grades.append(gt)
        return DiffOp(dim, R, grades)

    def star(self, f: JetSeries, g: JetSeries) -> NuSeries:
        """f * g as a nu-series of jets."""
        return self.left_mult_op(f, "left").apply(g)

    def star_nu(self, F: NuSeries, G: NuSeries) -> NuSeries:
        """Star product extended nu-linearly to formal functions."""
        op = None
        for r in range(min(F.nu_order, self.nu_order) + 1):
            t = self.left_mult_op(F.coeffs[r], "left").shifted(r)
            op = t if op is None else op + t
        return op.truncated_nu(self.nu_order).apply(G)

    def c_r(self, r: int, f: JetSeries, g: JetSeries) -> JetSeries:
        """The bidifferential coefficient C_r evaluated on (f, g)."""
        return self.star(f, g)[r]


def left_mult_op(sp: StarProduct, f: JetSeries, side: str = "left") -> DiffOp:
    return sp.left_mult_op(f, side)


def star_multiply(sp: StarProduct, f: JetSeries, g: JetSeries) -> NuSeries:
    return sp.star(f, g)


@dataclass
class BerezinData:
    b: DiffOp
    x: Optional[DiffOp] = None
    x_hat: Optional[DiffOp] = None
    y: Optional[DiffOp] = None


def _triangular_operator(dim: int, nu_order: int, values) -> DiffOp:
    """Rebuild a graded operator from its action on monomials.

    ``values[(gamma, delta)]`` is the nu-series of the operator applied to
    z^gamma zbar^delta.  Grade r of the exponential of a natural operator
    divided by nu has derivative order at most 2r, so it is reconstructed
    from monomials of total degree <= 2r.
    """
    grades = []
    for r in range(nu_order + 1):
        table: dict = {}
        for total in range(2 * r + 1):
            for gamma in multidegrees_upto(dim, total):
                for delta in multidegrees(dim, total - sum(gamma)):
                    v = values[(gamma, delta)][r]
                    acc = v
                    for (alpha, beta), bjet in table.items():
                        if (any(a > g for a, g in zip(alpha, gamma))
                                or any(x > y for x, y in zip(beta, delta))):
                            continue
                        mono = JetSeries.monomial(
                            dim,
                            tuple(g - a for g, a in zip(gamma, alpha)),
                            tuple(y - x for y, x in zip(delta, beta)),
                            _falling(gamma, alpha) * _falling(delta, beta),
                            None,
                        )
                        acc = acc - bjet * mono
                    c = Fraction(1, _efactorial(gamma) * _efactorial(delta))
                    table[(gamma, delta)] = acc.scale(c)
        grades.append(table)
    return DiffOp(dim, nu_order, grades)


def berezin(sp: StarProduct) -> BerezinData:
    """The formal Berezin transform of the star product, as an operator."""
    dim, R = sp.dim, sp.nu_order
    values = {}
    for total in range(2 * R + 1):
        for gamma in multidegrees_upto(dim, total):
            for delta in multidegrees(dim, total - sum(gamma)):
                zb = JetSeries.monomial(dim, (0,) * dim, delta, 1, None)
                zg = JetSeries.monomial(dim, gamma, (0,) * dim, 1, None)
                values[(gamma, delta)] = sp.star(zb, zg)
    return BerezinData(b=_triangular_operator(dim, R, values))


def operator_log(B: DiffOp) -> DiffOp:
    """nu * log(B); checks the sharp per-grade order bounds of the result."""
    delta = B - DiffOp.identity(B.dim, B.nu_order)
    if delta.grades[0]:
        raise ShapeViolation("transform is not the identity at nu^0")
    acc = None
    power = None
    for m in range(1, B.nu_order + 1):
        power = delta if power is None else power.compose(delta)
        term = power.scale(Fraction((-1) ** (m + 1), m))
        acc = term if acc is None else acc + term
    x = acc.shifted(1)
    rep = x.naturality_report(sharp=True)
    if not rep.passed:
        raise NotNatural(rep.summary())
    return x


def parity_hat(X: DiffOp) -> tuple[DiffOp, DiffOp]:
    """Grade-wise sign flip and the odd part Y = (X - X_hat)/(2 nu)."""
    x_hat = X.scale_grades(lambda r: (-1) ** r)
    y = (X - x_hat).div_nu().scale(Fraction(1, 2))
    rep = y.naturality_report()
    if not rep.passed:
        raise NotNatural(rep.summary())
    return x_hat, y


def _mixed_tensor(X: DiffOp, grade: int, scale: Fraction):
    """Read a (1,1) tensor from a pure mixed-second-derivative grade."""
    dim = X.dim
    table = X.grades[grade] if grade <= X.nu_order else {}
    for (alpha, beta), jet in table.items():
        if jet.terms and (sum(alpha) != 1 or sum(beta) != 1):
            raise ShapeViolation(
                f"grade nu^{grade} has a term {alpha},{beta} outside the "
                f"mixed-second-derivative span"
            )
    mat = []
    for l in range(dim):
        row = []
        for k in range(dim):
            alpha = tuple(1 if i == k else 0 for i in range(dim))
            beta = tuple(1 if i == l else 0 for i in range(dim))
            jet = table.get((alpha, beta),
                            JetSeries.zero(dim, X.jet_order()))
            row.append(jet.scale(scale))
        mat.append(row)
    return mat


def h_from_x3(X: DiffOp) -> DeformedGeometry:
    """The tensor deformation read off the nu^3 grade of the logarithm."""
    g = Geometry(_mixed_tensor(X, 2, Fraction(1)))
    h = _mixed_tensor(X, 3, Fraction(2))
    return DeformedGeometry(g, h)


def _op_inverse(B: DiffOp) -> DiffOp:
    delta = B - DiffOp.identity(B.dim, B.nu_order)
    acc = DiffOp.identity(B.dim, B.nu_order)
    power = None
    for m in range(1, B.nu_order + 1):
        power = delta if power is None else power.compose(delta)
        acc = acc + power.scale((-1) ** m)
    return acc


def dual_berezin_check(sp: StarProduct, nu_order: Optional[int] = None,
                       n_samples: int = 10, seed: int = 0) -> Report:
    """Materialize the dual product and verify its transform inverts B."""
    R = sp.nu_order if nu_order is None else nu_order
    dim = sp.dim
    rep = Report(f"dual transform (nu order {R}, seed {seed})")
    bd = berezin(sp)
    B = bd.b.truncated_nu(R)
    Binv = _op_inverse(B)

    # dual product u *~ v = B^{-1}(Bv * Bu); its transform on monomials
    def dual_star(u: JetSeries, v: JetSeries) -> NuSeries:
        return Binv.apply(sp.star_nu(B.apply(v), B.apply(u)))

    values = {}
    for total in range(2 * R + 1):
        for gamma in multidegrees_upto(dim, total):
            for delta in multidegrees(dim, total - sum(gamma)):
                zb = JetSeries.monomial(dim, (0,) * dim, delta, 1, None)
                zg = JetSeries.monomial(dim, gamma, (0,) * dim, 1, None)
                values[(gamma, delta)] = dual_star(zb, zg)
    Btilde = _triangular_operator(dim, R, values)

    composed = Btilde.compose(B)
    ok = composed == DiffOp.identity(dim, R)
    rep.add("B~ o B = identity (operator level)", ok,
            "" if ok else repr(composed))

    rng = Random(seed)
    for i in range(n_samples):
        f = random_jet(rng, dim, max_degree=2,
                       jet_order=None, height=3)
        out = Btilde.apply(B.apply(f))
        ok = out == NuSeries.from_jet(f, R)
        rep.add(f"B~ o B = id on sample [{i}]", ok, "" if ok else repr(out))

    # sign pattern of the dual product's first bidifferential coefficient
    for i in range(3):
        u = random_jet(rng, dim, max_degree=2, jet_order=None, height=3)
        v = random_jet(rng, dim, max_degree=2, jet_order=None, height=3)
        lhs = dual_star(u, v)[1]
        rhs = -sp.star(u, v)[1]
        ok = lhs == rhs
        rep.add(f"dual C_1 = -C_1 [{i}]", ok, "" if ok else repr(lhs - rhs))
    return rep


def pair_s1(sp: StarProduct, sp2: StarProduct, f: JetSeries,
            side: str = "source") -> FiberPoly:
    """Deformation symbol of a pair of products sharing their leading term.

    The result is the sigma-symbol of (L_f - L'_f)/nu (or the right
    operators for the target side); the pair's deformation potential is
    the first product's nu^0 potential minus the second's.
    """
    if not sp.potential.phi == sp2.potential.phi:
        raise SharedBodyViolation(
            "star products do not share their leading potential"
        )
    opside = "left" if side == "source" else "right"
    L1 = sp.left_mult_op(f, opside)
    L2 = sp2.left_mult_op(f, opside)
    return (L1 - L2).div_nu().sigma_symbol()


@dataclass
class SigmaYResult:
    sigma_y: FiberPoly
    half_j: FiberPoly
    residual: FiberPoly
    report: Report
    berezin: BerezinData = None
    deformation: DeformedGeometry = None

    @property
    def passed(self) -> bool:
        return self.report.passed


def sigma_y_pipeline(p: PotentialData, fiber_order: int,
                     nu_order: int) -> SigmaYResult:
    """Two independent routes to the odd symbol of the transform logarithm.

    Route A: Berezin transform -> operator logarithm -> parity split ->
    sigma-symbol.  Route B: read (g, h) off the logarithm's first two
    grades and run the dual-number degree recursion; the soul J must
    satisfy sigma(Y) = J/2 exactly, fiber degree by fiber degree.
    """
    if nu_order < fiber_order + 1:
        raise TruncationInsufficient(
            f"nu order {nu_order} < fiber order {fiber_order} + 1; the odd "
            f"grades cannot reach fiber degree {fiber_order}"
        )
    sp = StarProduct(p, nu_order)
    bd = berezin(sp)
    bd.x = operator_log(bd.b)
    bd.x_hat, bd.y = parity_hat(bd.x)
    sigma_y = bd.y.sigma_symbol().truncate_fiber(fiber_order)

    d = h_from_x3(bd.x)
    rep = Report(f"sigma(Y) = J/2 (fiber order {fiber_order}, "
                 f"nu order {nu_order})")
    gx = Geometry(d.g_upper, check=False)
    ok = gx == sp.geometry
    rep.add("tensor from nu^2 grade matches the potential metric", ok)

    F = solve_F(d, fiber_order)
    half_j = F.value.soul.scale(Fraction(1, 2))
    residual = sigma_y - half_j
    for deg in range(2, fiber_order + 1, 2):
        comp = residual.degree_component(deg)
        ok = comp.is_zero()
        rep.add(f"residual at fiber degree {deg}", ok,
                "" if ok else repr(comp))
    odd = all(
        sigma_y.degree_component(deg).is_zero()
        for deg in range(3, fiber_order + 1, 2)
    )
    rep.add("sigma(Y) is even in the fiber variables", odd)
    return SigmaYResult(sigma_y, half_j, residual, rep, bd, d)
