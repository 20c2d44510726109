"""Kahler-Poisson tensors on a chart, their deformations, and potentials.

A tensor of type (1,1) is stored as a matrix ``g_upper[l][k]`` of jets,
``l`` the antiholomorphic and ``k`` the holomorphic index.  The Jacobi
identity takes the purely holomorphic form

    g^{lk} d_k g^{qp} = g^{qk} d_k g^{lp}   and
    g^{lk} dbar_l g^{qp} = g^{lp} dbar_l g^{qk}

(summation over the repeated index); an infinitesimal deformation
g + eps*h must satisfy the same identities linearized in h, which is the
statement that g + eps*h satisfies the Jacobi identity over dual numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .algebra.dual import EpsPair
from .algebra.jets import JetSeries, min_order
from .algebra.scalars import GaussianRational, ZERO
from .errors import DegenerateHessian, DimensionMismatch, JacobiViolation
from .reporting import Report

Matrix = tuple[tuple, ...]


def _freeze(mat: Sequence[Sequence]) -> Matrix:
    return tuple(tuple(row) for row in mat)


def _d(x, var):
    if isinstance(x, EpsPair):
        return x.map(lambda j: j.derivative(var))
    return x.derivative(var)


def _mat_is_square(mat: Matrix, dim: int, what: str) -> None:
    if len(mat) != dim or any(len(row) != dim for row in mat):
        raise DimensionMismatch(f"{what}: expected a {dim}x{dim} matrix")


def jacobi_residuals(mat: Matrix):
    """Yield (name, residual) for both Jacobi identity families.

    Works for matrices of jets and of EpsPair-of-jets alike; over dual
    numbers the soul of the residual is the linearized identity.
    """
    n = len(mat)
    for l in range(n):
        for q in range(n):
            for p in range(n):
                res = None
                for k in range(n):
                    t = (mat[l][k] * _d(mat[q][p], ("z", k))
                         - mat[q][k] * _d(mat[l][p], ("z", k)))
                    res = t if res is None else res + t
                yield f"dz l={l} q={q} p={p}", res
    for k in range(n):
        for q in range(n):
            for p in range(n):
                res = None
                for l in range(n):
                    t = (mat[l][k] * _d(mat[q][p], ("zbar", l))
                         - mat[l][p] * _d(mat[q][k], ("zbar", l)))
                    res = t if res is None else res + t
                yield f"dzbar k={k} q={q} p={p}", res


class Geometry:
    """A Kahler-Poisson tensor g^{lk} on a chart."""

    __slots__ = ("dim", "g_upper")

    def __init__(self, g_upper: Sequence[Sequence[JetSeries]],
                 check: bool = True):
        mat = _freeze(g_upper)
        self.dim = len(mat)
        _mat_is_square(mat, self.dim, "Kahler-Poisson tensor")
        self.g_upper = mat
        if check:
            rep = self.jacobi_report()
            if not rep.passed:
                bad = rep.failures()[0]
                raise JacobiViolation(
                    f"tensor violates the Jacobi identity at {bad.name}"
                )

    @property
    def jet_order(self) -> Optional[int]:
        order = None
        for row in self.g_upper:
            for entry in row:
                order = min_order(order, entry.order)
        return order

    def jacobi_report(self) -> Report:
        rep = Report("jacobi identities")
        for name, res in jacobi_residuals(self.g_upper):
            rep.add(name, res.is_zero(), "" if res.is_zero() else repr(res))
        return rep

    def entry(self, l: int, k: int) -> JetSeries:
        return self.g_upper[l][k]

    def __eq__(self, other):
        if not isinstance(other, Geometry):
            return NotImplemented
        return (self.dim == other.dim
                and all(self.g_upper[l][k] == other.g_upper[l][k]
                        for l in range(self.dim) for k in range(self.dim)))

    __hash__ = None

    def __repr__(self):
        return f"<geometry dim={self.dim} order={self.jet_order}>"


class DeformedGeometry:
    """An infinitesimal deformation g + eps*h of a Kahler-Poisson tensor."""

    __slots__ = ("base", "h_upper")

    def __init__(self, base: Geometry, h_upper: Sequence[Sequence[JetSeries]],
                 check: bool = True):
        mat = _freeze(h_upper)
        _mat_is_square(mat, base.dim, "tensor deformation")
        self.base = base
        self.h_upper = mat
        if check:
            rep = self.jacobi_report()
            if not rep.passed:
                bad = rep.failures()[0]
                raise JacobiViolation(
                    f"deformation violates the linearized Jacobi identity "
                    f"at {bad.name}"
                )

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def g_upper(self) -> Matrix:
        return self.base.g_upper

    def eps_matrix(self) -> Matrix:
        return _freeze(
            [[EpsPair(self.base.g_upper[l][k], self.h_upper[l][k])
              for k in range(self.dim)] for l in range(self.dim)]
        )

    def jacobi_report(self) -> Report:
        """Linearized Jacobi identities for the pair (g, h)."""
        n = self.dim
        g = self.base.g_upper
        h = self.h_upper
        rep = Report("linearized jacobi identities")

        def emit(name, res):
            rep.add(name, res.is_zero(), "" if res.is_zero() else repr(res))

        for l in range(n):
            for q in range(n):
                for p in range(n):
                    res = None
                    for k in range(n):
                        t = (g[l][k] * h[q][p].derivative(("z", k))
                             + h[l][k] * g[q][p].derivative(("z", k))
                             - g[q][k] * h[l][p].derivative(("z", k))
                             - h[q][k] * g[l][p].derivative(("z", k)))
                        res = t if res is None else res + t
                    emit(f"dz l={l} q={q} p={p}", res)
        for k in range(n):
            for q in range(n):
                for p in range(n):
                    res = None
                    for l in range(n):
                        t = (g[l][k] * h[q][p].derivative(("zbar", l))
                             + h[l][k] * g[q][p].derivative(("zbar", l))
                             - g[l][p] * h[q][k].derivative(("zbar", l))
                             - h[l][p] * g[q][k].derivative(("zbar", l)))
                        res = t if res is None else res + t
                    emit(f"dzbar k={k} q={q} p={p}", res)
        return rep

    def __eq__(self, other):
        if not isinstance(other, DeformedGeometry):
            return NotImplemented
        return (self.base == other.base
                and all(self.h_upper[l][k] == other.h_upper[l][k]
                        for l in range(self.dim) for k in range(self.dim)))

    __hash__ = None

    def __repr__(self):
        return f"<deformed geometry dim={self.dim}>"


def jacobi_check(g: Geometry) -> Report:
    return g.jacobi_report()


def jacobi_deformed_check(d: DeformedGeometry) -> Report:
    return d.jacobi_report()


@dataclass(frozen=True)
class PotentialData:
    """A formal potential: leading term phi at nu^{-1}, then phi_0, phi_1, ...

    The Hessian of the leading term must be invertible at the base point.
    """

    phi: JetSeries
    higher: tuple[JetSeries, ...] = field(default=())

    def __post_init__(self):
        for h in self.higher:
            if h.dim != self.phi.dim:
                raise DimensionMismatch("potential grades have mixed dims")
        hess = hessian(self.phi)
        _constant_inverse(hess)  # raises DegenerateHessian when singular

    @property
    def dim(self) -> int:
        return self.phi.dim

    @property
    def jet_order(self) -> Optional[int]:
        return self.phi.order

    def grade(self, r: int) -> JetSeries:
        """Potential coefficient at nu^r (r = -1 is the leading term)."""
        if r == -1:
            return self.phi
        if 0 <= r < len(self.higher):
            return self.higher[r]
        return JetSeries.zero(self.dim, None)


def hessian(phi: JetSeries) -> Matrix:
    n = phi.dim
    return _freeze(
        [[phi.derivative(("z", k)).derivative(("zbar", l)) for l in range(n)]
         for k in range(n)]
    )


def _constant_inverse(mat: Matrix) -> list[list[GaussianRational]]:
    """Exact inverse of the constant part; DegenerateHessian if singular."""
    n = len(mat)
    a = [[mat[i][j].constant_term() for j in range(n)] for i in range(n)]
    inv = [[GaussianRational(1 if i == j else 0) for j in range(n)]
           for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not a[r][col].is_zero()), None)
        if piv is None:
            raise DegenerateHessian(
                "matrix is singular at the base point"
            )
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        scale = GaussianRational(1) / a[col][col]
        a[col] = [x * scale for x in a[col]]
        inv[col] = [x * scale for x in inv[col]]
        for r in range(n):
            if r == col or a[r][col].is_zero():
                continue
            f = a[r][col]
            a[r] = [x - f * y for x, y in zip(a[r], a[col])]
            inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    return inv


def _mat_mul(A, B, dim):
    out = []
    for i in range(dim):
        row = []
        for j in range(dim):
            acc = None
            for m in range(dim):
                t = A[i][m] * B[m][j]
                acc = t if acc is None else acc + t
            row.append(acc)
        out.append(row)
    return out


def matrix_inverse(mat: Matrix) -> Matrix:
    """Jet-matrix inverse via exact constant inverse + geometric series."""
    n = len(mat)
    cinv_scalar = _constant_inverse(mat)
    cinv = [[JetSeries.constant(c, n, None) for c in row]
            for row in cinv_scalar]
    prod = _mat_mul(cinv, mat, n)
    # E = Cinv*M - I has zero constant term
    E = [[prod[i][j] - JetSeries.constant(1 if i == j else 0, n, None)
          for j in range(n)] for i in range(n)]
    order = None
    for row in mat:
        for x in row:
            order = min_order(order, x.order)
    if order is None and any(x.terms for row in E for x in row):
        raise ValueError(
            "inverse of an exact non-constant matrix needs a finite order"
        )
    acc = [[JetSeries.constant(1 if i == j else 0, n, order)
            for j in range(n)] for i in range(n)]
    term = acc
    steps = 0 if order is None else order
    for _ in range(steps):
        term = _mat_mul(term, [[-e for e in row] for row in E], n)
        if all(x.is_zero() for row in term for x in row):
            break
        acc = [[acc[i][j] + term[i][j] for j in range(n)] for i in range(n)]
    return _freeze(_mat_mul(acc, cinv, n))


def metric_from_potential(p: PotentialData, check: bool = True) -> Geometry:
    """g^{lk} as the jet inverse of the leading-potential Hessian."""
    hess = hessian(p.phi)  # indexed [k][l]
    return Geometry(matrix_inverse(hess), check=check)


def h_from_psi(g: Geometry, psi: JetSeries,
               check: bool = True) -> DeformedGeometry:
    """The deformation h^{lk} = -g^{lp} psi_{p qbar} g^{qk}."""
    n = g.dim
    if psi.dim != n:
        raise DimensionMismatch("psi lives on a chart of different dim")
    h = []
    for l in range(n):
        row = []
        for k in range(n):
            acc = None
            for p in range(n):
                for q in range(n):
                    t = (g.g_upper[l][p]
                         * psi.derivative(("z", p)).derivative(("zbar", q))
                         * g.g_upper[q][k])
                    acc = t if acc is None else acc + t
            row.append(-acc)
        h.append(row)
    return DeformedGeometry(g, h, check=check)


def chart_bracket(mat: Matrix, f: JetSeries, g: JetSeries) -> JetSeries:
    """{f,g} = m^{lk} (dbar_l f d_k g - dbar_l g d_k f) on the chart."""
    n = len(mat)
    acc = None
    for l in range(n):
        fb = f.derivative(("zbar", l))
        gb = g.derivative(("zbar", l))
        for k in range(n):
            t = mat[l][k] * (fb * g.derivative(("z", k))
                             - gb * f.derivative(("z", k)))
            acc = t if acc is None else acc + t
    return acc


PRESET_NAMES = ("flat", "disc", "fubini-study")


def preset_geometry(name: str, jet_order: int = 12,
                    dim: int = 1) -> tuple[PotentialData, Geometry]:
    """Standard test geometries.

    flat: phi = sum_k z^k zbar^k (any dim, stored exactly);
    disc (dim 1): phi = -log(1 - z zbar) as a jet, g = (1 - z zbar)^2;
    fubini-study (dim 1): phi = log(1 + z zbar) as a jet, g = (1 + z zbar)^2.
    """
    if name == "flat":
        terms = {}
        for k in range(dim):
            e = tuple(1 if i == k else 0 for i in range(dim))
            terms[(e, e)] = GaussianRational(1)
        phi = JetSeries(dim, None, terms)
    elif name in ("disc", "fubini-study"):
        if dim != 1:
            raise ValueError(f"preset {name!r} is one-dimensional")
        sign = -1 if name == "disc" else 1
        terms = {}
        for m in range(1, jet_order // 2 + 1):
            c = Fraction(1, m) if sign < 0 else Fraction((-1) ** (m + 1), m)
            # disc: -log(1-u) = sum u^m/m; fubini-study: log(1+u) alternates
            terms[((m,), (m,))] = GaussianRational(c)
        phi = JetSeries(1, jet_order, terms)
    else:
        raise ValueError(
            f"unknown preset {name!r}; expected one of {PRESET_NAMES}"
        )
    p = PotentialData(phi)
    return p, metric_from_potential(p)
