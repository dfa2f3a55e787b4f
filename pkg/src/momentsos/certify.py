"""Cone structures, epsilon-certificate construction, and exact verification.

A certificate claims f - gamma = sum_i phi_i*h_i + sum_J sos_J * prod_{j in J} g_j
with degree bounds tied to a relaxation order k.  Verification is exact over
rationals; float-coefficient certificates can only be checked in a numeric
tolerance mode and are reported as "numerically_valid", never "valid".
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .poly import (EXACT, FLOAT, NEG_INF, Polynomial, basis, basis_size,
                   format_polynomial, parse_polynomial)

QMODULE = "qmodule"
PREORDERING = "preordering"


# -- problem data -----------------------------------------------------------


@dataclass(frozen=True)
class Problem:
    """min f(x) s.t. h(x) = 0, g(x) >= 0 over R^n.  Empty h or g is allowed."""

    n: int
    f: Polynomial
    h: tuple = ()
    g: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(self.h))
        object.__setattr__(self, "g", tuple(self.g))
        for p in (self.f, *self.h, *self.g):
            if p.n != self.n:
                raise ValueError("all polynomials must share the variable count")

    def to_float(self) -> "Problem":
        return Problem(self.n, self.f.to_float(),
                       tuple(p.to_float() for p in self.h),
                       tuple(p.to_float() for p in self.g))


# -- weighted sums of squares ----------------------------------------------


class SosExpression:
    """Sum of weight_j * base_j^2 with nonnegative weights."""

    __slots__ = ("squares",)

    def __init__(self, squares: Sequence):
        self.squares = tuple((w, p) for w, p in squares)
        if not self.squares:
            raise ValueError("SosExpression needs at least one square")
        n = self.squares[0][1].n
        for _, p in self.squares:
            if p.n != n:
                raise ValueError("all bases must share the variable count")

    @property
    def n(self):
        return self.squares[0][1].n

    @property
    def field(self):
        return self.squares[0][1].field

    def weights_nonnegative(self) -> bool:
        return all(w >= 0 for w, _ in self.squares)

    def expand(self) -> Polynomial:
        total = Polynomial.zero(self.n, self.field)
        for w, p in self.squares:
            total = total + w * (p * p)
        return total

    @property
    def degree(self):
        degs = [p.degree for w, p in self.squares if w]
        if not degs:
            return NEG_INF
        d = max(degs)
        return NEG_INF if d == NEG_INF else 2 * d

    def scaled(self, c) -> "SosExpression":
        return SosExpression([(w * c, p) for w, p in self.squares])

    def compose(self, q: Polynomial) -> "SosExpression":
        """Substitute q for the variable of a univariate expression."""
        return SosExpression([(w, p.substitute(0, q)) for w, p in self.squares])

    def __add__(self, other: "SosExpression") -> "SosExpression":
        return SosExpression(self.squares + other.squares)


# -- certificates -----------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    """Membership data for f - gamma in <h>_{2k} + Q_k(g) (or + Pr_k(g))."""

    gamma: Fraction
    k: int
    kind: str  # QMODULE | PREORDERING
    ideal_part: tuple = ()  # of (index into h, multiplier Polynomial)
    cone_part: tuple = ()   # of (J: sorted tuple of 1-based g indices, SosExpression)

    def __post_init__(self):
        if self.kind not in (QMODULE, PREORDERING):
            raise ValueError(f"unknown cone kind {self.kind!r}")
        object.__setattr__(self, "ideal_part", tuple(self.ideal_part))
        object.__setattr__(self, "cone_part",
                           tuple((tuple(sorted(J)), s) for J, s in self.cone_part))

    def to_json(self) -> dict:
        return {
            "gamma": str(self.gamma),
            "k": self.k,
            "kind": self.kind,
            "ideal": [{"i": i, "phi": format_polynomial(phi)}
                      for i, phi in self.ideal_part],
            "cone": [{"J": list(J),
                      "sos": [{"w": str(w), "p": format_polynomial(p)}
                              for w, p in s.squares]}
                     for J, s in self.cone_part],
        }

    @classmethod
    def from_json(cls, data: dict, n: int) -> "Certificate":
        ideal = tuple((int(e["i"]), parse_polynomial(e["phi"], n))
                      for e in data.get("ideal", []))
        cone = tuple((tuple(int(j) for j in e["J"]),
                      SosExpression([(Fraction(s["w"]), parse_polynomial(s["p"], n))
                                     for s in e["sos"]]))
                     for e in data.get("cone", []))
        return cls(gamma=Fraction(data["gamma"]), k=int(data["k"]),
                   kind=data["kind"], ideal_part=ideal, cone_part=cone)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path, n: int) -> "Certificate":
        with open(path) as fh:
            return cls.from_json(json.load(fh), n)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    status: str  # "valid" | "numerically_valid" | "invalid"
    reason: str = ""
    residual: float = 0.0

    def __bool__(self):
        return self.ok


def _subset_product(g: tuple, J: tuple, n: int, fld: str) -> Polynomial:
    prod = Polynomial.constant(n, 1, fld)
    for j in J:
        if not 1 <= j <= len(g):
            raise IndexError(f"cone subset index {j} out of range")
        prod = prod * g[j - 1]
    return prod


def verify_certificate(prob: Problem, cert: Certificate,
                       tol: Optional[float] = None) -> Verdict:
    """Check a certificate against a problem.

    Exact-rational data is checked exactly (status "valid").  Float data
    requires an explicit tolerance on the identity residual's coefficient
    max-norm and at best earns "numerically_valid".
    """
    n = prob.n
    exact = (prob.f.field == EXACT
             and all(p.field == EXACT for p in (*prob.h, *prob.g))
             and all(phi.field == EXACT for _, phi in cert.ideal_part)
             and all(s.field == EXACT for _, s in cert.cone_part))
    if not exact and tol is None:
        return Verdict(False, "invalid",
                       "float coefficients require a numeric tolerance mode")

    # (d) cone kind respected
    for J, _ in cert.cone_part:
        if cert.kind == QMODULE and len(J) > 1:
            return Verdict(False, "invalid",
                           f"quadratic-module certificate uses product subset {J}")
        for j in J:
            if not 1 <= j <= len(prob.g):
                return Verdict(False, "invalid", f"cone subset index {j} out of range")
    for i, _ in cert.ideal_part:
        if not 0 <= i < len(prob.h):
            return Verdict(False, "invalid", f"ideal index {i} out of range")

    # (b) nonnegative SOS weights
    for J, s in cert.cone_part:
        if not s.weights_nonnegative():
            return Verdict(False, "invalid",
                           f"negative SOS weight in cone term J={J}")

    # (c) degree bounds for order k
    two_k = 2 * cert.k
    for i, phi in cert.ideal_part:
        d = (phi * prob.h[i]).degree
        if d != NEG_INF and d > two_k:
            return Verdict(False, "invalid",
                           f"deg(phi_{i}*h_{i}) = {d} exceeds 2k = {two_k}")
    fld = prob.f.field
    for J, s in cert.cone_part:
        prod = _subset_product(prob.g, J, n, fld)
        d = s.degree
        dp = prod.degree
        if d != NEG_INF and dp != NEG_INF and d + dp > two_k:
            return Verdict(False, "invalid",
                           f"cone term J={J} has degree {d + dp} > 2k = {two_k}")

    # (a) the identity itself
    rhs = Polynomial.zero(n, fld)
    for i, phi in cert.ideal_part:
        rhs = rhs + phi * prob.h[i]
    for J, s in cert.cone_part:
        rhs = rhs + s.expand() * _subset_product(prob.g, J, n, fld)
    gamma = cert.gamma if fld == EXACT else float(cert.gamma)
    residual = prob.f - gamma - rhs
    if exact:
        if not residual.is_zero():
            return Verdict(False, "invalid",
                           "identity mismatch: f - gamma != ideal + cone combination")
        return Verdict(True, "valid")
    res = float(residual.max_abs_coefficient())
    if res > tol:
        return Verdict(False, "invalid",
                       f"identity residual {res:.3e} exceeds tolerance {tol:.3e}",
                       residual=res)
    return Verdict(True, "numerically_valid", residual=res)


# -- the univariate s_c family ---------------------------------------------


def c_threshold(ell: int) -> Fraction:
    """Smallest c making 1 + t + c*t^(2*ell) nonnegative on R."""
    if ell < 1:
        raise ValueError("ell must be a positive integer")
    return Fraction(1, 2 * ell) * (1 - Fraction(1, 2 * ell)) ** (2 * ell - 1)


def sc_polynomial(ell: int, c) -> Polynomial:
    """The univariate polynomial 1 + t + c*t^(2*ell)."""
    if ell < 1:
        raise ValueError("ell must be a positive integer")
    return Polynomial(1, {(0,): 1, (1,): 1, (2 * ell,): Fraction(c)})


def _rational_sqrt(c: Fraction) -> Optional[Fraction]:
    num = math.isqrt(c.numerator)
    den = math.isqrt(c.denominator)
    if num * num == c.numerator and den * den == c.denominator:
        return Fraction(num, den)
    return None


def sc_sos_decomposition(ell: int, c) -> SosExpression:
    """Explicit rational SOS decomposition of 1 + t + c*t^(2*ell).

    Closed forms are available for ell = 1 (any rational c >= 1/4) and for
    ell = 2 when c >= 1/9 has a rational square root.  Other cases raise.
    """
    c = Fraction(c)
    t = Polynomial.variable(1, 0)
    one = Polynomial.constant(1, 1)
    if ell == 1:
        if c < Fraction(1, 4):
            raise ValueError("1 + t + c*t^2 is not SOS for c < 1/4")
        # c*(t + 1/(2c))^2 + (1 - 1/(4c))
        return SosExpression([(c, t + Fraction(1, 1) / (2 * c)),
                              (1 - Fraction(1, 1) / (4 * c), one)])
    if ell == 2:
        s = _rational_sqrt(c)
        if s is None:
            raise ValueError("ell=2 decomposition needs a rational sqrt of c")
        if s < Fraction(1, 3):
            raise ValueError("closed form requires c >= 1/9")
        # (s*t^2 - 1/2)^2 + s*(t + 1/(2s))^2 + (3/4 - 1/(4s))
        return SosExpression([
            (Fraction(1), s * t ** 2 - Fraction(1, 2)),
            (s, t + Fraction(1, 1) / (2 * s)),
            (Fraction(3, 4) - Fraction(1, 1) / (4 * s), one),
        ])
    raise ValueError(f"no closed-form SOS decomposition implemented for ell={ell}")


@dataclass(frozen=True)
class EpsilonCertificate:
    """Exact split p + eps = phi + theta_s + theta_q for one sampled eps."""

    eps: Fraction
    phi: Polynomial       # -c*eps^(1-2l) * (p^(2l) + q), ideal-bound part
    theta_s: Polynomial   # eps * s_c(p/eps), SOS-admissible part
    theta_q: Polynomial   # c*eps^(1-2l) * q, q-multiple part

    @property
    def theta(self) -> Polynomial:
        return self.theta_s + self.theta_q


def epsilon_certificate(p: Polynomial, q: Polynomial, ell: int, c,
                        eps) -> EpsilonCertificate:
    """Build the split p + eps = phi_eps + theta_eps.

    The algebraic identity holds for any c; the theta part is certified
    SOS-plus-q only when c >= c_threshold(ell).
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if ell < 1:
        raise ValueError("ell must be a positive integer")
    c = Fraction(c)
    if p.n != q.n:
        raise ValueError("p and q must share the variable count")
    scale = c * eps ** (1 - 2 * ell)
    phi = -scale * (p ** (2 * ell) + q)
    theta_s = eps * sc_polynomial(ell, c).substitute(0, p / eps)
    theta_q = scale * q
    return EpsilonCertificate(eps=eps, phi=phi, theta_s=theta_s, theta_q=theta_q)


@dataclass(frozen=True)
class EpsilonCertificateFamily:
    """The symbolic family eps -> (phi_eps, theta_eps) for fixed p, q, ell, c."""

    p: Polynomial
    q: Polynomial
    ell: int
    c: Fraction

    def at(self, eps) -> EpsilonCertificate:
        return epsilon_certificate(self.p, self.q, self.ell, self.c, eps)

    def check(self, eps) -> bool:
        cert = self.at(eps)
        return (self.p + Fraction(eps) - cert.phi - cert.theta).is_zero()

    def theta_s_sos(self, eps) -> SosExpression:
        """theta_s as an explicit SOS expression (where a closed form exists)."""
        eps = Fraction(eps)
        return sc_sos_decomposition(self.ell, self.c).compose(self.p / eps).scaled(eps)


# -- interpolation and the offset polynomial --------------------------------


def _exact_solve(rows, rhs_cols):
    """Gauss-Jordan over Fractions.  rows: list of lists; rhs_cols: list of lists
    (one per right-hand side).  Returns list of solutions or None if any rhs is
    inconsistent; free variables are set to zero."""
    m = len(rows)
    if m == 0:
        return [[ ] for _ in rhs_cols]
    ncols = len(rows[0])
    A = [[Fraction(v) for v in row] + [Fraction(r[i]) for r in rhs_cols]
         for i, row in enumerate(rows)]
    pivots = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, m) if A[i][col] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = Fraction(1) / A[r][col]
        A[r] = [v * inv for v in A[r]]
        for i in range(m):
            if i != r and A[i][col] != 0:
                f = A[i][col]
                A[i] = [vi - f * vr for vi, vr in zip(A[i], A[r])]
        pivots.append(col)
        r += 1
        if r == m:
            break
    # inconsistency: zero row with nonzero rhs
    for i in range(r, m):
        if any(A[i][ncols + j] != 0 for j in range(len(rhs_cols))):
            return None
    sols = []
    for j in range(len(rhs_cols)):
        x = [Fraction(0)] * ncols
        for i, col in enumerate(pivots):
            x[col] = A[i][ncols + j]
        sols.append(x)
    return sols


def interpolants(points: Sequence[Sequence]) -> list:
    """Exact polynomials phi_i with phi_i(u_j) = delta_ij on the point set.

    Uses the monomial basis of the smallest degree t with binom(n+t,n) >= D,
    incrementing t while the evaluation matrix is rank-deficient.
    """
    pts = [tuple(Fraction(x) for x in u) for u in points]
    D = len(pts)
    if D == 0:
        raise ValueError("need at least one point")
    if len(set(pts)) != D:
        raise ValueError("points must be pairwise distinct")
    n = len(pts[0])
    if any(len(u) != n for u in pts):
        raise ValueError("points must share the dimension")
    t = 0
    while basis_size(n, t) < D:
        t += 1
    while True:
        mb = basis(n, t)
        V = [[_mono_eval(u, alpha) for alpha in mb] for u in pts]
        eyes = [[Fraction(1) if i == j else Fraction(0) for j in range(D)]
                for i in range(D)]
        # transpose rhs: one rhs column per interpolant
        sols = _exact_solve(V, [[row[i] for row in eyes] for i in range(D)])
        if sols is not None:
            out = []
            for sol in sols:
                out.append(Polynomial(n, {alpha: coef for alpha, coef
                                          in zip(mb, sol) if coef}))
            return out
        t += 1


def _mono_eval(u, alpha):
    v = Fraction(1)
    for x, e in zip(u, alpha):
        if e:
            v *= x ** e
    return v


def offset_polynomial(points: Sequence[Sequence], f: Polynomial, f_min,
                      g: tuple = ()):
    """Cone-structured offset a with hat_f = f - f_min - a vanishing on points.

    Returns (cone, hat_f) where cone is a list of (J, SosExpression) with J
    empty or a singleton (j,) picking the inequality multiplier g_j.  For a
    point where f(u) < f_min, the smallest index j with g_j(u) < 0 is used;
    if no such j exists the input contradicts f_min being the minimum.
    """
    f_min = Fraction(f_min)
    pts = [tuple(Fraction(x) for x in u) for u in points]
    phis = interpolants(pts)
    cone = []
    a = Polynomial.zero(f.n)
    for u, phi in zip(pts, phis):
        gap = Fraction(f.eval(u)) - f_min
        if gap == 0:
            continue
        if gap > 0:
            term = SosExpression([(gap, phi)])
            cone.append(((), term))
            a = a + gap * phi * phi
        else:
            j = next((idx for idx, gj in enumerate(g) if Fraction(gj.eval(u)) < 0), None)
            if j is None:
                raise ValueError(
                    f"point {u} has f(u) < f_min but every g_j(u) >= 0; "
                    "f_min is not the minimum over the input data")
            w = gap / Fraction(g[j].eval(u))  # > 0
            cone.append(((j + 1,), SosExpression([(w, phi)])))
            a = a + w * g[j] * phi * phi
    hat_f = f - f_min - a
    for u in pts:
        if Fraction(hat_f.eval(u)) != 0:
            raise AssertionError("offset construction failed to vanish at an input point")
    return cone, hat_f


# -- problem transforms -----------------------------------------------------


def square_equalities(h: tuple) -> Polynomial:
    """Collapse an equality tuple to the single polynomial sum h_i^2."""
    h = tuple(h)
    if not h:
        raise ValueError("need at least one equality")
    total = h[0] * h[0]
    for hi in h[1:]:
        total = total + hi * hi
    return total


def gradient_problem(f: Polynomial, squared: bool = False) -> Problem:
    """Reformulate unconstrained minimization of f over its critical points."""
    grad = f.gradient()
    if squared:
        return Problem(f.n, f, h=(square_equalities(grad),))
    return Problem(f.n, f, h=grad)


def preordering_products(g: tuple, n: Optional[int] = None) -> list:
    """All 2^m subset products of g, the empty subset giving the constant 1.

    n fixes the ambient ring when g is empty (defaults to 1).
    """
    g = tuple(g)
    m = len(g)
    if g:
        n, fld = g[0].n, g[0].field
    else:
        n, fld = (n or 1), EXACT
    out = []
    for mask in range(1 << m):
        J = tuple(j + 1 for j in range(m) if mask >> j & 1)
        out.append((J, _subset_product(g, J, n, fld)))
    out.sort(key=lambda e: (len(e[0]), e[0]))
    return out
