"""Built-in example problems with exactly verified certificates.

Each fixture carries a Problem, an optional exact Certificate, the known
minimum, and a plan of numeric relaxation runs with expected bounds.  These
drive the `momentsos suite` command and the regression tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction as F
from typing import Optional

from .certify import (PREORDERING, QMODULE, Certificate, Problem,
                      SosExpression, gradient_problem, square_equalities)
from .poly import Polynomial


@dataclass(frozen=True)
class PlannedRun:
    side: str            # "moment" | "sos"
    kind: str            # QMODULE | PREORDERING
    k: int
    expected: Optional[float]  # expected bound, None when only recorded
    tol: float = 1e-5


@dataclass(frozen=True)
class Fixture:
    name: str
    description: str
    problem: Problem
    certificate: Optional[Certificate]
    f_min: Optional[F]
    runs: tuple = ()
    minimizers: tuple = ()       # known optimal points (floats)
    extraction_run: Optional[int] = None  # index into runs to extract from
    extraction_tol: float = 1e-4


def _vars2():
    return Polynomial.variable(2, 0), Polynomial.variable(2, 1)


def bilinear_quartic_curve() -> Fixture:
    """x1*x2 over the four-point quartic variety with a half-plane cut."""
    x1, x2 = _vars2()
    f = x1 * x2
    h = (x1 ** 2 - 1) ** 2 + (x2 ** 2 - 1) ** 2
    g = x1 + x2 - 1
    a_sos = SosExpression([(F(1, 2), x1 - x2)])  # a = g/2 * (x1-x2)^2
    fhat = f - 1 - F(1, 2) * g * (x1 - x2) ** 2
    big = (x1 ** 2 - 1) * (x1 - x2 + 1) + (x2 ** 2 - 1) * (x1 - x2 - 1)
    cert = Certificate(
        gamma=F(0), k=3, kind=QMODULE,
        ideal_part=((0, F(-1, 8) * ((x1 - x2) ** 2 + 1)),),
        cone_part=(
            ((), SosExpression([(F(1), 1 + F(1, 2) * fhat), (F(1, 16), big)])),
            ((1,), a_sos),
        ),
    )
    return Fixture(
        name="bilinear-quartic-curve",
        description="min x1*x2 on (x1^2-1)^2+(x2^2-1)^2=0, x1+x2-1>=0; minimum 1 at (1,1)",
        problem=Problem(2, f, h=(h,), g=(g,)),
        certificate=cert, f_min=F(1),
        runs=(PlannedRun("moment", QMODULE, 3, 1.0, 1e-3),
              PlannedRun("moment", QMODULE, 4, 1.0, 1e-3),
              PlannedRun("sos", QMODULE, 3, 1.0, 1e-3),
              PlannedRun("sos", QMODULE, 4, 1.0, 1e-3)),
        minimizers=((1.0, 1.0),),
        extraction_run=0,
        extraction_tol=1e-4,
    )


def line_on_quartic_origin() -> Fixture:
    """x1 over x1^4 + x2^4 = 0; only real point is the origin."""
    x1, x2 = _vars2()
    cert = Certificate(
        gamma=F(-1), k=2, kind=QMODULE,
        ideal_part=((0, Polynomial.constant(2, F(-1, 4))),),
        cone_part=((
            (),
            SosExpression([
                (F(1), F(1, 2) * x1 ** 2 - F(1, 2)),
                (F(1, 2), x1 + 1),
                (F(1, 4), Polynomial.constant(2, 1)),
                (F(1, 4), x2 ** 2),
            ]),
        ),),
    )
    return Fixture(
        name="line-on-quartic-origin",
        description="min x1 on x1^4+x2^4=0; minimum 0 at the origin",
        problem=Problem(2, x1, h=(x1 ** 4 + x2 ** 4,)),
        certificate=cert, f_min=F(0),
        runs=(PlannedRun("moment", QMODULE, 2, 0.0, 2e-3),),
        minimizers=((0.0, 0.0),),
    )


def twisted_cubic_squared() -> Fixture:
    """x1*x2*x3 - 2*x3 on the squared-equation form of the twisted cubic."""
    n = 3
    y1 = Polynomial.variable(n, 0)
    y2 = Polynomial.variable(n, 1)
    y3 = Polynomial.variable(n, 2)
    f = y1 * y2 * y3 - 2 * y3
    hsq = square_equalities((y1 ** 2 - y2, y1 ** 3 - y3))
    p = (y1 ** 3 - 2) * (y3 - y1 ** 3) + y1 * y3 * (y2 - y1 ** 2)
    r = y1 * y3 * (y3 - y1 ** 3) - (y1 ** 3 - 2) * (y2 - y1 ** 2)
    psi = y1 ** 2 * y3 ** 2 + (y1 ** 3 - 2) ** 2
    cert = Certificate(
        gamma=F(-2), k=6, kind=QMODULE,
        ideal_part=((0, F(-1, 4) * psi),),
        cone_part=((
            (),
            SosExpression([(F(1), 1 + F(1, 2) * p),
                           (F(1, 4), r),
                           (F(1), y1 ** 3 - 1)]),
        ),),
    )
    return Fixture(
        name="twisted-cubic-squared",
        description="min x1*x2*x3-2*x3 on (x1^2-x2)^2+(x1^3-x3)^2=0; minimum -1",
        problem=Problem(n, f, h=(hsq,)),
        certificate=cert, f_min=F(-1),
        runs=(PlannedRun("moment", QMODULE, 6, -1.0, 1e-3),),
        minimizers=((1.0, 1.0, 1.0),),
    )


def sextic_gradient_squared() -> Fixture:
    """x1^2*x2^2*(x1^2+x2^2-1) minimized over its critical points."""
    x1, x2 = _vars2()
    f = x1 ** 2 * x2 ** 2 * (x1 ** 2 + x2 ** 2 - 1)
    prob = gradient_problem(f, squared=True)
    a = x1 ** 2 - F(1, 3)
    b = x2 ** 2 - F(1, 3)
    psi = F(9, 8) * (x1 ** 2 + x2 ** 2) * (a * a + b * b)
    sig1_base = x1 ** 2 * x2 ** 2 - F(1, 9)
    fhat = f + F(1, 27) - 3 * sig1_base ** 2
    q_quarter = SosExpression([
        (F(9, 8), x1 * x2 ** 3 * (2 * a + b) * a),
        (F(9, 8), x1 * x2 ** 3 * (2 * a + b) * b),
        (F(9, 8), x1 ** 3 * x2 * (a + 2 * b) * a),
        (F(9, 8), x1 ** 3 * x2 * (a + 2 * b) * b),
        (F(9, 8), x1 ** 2 * x2 ** 2 * a * a),
        (F(9, 8), x1 ** 2 * x2 ** 2 * b * b),
        (F(9, 2), x1 ** 2 * x2 ** 2 * (a + b) * a),
        (F(9, 2), x1 ** 2 * x2 ** 2 * (a + b) * b),
    ])
    cone = SosExpression([(F(1), 1 + F(1, 2) * fhat)]) + q_quarter \
        + SosExpression([(F(3), sig1_base)])
    cert = Certificate(
        gamma=F(-28, 27), k=8, kind=QMODULE,
        ideal_part=((0, F(-1, 4) * psi),),
        cone_part=(((), cone),),
    )
    s = 3 ** -0.5
    return Fixture(
        name="sextic-gradient-squared",
        description="min x1^2*x2^2*(x1^2+x2^2-1) via ||grad f||^2 = 0; minimum -1/27",
        problem=prob,
        certificate=cert, f_min=F(-1, 27),
        runs=(PlannedRun("moment", QMODULE, 8, -1.0 / 27.0, 1e-4),),
        minimizers=((s, s), (s, -s), (-s, s), (-s, -s)),
        extraction_run=0,
        extraction_tol=1e-3,
    )


def corner_preordering() -> Fixture:
    """-x1^2-x2^2 over a one-point semialgebraic corner; needs the preordering."""
    x1, x2 = _vars2()
    f = -x1 ** 2 - x2 ** 2
    g1 = x1 ** 3
    g2 = x2 ** 3
    g3 = -x1 - x2 - x1 * x2
    one = Polynomial.constant(2, 1)

    def sym(p):  # swap x1 <-> x2
        return Polynomial(2, {(a2, a1): c for (a1, a2), c in p.terms.items()})

    # s_{1/4}(f) with ell = 2 at eps = 1, explicit squares
    s_part = SosExpression([
        (F(1), F(1, 2) * f ** 2 - F(1, 2)),
        (F(1, 2), f + 1),
        (F(1, 4), one),
    ])
    sig0_quarter = SosExpression([
        (F(1, 4), (x1 ** 2 - x2 ** 2) ** 2),
        (F(3, 2), x1 ** 4 - x2 ** 4),
    ])
    sig1_quarter = SosExpression([
        (F(8), x1 ** 3 * (x2 + F(1, 8))),
        (F(7, 8), x1 ** 3),
        (F(1), x1 ** 2 * (x1 + 2 * x2)),
        (F(4), x1 ** 2 * (x2 + F(1, 2))),
        (F(1), x1 * (x1 + x2)),
        (F(7), x1 * x2),
        (F(8), x2 ** 2),
        (F(8), x2 ** 3),
        (F(8), x2 ** 4),
    ])
    sig2_quarter = SosExpression([(w, sym(p)) for w, p in sig1_quarter.squares])
    sig12_quarter = SosExpression([(F(8), p) for p in
                                   (x1, x2, x1 ** 2, x2 ** 2, x1 ** 3, x2 ** 3)])
    sig3_quarter = SosExpression([
        (F(2), x1 ** 3 * (x1 + F(1, 2))),
        (F(3, 2), x1 ** 3),
        (F(2), x2 ** 3 * (x2 + F(1, 2))),
        (F(3, 2), x2 ** 3),
        (F(8), x1 ** 2 * x2),
        (F(8), x1 * x2 ** 2),
        (F(8), x1 ** 3 * x2),
        (F(8), x1 * x2 ** 3),
        (F(8), x1 ** 4 * x2),
        (F(8), x1 * x2 ** 4),
    ])
    cert = Certificate(
        gamma=F(-1), k=6, kind=PREORDERING,
        cone_part=(
            ((), s_part + sig0_quarter),
            ((1,), sig1_quarter),
            ((2,), sig2_quarter),
            ((1, 2), sig12_quarter),
            ((3,), sig3_quarter),
        ),
    )
    return Fixture(
        name="corner-preordering",
        description="min -x1^2-x2^2 s.t. x1^3>=0, x2^3>=0, -x1-x2-x1*x2>=0; minimum 0 at the origin",
        problem=Problem(2, f, g=(g1, g2, g3)),
        certificate=cert, f_min=F(0),
        runs=(PlannedRun("moment", PREORDERING, 6, 0.0, 1e-4),),
        minimizers=((0.0, 0.0),),
    )


def cubed_inequality_slow() -> Fixture:
    """1-x^2 with the cubed constraint; the SOS bound stays strictly below 0."""
    x = Polynomial.variable(1, 0)
    f = 1 - x ** 2
    g = (1 - x ** 2) ** 3
    return Fixture(
        name="cubed-inequality-slow",
        description="min 1-x1^2 s.t. (1-x1^2)^3>=0; SOS bounds approach 0 only as O(k^-2)",
        problem=Problem(1, f, g=(g,)),
        certificate=None, f_min=F(0),
        runs=tuple(PlannedRun("sos", QMODULE, k, None) for k in (3, 4, 5, 6))
        + tuple(PlannedRun("moment", QMODULE, k, None) for k in (3, 4, 5, 6)),
        minimizers=((1.0,), (-1.0,)),
    )


_BUILDERS = (
    bilinear_quartic_curve,
    line_on_quartic_origin,
    twisted_cubic_squared,
    sextic_gradient_squared,
    corner_preordering,
    cubed_inequality_slow,
)

_CACHE: dict = {}


def all_fixtures() -> dict:
    if not _CACHE:
        for build in _BUILDERS:
            fx = build()
            _CACHE[fx.name] = fx
    return dict(_CACHE)


def get_fixture(name: str) -> Fixture:
    fixtures = all_fixtures()
    if name not in fixtures:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(fixtures)}")
    return fixtures[name]


def certified_fixtures() -> dict:
    return {k: v for k, v in all_fixtures().items() if v.certificate is not None}
