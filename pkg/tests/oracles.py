"""Independent exact oracles used by the tests.

Univariate real-root counting and nonnegativity via Sturm sequences over
exact rationals, plus a finite-difference derivative check.  Deliberately
self-contained: nothing here reuses the package's polynomial arithmetic.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List, Sequence, Tuple

Coeffs = List[Fraction]  # ascending order: c[0] + c[1]*t + ...


def _trim(c: Coeffs) -> Coeffs:
    while c and c[-1] == 0:
        c = c[:-1]
    return c


def poly_eval(c: Coeffs, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for ck in reversed(c):
        acc = acc * x + ck
    return acc


def poly_deriv(c: Coeffs) -> Coeffs:
    return _trim([k * ck for k, ck in enumerate(c)][1:])


def poly_rem(a: Coeffs, b: Coeffs) -> Coeffs:
    """Remainder of a / b over the rationals."""
    a = list(a)
    db, lb = len(b) - 1, b[-1]
    while len(a) - 1 >= db and _trim(a):
        a = _trim(a)
        if len(a) - 1 < db:
            break
        q = a[-1] / lb
        shift = len(a) - 1 - db
        for i, bi in enumerate(b):
            a[shift + i] -= q * bi
        a = a[:-1]
    return _trim(a)


def sturm_sequence(c: Coeffs) -> List[Coeffs]:
    seq = [_trim(c), poly_deriv(c)]
    while seq[-1]:
        r = poly_rem(seq[-2], seq[-1])
        if not r:
            break
        seq.append([-ri for ri in r])
    return [s for s in seq if s]


def _sign_variations(seq: Sequence[Coeffs], x) -> int:
    signs = []
    for s in seq:
        if x == "+inf":
            v = s[-1]
        elif x == "-inf":
            v = s[-1] * (-1) ** (len(s) - 1)
        else:
            v = poly_eval(s, x)
        if v:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_real_roots(c: Coeffs, lo=None, hi=None) -> int:
    """Distinct real roots of c in (lo, hi]; whole line when bounds omitted."""
    c = _trim(c)
    if len(c) <= 1:
        return 0
    seq = sturm_sequence(c)
    va = _sign_variations(seq, "-inf" if lo is None else Fraction(lo))
    vb = _sign_variations(seq, "+inf" if hi is None else Fraction(hi))
    return va - vb


def cauchy_bound(c: Coeffs) -> Fraction:
    c = _trim(c)
    return 1 + max(abs(ci) for ci in c[:-1]) / abs(c[-1]) if len(c) > 1 else Fraction(1)


def isolate_real_roots(c: Coeffs) -> List[Tuple[Fraction, Fraction]]:
    """Disjoint intervals (a, b], one distinct real root each, by bisection."""
    c = _trim(c)
    B = cauchy_bound(c)
    out = []
    stack = [(-B - 1, B + 1)]
    while stack:
        a, b = stack.pop()
        k = count_real_roots(c, a, b)
        if k == 0:
            continue
        if k == 1:
            out.append((Fraction(a), Fraction(b)))
            continue
        mid = Fraction(a + b, 2)
        stack.append((a, mid))
        stack.append((mid, b))
    return sorted(out)


def nonnegative_on_reals(c: Coeffs) -> bool:
    """Exact: is the polynomial >= 0 everywhere on the real line?"""
    c = _trim(c)
    if not c:
        return True
    if len(c) == 1:
        return c[0] >= 0
    if len(c) % 2 == 0 or c[-1] < 0:  # odd degree or negative leading term
        return False
    intervals = isolate_real_roots(c)
    B = cauchy_bound(c)
    # Sample off-root points: outside the root range and between/inside
    # intervals, refining past any sample that lands exactly on a root.
    samples = [-B - 2, B + 2]
    pts = [p for ab in intervals for p in ab]
    for p in pts:
        q = p
        while poly_eval(c, q) == 0:
            q += Fraction(1, 997)
        samples.append(q)
    for a, b in zip(pts, pts[1:]):
        mid = Fraction(a + b, 2)
        if poly_eval(c, mid) != 0:
            samples.append(mid)
    return all(poly_eval(c, s) >= 0 for s in samples)


def finite_difference_gradient(func, u, h=1e-6):
    """Central differences of a scalar function of a float vector."""
    grad = []
    u = list(map(float, u))
    for i in range(len(u)):
        up = list(u)
        dn = list(u)
        up[i] += h
        dn[i] -= h
        grad.append((func(up) - func(dn)) / (2 * h))
    return grad
