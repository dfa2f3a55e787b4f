"""Acceptance gate: seven criteria, one pass/fail line each.

Numeric solves are cached and shared across criteria 3-6 so the whole gate
stays inside the stated time budgets.
"""

import functools
import random
import time
from fractions import Fraction as F

import numpy as np

from momentsos.certify import (Certificate, PREORDERING, QMODULE, SosExpression,
                               c_threshold, EpsilonCertificateFamily,
                               sc_polynomial, verify_certificate)
from momentsos.gallery import certified_fixtures, get_fixture
from momentsos.poly import Polynomial
from momentsos.relax import HierarchyOptions, run_hierarchy
from momentsos.sdp import OPTIMAL, SdpProblem, SolveOptions, solve

from oracles import nonnegative_on_reals, poly_eval
from test_sdp import amgm_problem, arrowhead_problem, random_feasible_instance


def _report(num, ok, detail):
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


# -- shared numeric solves ---------------------------------------------------


@functools.lru_cache(maxsize=None)
def _solved(name, side, k, kind=QMODULE):
    fx = get_fixture(name)
    opts = HierarchyOptions(rank_tol=1e-4)
    res = run_hierarchy(fx.problem, [k], kind=kind, sides=(side,), options=opts)
    return res.records[0]


# -- criterion 1: exact certificates ----------------------------------------


def _perturbed(cert, n, rng):
    delta = F(rng.randint(1, 7), rng.randint(1, 7)) * rng.choice([1, -1])
    targets = ["gamma"]
    targets += [("ideal", i) for i in range(len(cert.ideal_part))]
    for j, (_, s) in enumerate(cert.cone_part):
        targets += [("cone", j, q) for q in range(len(s.squares))]
    t = rng.choice(targets)
    ideal, cone = cert.ideal_part, cert.cone_part
    gamma = cert.gamma
    if t == "gamma":
        gamma = gamma + delta
    elif t[0] == "ideal":
        i = t[1]
        ideal = list(ideal)
        idx, phi = ideal[i]
        alpha = rng.choice(sorted(phi.terms)) if phi.terms else (0,) * n
        ideal[i] = (idx, phi + Polynomial.monomial(n, alpha, delta))
        ideal = tuple(ideal)
    else:
        j, q = t[1], t[2]
        cone = list(cone)
        J, s = cone[j]
        squares = list(s.squares)
        w, p = squares[q]
        if rng.random() < 0.5 and not p.is_zero():
            squares[q] = (w + delta, p)
        else:
            alpha = rng.choice(sorted(p.terms)) if p.terms else (0,) * n
            p2 = p + Polynomial.monomial(n, alpha, delta)
            while p2 * p2 == p * p:  # sign flips leave the square unchanged
                delta += F(1, 3)
                p2 = p + Polynomial.monomial(n, alpha, delta)
            squares[q] = (w, p2)
        cone[j] = (J, SosExpression(squares))
        cone = tuple(cone)
    return Certificate(gamma=gamma, k=cert.k, kind=cert.kind,
                       ideal_part=ideal, cone_part=cone)


def test_criterion_1_exact_certificates():
    t0 = time.perf_counter()
    rng = random.Random(2024)
    failures = []
    fixtures = certified_fixtures()
    expected = {"bilinear-quartic-curve", "line-on-quartic-origin",
                "twisted-cubic-squared", "sextic-gradient-squared",
                "corner-preordering"}
    if set(fixtures) != expected:
        failures.append(f"fixture set {sorted(fixtures)}")
    for name, fx in fixtures.items():
        v = verify_certificate(fx.problem, fx.certificate)
        if not (v.ok and v.status == "valid"):
            failures.append(f"{name}: {v.reason}")
            continue
        for trial in range(100):
            bad = _perturbed(fx.certificate, fx.problem.n, rng)
            if verify_certificate(fx.problem, bad).ok:
                failures.append(f"{name}: perturbation {trial} accepted")
                break
    elapsed = time.perf_counter() - t0
    if elapsed > 10.0:
        failures.append(f"runtime {elapsed:.1f}s > 10s")
    _report(1, not failures,
            f"5 certificates valid, 500 perturbations rejected "
            f"({elapsed:.1f}s)" if not failures else "; ".join(failures))


# -- criterion 2: the univariate family and epsilon splits -------------------


def test_criterion_2_epsilon_family():
    t0 = time.perf_counter()
    failures = []
    for ell in (1, 2, 3):
        c = c_threshold(ell)
        deg = 2 * ell

        def coeffs(p):
            out = [F(0)] * (deg + 1)
            for a, v in p.terms.items():
                out[a[0]] = F(v)
            return out

        if not nonnegative_on_reals(coeffs(sc_polynomial(ell, c))):
            failures.append(f"ell={ell}: threshold polynomial not nonnegative")
        below = coeffs(sc_polynomial(ell, c * F(9, 10)))
        if nonnegative_on_reals(below):
            failures.append(f"ell={ell}: sub-threshold polynomial nonnegative")
        if poly_eval(below, F(-2 * ell, 2 * ell - 1)) >= 0:
            failures.append(f"ell={ell}: no negative witness value")
    rng = random.Random(77)
    for trial in range(50):
        n = rng.randint(1, 2)
        def rand_poly(deg_):
            terms = {}
            for _ in range(rng.randint(1, 4)):
                alpha = [0] * n
                for _ in range(rng.randint(0, deg_)):
                    alpha[rng.randrange(n)] += 1
                terms[tuple(alpha)] = F(rng.randint(-5, 5), rng.randint(1, 5))
            return Polynomial(n, terms)
        ell = rng.choice([1, 2, 3])
        fam = EpsilonCertificateFamily(p=rand_poly(3), q=rand_poly(4),
                                       ell=ell, c=c_threshold(ell))
        eps = F(rng.randint(1, 9), rng.randint(1, 9))
        if not fam.check(eps):
            failures.append(f"epsilon identity failed at trial {trial}")
    elapsed = time.perf_counter() - t0
    if elapsed > 5.0:
        failures.append(f"runtime {elapsed:.1f}s > 5s")
    _report(2, not failures,
            f"3 thresholds tight, 50 exact epsilon splits ({elapsed:.1f}s)"
            if not failures else "; ".join(failures))


# -- criterion 3: moment-side reproduction -----------------------------------


_C3_CASES = [
    ("bilinear-quartic-curve", 3, QMODULE, 1.0, 1e-5),
    ("twisted-cubic-squared", 6, QMODULE, -1.0, 1e-5),
    ("sextic-gradient-squared", 8, QMODULE, -1.0 / 27.0, 1e-4),
    ("corner-preordering", 6, PREORDERING, 0.0, 1e-4),
]


def test_criterion_3_moment_bounds():
    t0 = time.perf_counter()
    failures = []
    notes = []
    for name, k, kind, expected, tol in _C3_CASES:
        rec = _solved(name, "moment", k, kind)
        err = abs(rec.bound - expected) if rec.bound is not None else np.inf
        limit = tol if rec.status == OPTIMAL else 1e-3
        notes.append(f"{name} k={k}: {rec.bound:.8f} [{rec.status}]")
        if err > limit:
            failures.append(f"{name} k={k}: error {err:.2e} > {limit:.0e} "
                            f"(status {rec.status})")
    elapsed = time.perf_counter() - t0
    if elapsed > 60.0:
        failures.append(f"runtime {elapsed:.1f}s > 60s")
    _report(3, not failures,
            "; ".join(notes) + f" ({elapsed:.1f}s)"
            if not failures else "; ".join(failures))


# -- criterion 4: slow-converging inequality fixture -------------------------


def test_criterion_4_slow_sos_bounds():
    failures = []
    bounds = []
    for k in (3, 4, 5, 6):
        rec = _solved("cubed-inequality-slow", "sos", k)
        bounds.append(rec.bound)
    if any(b is None or b > -1e-4 for b in bounds):
        failures.append(f"bounds not all <= -1e-4: {bounds}")
    for lo, hi in zip(bounds, bounds[1:]):
        if hi < lo - 1e-6:
            failures.append(f"bounds not nondecreasing: {bounds}")
            break
    _report(4, not failures,
            "sos bounds " + ", ".join(f"{b:.6f}" for b in bounds)
            if not failures else "; ".join(failures))


# -- criterion 5: duality and monotonicity -----------------------------------


def test_criterion_5_duality_monotonicity():
    failures = []
    pairs = [("bilinear-quartic-curve", 3), ("bilinear-quartic-curve", 4)]
    pairs += [("cubed-inequality-slow", k) for k in (3, 4, 5, 6)]
    for name, k in pairs:
        sos = _solved(name, "sos", k).bound
        mom = _solved(name, "moment", k).bound
        if sos is None or mom is None or sos > mom + 1e-6:
            failures.append(f"{name} k={k}: sos {sos} > moment {mom} + 1e-6")
    for name, side in [("bilinear-quartic-curve", "moment"),
                       ("bilinear-quartic-curve", "sos"),
                       ("cubed-inequality-slow", "moment"),
                       ("cubed-inequality-slow", "sos")]:
        ks = (3, 4) if name.startswith("bilinear") else (3, 4, 5, 6)
        seq = [_solved(name, side, k).bound for k in ks]
        for lo, hi in zip(seq, seq[1:]):
            if hi < lo - 1e-6:
                failures.append(f"{name} {side} not monotone: {seq}")
                break
    _report(5, not failures,
            "weak duality and monotonicity hold on 6 shared instances"
            if not failures else "; ".join(failures))


# -- criterion 6: minimizer extraction ---------------------------------------


def test_criterion_6_extraction():
    failures = []
    rec = _solved("bilinear-quartic-curve", "moment", 3)
    if not rec.flat:
        failures.append("bilinear k=3: flat truncation did not hold")
    elif not rec.points:
        failures.append("bilinear k=3: no extracted point")
    else:
        err = max(abs(v - 1.0) for v in rec.points[0])
        if err > 1e-4:
            failures.append(f"bilinear k=3: point error {err:.2e} > 1e-4")
    rec = _solved("sextic-gradient-squared", "moment", 8)
    target = 1.0 / np.sqrt(3.0)
    want = {(sx, sy) for sx in (-1, 1) for sy in (-1, 1)}
    if len(rec.points) != 4:
        failures.append(f"sextic k=8: {len(rec.points)} points, expected 4")
    else:
        for sx, sy in want:
            err = min(max(abs(p[0] - sx * target), abs(p[1] - sy * target))
                      for p in rec.points)
            if err > 1e-3:
                failures.append(f"sextic k=8: no point near "
                                f"({sx:+d},{sy:+d})/sqrt(3), error {err:.2e}")
    _report(6, not failures,
            "1 point at (1,1) and 4 points at (+-1,+-1)/sqrt(3) recovered"
            if not failures else "; ".join(failures))


# -- criterion 7: SDP solver standalone --------------------------------------


def test_criterion_7_sdp_solver():
    t0 = time.perf_counter()
    failures = []
    rng = np.random.default_rng(0)
    worst_gap = 0.0
    max_iters = 0
    for trial in range(50):
        prob = random_feasible_instance(rng, max_side=40, max_blocks=3,
                                        max_vars=60)
        assert prob.n_vars <= 300
        sol = solve(prob)
        worst_gap = max(worst_gap, sol.residuals[2])
        max_iters = max(max_iters, sol.iterations)
        if sol.status != OPTIMAL or sol.residuals[2] > 1e-8:
            failures.append(f"trial {trial}: status {sol.status}, "
                            f"gap {sol.residuals[2]:.2e}")
    for prob, opt in [(arrowhead_problem(), 1.0), (amgm_problem(), 2.0)]:
        sol = solve(prob, SolveOptions(tol_gap=1e-10))
        if abs(sol.primal_obj - opt) > 1e-9:
            failures.append(f"micro-instance: |{sol.primal_obj} - {opt}| > 1e-9")
    elapsed = time.perf_counter() - t0
    _report(7, not failures,
            f"50/50 optimal (worst gap {worst_gap:.1e}, max {max_iters} iters), "
            f"micro-instances exact ({elapsed:.1f}s)"
            if not failures else "; ".join(failures[:5]))
