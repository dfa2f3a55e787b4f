"""Moment/localizing matrices, SDP assembly, hierarchy driver, extraction.

The moment side solves  min <f, y>  over truncated moment sequences with
localizing-matrix PSD constraints; the SOS side maximizes gamma subject to
f - gamma lying in the truncated ideal-plus-cone.  Both reduce to the
free-variable LMI form consumed by momentsos.sdp.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from . import sdp
from .certify import PREORDERING, QMODULE, Problem, preordering_products
from .poly import EXACT, MonomialBasis, Polynomial, basis, basis_size, grlex_key


def _ceil_half_deg(p: Polynomial) -> int:
    d = p.degree
    return 0 if d == float("-inf") else math.ceil(d / 2)


# -- moment vectors ---------------------------------------------------------


@dataclass
class MomentVector:
    """Truncated moment sequence y indexed by exponents |alpha| <= 2k."""

    n: int
    k: int
    values: dict  # exponent tuple -> float

    @classmethod
    def from_point(cls, u: Sequence[float], k: int) -> "MomentVector":
        n = len(u)
        vals = {}
        for alpha in basis(n, 2 * k):
            v = 1.0
            for x, e in zip(u, alpha):
                v *= float(x) ** e
            vals[alpha] = v
        return cls(n=n, k=k, values=vals)

    @classmethod
    def from_mixture(cls, points: Sequence[Sequence[float]],
                     weights: Optional[Sequence[float]] = None,
                     k: int = 1) -> "MomentVector":
        if weights is None:
            weights = [1.0 / len(points)] * len(points)
        vecs = [cls.from_point(u, k) for u in points]
        vals = {}
        for alpha in vecs[0].values:
            vals[alpha] = sum(w * v.values[alpha] for w, v in zip(weights, vecs))
        return cls(n=len(points[0]), k=k, values=vals)

    @property
    def y0(self) -> float:
        return self.values[(0,) * self.n]

    def normalized(self) -> "MomentVector":
        y0 = self.y0
        return MomentVector(self.n, self.k,
                            {a: v / y0 for a, v in self.values.items()})

    def moment_matrix(self, order: int) -> np.ndarray:
        mb = basis(self.n, order)
        m = len(mb)
        M = np.empty((m, m))
        for i, a in enumerate(mb):
            for j in range(i, m):
                bb = mb[j]
                M[i, j] = M[j, i] = self.values[tuple(x + y for x, y in zip(a, bb))]
        return M


# -- localizing maps --------------------------------------------------------


class LocalizingMap:
    """Coefficient slices A_alpha with sum_alpha A_alpha x^alpha = g [x]_r [x]_r^T.

    r = k - ceil(deg g / 2); the moment matrix is the special case g = 1.
    """

    def __init__(self, g: Polynomial, k: int):
        self.g = g
        self.k = k
        self.d = _ceil_half_deg(g)
        if k < self.d:
            raise ValueError(f"order {k} below half-degree {self.d} of the generator")
        self.row_basis = basis(g.n, k - self.d)
        self.side = len(self.row_basis)

    def slices(self) -> dict:
        """alpha -> dense symmetric coefficient matrix, float entries."""
        out: dict = {}
        rb = self.row_basis
        for i, bi in enumerate(rb):
            for j in range(i, len(rb)):
                shift = tuple(x + y for x, y in zip(bi, rb[j]))
                for delta, c in self.g.items():
                    alpha = tuple(x + y for x, y in zip(shift, delta))
                    M = out.get(alpha)
                    if M is None:
                        M = out[alpha] = np.zeros((self.side, self.side))
                    M[i, j] += float(c)
                    if i != j:
                        M[j, i] += float(c)
        return out

    def entry_functionals(self):
        """Yield (i, j, {alpha: exact coeff}) for each upper-triangle entry."""
        rb = self.row_basis
        for i, bi in enumerate(rb):
            for j in range(i, len(rb)):
                shift = tuple(x + y for x, y in zip(bi, rb[j]))
                row = {}
                for delta, c in self.g.items():
                    alpha = tuple(x + y for x, y in zip(shift, delta))
                    row[alpha] = row.get(alpha, Fraction(0)) + c
                yield i, j, {a: c for a, c in row.items() if c}

    def apply(self, y: MomentVector) -> np.ndarray:
        rb = self.row_basis
        M = np.zeros((self.side, self.side))
        for i, j, row in self.entry_functionals():
            v = sum(float(c) * y.values[a] for a, c in row.items())
            M[i, j] = M[j, i] = v
        return M


def localizing_map(g: Polynomial, n: int, k: int) -> LocalizingMap:
    if g.n != n:
        raise ValueError("generator has wrong variable count")
    return LocalizingMap(g, k)


# -- generator sets ---------------------------------------------------------


def cone_generators(prob: Problem, k: int, kind: str):
    """(J, product) pairs defining the PSD blocks; empty J is the moment block.

    In preordering kind, subset products whose half-degree exceeds k are
    skipped (their truncated cone contribution is trivial at this order);
    the skipped subsets are returned separately.
    """
    if kind == QMODULE:
        pairs = [((), Polynomial.constant(prob.n, 1, prob.f.field))]
        pairs += [((j + 1,), gj) for j, gj in enumerate(prob.g)]
        return pairs, []
    if kind == PREORDERING:
        pairs = []
        skipped = []
        for J, prod in preordering_products(prob.g, prob.n):
            if _ceil_half_deg(prod) > k:
                skipped.append(J)
            else:
                pairs.append((J, prod))
        return pairs, skipped
    raise ValueError(f"unknown kind {kind!r}")


def _kernel_complement(hs: Sequence[Polynomial], row_basis, n: int):
    """Orthonormal complement of span{vec(h_i x^beta)} in the row basis.

    Returns None when the structural kernel is empty.
    """
    r = max(sum(a) for a in row_basis) if row_basis else 0
    pos = {a: i for i, a in enumerate(row_basis)}
    cols = []
    for h in hs:
        dh = h.degree
        if dh == float("-inf") or dh > r:
            continue
        hf = h.to_float()
        for beta in basis(n, r - int(dh)):
            col = np.zeros(len(row_basis))
            mono = Polynomial.monomial(n, beta, 1.0, hf.field)
            for alpha, coef in (hf * mono).items():
                col[pos[alpha]] = coef
            cols.append(col)
    if not cols:
        return None
    Kv = np.stack(cols, axis=1)
    Uf, sv, _ = np.linalg.svd(Kv, full_matrices=True)
    tol = max(Kv.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    rank = int((sv > tol).sum())
    if rank == 0:
        return None
    return Uf[:, rank:]


def _scaled(p: Polynomial):
    """Scale by the max-abs coefficient for float assembly; returns (q, scale)."""
    s = p.max_abs_coefficient()
    if not s:
        return p, Fraction(1)
    return p / s, Fraction(s)


# -- moment-side assembly ---------------------------------------------------


@dataclass
class AssembledMoment:
    problem: sdp.SdpProblem
    n: int
    k: int
    kind: str
    var_exponents: list       # exponent per SDP variable (y0 excluded)
    objective_offset: float
    objective_scale: float
    skipped_subsets: list

    def decode(self, sol: sdp.SdpSolution) -> MomentVector:
        vals = {(0,) * self.n: 1.0}
        for alpha, v in zip(self.var_exponents, sol.y):
            vals[alpha] = float(v)
        return MomentVector(self.n, self.k, vals)

    def bound(self, sol: sdp.SdpSolution) -> float:
        return self.objective_scale * sol.primal_obj + self.objective_offset


def assemble_moment_sdp(prob: Problem, k: int, kind: str = QMODULE) -> AssembledMoment:
    """Build the moment-side SDP at order k (quadratic module or preordering)."""
    n = prob.n
    pairs, skipped = cone_generators(prob, k, kind)
    max_deg = max([prob.f.degree] + [h.degree for h in prob.h]
                  + [prod.degree for _, prod in pairs if prod.degree != float("-inf")])
    if 2 * k < max_deg:
        raise ValueError(f"order {k} too small: needs 2k >= {max_deg}")
    for h in prob.h:
        if k < _ceil_half_deg(h):
            raise ValueError(f"order {k} below half-degree of an equality")

    mono = basis(n, 2 * k)
    zero = (0,) * n
    var_exponents = [a for a in mono if a != zero]
    index = {a: i for i, a in enumerate(var_exponents)}
    N = len(var_exponents)

    # objective <f, y>, with the polynomial scaled for conditioning
    f_scaled, f_scale = _scaled(prob.f)
    c = np.zeros(N)
    offset = 0.0
    for alpha, coef in f_scaled.items():
        if alpha == zero:
            offset = float(coef)
        else:
            c[index[alpha]] = float(coef)

    # PSD blocks from each cone generator.  On the feasible affine set every
    # vector vec(h_i x^beta) with deg <= row-basis degree lies in the block's
    # kernel, so the primal has empty interior; compressing onto the
    # orthogonal complement is an exact reformulation that restores it.
    blocks = []
    for J, prod in pairs:
        prod_scaled, _ = _scaled(prod)
        lm = LocalizingMap(prod_scaled, k)
        slices = lm.slices()
        F0 = slices.pop(zero, np.zeros((lm.side, lm.side)))
        idx = []
        mats = []
        for alpha, M in sorted(slices.items(), key=lambda kv: grlex_key(kv[0])):
            idx.append(index[alpha])
            mats.append(M)
        mats = np.stack(mats) if mats else np.zeros((0, lm.side, lm.side))
        U = _kernel_complement(prob.h, lm.row_basis, n)
        if U is not None:
            F0 = U.T @ F0 @ U
            mats = np.einsum("ab,pbc,cd->pad", U.T, mats, U) if len(idx) \
                else np.zeros((0, U.shape[1], U.shape[1]))
        blocks.append(sdp.LmiBlock(F0, idx, mats))

    # equality rows from L_h(y) = 0, deduplicated by exact symbolic key
    rows = []
    rhs = []
    seen = set()
    for h in prob.h:
        h_scaled, _ = _scaled(h)
        lm = LocalizingMap(h_scaled, k)
        for _, _, func in lm.entry_functionals():
            if not func:
                continue
            lead = func[min(func, key=grlex_key)]
            key = tuple(sorted(((a, c / lead) for a, c in func.items()),
                               key=lambda e: grlex_key(e[0])))
            if key in seen:
                continue
            seen.add(key)
            row = np.zeros(N)
            b_val = 0.0
            for alpha, coef in func.items():
                if alpha == zero:
                    b_val -= float(coef)
                else:
                    row[index[alpha]] = float(coef)
            rows.append(row)
            rhs.append(b_val)
    A = np.vstack(rows) if rows else np.zeros((0, N))
    b = np.asarray(rhs)

    return AssembledMoment(
        problem=sdp.SdpProblem(c=c, A=A, b=b, blocks=blocks),
        n=n, k=k, kind=kind, var_exponents=var_exponents,
        objective_offset=float(f_scale) * offset, objective_scale=float(f_scale),
        skipped_subsets=skipped)


# -- SOS-side assembly ------------------------------------------------------


@dataclass
class AssembledSos:
    problem: sdp.SdpProblem
    n: int
    k: int
    kind: str
    gamma_index: int
    gram_layout: list   # (J, row basis, [(var, i, j)]) per cone generator
    skipped_subsets: list
    objective_scale: float

    def bound(self, sol: sdp.SdpSolution) -> float:
        return self.objective_scale * float(sol.y[self.gamma_index])


def assemble_sos_sdp(prob: Problem, k: int, kind: str = QMODULE) -> AssembledSos:
    """Build the SOS-side SDP: max gamma s.t. f - gamma in ideal + cone."""
    n = prob.n
    pairs, skipped = cone_generators(prob, k, kind)
    max_deg = max([prob.f.degree] + [h.degree for h in prob.h]
                  + [prod.degree for _, prod in pairs if prod.degree != float("-inf")])
    if 2 * k < max_deg:
        raise ValueError(f"order {k} too small: needs 2k >= {max_deg}")

    mono = basis(n, 2 * k)
    zero = (0,) * n
    row_index = {a: i for i, a in enumerate(mono)}
    n_rows = len(mono)

    f_scaled, f_scale = _scaled(prob.f)

    # variable layout: gamma, then phi coefficients, then gram entries
    nv = 1
    gamma_index = 0
    phi_layout = []
    for i, h in enumerate(prob.h):
        dh = h.degree
        if dh == float("-inf"):
            raise ValueError("zero polynomial among the equalities")
        if dh > 2 * k:
            raise ValueError(f"order {k} too small for equality {i}")
        pb = basis(n, 2 * k - int(dh))
        phi_layout.append((i, pb, nv))
        nv += len(pb)
    gram_layout = []
    for J, prod in pairs:
        d_J = _ceil_half_deg(prod)
        gb = basis(n, k - d_J)
        entries = []
        for r in range(len(gb)):
            for s in range(r, len(gb)):
                entries.append((nv, r, s))
                nv += 1
        gram_layout.append((J, gb, entries, prod))

    A_rows = np.zeros((n_rows, nv))
    bvec = np.zeros(n_rows)
    for alpha, coef in f_scaled.items():
        bvec[row_index[alpha]] = float(coef)
    # gamma appears in the constant row: gamma + (combination) = f
    A_rows[row_index[zero], gamma_index] = 1.0
    # phi_i * h_i contributions
    for i, pb, base_var in phi_layout:
        h_scaled, _ = _scaled(prob.h[i])
        for t, beta in enumerate(pb):
            for delta, coef in h_scaled.items():
                alpha = tuple(x + y for x, y in zip(beta, delta))
                A_rows[row_index[alpha], base_var + t] += float(coef)
    # gram contributions and PSD blocks
    blocks = []
    for J, gb, entries, prod in gram_layout:
        prod_scaled, _ = _scaled(prod)
        side = len(gb)
        idx = []
        mats = []
        for var, r, s in entries:
            shift = tuple(x + y for x, y in zip(gb[r], gb[s]))
            mult = 1.0 if r == s else 2.0
            for delta, coef in prod_scaled.items():
                alpha = tuple(x + y for x, y in zip(shift, delta))
                A_rows[row_index[alpha], var] += mult * float(coef)
            M = np.zeros((side, side))
            M[r, s] = M[s, r] = 1.0
            idx.append(var)
            mats.append(M)
        mats = np.stack(mats) if mats else np.zeros((0, side, side))
        blocks.append(sdp.LmiBlock(np.zeros((side, side)), idx, mats))

    c = np.zeros(nv)
    c[gamma_index] = -1.0  # maximize gamma
    return AssembledSos(
        problem=sdp.SdpProblem(c=c, A=A_rows, b=bvec, blocks=blocks),
        n=n, k=k, kind=kind, gamma_index=gamma_index,
        gram_layout=[(J, gb, entries) for J, gb, entries, _ in gram_layout],
        skipped_subsets=skipped, objective_scale=float(f_scale))


# -- flat truncation and extraction -----------------------------------------


def numerical_rank(M: np.ndarray, tol: float = 1e-9) -> int:
    """Count singular values above max(side, 10) * sigma_1 * tol."""
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int((sv > max(M.shape[0], 10) * sv[0] * tol).sum())


def flat_truncation(y: MomentVector, k: int, d: int, tol: float = 1e-9):
    """(flag, (rank M_{k-d}, rank M_k)); flag true iff the ranks agree."""
    if k <= d:
        raise ValueError("flat truncation needs k > d")
    r_low = numerical_rank(y.moment_matrix(k - d), tol)
    r_high = numerical_rank(y.moment_matrix(k), tol)
    return r_low == r_high, (r_low, r_high)


class ExtractionError(RuntimeError):
    pass


def extract_minimizers(y: MomentVector, k: int, rank_tol: float = 1e-9,
                       seed: int = 0) -> list:
    """Atom extraction from a (near-)flat moment matrix.

    Eigenfactor M_k, pick a monomial basis of the column space by pivoted QR
    over rows of degree < k, form multiplication operators, and simultaneously
    diagonalize a random combination via a real Schur decomposition.
    """
    y = y.normalized()
    n = y.n
    M = y.moment_matrix(k)
    r = numerical_rank(M, rank_tol)
    if r == 0:
        raise ExtractionError("zero moment matrix")
    w, U = np.linalg.eigh(M)
    order = np.argsort(w)[::-1][:r]
    if w[order[-1]] <= 0:
        raise ExtractionError("moment matrix is not numerically PSD at the given rank")
    V = U[:, order] * np.sqrt(w[order])

    mb = basis(n, k)
    low_rows = [i for i, a in enumerate(mb) if sum(a) < k]
    if len(low_rows) < r:
        raise ExtractionError("rank exceeds the low-degree row count")
    _, _, piv = sla.qr(V[low_rows].T, mode="economic", pivoting=True)
    pivots = [low_rows[p] for p in piv[:r]]
    W = V[pivots]
    if np.linalg.cond(W) > 1e12:
        raise ExtractionError("ill-conditioned pivot basis")
    ops = []
    for i in range(n):
        shifted = []
        for p in pivots:
            alpha = list(mb[p])
            alpha[i] += 1
            shifted.append(mb.index(tuple(alpha)))
        ops.append(np.linalg.solve(W, V[shifted]))
    rng = np.random.RandomState(seed)
    lam = rng.rand(n)
    lam /= lam.sum()
    combo = sum(l * op for l, op in zip(lam, ops))
    _, Q = sla.schur(combo, output="real")
    points = []
    for j in range(r):
        v = Q[:, j]
        points.append(tuple(float(v @ op @ v) for op in ops))
    return points


# -- hierarchy driver -------------------------------------------------------


@dataclass
class OrderRecord:
    k: int
    kind: str
    side: str
    bound: Optional[float]
    status: str
    ranks: Optional[tuple] = None
    flat: Optional[bool] = None
    points: tuple = ()
    solve_ms: float = 0.0
    gap: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "k": self.k, "kind": self.kind, "side": self.side,
            "bound": self.bound, "status": self.status,
            "ranks": list(self.ranks) if self.ranks else None,
            "flat": self.flat,
            "points": [list(p) for p in self.points],
            "solve_ms": round(self.solve_ms, 3),
        }


@dataclass
class HierarchyResult:
    records: list
    stabilized: bool = False

    def bounds(self, side: str) -> dict:
        return {r.k: r.bound for r in self.records
                if r.side == side and r.bound is not None}

    def record(self, k: int, side: str) -> Optional[OrderRecord]:
        for r in self.records:
            if r.k == k and r.side == side:
                return r
        return None


@dataclass
class HierarchyOptions:
    tol_gap: float = 1e-8
    tol_feas: float = 1e-8
    max_iter: int = 200
    rank_tol: float = 1e-9
    stall_tol: float = 1e-7
    feas_tol: float = 1e-6
    seed: int = 0
    extract: bool = True


def _solve_one(prob: Problem, k: int, kind: str, side: str,
               opts: HierarchyOptions) -> OrderRecord:
    t0 = time.perf_counter()
    try:
        if side == "moment":
            asm = assemble_moment_sdp(prob, k, kind)
        else:
            asm = assemble_sos_sdp(prob, k, kind)
    except ValueError as exc:
        return OrderRecord(k=k, kind=kind, side=side, bound=None,
                           status=f"assembly_error: {exc}")
    sol = sdp.solve(asm.problem, sdp.SolveOptions(
        tol_gap=opts.tol_gap, tol_feas=opts.tol_feas, max_iter=opts.max_iter))
    ms = (time.perf_counter() - t0) * 1e3
    rec = OrderRecord(k=k, kind=kind, side=side, bound=asm.bound(sol),
                      status=sol.status, solve_ms=ms, gap=sol.residuals[2])
    if side == "moment" and sol.status in (sdp.OPTIMAL, sdp.MAX_ITER):
        y = asm.decode(sol)
        d = max([1] + [_ceil_half_deg(p) for p in (*prob.h, *prob.g)])
        if k > d:
            flag, ranks = flat_truncation(y, k, d, opts.rank_tol)
            rec.flat = flag
            rec.ranks = ranks
            if flag and opts.extract:
                try:
                    pts = extract_minimizers(y, k - d, opts.rank_tol, opts.seed)
                    rec.points = tuple(p for p in pts if _near_feasible(prob, p, opts.feas_tol))
                except ExtractionError:
                    pass
    return rec


def _near_feasible(prob: Problem, u, tol: float) -> bool:
    fp = prob.to_float()
    return (all(abs(h.eval(u)) <= max(tol, tol * abs(h.max_abs_coefficient()) * 10)
                for h in fp.h)
            and all(g.eval(u) >= -tol * 10 for g in fp.g))


def run_hierarchy(prob: Problem, k_range: Sequence[int], kind: str = QMODULE,
                  sides: Sequence[str] = ("moment",),
                  options: Optional[HierarchyOptions] = None) -> HierarchyResult:
    """Sweep relaxation orders; stops early once flat truncation holds and the
    moment bound stalls.  Solver failures are recorded per order, not raised."""
    opts = options or HierarchyOptions()
    ks = sorted(set(k_range))
    threads = int(os.environ.get("LASSERRE_THREADS", "1"))
    records = []
    stabilized = False
    jobs = [(k, side) for k in ks for side in sides]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {(k, side): pool.submit(_solve_one, prob, k, kind, side, opts)
                       for k, side in jobs}
        results = {key: fut.result() for key, fut in futures.items()}
        records = [results[key] for key in jobs]
        records.sort(key=lambda r: (r.k, r.side))
        # stabilization assessed post hoc in parallel mode
        mom = [r for r in records if r.side == "moment" and r.bound is not None]
        for prev, cur in zip(mom, mom[1:]):
            if cur.flat and abs(cur.bound - prev.bound) <= opts.stall_tol:
                stabilized = True
        return HierarchyResult(records=records, stabilized=stabilized)

    prev_moment_bound = None
    for k in ks:
        recs_k = [_solve_one(prob, k, kind, side, opts) for side in sides]
        records.extend(sorted(recs_k, key=lambda r: r.side))
        mom = next((r for r in recs_k if r.side == "moment"), None)
        if mom and mom.bound is not None:
            if (mom.flat and prev_moment_bound is not None
                    and abs(mom.bound - prev_moment_bound) <= opts.stall_tol):
                stabilized = True
                break
            prev_moment_bound = mom.bound
    return HierarchyResult(records=records, stabilized=stabilized)


def default_order_range(prob: Problem, width: int = 4) -> range:
    """k from max half-degree of the data to that plus `width`."""
    k0 = max([1, _ceil_half_deg(prob.f)]
             + [_ceil_half_deg(p) for p in (*prob.h, *prob.g)])
    return range(k0, k0 + width + 1)
