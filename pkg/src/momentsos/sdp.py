"""Dense primal-dual interior-point solver for SDPs with free variables.

Problem form:

    minimize    c^T y
    subject to  A y = b
                X_j(y) := F0_j + sum_i y_i F_ij  is PSD,  j = 1..nblocks

Free variables are handled natively in an augmented (saddle-point) Schur
system; the search direction is the HKM direction with a Mehrotra
predictor-corrector and fraction-to-boundary 0.98.  Sized for desk-scale
problems (block sides up to ~100, a few hundred variables).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
PRIMAL_INFEASIBLE = "primal_infeasible_suspect"
DUAL_INFEASIBLE = "dual_infeasible_suspect"
NUMERICAL_FAILURE = "numerical_failure"


class LmiBlock:
    """F0 + sum_i y_i F_i >= 0 with the F_i stored stacked and symmetrized."""

    __slots__ = ("F0", "var_idx", "mats", "side")

    def __init__(self, F0: np.ndarray, var_idx: Sequence[int], mats: np.ndarray):
        F0 = np.asarray(F0, dtype=float)
        mats = np.asarray(mats, dtype=float)
        if F0.ndim != 2 or F0.shape[0] != F0.shape[1]:
            raise ValueError("F0 must be square")
        m = F0.shape[0]
        if mats.shape != (len(var_idx), m, m):
            raise ValueError("stacked coefficient matrices have wrong shape")
        self.F0 = 0.5 * (F0 + F0.T)
        self.var_idx = np.asarray(var_idx, dtype=int)
        self.mats = 0.5 * (mats + np.transpose(mats, (0, 2, 1)))
        self.side = m

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        if len(self.var_idx):
            return self.F0 + np.tensordot(y[self.var_idx], self.mats, axes=1)
        return self.F0.copy()

    def adjoint(self, S: np.ndarray) -> np.ndarray:
        """Vector with entries <F_i, S> for the block's variables."""
        return self.mats.reshape(len(self.var_idx), -1) @ S.ravel()


@dataclass
class SdpProblem:
    c: np.ndarray
    A: np.ndarray          # (rows, N); may have zero rows
    b: np.ndarray
    blocks: list

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        N = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, N)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.A.shape[0] != self.b.size:
            raise ValueError("A and b row counts differ")
        for blk in self.blocks:
            if len(blk.var_idx) and (blk.var_idx.min() < 0 or blk.var_idx.max() >= N):
                raise ValueError("block variable index out of range")

    @property
    def n_vars(self) -> int:
        return self.c.size


@dataclass
class SdpSolution:
    y: np.ndarray
    mu: np.ndarray                 # equality multipliers
    S: list                        # block duals
    X: list                        # block primal matrices
    status: str
    iterations: int
    primal_obj: float
    dual_obj: float
    residuals: tuple               # (primal infeas, dual infeas, relative gap)
    solve_ms: float = 0.0


@dataclass
class SolveOptions:
    tol_gap: float = 1e-8
    tol_feas: float = 1e-8
    max_iter: int = 200
    verbose: bool = False
    step_frac: float = 0.98


def _preprocess_equalities(A: np.ndarray, b: np.ndarray):
    """Drop dependent rows via rank-revealing QR; detect inconsistency.

    Returns (A_kept, b_kept, kept_rows, consistent).
    """
    rows = A.shape[0]
    if rows == 0:
        return A, b, np.arange(0), True
    # consistency of the full system
    y_ls, *_ = np.linalg.lstsq(A, b, rcond=None)
    scale = 1.0 + np.abs(b).max(initial=0.0)
    consistent = np.abs(A @ y_ls - b).max(initial=0.0) <= 1e-8 * scale
    q, r, piv = sla.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(A.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int((diag > tol).sum())
    keep = np.sort(piv[:rank])
    return A[keep], b[keep], keep, consistent


def _max_step(L: np.ndarray, D: np.ndarray) -> float:
    """Largest alpha with M + alpha*D PSD-interior, for M = L L^T."""
    W = sla.solve_triangular(L, D, lower=True)
    W = sla.solve_triangular(L, W.T, lower=True)
    W = 0.5 * (W + W.T)
    lam_min = sla.eigh(W, eigvals_only=True, subset_by_index=[0, 0])[0]
    if lam_min >= -1e-14:
        return np.inf
    return -1.0 / lam_min


def solve(problem: SdpProblem, options: Optional[SolveOptions] = None) -> SdpSolution:
    """Solve the SDP; see module docstring for the algorithm."""
    t0 = time.perf_counter()
    opts = options or SolveOptions()
    N = problem.n_vars
    blocks = problem.blocks
    A, b, kept_rows, consistent = _preprocess_equalities(problem.A, problem.b)
    rows = A.shape[0]
    c = problem.c

    def finish(y, mu, S, X, status, iters):
        pobj = float(c @ y)
        dobj = float(b @ mu) - sum(float(np.tensordot(blk.F0, Sj))
                                   for blk, Sj in zip(blocks, S))
        mu_full = np.zeros(problem.A.shape[0])
        mu_full[kept_rows] = mu
        res = _residual_triplet(problem, y, mu_full, S, X, pobj, dobj)
        return SdpSolution(y=y, mu=mu_full, S=S, X=X, status=status,
                           iterations=iters, primal_obj=pobj, dual_obj=dobj,
                           residuals=res,
                           solve_ms=(time.perf_counter() - t0) * 1e3)

    if not consistent:
        y0 = np.zeros(N)
        return finish(y0, np.zeros(rows), [np.eye(blk.side) for blk in blocks],
                      [blk.evaluate(y0) for blk in blocks], PRIMAL_INFEASIBLE, 0)

    if not blocks:
        # pure equality-constrained LP in free variables
        return _solve_no_blocks(problem, A, b, c, finish)

    m_total = sum(blk.side for blk in blocks)
    data_norm = max([1.0] + [np.abs(blk.F0).max(initial=0.0) for blk in blocks]
                    + [np.abs(blk.mats).max(initial=0.0) for blk in blocks])
    b_scale = 1.0 + np.abs(b).max(initial=0.0)
    c_scale = 1.0 + np.abs(c).max(initial=0.0)

    def attempt(frac0):
        """One cold-started path-following run; returns (status, iters, iterate, best)."""
        y = (np.linalg.lstsq(A, b, rcond=None)[0] if rows else np.zeros(N))
        mu = np.zeros(rows)
        xi = 10.0 * max(1.0, np.sqrt(m_total), data_norm)
        eta = 10.0 * max(1.0, np.sqrt(m_total), float(np.abs(c).max(initial=0.0)))
        X = [xi * np.eye(blk.side) for blk in blocks]
        S = [eta * np.eye(blk.side) for blk in blocks]
        status = MAX_ITER
        it = 0
        best = None          # (merit, y, mu, X, S)
        best_age = 0
        frac = frac0
        Ls = None
        Ls_S = None

        for it in range(1, opts.max_iter + 1):
            # residuals
            r_p = b - A @ y if rows else np.zeros(0)
            R = [blk.evaluate(y) - Xj for blk, Xj in zip(blocks, X)]
            r_d = c - (A.T @ mu if rows else 0.0)
            for blk, Sj in zip(blocks, S):
                np.subtract.at(r_d, blk.var_idx, blk.adjoint(Sj))
            gap = sum(float(np.tensordot(Xj, Sj)) for Xj, Sj in zip(X, S))
            mu_bar = gap / m_total
            pobj = float(c @ y)
            dobj = float(b @ mu) - sum(float(np.tensordot(blk.F0, Sj))
                                       for blk, Sj in zip(blocks, S))
            rel_gap = abs(pobj - dobj) / (1.0 + abs(pobj))
            feas_p = (np.abs(r_p).max(initial=0.0) / b_scale if rows else 0.0)
            feas_p = max(feas_p, max(np.abs(Rj).max(initial=0.0) for Rj in R)
                         / (1.0 + data_norm))
            feas_d = np.abs(r_d).max(initial=0.0) / c_scale
            if opts.verbose:
                print(f"iter {it:3d}  gap {rel_gap:9.2e}  pfeas {feas_p:9.2e}  "
                      f"dfeas {feas_d:9.2e}  pobj {pobj: .9e}")
            merit = max(rel_gap, feas_p, feas_d)
            if best is None or merit < best[0] * 0.999:
                if best is None or merit < best[0]:
                    best = (merit, y.copy(), mu.copy(), [Xj.copy() for Xj in X],
                            [Sj.copy() for Sj in S])
                best_age = 0
            else:
                best_age += 1
            if rel_gap <= opts.tol_gap and feas_p <= opts.tol_feas and feas_d <= opts.tol_feas:
                status = OPTIMAL
                break
            if best_age >= 40:
                # no measurable progress for many iterations: stalled
                break
            # divergence heuristics
            if feas_d <= 1e-7 and dobj > 1e9 * b_scale:
                status = PRIMAL_INFEASIBLE
                break
            if feas_p <= 1e-7 and pobj < -1e9 * c_scale:
                status = DUAL_INFEASIBLE
                break
            if max(np.abs(y).max(initial=0.0),
                   max(np.abs(Sj).max(initial=0.0) for Sj in S)) > 1e14:
                status = (PRIMAL_INFEASIBLE if feas_p > opts.tol_feas * 10
                          else DUAL_INFEASIBLE)
                break

            if Ls is None:
                try:
                    Ls = [sla.cholesky(Xj, lower=True) for Xj in X]
                    Ls_S = [sla.cholesky(Sj, lower=True) for Sj in S]
                except np.linalg.LinAlgError:
                    status = NUMERICAL_FAILURE
                    break
            Xinvs = [sla.cho_solve((L, True), np.eye(L.shape[0])) for L in Ls]

            # Schur complement H_il = <F_i, Xinv F_l S> per block, symmetrized
            H = np.zeros((N, N))
            for blk, Xinv, Sj in zip(blocks, Xinvs, S):
                p = len(blk.var_idx)
                if p == 0:
                    continue
                T = Xinv @ (blk.mats @ Sj)
                Hb = T.reshape(p, -1) @ blk.mats.reshape(p, -1).T
                Hb = 0.5 * (Hb + Hb.T)
                H[np.ix_(blk.var_idx, blk.var_idx)] += Hb

            K = np.zeros((N + rows, N + rows))
            K[:N, :N] = -H
            if rows:
                K[:N, N:] = A.T
                K[N:, :N] = A
            reg = 0.0
            lu = None
            for attempt in range(6):
                try:
                    Kreg = K.copy()
                    if reg:
                        Kreg[:N, :N] -= reg * np.eye(N)
                        if rows:
                            Kreg[N:, N:] += reg * np.eye(rows)
                    lu = sla.lu_factor(Kreg)
                    # reject exactly singular factorizations
                    if not np.all(np.isfinite(lu[0])) or np.abs(np.diag(lu[0])).min() == 0.0:
                        raise ValueError("singular KKT matrix")
                    break
                except (ValueError, sla.LinAlgError):
                    lu = None
                    reg = 1e-12 if reg == 0.0 else reg * 10.0
                    if reg > 1e-6:
                        break
            if lu is None:
                status = NUMERICAL_FAILURE
                break

            def direction(nu, corr=None):
                """Solve for (dy, dmu, dX, dS) with target X S -> nu I (- corr)."""
                gvec = r_d.copy()
                for bi, (blk, Xinv, Sj, Rj) in enumerate(zip(blocks, Xinvs, S, R)):
                    Cj = nu * np.eye(blk.side) - X[bi] @ Sj
                    if corr is not None:
                        Cj = Cj - corr[bi]
                    # g -= A_j(Xinv Cj) - A_j(Xinv Rj Sj)
                    M = Xinv @ (Cj - Rj @ Sj)
                    if len(blk.var_idx):
                        np.subtract.at(gvec, blk.var_idx, blk.adjoint(0.5 * (M + M.T)))
                rhs = np.concatenate([gvec, r_p])
                sol = sla.lu_solve(lu, rhs)
                dy = sol[:N]
                dmu = sol[N:]
                dX = []
                dS = []
                for bi, (blk, Xinv, Sj, Rj) in enumerate(zip(blocks, Xinvs, S, R)):
                    dXj = Rj.copy()
                    if len(blk.var_idx):
                        dXj = dXj + np.tensordot(dy[blk.var_idx], blk.mats, axes=1)
                    Cj = nu * np.eye(blk.side) - X[bi] @ Sj
                    if corr is not None:
                        Cj = Cj - corr[bi]
                    dSj = Xinv @ (Cj - dXj @ Sj)
                    dSj = 0.5 * (dSj + dSj.T)
                    dX.append(dXj)
                    dS.append(dSj)
                return dy, dmu, dX, dS

            # predictor
            dy_a, dmu_a, dX_a, dS_a = direction(0.0)
            ap = min([1.0] + [frac * _max_step(L, D)
                              for L, D in zip(Ls, dX_a)])
            ad = min([1.0] + [frac * _max_step(L, D)
                              for L, D in zip(Ls_S, dS_a)])
            gap_aff = sum(float(np.tensordot(Xj + ap * dXj, Sj + ad * dSj))
                          for Xj, dXj, Sj, dSj in zip(X, dX_a, S, dS_a))
            sigma = min(1.0, max(0.0, (gap_aff / gap)) ** 3) if gap > 0 else 0.1
            nu = sigma * mu_bar

            # corrector with Mehrotra second-order term
            corr = [dXj @ dSj for dXj, dSj in zip(dX_a, dS_a)]
            dy, dmu, dX, dS = direction(nu, corr=corr)
            ap = min([1.0] + [frac * _max_step(L, D)
                              for L, D in zip(Ls, dX)])
            ad = min([1.0] + [frac * _max_step(L, D)
                              for L, D in zip(Ls_S, dS)])
            if not np.isfinite(ap):
                ap = 1.0
            if not np.isfinite(ad):
                ad = 1.0

            # backtrack until the new X and S factor as strictly PD
            new_Ls = new_Ls_S = None
            for _ in range(20):
                try:
                    Xn = [Xj + ap * dXj for Xj, dXj in zip(X, dX)]
                    new_Ls = [sla.cholesky(Xj, lower=True) for Xj in Xn]
                    break
                except np.linalg.LinAlgError:
                    ap *= 0.8
            for _ in range(20):
                try:
                    Sn = [Sj + ad * dSj for Sj, dSj in zip(S, dS)]
                    new_Ls_S = [sla.cholesky(Sj, lower=True) for Sj in Sn]
                    break
                except np.linalg.LinAlgError:
                    ad *= 0.8
            if new_Ls is None or new_Ls_S is None:
                status = NUMERICAL_FAILURE
                break

            if opts.verbose:
                print(f"      ap {ap:8.2e}  ad {ad:8.2e}  sigma {sigma:8.2e}")
            y = y + ap * dy
            mu = mu + ad * dmu
            X = Xn
            S = Sn
            Ls = new_Ls
            Ls_S = new_Ls_S

        def triplet(y_, mu_, S_, X_, pobj_, dobj_):
            mu_full = np.zeros(problem.A.shape[0])
            mu_full[kept_rows] = mu_
            return _residual_triplet(problem, y_, mu_full, S_, X_, pobj_, dobj_)

        if best is not None and status != OPTIMAL:
            pobj = float(c @ y)
            dobj = float(b @ mu) - sum(float(np.tensordot(blk.F0, Sj))
                                       for blk, Sj in zip(blocks, S))
            cur = triplet(y, mu, S, X, pobj, dobj)
            if max(cur) > 2.0 * best[0]:
                _, y, mu, X, S = best
        pobj = float(c @ y)
        dobj = float(b @ mu) - sum(float(np.tensordot(blk.F0, Sj))
                                   for blk, Sj in zip(blocks, S))
        merit = max(triplet(y, mu, S, X, pobj, dobj))
        return status, it, merit, (y, mu, X, S)

    # degenerate instances can derail under the aggressive default boundary
    # fraction; retry cold with shorter steps when the first run stalls badly
    total_it = 0
    winner = None        # (merit, status, iterate)
    for frac0 in (opts.step_frac, min(opts.step_frac, 0.8)):
        status, used, merit, iterate = attempt(frac0)
        total_it += used
        if winner is None or merit < winner[0]:
            winner = (merit, status, iterate)
        if status == OPTIMAL or frac0 <= 0.8:
            break
    merit, status, (y, mu, X, S) = winner
    return finish(y, mu, S, X, status, total_it)


def _solve_no_blocks(problem, A, b, c, finish):
    rows = A.shape[0]
    N = problem.n_vars
    if rows == 0:
        if np.abs(c).max(initial=0.0) == 0.0:
            return finish(np.zeros(N), np.zeros(0), [], [], OPTIMAL, 0)
        return finish(np.zeros(N), np.zeros(0), [], [], DUAL_INFEASIBLE, 0)
    y, *_ = np.linalg.lstsq(A, b, rcond=None)
    # optimality requires c in range(A^T)
    mu, *_ = np.linalg.lstsq(A.T, c, rcond=None)
    if np.abs(A.T @ mu - c).max(initial=0.0) <= 1e-8 * (1 + np.abs(c).max(initial=0.0)):
        return finish(y, mu, [], [], OPTIMAL, 0)
    return finish(y, mu, [], [], DUAL_INFEASIBLE, 0)


def _residual_triplet(problem, y, mu, S, X, pobj, dobj):
    A, b, c = problem.A, problem.b, problem.c
    rows = A.shape[0]
    primal = (np.abs(A @ y - b).max(initial=0.0) / (1.0 + np.abs(b).max(initial=0.0))
              if rows else 0.0)
    r_d = c - (A.T @ mu if rows else 0.0)
    lmi = 0.0
    for blk, Sj, Xj in zip(problem.blocks, S, X):
        np.subtract.at(r_d, blk.var_idx, blk.adjoint(Sj))
        lmi = max(lmi, np.abs(blk.evaluate(y) - Xj).max(initial=0.0)
                  / (1.0 + np.abs(blk.F0).max(initial=0.0)))
    dual = max(np.abs(r_d).max(initial=0.0) / (1.0 + np.abs(c).max(initial=0.0)), lmi)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj))
    return (float(primal), float(dual), float(gap))


def residuals(problem: SdpProblem, sol: SdpSolution) -> tuple:
    """KKT residual triplet (primal, dual, gap) for a candidate solution."""
    return _residual_triplet(problem, sol.y, sol.mu, sol.S, sol.X,
                             float(problem.c @ sol.y), sol.dual_obj)


# -- SDPA sparse export -----------------------------------------------------


def export_sdpa(problem: SdpProblem) -> str:
    """Serialize in SDPA sparse format for cross-checking with external solvers.

    SDPA's primal reads  min c^T x  s.t.  sum_i x_i F_i - F0 >= 0; our LMI
    blocks map via F0_sdpa = -F0.  Each equality row a^T y = b becomes a
    diagonal pair (a^T y - b >= 0, b - a^T y >= 0) in one diagonal block.
    """
    N = problem.n_vars
    rows = problem.A.shape[0]
    nblocks = len(problem.blocks) + (1 if rows else 0)
    sizes = [blk.side for blk in problem.blocks]
    if rows:
        sizes.append(-2 * rows)  # negative size marks a diagonal block
    lines = []
    lines.append(f"{N} = mDIM")
    lines.append(f"{nblocks} = nBLOCK")
    lines.append("(" + ", ".join(str(s) for s in sizes) + ") = bLOCKsTRUCT")
    lines.append("{" + ", ".join(repr(float(v)) for v in problem.c) + "}")

    def emit(mat_no, blk_no, i, j, val):
        if val != 0.0:
            lines.append(f"{mat_no} {blk_no} {i + 1} {j + 1} {val!r}")

    for bi, blk in enumerate(problem.blocks, start=1):
        m = blk.side
        for i in range(m):
            for j in range(i, m):
                emit(0, bi, i, j, float(-blk.F0[i, j]))
        for vi, idx in enumerate(blk.var_idx):
            M = blk.mats[vi]
            for i in range(m):
                for j in range(i, m):
                    emit(int(idx) + 1, bi, i, j, float(M[i, j]))
    if rows:
        bi = nblocks
        for r in range(rows):
            emit(0, bi, 2 * r, 2 * r, float(problem.b[r]))
            emit(0, bi, 2 * r + 1, 2 * r + 1, float(-problem.b[r]))
            for i in range(N):
                v = float(problem.A[r, i])
                emit(i + 1, bi, 2 * r, 2 * r, v)
                emit(i + 1, bi, 2 * r + 1, 2 * r + 1, -v)
    return "\n".join(lines) + "\n"
