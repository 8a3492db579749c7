"""Dense convex quadratic programming via operator splitting (ADMM).

Problems have the standard two-sided form

    minimize    0.5 x' P x + q' x
    subject to  l <= A x <= u

with P symmetric positive semidefinite. Rows with l == u act as equality
constraints. The solver follows the OSQP recipe: Ruiz equilibration,
rho-scaled constraints with a heavier rho on equality rows, over-relaxed
ADMM iterations, an active-set polish step, and detection of primal
infeasibility through a Farkas certificate v with A'v ~ 0 and
u'max(v,0) + l'min(v,0) < 0.

`QpSolver` caches the KKT factorization so that sequences of problems
sharing (P, A) but with varying (q, l, u) -- the receding-horizon case --
only pay for iterations. `solve_qp` is the one-shot convenience wrapper.

`solve_qp_reference` is an independent brute-force oracle (active-set
enumeration) for small strictly convex problems, used by the self-test
suite; it shares no code path with the ADMM loop.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.linalg as sparse_linalg

SOLVED = "solved"
PRIMAL_INFEASIBLE = "primal_infeasible"
MAX_ITERATIONS = "max_iterations"

# Problems at least this large use sparse internals for the KKT solve.
_SPARSE_CUTOFF = 300


class QpInputError(ValueError):
    """Malformed problem data: bad dimensions, NaN/Inf entries, l > u."""


@dataclass(frozen=True)
class SolverSettings:
    """ADMM solver settings; defaults match common operator-splitting solvers."""

    eps_abs: float = 1e-6
    eps_rel: float = 1e-6
    eps_prim_inf: float = 1e-8
    max_iterations: int = 20000
    rho: float = 0.1
    rho_eq_scale: float = 1e3
    sigma: float = 1e-6
    alpha: float = 1.6
    adaptive_rho: bool = True
    scaling_iters: int = 10
    polish: bool = True
    polish_delta: float = 1e-7
    polish_refine_iters: int = 3
    check_interval: int = 25

    def __post_init__(self):
        if self.eps_abs <= 0 or self.eps_rel <= 0 or self.eps_prim_inf <= 0:
            raise QpInputError("solver tolerances must be positive")
        if self.max_iterations < 1:
            raise QpInputError("max_iterations must be >= 1")
        if not 0 < self.alpha < 2:
            raise QpInputError(f"relaxation alpha must lie in (0, 2), got {self.alpha}")


def _as_matrix(name, value, dtype=float):
    arr = np.asarray(value, dtype=dtype)
    if arr.ndim != 2:
        raise QpInputError(f"{name} must be a 2-D array, got ndim={arr.ndim}")
    return np.ascontiguousarray(arr)


def _as_vector(name, value):
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1:
        raise QpInputError(f"{name} must be a 1-D array, got ndim={arr.ndim}")
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class QpProblem:
    """Problem data for ``min 0.5 x'Px + q'x  s.t.  l <= Ax <= u``.

    P must be symmetric PSD (up to symmetrization round-off); l and u may
    contain +-inf but never NaN; l <= u elementwise.
    """

    P: np.ndarray
    q: np.ndarray
    A: np.ndarray
    l: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        P = _as_matrix("P", self.P)
        q = _as_vector("q", self.q)
        A = _as_matrix("A", self.A)
        l = _as_vector("l", self.l)
        u = _as_vector("u", self.u)
        n = q.shape[0]
        m = A.shape[0]
        if P.shape != (n, n):
            raise QpInputError(f"P must be {n}x{n}, got {P.shape}")
        if A.shape[1] != n and m > 0:
            raise QpInputError(f"A must have {n} columns, got {A.shape}")
        if l.shape != (m,) or u.shape != (m,):
            raise QpInputError(f"l, u must have length {m}")
        if not np.isfinite(P).all():
            raise QpInputError("P contains NaN or Inf")
        if not np.isfinite(q).all():
            raise QpInputError("q contains NaN or Inf")
        if not np.isfinite(A).all():
            raise QpInputError("A contains NaN or Inf")
        if np.isnan(l).any() or np.isnan(u).any():
            raise QpInputError("l or u contains NaN")
        if np.any(l > u):
            raise QpInputError("found l > u; bounds must satisfy l <= u")
        scale = max(1.0, float(np.abs(P).max(initial=0.0)))
        if not np.allclose(P, P.T, atol=1e-9 * scale, rtol=0.0):
            raise QpInputError("P must be symmetric")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ (self.P @ x) + self.q @ x)

    def validate_psd(self, tol: float = 1e-9) -> None:
        """Full eigenvalue check; O(n^3), intended for tests and self-checks."""
        w = np.linalg.eigvalsh(0.5 * (self.P + self.P.T))
        if w.min(initial=0.0) < -tol * max(1.0, abs(w.max(initial=0.0))):
            raise QpInputError(f"P has negative eigenvalue {w.min():.3e}")


@dataclass(frozen=True)
class QpResult:
    """Solver outcome. For primal-infeasible problems, `certificate` holds the
    Farkas vector and (x, y) the last iterates; objective is +inf."""

    status: str
    x: np.ndarray
    y: np.ndarray
    objective: float
    iterations: int
    pri_res: float
    dua_res: float
    certificate: np.ndarray | None = None
    polished: bool = False

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


def _ruiz_equilibrate(P, A, q, iters):
    """Modified Ruiz equilibration of the KKT matrix [[P, A'], [A, 0]].

    Returns scaled (P, A), the diagonal scalings d (n,), e (m,) and the cost
    scaling c such that P_s = c * D P D, A_s = E A D. Accepts dense or
    scipy-sparse matrices and preserves the representation.
    """
    is_sparse = sparse.issparse(P) or sparse.issparse(A)
    n = P.shape[0]
    m = A.shape[0]
    d = np.ones(n)
    e = np.ones(m)
    c = 1.0
    if is_sparse:
        Ps = sparse.csr_matrix(P, copy=True)
        As = sparse.csr_matrix(A, copy=True) if m else sparse.csr_matrix((0, n))
    else:
        Ps = P.copy()
        As = A.copy()

    def _col_max(M, axis):
        if sparse.issparse(M):
            if M.nnz == 0:
                return np.zeros(M.shape[1 - axis])
            return np.asarray(abs(M).max(axis=axis).todense()).ravel()
        return np.abs(M).max(axis=axis) if M.size else np.zeros(M.shape[1 - axis])

    for _ in range(iters):
        col_p = _col_max(Ps, 0) if n else np.zeros(0)
        col_a = _col_max(As, 0) if m else np.zeros(n)
        norm_n = np.maximum(col_p, col_a)
        norm_m = _col_max(As, 1) if m else np.zeros(0)
        with np.errstate(divide="ignore"):
            dn = np.where(norm_n > 1e-12, 1.0 / np.sqrt(norm_n), 1.0)
            dm = np.where(norm_m > 1e-12, 1.0 / np.sqrt(norm_m), 1.0)
        if is_sparse:
            Dn = sparse.diags(dn)
            Ps = Dn @ Ps @ Dn
            if m:
                As = sparse.diags(dm) @ As @ Dn
        else:
            Ps *= dn[:, None]
            Ps *= dn[None, :]
            if m:
                As *= dm[:, None]
                As *= dn[None, :]
        d *= dn
        e *= dm
        # cost scaling: balance the quadratic and linear parts
        p_cols = _col_max(Ps, 0) if n else np.zeros(0)
        q_scaled = np.abs(c * d * q)
        denom = max(np.mean(p_cols) if n else 0.0, q_scaled.max(initial=0.0))
        gamma = 1.0 / denom if denom > 1e-12 else 1.0
        Ps = Ps * gamma
        c *= gamma
    if is_sparse:
        Ps = sparse.csr_matrix(Ps)
        As = sparse.csr_matrix(As)
    return Ps, As, d, e, c


class _DenseKkt:
    def __init__(self, M):
        self._cho = scipy.linalg.cho_factor(M, check_finite=False)

    def solve(self, rhs):
        return scipy.linalg.cho_solve(self._cho, rhs, check_finite=False)


class _SparseKkt:
    def __init__(self, M):
        self._lu = sparse_linalg.splu(sparse.csc_matrix(M))

    def solve(self, rhs):
        return self._lu.solve(rhs)


class QpSolver:
    """Reusable ADMM solver for a fixed (P, A) structure.

    The Ruiz scaling and the KKT factorization are computed once; repeated
    `solve(q, l, u)` calls with the same equality-row pattern reuse them.
    Instances hold no solution state, so they can be shared across runs
    without affecting reproducibility; warm starts are passed per call.
    """

    def __init__(self, P, A, settings: SolverSettings | None = None, q_hint=None):
        self.settings = settings if settings is not None else SolverSettings()
        self._sparse_input = sparse.issparse(P) or sparse.issparse(A)
        if not self._sparse_input:
            P = _as_matrix("P", P)
            A = _as_matrix("A", A)
        self.n = P.shape[0]
        self.m = A.shape[0]
        self._sparse = self._sparse_input or (self.n + self.m) >= _SPARSE_CUTOFF
        if self._sparse:
            self.P_orig = sparse.csr_matrix(P)
            self.A_orig = sparse.csr_matrix(A) if self.m else sparse.csr_matrix((0, self.n))
        else:
            self.P_orig = P
            self.A_orig = A
        q_hint = np.zeros(self.n) if q_hint is None else _as_vector("q", q_hint)
        self.Ps, self.As, self.d, self.e, self.c = _ruiz_equilibrate(
            self.P_orig, self.A_orig, q_hint, self.settings.scaling_iters
        )
        if self._sparse:
            self._As_op = sparse.csr_matrix(self.As)
            self._AsT_op = sparse.csr_matrix(self.As.T)
            self._Ps_sp = sparse.csc_matrix(self.Ps)
            self._AT_orig = sparse.csr_matrix(self.A_orig.T)
        else:
            self._As_op = self.As
            self._AsT_op = self.As.T
            self._AT_orig = self.A_orig.T
        self._eq_mask = None
        self._rho_vec = None
        self._kkt_cache: dict = {}
        self._kkt = None
        self._rho_bar = None

    # -- internal setup -------------------------------------------------

    def _set_rho(self, rho_bar, eq_mask):
        key = (float(rho_bar), eq_mask.tobytes())
        self._rho_bar = float(rho_bar)
        self._rho_vec = np.where(eq_mask, rho_bar * self.settings.rho_eq_scale, rho_bar)
        cached = self._kkt_cache.get(key)
        if cached is None:
            sigma = self.settings.sigma
            if self._sparse:
                R = sparse.diags(self._rho_vec)
                M = (
                    self._Ps_sp
                    + sigma * sparse.eye(self.n)
                    + self._AsT_op @ R @ self._As_op
                )
                cached = _SparseKkt(M)
            else:
                M = self.Ps + sigma * np.eye(self.n)
                if self.m:
                    M = M + (self.As.T * self._rho_vec) @ self.As
                cached = _DenseKkt(M)
            self._kkt_cache[key] = cached
        self._kkt = cached

    # -- main solve ------------------------------------------------------

    def solve(self, q, l, u, warm_start=None) -> QpResult:
        st = self.settings
        n, m = self.n, self.m
        q = _as_vector("q", q)
        l = _as_vector("l", l)
        u = _as_vector("u", u)
        if q.shape != (n,) or l.shape != (m,) or u.shape != (m,):
            raise QpInputError("q/l/u shape mismatch with solver structure")

        qs = self.c * (self.d * q)
        ls = self.e * l
        us = self.e * u
        eq_mask = np.isfinite(l) & np.isfinite(u) & (l == u)
        if self._rho_vec is None or not np.array_equal(eq_mask, self._eq_mask):
            self._eq_mask = eq_mask
            self._set_rho(st.rho, eq_mask)

        if warm_start is not None:
            x = np.asarray(warm_start[0], dtype=float) / self.d
            y = self.c * (np.asarray(warm_start[1], dtype=float) / self.e) if m else np.zeros(0)
            z = np.clip(self._As_op @ x, ls, us) if m else np.zeros(0)
        else:
            x = np.zeros(n)
            y = np.zeros(m)
            z = np.zeros(m)
            np.clip(z, ls, us, out=z)

        rho = self._rho_vec
        sigma = st.sigma
        alpha = st.alpha
        y_check = y.copy()
        status = MAX_ITERATIONS
        certificate = None
        pri_res = np.inf
        dua_res = np.inf
        iters = 0
        rho_updates = 0

        for iteration in range(1, st.max_iterations + 1):
            rhs = sigma * x - qs
            if m:
                rhs = rhs + self._AsT_op @ (rho * z - y)
            x_tilde = self._kkt.solve(rhs)
            x = alpha * x_tilde + (1.0 - alpha) * x
            if m:
                z_tilde = self._As_op @ x_tilde
                z_rel = alpha * z_tilde + (1.0 - alpha) * z
                z_new = np.clip(z_rel + y / rho, ls, us)
                y = y + rho * (z_rel - z_new)
                z = z_new
            iters = iteration

            if iteration % st.check_interval != 0 and iteration != st.max_iterations:
                continue

            # unscaled residuals
            x_u = self.d * x
            y_u = (self.e / self.c) * y if m else y
            ax_u = self.A_orig @ x_u if m else np.zeros(0)
            z_u = (z / self.e) if m else z
            if m:
                pri_vec = ax_u - z_u
                pri_res = float(np.abs(pri_vec).max(initial=0.0))
                eps_pri = st.eps_abs + st.eps_rel * max(
                    np.abs(ax_u).max(initial=0.0), np.abs(z_u).max(initial=0.0)
                )
            else:
                pri_res = 0.0
                eps_pri = st.eps_abs
            px_u = self.P_orig @ x_u
            aty_u = self._AT_orig @ y_u if m else np.zeros(0)
            dua_vec = px_u + q
            if m:
                dua_vec = dua_vec + aty_u
            dua_res = float(np.abs(dua_vec).max(initial=0.0))
            eps_dua = st.eps_abs + st.eps_rel * max(
                np.abs(px_u).max(initial=0.0),
                np.abs(aty_u).max(initial=0.0) if m else 0.0,
                np.abs(q).max(initial=0.0),
            )
            if pri_res <= eps_pri and dua_res <= eps_dua:
                status = SOLVED
                break

            if m:
                delta_y = (self.e / self.c) * (y - y_check)
                cert = _primal_infeasibility_certificate(
                    self.A_orig, l, u, delta_y, st.eps_prim_inf
                )
                if cert is not None:
                    status = PRIMAL_INFEASIBLE
                    certificate = cert
                    break
                y_check = y.copy()

            if st.adaptive_rho and m and iteration in (50, 200, 800, 3200, 12800):
                rel_pri = max(np.abs(ax_u).max(initial=0.0), np.abs(z_u).max(initial=0.0), 1e-12)
                rel_dua = max(
                    np.abs(px_u).max(initial=0.0),
                    np.abs(aty_u).max(initial=0.0),
                    np.abs(q).max(initial=0.0),
                    1e-12,
                )
                ratio = (pri_res / rel_pri) / max(dua_res / rel_dua, 1e-16)
                new_bar = float(np.clip(self._rho_bar * np.sqrt(ratio), 1e-6, 1e6))
                # quantize to half-decades so factorization reuse stays high
                new_bar = 10.0 ** (0.5 * round(2.0 * np.log10(new_bar)))
                if new_bar != self._rho_bar and rho_updates < 4:
                    rho_updates += 1
                    self._set_rho(new_bar, eq_mask)
                    rho = self._rho_vec

        x_u = self.d * x
        y_u = (self.e / self.c) * y if m else np.zeros(0)

        polished = False
        if status == SOLVED and st.polish:
            pol = self._polish(q, l, u, x_u, y_u, z_u if m else np.zeros(0))
            if pol is not None:
                x_p, y_p, pri_p, dua_p = pol
                if max(pri_p, dua_p) <= max(pri_res, dua_res, st.eps_abs):
                    x_u, y_u = x_p, y_p
                    pri_res, dua_res = pri_p, dua_p
                    polished = True

        obj = float(0.5 * x_u @ (self.P_orig @ x_u) + q @ x_u)
        if status == PRIMAL_INFEASIBLE:
            obj = np.inf
        return QpResult(
            status=status,
            x=x_u,
            y=y_u,
            objective=obj,
            iterations=iters,
            pri_res=pri_res,
            dua_res=dua_res,
            certificate=certificate,
            polished=polished,
        )

    # -- polish ------------------------------------------------------------

    def _polish(self, q, l, u, x, y, z):
        """Equality-constrained re-solve on the guessed active set."""
        st = self.settings
        n, m = self.n, self.m
        if m == 0:
            low = np.zeros(0, dtype=bool)
            upp = np.zeros(0, dtype=bool)
        else:
            eq = self._eq_mask
            low = ((z - l) < -y) & ~eq
            upp = ((u - z) < y) & ~eq
            low |= eq
        idx_low = np.flatnonzero(low)
        idx_upp = np.flatnonzero(upp)
        n_act = idx_low.size + idx_upp.size
        if self._sparse:
            A_act = sparse.vstack([self.A_orig[idx_low], self.A_orig[idx_upp]],
                                  format="csr") if n_act else sparse.csr_matrix((0, n))
        else:
            A_act = (np.vstack([self.A_orig[idx_low], self.A_orig[idx_upp]])
                     if n_act else np.zeros((0, n)))
        b_act = np.concatenate([l[idx_low], u[idx_upp]])
        delta = st.polish_delta
        size = n + n_act
        try:
            if self._sparse:
                P_blk = sparse.csc_matrix(self.P_orig) + delta * sparse.eye(n)
                if n_act:
                    K = sparse.bmat(
                        [[P_blk, sparse.csc_matrix(A_act.T)],
                         [sparse.csc_matrix(A_act), -delta * sparse.eye(n_act)]],
                        format="csc",
                    )
                else:
                    K = sparse.csc_matrix(P_blk)
                lu = sparse_linalg.splu(K)
                solve = lu.solve
            else:
                K = np.zeros((size, size))
                K[:n, :n] = self.P_orig + delta * np.eye(n)
                if n_act:
                    K[:n, n:] = A_act.T
                    K[n:, :n] = A_act
                    K[n:, n:] = -delta * np.eye(n_act)
                lu_f = scipy.linalg.lu_factor(K, check_finite=False)
                solve = lambda r: scipy.linalg.lu_solve(lu_f, r, check_finite=False)
        except (np.linalg.LinAlgError, RuntimeError, ValueError):
            return None
        rhs = np.concatenate([-q, b_act])
        sol = solve(rhs)
        if not np.isfinite(sol).all():
            return None
        # iterative refinement against the unregularized KKT system
        for _ in range(st.polish_refine_iters):
            r_top = rhs[:n] - (self.P_orig @ sol[:n] + (A_act.T @ sol[n:] if n_act else 0.0))
            r_bot = rhs[n:] - (A_act @ sol[:n] if n_act else np.zeros(0))
            sol = sol + solve(np.concatenate([r_top, r_bot]))
        x_p = sol[:n]
        y_p = np.zeros(m)
        y_p[idx_low] = sol[n : n + idx_low.size]
        y_p[idx_upp] = sol[n + idx_low.size :]
        ax = self.A_orig @ x_p if m else np.zeros(0)
        pri_p = float(
            np.maximum(np.maximum(l - ax, ax - u), 0.0).max(initial=0.0)
        )
        dua_vec = self.P_orig @ x_p + q
        if m:
            dua_vec = dua_vec + self.A_orig.T @ y_p
        dua_p = float(np.abs(dua_vec).max(initial=0.0))
        if not (np.isfinite(pri_p) and np.isfinite(dua_p)):
            return None
        return x_p, y_p, pri_p, dua_p


def _primal_infeasibility_certificate(A, l, u, delta_y, eps):
    """Return the normalized Farkas certificate if delta_y proves infeasibility."""
    norm = np.abs(delta_y).max(initial=0.0)
    if norm <= eps:
        return None
    v = delta_y / norm
    vp = np.maximum(v, 0.0)
    vm = np.minimum(v, 0.0)
    inf_u = ~np.isfinite(u)
    inf_l = ~np.isfinite(l)
    if np.any(vp[inf_u] > eps) or np.any(-vm[inf_l] > eps):
        return None
    support = 0.0
    fin_u = ~inf_u
    fin_l = ~inf_l
    support += float(u[fin_u] @ vp[fin_u])
    support += float(l[fin_l] @ vm[fin_l])
    if support >= -eps:
        return None
    if np.abs(A.T @ v).max(initial=0.0) > eps:
        return None
    return v


def solve_qp(problem: QpProblem, settings: SolverSettings | None = None,
             warm_start=None) -> QpResult:
    """Solve a QpProblem. Deterministic: identical inputs and settings give
    bitwise-identical results on one platform."""
    if not isinstance(problem, QpProblem):
        problem = QpProblem(*problem)
    solver = QpSolver(problem.P, problem.A, settings, q_hint=problem.q)
    return solver.solve(problem.q, problem.l, problem.u, warm_start=warm_start)


def check_kkt(problem: QpProblem, x, y, tol: float) -> bool:
    """True iff (x, y) satisfies stationarity, primal feasibility and a
    complementarity proxy, each within tol."""
    x = _as_vector("x", x)
    y = _as_vector("y", y)
    if x.shape != (problem.n,) or y.shape != (problem.m,):
        raise QpInputError("x or y dimension mismatch")
    stat = problem.P @ x + problem.q
    if problem.m:
        stat = stat + problem.A.T @ y
    if np.abs(stat).max(initial=0.0) > tol:
        return False
    if problem.m == 0:
        return True
    ax = problem.A @ x
    if np.any(ax < problem.l - tol) or np.any(ax > problem.u + tol):
        return False
    yp = np.maximum(y, 0.0)
    yn = np.maximum(-y, 0.0)
    fin_u = np.isfinite(problem.u)
    fin_l = np.isfinite(problem.l)
    gap_u = np.maximum(np.where(fin_u, problem.u - ax, 0.0), 0.0)
    gap_l = np.maximum(np.where(fin_l, ax - problem.l, 0.0), 0.0)
    comp_u = np.where(fin_u, yp * gap_u, yp)
    comp_l = np.where(fin_l, yn * gap_l, yn)
    return float(np.maximum(comp_u, comp_l).max(initial=0.0)) <= tol


# ---------------------------------------------------------------------------
# Brute-force reference: active-set enumeration for small strictly convex QPs.
# ---------------------------------------------------------------------------

def solve_qp_reference(problem: QpProblem, feas_tol: float = 1e-8,
                       max_active: int | None = None) -> QpResult | None:
    """Globally solve a small strictly convex QP by enumerating active sets.

    One-sided candidate constraints are formed from the finite bounds; each
    subset (sizes 0..n, lexicographic) is solved as an equality-constrained
    KKT system and accepted at the first candidate that is primal feasible
    with nonnegative multipliers. Returns None if no candidate passes, which
    for a feasible strictly convex problem only happens under degeneracy.
    """
    P, q, A, l, u = problem.P, problem.q, problem.A, problem.l, problem.u
    n, m = problem.n, problem.m
    eq_rows = [i for i in range(m) if np.isfinite(l[i]) and l[i] == u[i]]
    cands = []  # (row, +1 upper / -1 lower)
    for i in range(m):
        if i in eq_rows:
            continue
        if np.isfinite(u[i]):
            cands.append((i, +1))
        if np.isfinite(l[i]):
            cands.append((i, -1))
    limit = n - len(eq_rows) if max_active is None else max_active
    limit = max(0, min(limit, len(cands)))

    A_eq = A[eq_rows] if eq_rows else np.zeros((0, n))
    b_eq = l[eq_rows] if eq_rows else np.zeros(0)

    for size in range(limit + 1):
        for combo in itertools.combinations(range(len(cands)), size):
            rows = [cands[j] for j in combo]
            G = np.vstack([A_eq] + [s * A[i] for i, s in rows]) if (eq_rows or rows) else np.zeros((0, n))
            b = np.concatenate([b_eq, [u[i] if s > 0 else -l[i] for i, s in rows]])
            k = G.shape[0]
            kkt = np.zeros((n + k, n + k))
            kkt[:n, :n] = P
            if k:
                kkt[:n, n:] = G.T
                kkt[n:, :n] = G
            rhs = np.concatenate([-q, b])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                continue
            x = sol[:n]
            mult = sol[n + len(eq_rows):]
            if mult.size and mult.min(initial=0.0) < -feas_tol:
                continue
            ax = A @ x if m else np.zeros(0)
            if np.any(ax < l - feas_tol) or np.any(ax > u + feas_tol):
                continue
            y = np.zeros(m)
            for (i, s), lam in zip(rows, mult):
                y[i] += s * lam
            for i, lam in zip(eq_rows, sol[n : n + len(eq_rows)]):
                y[i] = lam
            return QpResult(
                status=SOLVED,
                x=x,
                y=y,
                objective=problem.objective(x),
                iterations=0,
                pri_res=0.0,
                dua_res=0.0,
            )
    return None
