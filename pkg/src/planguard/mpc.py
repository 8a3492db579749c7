"""Multi-contingency MPC: one nominal trajectory plus a tree of recovery
branches that agree on a shared input prefix.

The optimization, for a recovery subset Y, consensus horizon K and planning
horizon T, minimizes the nominal tracking objective subject to

  * dynamics equalities for the nominal trajectory and every branch,
  * state/input polytope constraints,
  * initial-state pinning,
  * terminal membership x_{T+1} in the recovery region of each branch,
  * first-input consensus (every branch's first input equals the nominal's),
  * K-step input consensus across branches.

Consensus is encoded by *sharing decision variables*: branch inputs at
offsets 0..K are one set of variables (offset 0 is the nominal first input),
so prefix equality is structural and exact rather than numerical. Horizons
shrink during the awaiting/decision phases; at T = 0 the same encoding
degenerates to the one-step invariance-holding feasibility QP.

`ContingencyPlanner` adds the operational layer: per-structure factorization
caching, warm starts, Farkas-certificate reuse for fast infeasibility
re-checks, an analytic reachability pre-filter, and the recovery-subset
enumeration rule (largest cardinality tier first, least cost, lexicographic
ties, one-step-shifted previous plan as the final fallback).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sparse

from planguard.dynamics import (
    DimensionError,
    LinearDynamics,
    Polytope,
    RecoveryRegion,
    step,
)
from planguard.qp import (
    PRIMAL_INFEASIBLE,
    SOLVED,
    QpProblem,
    QpSolver,
    SolverSettings,
    solve_qp,
)


class ConfigurationError(ValueError):
    """The planner cannot proceed: bad arguments or no feasible recovery."""


# Planner-facing solver settings: a laxer certificate tolerance makes
# infeasible-combination probes terminate quickly; a misclassified marginal
# candidate only changes which subset wins, never the safety argument.
PLANNER_SETTINGS = SolverSettings(eps_prim_inf=1e-6, max_iterations=20000)


def _psd_matrix(name, value, dim):
    arr = np.asarray(value, dtype=float)
    if arr.shape == ():
        arr = arr * np.eye(dim)
    if arr.shape != (dim, dim):
        raise ConfigurationError(f"{name} must be {dim}x{dim}, got {arr.shape}")
    if not np.allclose(arr, arr.T, atol=1e-12):
        raise ConfigurationError(f"{name} must be symmetric")
    return 0.5 * (arr + arr.T)


@dataclass(frozen=True)
class MpcConfig:
    """Static data of the contingency MPC."""

    dyn: LinearDynamics
    state_set: Polytope
    input_set: Polytope
    recovery: tuple[RecoveryRegion, ...]
    horizon: int
    consensus: int
    Q: np.ndarray
    R: np.ndarray
    goal: np.ndarray
    min_combo: int = 2
    slack_weight: float = 1e4
    branch_reg: float = 1e-8

    def __post_init__(self):
        n, m = self.dyn.n, self.dyn.m
        if self.state_set.dim != n or self.input_set.dim != m:
            raise ConfigurationError("constraint sets do not match the dynamics")
        recovery = tuple(self.recovery)
        ids = [r.id for r in recovery]
        if len(recovery) < 1:
            raise ConfigurationError("at least one recovery region is required")
        if sorted(ids) != list(range(1, len(recovery) + 1)):
            raise ConfigurationError(f"recovery ids must be 1..d without gaps, got {ids}")
        for r in recovery:
            if r.set.dim != n:
                raise ConfigurationError(f"recovery region {r.id} has wrong dimension")
        if not 0 <= self.consensus < self.horizon:
            raise ConfigurationError(
                f"need 0 <= K < T, got K={self.consensus}, T={self.horizon}")
        if self.min_combo < 1:
            raise ConfigurationError("min_combo must be >= 1")
        goal = np.asarray(self.goal, dtype=float)
        if goal.shape != (n,):
            raise ConfigurationError(f"goal must have shape ({n},)")
        object.__setattr__(self, "recovery", recovery)
        object.__setattr__(self, "Q", _psd_matrix("Q", self.Q, n))
        object.__setattr__(self, "R", _psd_matrix("R", self.R, m))
        object.__setattr__(self, "goal", goal)

    @property
    def d(self) -> int:
        return len(self.recovery)

    def region(self, rid: int) -> Polytope:
        return self.recovery[rid - 1].set

    def stage_cost(self, x, u) -> float:
        dx = x - self.goal
        return float(dx @ self.Q @ dx + u @ self.R @ u)

    def fingerprint(self) -> bytes:
        parts = [self.dyn.A.tobytes(), self.dyn.B.tobytes(),
                 np.float64(self.dyn.dt).tobytes(),
                 self.state_set.H.tobytes(), self.state_set.h.tobytes(),
                 self.input_set.H.tobytes(), self.input_set.h.tobytes(),
                 self.Q.tobytes(), self.R.tobytes(), self.goal.tobytes(),
                 np.float64([self.horizon, self.consensus, self.min_combo,
                             self.slack_weight, self.branch_reg]).tobytes()]
        for r in self.recovery:
            parts.append(r.set.H.tobytes())
            parts.append(r.set.h.tobytes())
        return b"|".join(parts)


@dataclass(frozen=True)
class PlanTree:
    """Solution of the contingency MPC: nominal trajectory plus branches.

    Branch input rows 0..consensus_len are copies of one shared variable
    block, so prefix agreement across branches (and first-input agreement
    with the nominal) is exact. `cost` is the nominal tracking objective
    evaluated on the returned trajectory (the QP objective completed with
    the constant goal term).
    """

    recovery_ids: tuple[int, ...]
    nominal_states: np.ndarray   # (T+2, n)
    nominal_inputs: np.ndarray   # (T+1, m)
    branch_states: dict[int, np.ndarray]
    branch_inputs: dict[int, np.ndarray]
    consensus_len: int
    horizon: int
    cost: float
    qp_objective: float = 0.0

    @property
    def first_input(self) -> np.ndarray:
        return self.nominal_inputs[0]

    def branch_first_input(self, rid: int) -> np.ndarray:
        return self.branch_inputs[rid][0]


@dataclass(frozen=True)
class SlackReport:
    total: float
    nominal: float
    shared: float
    per_branch: dict[int, float]


class _Encoding:
    """Variable and constraint layout for one (Y, K, T) structure."""

    def __init__(self, cfg: MpcConfig, Y: tuple[int, ...], K: int, T: int,
                 relaxed: bool):
        n, m = cfg.dyn.n, cfg.dyn.m
        B = len(Y)
        self.cfg = cfg
        self.Y = Y
        self.K = K
        self.T = T
        self.relaxed = relaxed
        self.n, self.m = n, m

        nx0 = (T + 2) * n
        nu0 = (T + 1) * m
        self.ix0 = 0
        self.iu0 = nx0
        self.isu = nx0 + nu0               # shared inputs, offsets 1..K
        self.isx = self.isu + K * m        # shared states, offsets 2..K+1
        suffix = (T - K) * (m + n)
        self.ibr = self.isx + K * n
        self.nv_core = nx0 + nu0 + (K * (m + n) + B * suffix if B else 0)
        self.suffix = suffix

        def x0_slice(k):
            return self.ix0 + k * n

        def u0_slice(k):
            return self.iu0 + k * m

        def br_state(b, j):
            # start column of the branch-b state at offset j
            if j <= 1:
                return x0_slice(j)
            if j <= K + 1:
                return self.isx + (j - 2) * n
            return self.ibr + b * suffix + (T - K) * m + (j - K - 2) * n

        def br_input(b, j):
            if j == 0:
                return u0_slice(0)
            if j <= K:
                return self.isu + (j - 1) * m
            return self.ibr + b * suffix + (j - K - 1) * m

        self._x0 = x0_slice
        self._u0 = u0_slice
        self._brx = br_state
        self._bru = br_input

        rows: list[int] = []
        cols: list[int] = []
        vals: list[float] = []
        self._nrows = 0

        def add_block(r0, c0, M):
            rr, cc = np.nonzero(M)
            rows.extend((r0 + rr).tolist())
            cols.extend((c0 + cc).tolist())
            vals.extend(M[rr, cc].tolist())

        def new_rows(count):
            r0 = self._nrows
            self._nrows += count
            return r0

        l_parts: list[np.ndarray] = []
        u_parts: list[np.ndarray] = []
        A_dyn, B_dyn = cfg.dyn.A, cfg.dyn.B
        eye_n = np.eye(n)

        # --- equalities ---------------------------------------------------
        r = new_rows(n)                      # initial-state pinning
        add_block(r, x0_slice(0), eye_n)
        self.pin_rows = slice(r, r + n)
        l_parts.append(np.zeros(n))          # overwritten per solve
        u_parts.append(np.zeros(n))

        def add_dynamics(xs_next, xs_cur, us_cur):
            r0 = new_rows(n)
            add_block(r0, xs_next, eye_n)
            add_block(r0, xs_cur, -A_dyn)
            add_block(r0, us_cur, -B_dyn)
            l_parts.append(np.zeros(n))
            u_parts.append(np.zeros(n))

        for k in range(T + 1):               # nominal dynamics
            add_dynamics(x0_slice(k + 1), x0_slice(k), u0_slice(k))
        if B:
            for j in range(1, K + 1):        # shared branch chain
                add_dynamics(br_state(0, j + 1), br_state(0, j), br_input(0, j))
            for b in range(B):               # branch suffixes
                for j in range(K + 1, T + 1):
                    add_dynamics(br_state(b, j + 1), br_state(b, j), br_input(b, j))

        self.n_eq = self._nrows

        # --- inequalities ---------------------------------------------------
        X, U = cfg.state_set, cfg.input_set
        self.slack_groups: list[tuple[int, int, object]] = []  # (row0, count, owner)

        def add_poly(poly, col, owner=None):
            r0 = new_rows(poly.rows)
            add_block(r0, col, poly.H)
            l_parts.append(np.full(poly.rows, -np.inf))
            u_parts.append(poly.h.copy())
            if owner is not None:
                self.slack_groups.append((r0, poly.rows, owner))

        for k in range(1, T + 2):
            add_poly(X, x0_slice(k), owner="nominal")
        for k in range(T + 1):
            add_poly(U, u0_slice(k))
        if B:
            for j in range(1, K + 1):
                add_poly(U, br_input(0, j))
            for j in range(2, K + 2):
                add_poly(X, br_state(0, j), owner="shared")
            for b, rid in enumerate(Y):
                for j in range(K + 1, T + 1):
                    add_poly(U, br_input(b, j))
                for j in range(K + 2, T + 2):
                    add_poly(X, br_state(b, j), owner=rid)
                add_poly(cfg.region(rid), br_state(b, T + 1), owner=rid)

        # --- slack augmentation ------------------------------------------
        self.n_slack = 0
        if relaxed:
            slack_cols = []
            for r0, count, _ in self.slack_groups:
                for i in range(count):
                    col = self.nv_core + self.n_slack
                    rows.append(r0 + i)
                    cols.append(col)
                    vals.append(-1.0)
                    slack_cols.append(col)
                    self.n_slack += 1
            r0 = new_rows(self.n_slack)      # s >= 0
            for i, col in enumerate(slack_cols):
                rows.append(r0 + i)
                cols.append(col)
                vals.append(1.0)
            l_parts.append(np.zeros(self.n_slack))
            u_parts.append(np.full(self.n_slack, np.inf))

        self.nv = self.nv_core + self.n_slack
        self.A = sparse.csr_matrix(
            (vals, (rows, cols)), shape=(self._nrows, self.nv))
        self.l_template = np.concatenate(l_parts)
        self.u_template = np.concatenate(u_parts)

        # --- objective ------------------------------------------------------
        # 0.5 x'Px + q'x with P = 2Q / 2R blocks so the QP objective equals
        # the stage-cost sum minus the constant sum of goal'Q goal terms.
        P_rows, P_cols, P_vals = [], [], []

        def add_p_block(c0, M):
            rr, cc = np.nonzero(M)
            P_rows.extend((c0 + rr).tolist())
            P_cols.extend((c0 + cc).tolist())
            P_vals.extend(M[rr, cc].tolist())

        q = np.zeros(self.nv)
        Q2, R2 = 2.0 * cfg.Q, 2.0 * cfg.R
        qg = -2.0 * (cfg.Q @ cfg.goal)
        for k in range(1, T + 2):
            add_p_block(x0_slice(k), Q2)
            q[x0_slice(k): x0_slice(k) + n] = qg
        for k in range(T + 1):
            add_p_block(u0_slice(k), R2)
        if B:
            reg = 2.0 * cfg.branch_reg * np.eye(m)
            for j in range(1, K + 1):
                add_p_block(br_input(0, j), reg)
            for b in range(B):
                for j in range(K + 1, T + 1):
                    add_p_block(br_input(b, j), reg)
        if relaxed:
            for i in range(self.n_slack):
                col = self.nv_core + i
                P_rows.append(col)
                P_cols.append(col)
                P_vals.append(2e-8)
                q[col] = cfg.slack_weight
        self.P = sparse.csr_matrix(
            (P_vals, (P_rows, P_cols)), shape=(self.nv, self.nv))
        self.q = q
        self.cost_offset = (T + 1) * float(cfg.goal @ cfg.Q @ cfg.goal)

    # -- per-solve data -----------------------------------------------------

    def bounds(self, x_t: np.ndarray):
        l = self.l_template.copy()
        u = self.u_template.copy()
        l[self.pin_rows] = x_t
        u[self.pin_rows] = x_t
        return l, u

    def extract(self, x: np.ndarray, qp_objective: float) -> PlanTree:
        n, m, K, T = self.n, self.m, self.K, self.T
        nominal_states = x[self.ix0: self.ix0 + (T + 2) * n].reshape(T + 2, n).copy()
        nominal_inputs = x[self.iu0: self.iu0 + (T + 1) * m].reshape(T + 1, m).copy()
        branch_states: dict[int, np.ndarray] = {}
        branch_inputs: dict[int, np.ndarray] = {}
        if self.Y:
            shared_u = x[self.isu: self.isu + K * m].reshape(K, m)
            shared_x = x[self.isx: self.isx + K * n].reshape(K, n)
            for b, rid in enumerate(self.Y):
                base = self.ibr + b * self.suffix
                bu = x[base: base + (T - K) * m].reshape(T - K, m)
                bx = x[base + (T - K) * m: base + self.suffix].reshape(T - K, n)
                branch_inputs[rid] = np.vstack(
                    [nominal_inputs[0:1], shared_u, bu])
                branch_states[rid] = np.vstack(
                    [nominal_states[0:2], shared_x, bx])
        cost = self._nominal_cost(nominal_states, nominal_inputs)
        return PlanTree(
            recovery_ids=self.Y,
            nominal_states=nominal_states,
            nominal_inputs=nominal_inputs,
            branch_states=branch_states,
            branch_inputs=branch_inputs,
            consensus_len=K,
            horizon=T,
            cost=cost,
            qp_objective=qp_objective,
        )

    def _nominal_cost(self, xs, us) -> float:
        cfg = self.cfg
        dx = xs[1:] - cfg.goal
        return float(np.einsum("ki,ij,kj->", dx, cfg.Q, dx)
                     + np.einsum("ki,ij,kj->", us, cfg.R, us))

    def slack_report(self, x: np.ndarray) -> SlackReport:
        s = np.maximum(x[self.nv_core:], 0.0)
        nominal = shared = 0.0
        per_branch = {rid: 0.0 for rid in self.Y}
        pos = 0
        for _, count, owner in self.slack_groups:
            amount = float(s[pos: pos + count].sum())
            pos += count
            if owner == "nominal":
                nominal += amount
            elif owner == "shared":
                shared += amount
            else:
                per_branch[owner] += amount
        return SlackReport(total=float(s.sum()), nominal=nominal,
                           shared=shared, per_branch=per_branch)


def _validate_args(cfg: MpcConfig, Y, K_rem: int, T_rem: int):
    Y = tuple(sorted(set(int(i) for i in Y)))
    for i in Y:
        if not 1 <= i <= cfg.d:
            raise ConfigurationError(f"recovery index {i} outside 1..{cfg.d}")
    if not 0 <= K_rem <= T_rem:
        raise ConfigurationError(f"need 0 <= K_rem <= T_rem, got ({K_rem}, {T_rem})")
    if K_rem > cfg.consensus or T_rem > cfg.horizon:
        raise ConfigurationError("K_rem/T_rem exceed the configured horizons")
    return Y


def build_problem(cfg: MpcConfig, x_t, Y, K_rem: int, T_rem: int) -> QpProblem:
    """Compile the contingency MPC into an explicit dense QpProblem."""
    Y = _validate_args(cfg, Y, K_rem, T_rem)
    x_t = np.asarray(x_t, dtype=float)
    if x_t.shape != (cfg.dyn.n,):
        raise DimensionError(f"x_t must have shape ({cfg.dyn.n},)")
    enc = _Encoding(cfg, Y, K_rem, T_rem, relaxed=False)
    l, u = enc.bounds(x_t)
    return QpProblem(P=enc.P.toarray(), q=enc.q, A=enc.A.toarray(), l=l, u=u)


class _Structure:
    """Shared, immutable-by-convention solver state for one encoding."""

    def __init__(self, cfg, Y, K, T, relaxed, settings):
        self.enc = _Encoding(cfg, Y, K, T, relaxed)
        self.solver = QpSolver(self.enc.P, self.enc.A, settings,
                               q_hint=self.enc.q)


class StructureCache:
    """Pure cache of encodings and factorized solvers, shareable across runs.

    Entries depend only on configuration values, never on solve history, so
    sharing a cache cannot change any solver's output.
    """

    def __init__(self, settings: SolverSettings = PLANNER_SETTINGS,
                 max_entries: int = 512):
        self.settings = settings
        self.max_entries = max_entries
        self._entries: dict = {}

    def get(self, cfg: MpcConfig, Y, K, T, relaxed=False) -> _Structure:
        key = (cfg.fingerprint(), Y, K, T, relaxed)
        hit = self._entries.get(key)
        if hit is None:
            if len(self._entries) >= self.max_entries:
                self._entries.pop(next(iter(self._entries)))
            hit = _Structure(cfg, Y, K, T, relaxed, self.settings)
            self._entries[key] = hit
        return hit


@dataclass
class _Certificate:
    """Cached Farkas certificate; cheap to re-check as the state moves."""

    v_pin: np.ndarray
    support_static: float
    eps: float

    def rules_out(self, x_t: np.ndarray) -> bool:
        return self.support_static + float(self.v_pin @ x_t) < -self.eps


class ContingencyPlanner:
    """Stateful solving frontend for one configuration.

    Holds warm starts and cached infeasibility certificates; create one
    planner per closed-loop episode for bitwise-reproducible traces, and
    share a `StructureCache` across episodes for speed.
    """

    def __init__(self, cfg: MpcConfig, cache: StructureCache | None = None):
        self.cfg = cfg
        self.cache = cache if cache is not None else StructureCache()
        self._warm: dict = {}
        self._certs: dict = {}
        self._axis_model = _per_axis_model(cfg)

    # -- core solves --------------------------------------------------------

    def solve(self, x_t, Y, K_rem: int, T_rem: int) -> PlanTree | None:
        """Solve the hard-constrained problem; None when infeasible."""
        Y = _validate_args(self.cfg, Y, K_rem, T_rem)
        x_t = np.asarray(x_t, dtype=float)
        st = self.cache.get(self.cfg, Y, K_rem, T_rem)
        key = (Y, K_rem, T_rem)
        l, u = st.enc.bounds(x_t)
        res = st.solver.solve(st.enc.q, l, u, warm_start=self._warm.get(key))
        if res.status == SOLVED:
            self._warm[key] = (res.x, res.y)
            self._certs.pop(key, None)
            return st.enc.extract(res.x, res.objective + st.enc.cost_offset)
        if res.status == PRIMAL_INFEASIBLE and res.certificate is not None:
            self._certs[key] = _make_certificate(st.enc, res.certificate,
                                                 self.cache.settings.eps_prim_inf)
        self._warm.pop(key, None)
        return None

    def solve_relaxed(self, x_t, Y, K_rem: int, T_rem: int) -> tuple[PlanTree, SlackReport]:
        """L1-slack relaxation of state and terminal constraints; always
        returns a plan."""
        Y = _validate_args(self.cfg, Y, K_rem, T_rem)
        x_t = np.asarray(x_t, dtype=float)
        st = self.cache.get(self.cfg, Y, K_rem, T_rem, relaxed=True)
        key = (Y, K_rem, T_rem, "relaxed")
        l, u = st.enc.bounds(x_t)
        res = st.solver.solve(st.enc.q, l, u, warm_start=self._warm.get(key))
        if res.status == SOLVED:
            self._warm[key] = (res.x, res.y)
        plan = st.enc.extract(res.x, res.objective + st.enc.cost_offset)
        return plan, st.enc.slack_report(res.x)

    # -- recovery-subset selection -------------------------------------------

    def select(self, x_t, prev: PlanTree | None = None) -> tuple[tuple[int, ...], PlanTree]:
        """Choose the recovery subset per the enumeration rule.

        Tiers run from |Y| = d down to min_combo, then singletons; the first
        tier with a feasible candidate wins and its least-cost candidate is
        returned (lexicographic tie-break). With no feasible candidate at
        all, falls back to the one-step shift of `prev`.
        """
        cfg = self.cfg
        x_t = np.asarray(x_t, dtype=float)
        ids = range(1, cfg.d + 1)
        reachable = self._reachable_regions(x_t, cfg.horizon)
        sizes = list(range(cfg.d, cfg.min_combo - 1, -1))
        if cfg.min_combo > 1:
            sizes.append(1)
        for size in sizes:
            best = None
            for combo in itertools.combinations(ids, size):
                if reachable is not None and not all(reachable[i - 1] for i in combo):
                    continue
                cert = self._certs.get((combo, cfg.consensus, cfg.horizon))
                if cert is not None and cert.rules_out(x_t):
                    continue
                plan = self.solve(x_t, combo, cfg.consensus, cfg.horizon)
                if plan is not None and (best is None or plan.cost < best[1].cost):
                    best = (combo, plan)
            if best is not None:
                return best
        if prev is not None:
            shifted = self.shift_plan(prev)
            return shifted.recovery_ids, shifted
        raise ConfigurationError(
            "no recovery subset is feasible from the current state and no "
            "previous plan is available")

    def singleton_feasible(self, x_t, K_rem: int, T_rem: int) -> bool:
        """True iff some single recovery region admits a feasible plan."""
        for rid in range(1, self.cfg.d + 1):
            if self.solve(x_t, (rid,), K_rem, T_rem) is not None:
                return True
        return False

    # -- theorem-style plan shifting -----------------------------------------

    def shift_plan(self, prev: PlanTree) -> PlanTree:
        """One-step shift of a plan, extended into the recovery regions.

        Mirrors the recursive-feasibility construction: drop the executed
        step, append a one-step invariance-preserving input to every branch,
        and reuse the (lexicographically first) shifted branch as the new
        nominal so first-input consensus holds. With consensus_len = 0 the
        branches no longer agree at their new first input, so only the first
        branch is retained.
        """
        cfg = self.cfg
        if not prev.recovery_ids:
            raise ConfigurationError("cannot shift a plan with no branches")
        keep = prev.recovery_ids if prev.consensus_len >= 1 else prev.recovery_ids[:1]
        new_states: dict[int, np.ndarray] = {}
        new_inputs: dict[int, np.ndarray] = {}
        for rid in keep:
            xs = prev.branch_states[rid]
            us = prev.branch_inputs[rid]
            u_ext = self._invariance_input(xs[-1], cfg.region(rid))
            if u_ext is None:
                raise ConfigurationError(
                    f"recovery region {rid} admits no invariance-preserving "
                    "input; it is not control invariant")
            x_ext = step(cfg.dyn, xs[-1], u_ext)
            new_states[rid] = np.vstack([xs[1:], x_ext[None, :]])
            new_inputs[rid] = np.vstack([us[1:], u_ext[None, :]])
        lead = keep[0]
        nominal_states = new_states[lead].copy()
        nominal_inputs = new_inputs[lead].copy()
        cost = float(
            np.einsum("ki,ij,kj->", nominal_states[1:] - cfg.goal, cfg.Q,
                      nominal_states[1:] - cfg.goal)
            + np.einsum("ki,ij,kj->", nominal_inputs, cfg.R, nominal_inputs))
        return PlanTree(
            recovery_ids=keep,
            nominal_states=nominal_states,
            nominal_inputs=nominal_inputs,
            branch_states=new_states,
            branch_inputs=new_inputs,
            consensus_len=max(prev.consensus_len - 1, 0),
            horizon=prev.horizon,
            cost=cost,
            qp_objective=cost,
        )

    def _invariance_input(self, x, region: Polytope):
        """min ||u||^2 s.t. u in U and A x + B u stays in the region and X."""
        cfg = self.cfg
        m = cfg.dyn.m
        H_next = np.vstack([region.H, cfg.state_set.H])
        h_next = np.concatenate([region.h, cfg.state_set.h])
        A_rows = np.vstack([cfg.input_set.H, H_next @ cfg.dyn.B])
        u_hi = np.concatenate([cfg.input_set.h, h_next - H_next @ (cfg.dyn.A @ x)])
        prob = QpProblem(P=np.eye(m), q=np.zeros(m), A=A_rows,
                         l=np.full(A_rows.shape[0], -np.inf), u=u_hi)
        res = solve_qp(prob, self.cache.settings)
        return res.x if res.status == SOLVED else None

    # -- reachability pre-filter ----------------------------------------------

    def _reachable_regions(self, x_t, T_rem: int):
        """Necessary per-region reachability from x_t within T_rem steps.

        Only available for per-axis double-integrator models with box
        bounds; returns None (no filtering) otherwise. A False entry is a
        proof of infeasibility; True entries still require a solve.
        """
        model = self._axis_model
        if model is None:
            return None
        horizon_s = (T_rem + 1) * self.cfg.dyn.dt
        out = []
        for r in self.cfg.recovery:
            boxes = model["region_boxes"].get(r.id)
            if boxes is None:
                out.append(True)
                continue
            t_needed = 0.0
            for axis, (lo, hi) in enumerate(boxes):
                p0 = x_t[2 * axis]
                v0 = abs(x_t[2 * axis + 1])
                dist = max(lo - p0, p0 - hi, 0.0)
                t_needed = max(t_needed, _min_time_lower_bound(
                    dist, v0, model["u_max"][axis], model["v_max"][axis]))
                if t_needed > horizon_s + 1e-9:
                    break
            out.append(t_needed <= horizon_s + 1e-9)
        return out


def _min_time_lower_bound(dist, v0, u_max, v_max):
    """Optimistic (lower-bound) time for a double integrator to cover dist,
    crediting the current speed regardless of its direction and ignoring the
    terminal-velocity requirement. Safe for pruning only."""
    if dist <= 0.0:
        return 0.0
    if not np.isfinite(u_max) or u_max <= 0.0:
        return 0.0
    v0 = min(v0, v_max)
    t_acc = (v_max - v0) / u_max if np.isfinite(v_max) else np.inf
    d_acc = v0 * t_acc + 0.5 * u_max * t_acc * t_acc if np.isfinite(t_acc) else np.inf
    if dist <= d_acc or not np.isfinite(v_max):
        return (-v0 + math.sqrt(v0 * v0 + 2.0 * u_max * dist)) / u_max
    return t_acc + (dist - d_acc) / v_max


def _axis_box_bounds(poly: Polytope, dim: int):
    """Per-coordinate (lower, upper) bounds implied by the axis-aligned rows
    of a polytope; non-axis rows are ignored (bounds stay infinite)."""
    lo = np.full(dim, -np.inf)
    hi = np.full(dim, np.inf)
    for row, b in zip(poly.H, poly.h):
        nz = np.flatnonzero(row)
        if nz.size != 1:
            continue
        j = nz[0]
        c = row[j]
        if c > 0:
            hi[j] = min(hi[j], b / c)
        else:
            lo[j] = max(lo[j], b / c)
    return lo, hi


def _per_axis_model(cfg: MpcConfig):
    """Detect the per-axis double-integrator structure used by the filter."""
    n, m = cfg.dyn.n, cfg.dyn.m
    if n != 2 * m:
        return None
    from planguard.dynamics import double_integrator

    ref = double_integrator(cfg.dyn.dt, axes=m)
    if not (np.allclose(cfg.dyn.A, ref.A) and np.allclose(cfg.dyn.B, ref.B)):
        return None
    u_lo, u_hi = _axis_box_bounds(cfg.input_set, m)
    x_lo, x_hi = _axis_box_bounds(cfg.state_set, n)
    u_max = np.maximum(np.abs(u_lo), np.abs(u_hi))
    v_max = np.array([max(abs(x_lo[2 * a + 1]), abs(x_hi[2 * a + 1]))
                      for a in range(m)])
    region_boxes = {}
    for r in cfg.recovery:
        lo, hi = _axis_box_bounds(r.set, n)
        boxes = []
        ok = True
        for a in range(m):
            plo, phi = lo[2 * a], hi[2 * a]
            if not (np.isfinite(plo) and np.isfinite(phi)):
                ok = False
                break
            boxes.append((plo, phi))
        if ok:
            region_boxes[r.id] = boxes
    return {"u_max": u_max, "v_max": v_max, "region_boxes": region_boxes}


def _make_certificate(enc: _Encoding, v: np.ndarray, eps: float) -> _Certificate:
    """Split a Farkas certificate into its static support and the part that
    multiplies the state pinning rows, for O(n) re-checks at new states."""
    vp = np.maximum(v, 0.0)
    vm = np.minimum(v, 0.0)
    fin_u = np.isfinite(enc.u_template)
    fin_l = np.isfinite(enc.l_template)
    pin = np.zeros(v.shape[0], dtype=bool)
    pin[enc.pin_rows] = True
    support = float(enc.u_template[fin_u & ~pin] @ vp[(fin_u & ~pin)])
    support += float(enc.l_template[fin_l & ~pin] @ vm[(fin_l & ~pin)])
    return _Certificate(v_pin=v[enc.pin_rows].copy(), support_static=support,
                        eps=eps)


# -- convenience one-shot wrappers (module-level operations) -----------------

def solve_contingency(cfg: MpcConfig, x_t, Y, K_rem: int, T_rem: int,
                      planner: ContingencyPlanner | None = None) -> PlanTree | None:
    planner = planner if planner is not None else ContingencyPlanner(cfg)
    return planner.solve(x_t, Y, K_rem, T_rem)


def solve_relaxed(cfg: MpcConfig, x_t, Y, K_rem: int, T_rem: int,
                  planner: ContingencyPlanner | None = None):
    planner = planner if planner is not None else ContingencyPlanner(cfg)
    return planner.solve_relaxed(x_t, Y, K_rem, T_rem)


def select_recovery_sets(cfg: MpcConfig, x_t, prev: PlanTree | None = None,
                         planner: ContingencyPlanner | None = None):
    planner = planner if planner is not None else ContingencyPlanner(cfg)
    return planner.select(x_t, prev)
