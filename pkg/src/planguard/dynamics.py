"""Discrete-time linear dynamics, polytopic sets, and invariance checking.

States evolve as x' = A x + B u. Constraint sets are halfspace polytopes
{x : H x <= h}; recovery regions are labelled polytopes that must be
control invariant for the safety guarantees downstream to hold, which
`check_invariance_sampled` probes with per-sample feasibility QPs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from planguard.qp import SOLVED, QpProblem, QpSolver, SolverSettings, solve_qp


class DimensionError(ValueError):
    """Operands with incompatible shapes."""


@dataclass(frozen=True)
class LinearDynamics:
    """x_{t+1} = A x_t + B u_t sampled every dt seconds."""

    A: np.ndarray
    B: np.ndarray
    dt: float

    def __post_init__(self):
        A = np.ascontiguousarray(np.asarray(self.A, dtype=float))
        B = np.ascontiguousarray(np.asarray(self.B, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise DimensionError(f"B must be {A.shape[0]}xm, got {B.shape}")
        if A.shape[0] < 1 or B.shape[1] < 1:
            raise DimensionError("state and input dimensions must be >= 1")
        if not (np.isfinite(A).all() and np.isfinite(B).all()):
            raise DimensionError("dynamics matrices must be finite")
        if not self.dt > 0:
            raise DimensionError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


def step(dyn: LinearDynamics, x, u) -> np.ndarray:
    """One exact step of the dynamics: A x + B u."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (dyn.n,):
        raise DimensionError(f"state must have shape ({dyn.n},), got {x.shape}")
    if u.shape != (dyn.m,):
        raise DimensionError(f"input must have shape ({dyn.m},), got {u.shape}")
    return dyn.A @ x + dyn.B @ u


def double_integrator(dt: float, axes: int = 1) -> LinearDynamics:
    """Exact zero-order-hold double integrator, block diagonal per axis.

    Per-axis state is (position, velocity) and the input is acceleration:
    A = [[1, dt], [0, 1]], B = [[dt^2/2], [dt]].
    """
    if not dt > 0:
        raise DimensionError(f"dt must be positive, got {dt}")
    if axes < 1:
        raise DimensionError(f"axes must be >= 1, got {axes}")
    a_blk = np.array([[1.0, dt], [0.0, 1.0]])
    b_blk = np.array([[0.5 * dt * dt], [dt]])
    A = np.kron(np.eye(axes), a_blk)
    B = np.kron(np.eye(axes), b_blk)
    return LinearDynamics(A=A, B=B, dt=dt)


@dataclass(frozen=True)
class Polytope:
    """Halfspace set {x : H x <= h}."""

    H: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        H = np.ascontiguousarray(np.asarray(self.H, dtype=float))
        h = np.ascontiguousarray(np.asarray(self.h, dtype=float))
        if H.ndim != 2 or h.ndim != 1 or H.shape[0] != h.shape[0]:
            raise DimensionError(f"H ({H.shape}) and h ({h.shape}) are inconsistent")
        if H.shape[0] < 1:
            raise DimensionError("a polytope needs at least one halfspace")
        if not (np.isfinite(H).all() and np.isfinite(h).all()):
            raise DimensionError("polytope data must be finite")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "h", h)

    @property
    def dim(self) -> int:
        return self.H.shape[1]

    @property
    def rows(self) -> int:
        return self.H.shape[0]

    @staticmethod
    def box(lower, upper) -> "Polytope":
        """Axis-aligned box [lower, upper] as 2n halfspaces."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise DimensionError("box bounds must be equal-length vectors")
        if np.any(lower > upper):
            raise DimensionError("box lower bound exceeds upper bound")
        n = lower.shape[0]
        H = np.vstack([np.eye(n), -np.eye(n)])
        h = np.concatenate([upper, -lower])
        return Polytope(H=H, h=h)


def contains(poly: Polytope, x, tol: float = 1e-6) -> bool:
    """True iff H x <= h + tol elementwise."""
    x = np.asarray(x, dtype=float)
    if x.shape != (poly.dim,):
        raise DimensionError(f"point must have shape ({poly.dim},), got {x.shape}")
    return bool(np.all(poly.H @ x <= poly.h + tol))


def violation(poly: Polytope, x) -> float:
    """Largest halfspace violation at x (<= 0 means inside)."""
    x = np.asarray(x, dtype=float)
    return float((poly.H @ x - poly.h).max())


_FEAS_SETTINGS = SolverSettings(eps_abs=1e-8, eps_rel=1e-8, eps_prim_inf=1e-9)


def interior_point(poly: Polytope):
    """A point well inside the polytope (Chebyshev-center style QP), or None
    when the polytope is empty."""
    n = poly.dim
    norms = np.linalg.norm(poly.H, axis=1)
    # variables (x, r): maximize r with H x + ||H_i|| r <= h, small
    # regularization keeps the QP strictly convex.
    P = 1e-6 * np.eye(n + 1)
    q = np.zeros(n + 1)
    q[n] = -1.0
    A = np.hstack([poly.H, norms[:, None]])
    r_row = np.zeros((1, n + 1))
    r_row[0, n] = 1.0
    A = np.vstack([A, r_row])
    l = np.concatenate([np.full(poly.rows, -np.inf), [0.0]])
    u = np.concatenate([poly.h, [1e6]])
    res = solve_qp(QpProblem(P=P, q=q, A=A, l=l, u=u), _FEAS_SETTINGS)
    if res.status != SOLVED or res.x[n] <= 1e-9:
        return None
    return res.x[:n]


def is_empty(poly: Polytope) -> bool:
    """Emptiness check via the interior-point feasibility QP."""
    return interior_point(poly) is None


def sample_polytope(poly: Polytope, n_samples: int, seed, burn_in: int = 50) -> np.ndarray:
    """Hit-and-run samples from a bounded polytope, seeded and reproducible."""
    x0 = interior_point(poly)
    if x0 is None:
        raise ValueError("cannot sample an empty polytope")
    rng = np.random.default_rng(seed)
    n = poly.dim
    out = np.empty((n_samples, n))
    x = x0.copy()
    total = burn_in + n_samples
    for it in range(total):
        d = rng.standard_normal(n)
        d /= np.linalg.norm(d)
        hd = poly.H @ d
        slack = poly.h - poly.H @ x
        # chord extents: x + t d stays inside for t in [t_lo, t_hi]
        with np.errstate(divide="ignore"):
            ratios = slack / hd
        t_hi = ratios[hd > 1e-12].min(initial=1e6)
        t_lo = ratios[hd < -1e-12].max(initial=-1e6)
        if t_hi <= t_lo:
            continue
        x = x + rng.uniform(t_lo, t_hi) * d
        if it >= burn_in:
            out[it - burn_in] = x
    return out


@dataclass(frozen=True)
class RecoveryRegion:
    """A control-invariant target set encoding one high-level intervention."""

    id: int
    set: Polytope
    label: str = ""

    def __post_init__(self):
        if self.id < 1:
            raise ValueError(f"recovery region ids start at 1, got {self.id}")


@dataclass(frozen=True)
class InvarianceReport:
    fraction_feasible: float
    n_samples: int
    worst_sample: np.ndarray | None
    worst_violation: float

    @property
    def invariant(self) -> bool:
        return self.fraction_feasible == 1.0


def check_invariance_sampled(region: Polytope, dyn: LinearDynamics,
                             input_set: Polytope, n_samples: int,
                             seed) -> InvarianceReport:
    """Sampled control-invariance check.

    Draws states from the region and solves, for each, a feasibility QP for
    an admissible input keeping the successor state inside the region.
    fraction_feasible == 1.0 is a necessary signal (not a proof) that the
    region is control invariant.
    """
    if region.dim != dyn.n:
        raise DimensionError("region dimension does not match the dynamics")
    if input_set.dim != dyn.m:
        raise DimensionError("input-set dimension does not match the dynamics")
    samples = sample_polytope(region, n_samples, seed)

    m = dyn.m
    # minimize ||u||^2 s.t. u in U and H(Ax + Bu) <= h
    P = np.eye(m)
    HB = region.H @ dyn.B
    A_rows = np.vstack([input_set.H, HB])
    solver = QpSolver(P, A_rows, _FEAS_SETTINGS)
    l = np.full(A_rows.shape[0], -np.inf)

    feasible = 0
    worst_sample = None
    worst_violation = 0.0
    for x in samples:
        HAx = region.H @ (dyn.A @ x)
        u_bound = np.concatenate([input_set.h, region.h - HAx])
        res = solver.solve(np.zeros(m), l, u_bound)
        if res.status == SOLVED:
            feasible += 1
        else:
            # size of the violation: slack needed on the region rows
            gap = float(np.maximum(HAx - region.h, 0.0).max(initial=0.0))
            if worst_sample is None or gap > worst_violation:
                worst_sample = x.copy()
                worst_violation = gap
    return InvarianceReport(
        fraction_feasible=feasible / n_samples,
        n_samples=n_samples,
        worst_sample=worst_sample,
        worst_violation=worst_violation,
    )
