"""Fallback-safe planning and runtime monitoring for agile robots.

The stack has three layers: a fast embedding-cache anomaly monitor
(`detector`, `embeddings`), a latency-bounded slow decision oracle
(`reasoner`), and a multi-contingency model predictive controller (`mpc`,
`qp`, `dynamics`) that keeps every offered recovery plan feasible while the
slow oracle deliberates. `simulator` closes the loop on a kinematic
quadrotor and reproduces the recovery-rate ablation; `cli` is the
operational entry point.
"""

from planguard.dynamics import LinearDynamics, Polytope, RecoveryRegion, double_integrator
from planguard.qp import QpProblem, QpResult, SolverSettings, solve_qp

__all__ = [
    "LinearDynamics",
    "Polytope",
    "QpProblem",
    "QpResult",
    "RecoveryRegion",
    "SolverSettings",
    "double_integrator",
    "solve_qp",
]

__version__ = "0.1.0"
