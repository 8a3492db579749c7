import numpy as np
import pytest

from planguard.qp import (
    MAX_ITERATIONS,
    PRIMAL_INFEASIBLE,
    SOLVED,
    QpInputError,
    QpProblem,
    QpSolver,
    SolverSettings,
    check_kkt,
    solve_qp,
    solve_qp_reference,
)


def box_problem(P, q, A, l, u):
    return QpProblem(P=np.asarray(P, float), q=np.asarray(q, float),
                     A=np.asarray(A, float), l=np.asarray(l, float),
                     u=np.asarray(u, float))


def test_scalar_active_bound():
    # min 0.5 x^2  s.t.  x >= 1
    prob = box_problem([[1.0]], [0.0], [[1.0]], [1.0], [np.inf])
    res = solve_qp(prob)
    assert res.status == SOLVED
    assert res.x[0] == pytest.approx(1.0, abs=1e-6)
    assert res.objective == pytest.approx(0.5, abs=1e-6)


def test_unconstrained_minimum():
    prob = box_problem(np.eye(2), [-1.0, -2.0], np.zeros((0, 2)), [], [])
    res = solve_qp(prob)
    assert res.status == SOLVED
    np.testing.assert_allclose(res.x, [1.0, 2.0], atol=1e-6)


def test_single_inequality_kkt_hand_solve():
    # min 0.5|x|^2 - x1 - 2 x2  s.t.  x1 + x2 <= 1  ->  x = (0, 1), dual = 1
    prob = box_problem(np.eye(2), [-1.0, -2.0], [[1.0, 1.0]], [-np.inf], [1.0])
    res = solve_qp(prob)
    assert res.status == SOLVED
    np.testing.assert_allclose(res.x, [0.0, 1.0], atol=1e-6)
    assert res.y[0] == pytest.approx(1.0, abs=1e-5)
    assert check_kkt(prob, res.x, res.y, 1e-6)


def test_disjoint_bounds_primal_infeasible():
    # x <= 0 and x >= 1
    prob = box_problem([[1.0]], [0.0], [[1.0], [1.0]], [-np.inf, 1.0], [0.0, np.inf])
    res = solve_qp(prob)
    assert res.status == PRIMAL_INFEASIBLE
    v = res.certificate
    assert v is not None
    assert np.abs(prob.A.T @ v).max() <= 1e-6
    fin_u = np.isfinite(prob.u)
    fin_l = np.isfinite(prob.l)
    support = prob.u[fin_u] @ np.maximum(v, 0)[fin_u] + prob.l[fin_l] @ np.minimum(v, 0)[fin_l]
    assert support < 0


def test_input_validation():
    with pytest.raises(QpInputError):
        box_problem([[1.0, 0.5], [0.0, 1.0]], [0, 0], np.zeros((0, 2)), [], [])  # asymmetric
    with pytest.raises(QpInputError):
        box_problem([[np.nan]], [0.0], np.zeros((0, 1)), [], [])
    with pytest.raises(QpInputError):
        box_problem([[1.0]], [0.0], [[1.0]], [2.0], [1.0])  # l > u
    with pytest.raises(QpInputError):
        box_problem([[1.0]], [0.0, 1.0], np.zeros((0, 1)), [], [])  # dim mismatch


def test_check_kkt_cases():
    prob = box_problem(np.eye(2), [-1.0, -2.0], [[1.0, 1.0]], [-np.inf], [1.0])
    assert check_kkt(prob, np.array([0.0, 1.0]), np.array([1.0]), 1e-6)
    assert not check_kkt(prob, np.array([0.01, 1.0]), np.array([1.0]), 1e-6)
    free = box_problem(np.eye(2), [-1.0, -2.0], np.zeros((0, 2)), [], [])
    assert check_kkt(free, np.array([1.0, 2.0]), np.zeros(0), 1e-9)


def random_strictly_convex_qp(rng, n_max=8, m_max=12):
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    L = rng.standard_normal((n, n))
    P = L @ L.T + 0.1 * np.eye(n)
    q = rng.standard_normal(n)
    A = rng.standard_normal((m, n))
    # keep a point strictly feasible so problems stay solvable
    x0 = rng.standard_normal(n)
    ax0 = A @ x0
    u = ax0 + rng.uniform(0.1, 2.0, size=m)
    l = np.where(rng.random(m) < 0.3, ax0 - rng.uniform(0.1, 2.0, size=m), -np.inf)
    return box_problem(P, q, A, l, u)


@pytest.mark.parametrize("seed", [0, 1])
def test_random_qps_match_active_set_oracle(seed):
    rng = np.random.default_rng(seed)
    for _ in range(60):
        prob = random_strictly_convex_qp(rng)
        res = solve_qp(prob)
        assert res.status == SOLVED, f"solver failed on a feasible problem ({res.status})"
        ref = solve_qp_reference(prob)
        assert ref is not None, "oracle found no KKT point"
        np.testing.assert_allclose(res.x, ref.x, atol=1e-5)
        assert res.objective == pytest.approx(ref.objective, abs=1e-7)


def test_constructed_infeasible_problems_detected():
    rng = np.random.default_rng(7)
    for _ in range(15):
        n = int(rng.integers(1, 6))
        m_extra = int(rng.integers(0, 5))
        A_extra = rng.standard_normal((m_extra, n))
        x0 = rng.standard_normal(n)
        u_extra = A_extra @ x0 + rng.uniform(0.5, 2.0, size=m_extra)
        i = int(rng.integers(0, n))
        e_i = np.zeros(n)
        e_i[i] = 1.0
        A = np.vstack([A_extra, e_i, e_i])
        l = np.concatenate([np.full(m_extra, -np.inf), [-np.inf, 1.0]])
        u = np.concatenate([u_extra, [0.0, np.inf]])
        prob = box_problem(np.eye(n), np.zeros(n), A, l, u)
        res = solve_qp(prob)
        assert res.status == PRIMAL_INFEASIBLE
        assert res.status != MAX_ITERATIONS


def test_bitwise_determinism():
    rng = np.random.default_rng(3)
    prob = random_strictly_convex_qp(rng)
    r1 = solve_qp(prob)
    r2 = solve_qp(prob)
    assert np.array_equal(r1.x, r2.x)
    assert np.array_equal(r1.y, r2.y)
    assert r1.objective == r2.objective
    assert r1.iterations == r2.iterations


def test_equality_rows():
    # min 0.5|x|^2 s.t. x1 + x2 = 1 -> x = (0.5, 0.5)
    prob = box_problem(np.eye(2), [0.0, 0.0], [[1.0, 1.0]], [1.0], [1.0])
    res = solve_qp(prob)
    assert res.status == SOLVED
    np.testing.assert_allclose(res.x, [0.5, 0.5], atol=1e-7)


def test_solver_reuse_with_changing_bounds():
    P = np.eye(2)
    A = np.vstack([np.eye(2), [[1.0, 1.0]]])
    solver = QpSolver(P, A)
    for target in (1.0, 2.0, -0.5):
        l = np.array([target, -np.inf, -np.inf])
        u = np.array([target, np.inf, 10.0])
        res = solver.solve(np.zeros(2), l, u)
        assert res.status == SOLVED
        assert res.x[0] == pytest.approx(target, abs=1e-6)


def test_warm_start_agrees_with_cold():
    rng = np.random.default_rng(11)
    prob = random_strictly_convex_qp(rng)
    cold = solve_qp(prob)
    warm = solve_qp(prob, warm_start=(cold.x, cold.y))
    np.testing.assert_allclose(warm.x, cold.x, atol=1e-6)
    assert warm.iterations <= cold.iterations


def test_settings_validation():
    with pytest.raises(QpInputError):
        SolverSettings(eps_abs=0.0)
    with pytest.raises(QpInputError):
        SolverSettings(alpha=2.5)
