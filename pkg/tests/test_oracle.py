import numpy as np
import pytest

from lyapcert import (
    Cocoercive, Component, LipschitzOperator, MaximallyMonotone, SmoothConvex,
    SmoothStronglyConvex, StronglyMonotone, make_problem,
)
from lyapcert.algorithms import douglas_rachford, gradient, heavy_ball
from lyapcert.lyap_independent import params_linear_distance
from lyapcert.oracle import (
    AffineOperator, ConcreteInstance, DoubleWell, Quadratic, evaluate_quadform, gram,
    operator_violation, quadform, recursion_residual, run_trajectory, sample_instance,
)

DR_PROBLEM = make_problem([MaximallyMonotone(), Component((StronglyMonotone(1), LipschitzOperator(2)))])


def test_strongly_convex_smooth_spectrum():
    inst = sample_instance(make_problem([SmoothStronglyConvex(1, 2)]), 3, seed=7)
    ev = np.linalg.eigvalsh(inst.members[0].H)
    assert ev.min() >= 1 - 1e-12 and ev.max() <= 2 + 1e-12


def test_cocoercive_sample():
    for seed in range(20):
        M = sample_instance(make_problem([Cocoercive(1)]), 3, seed=seed).members[0].M
        gap = 0.5 * (M + M.T) - M.T @ M
        assert np.linalg.eigvalsh(0.5 * (gap + gap.T)).min() >= -1e-10
        assert operator_violation(M, 0.0, np.inf, 1.0) <= 1e-10


def test_dr_instance_is_stationary():
    for seed in range(10):
        inst = sample_instance(DR_PROBLEM, 3, seed=seed)
        total = sum(mem.slope(inst.y_star) for mem in inst.members)
        assert np.abs(total).max() < 1e-9
        assert np.allclose(inst.u_star.sum(axis=0), 0)
        assert np.allclose(inst.u_star[0], inst.members[0].slope(inst.y_star))


def test_gradient_exact_step():
    d = 3
    inst = ConcreteInstance([Quadratic(np.eye(d), np.zeros(d))], d, np.zeros(d), np.zeros((1, d)), np.zeros(1))
    traj = run_trajectory(inst, gradient(1.0), np.eye(d)[:1], 0)
    assert np.allclose(traj.x[1], 0)


def test_douglas_rachford_matches_resolvents():
    gam, lam = 1.0, 2.0
    alg = douglas_rachford(gam, lam)
    inst = sample_instance(DR_PROBLEM, 3, seed=3)
    G1, G2 = inst.members
    x = np.random.default_rng(0).standard_normal(3)
    traj = run_trajectory(inst, alg, x[None], 5)
    I = np.eye(3)
    for k in range(6):
        y1 = np.linalg.solve(I + gam * G1.M, x - gam * G1.b)
        y2 = np.linalg.solve(I + gam * G2.M, 2 * y1 - x - gam * G2.b)
        assert np.allclose(traj.y[k][0], y1, atol=1e-10)
        assert np.allclose(traj.y[k][1], y2, atol=1e-10)
        x = x + lam * (y2 - y1)
        assert np.allclose(traj.x[k + 1][0], x, atol=1e-10)


def test_heavy_ball_two_forms():
    gam, delta = 0.7, 0.4
    inst = sample_instance(make_problem([SmoothConvex(1)]), 4, seed=11)
    f = inst.members[0]
    x0 = np.random.default_rng(1).standard_normal(4)
    traj = run_trajectory(inst, heavy_ball(gam, delta), np.vstack([x0, x0]), 8)
    prev, cur = x0, x0
    for k in range(9):
        prev, cur = cur, cur - gam * f.slope(cur) + delta * (cur - prev)
        assert np.abs(traj.x[k + 1][0] - cur).max() < 1e-10
    assert recursion_residual(traj, heavy_ball(gam, delta)) < 1e-12


def test_double_well_gradient_dominated():
    rng = np.random.default_rng(0)
    f = DoubleWell(0.8, rng.standard_normal(3))
    for _ in range(50):
        y = rng.standard_normal(3) * 3
        g = f.slope(y)
        assert abs(g @ g - 4 * f.a * f.value(y)) < 1e-10
        t = rng.random()
        p = f.implicit(y, -t)
        assert np.allclose(p - y, -t * f.slope(p))


def test_implicit_affine_step():
    M = np.array([[2.0, 1.0], [-1.0, 1.0]])
    op = AffineOperator(M, np.array([1.0, 0.0]))
    y = op.implicit(np.array([0.3, -0.2]), -0.5)
    assert np.allclose(y, np.array([0.3, -0.2]) - 0.5 * op.slope(y))


def test_quadform_zero_and_distance():
    alg = gradient(0.5)
    inst = sample_instance(make_problem([SmoothStronglyConvex(0.5, 1)]), 3, seed=2)
    traj = run_trajectory(inst, alg, np.ones((1, 3)), 3)
    dz = 1 + 1 + 1
    assert evaluate_quadform(np.zeros((dz, dz)), np.zeros(2), traj, alg, (1, 1)) == 0
    par = params_linear_distance(alg)
    for k in range(4):
        direct = np.sum((traj.y[k][0] - inst.y_star) ** 2)
        assert abs(evaluate_quadform(par.P, None, traj, alg, (k, k)) - direct) < 1e-12


def test_quadform_trace_identity():
    rng = np.random.default_rng(5)
    for _ in range(20):
        Z = rng.standard_normal((5, 3))
        M = rng.standard_normal((5, 5))
        assert abs(quadform(M, Z) - np.trace(M @ gram(Z))) < 1e-10


def test_layout_mismatch_rejected():
    inst = sample_instance(make_problem([SmoothConvex(1)]), 2, seed=0)
    with pytest.raises(ValueError):
        run_trajectory(inst, douglas_rachford(1, 1), np.zeros((1, 2)), 1)
    with pytest.raises(ValueError):
        sample_instance(make_problem([SmoothConvex(1)]), 1, seed=0)
