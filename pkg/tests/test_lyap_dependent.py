import numpy as np
import pytest

from lyapcert import SmoothConvex, Smooth, StronglyConvex, make_problem
from lyapcert.algorithms import fgm_lambda, gradient, nesterov_fgm, ogm
from lyapcert.lyap_dependent import (
    dep_params_distance, dep_params_fpr, dep_params_funcval, dep_params_optimality,
    make_dep_params, verify_dependent,
)
from lyapcert.oracle import dependent_violations, evaluate_quadform, run_trajectory, sample_instance

SMOOTH = make_problem([SmoothConvex(1)])


def _traj(problem, alg, K, seed=0):
    inst = sample_instance(problem, 3, seed=seed)
    x0 = np.random.default_rng(seed).standard_normal((alg.n, 3))
    return run_trajectory(inst, alg, x0, K), inst


def test_endpoint_measures_on_trajectory():
    alg = nesterov_fgm(1)
    traj, inst = _traj(SMOOTH, alg, 5)
    f = inst.members[0]
    for k in range(5):
        Q, q = dep_params_distance(alg, k, 1, 2)
        v = evaluate_quadform(Q, q, traj, alg, (k, k))
        assert abs(v - np.sum((traj.x[k][0] - inst.y_star) ** 2)) < 1e-12
        Q, q = dep_params_funcval(alg, k, 2)
        v = evaluate_quadform(Q, q, traj, alg, (k, k))
        assert abs(v - (f.value(traj.x[k][0]) - f.value(inst.y_star))) < 1e-12
        Q, q = dep_params_fpr(alg, k)
        v = evaluate_quadform(Q, q, traj, alg, (k, k))
        assert abs(v - np.sum((traj.x[k + 1] - traj.x[k]) ** 2)) < 1e-12
        Q, q = dep_params_optimality(alg, k)
        v = evaluate_quadform(Q, q, traj, alg, (k, k))
        assert abs(v - np.sum(traj.u[k][0] ** 2)) < 1e-12


def test_fast_gradient_constant():
    alg = nesterov_fgm(1)
    par = make_dep_params(alg, 10, dep_params_distance(alg, 0, 1, 2), dep_params_funcval(alg, 10, 2))
    v, c = verify_dependent(SMOOTH, alg, par)
    assert v.feasible and abs(c - 0.0110) <= 5e-4
    assert c <= 1 / (2 * fgm_lambda(10) ** 2)
    for seed in range(5):
        traj, _ = _traj(SMOOTH, alg, 10, seed)
        assert dependent_violations(v.certificate, alg, 10, traj) < 1e-6


def test_one_step_contraction():
    problem = make_problem([[StronglyConvex(1), Smooth(1)]])
    alg = gradient(1)
    d = dep_params_distance(alg, 0)
    par = make_dep_params(alg, 1, d, dep_params_distance(alg, 1))
    v, c = verify_dependent(problem, alg, par)
    assert v.feasible and c <= 1 + 1e-8
    for seed in range(5):
        traj, _ = _traj(problem, alg, 1, seed)
        assert dependent_violations(v.certificate, alg, 1, traj) < 1e-6


def test_budget_and_shapes():
    alg = ogm(1, 3)
    over = make_dep_params(alg, 4, dep_params_distance(alg, 0), dep_params_funcval(alg, 4))
    with pytest.raises(ValueError, match="budget"):
        verify_dependent(SMOOTH, alg, over)
    par = make_dep_params(alg, 3, dep_params_distance(alg, 0), dep_params_funcval(alg, 3))
    par.Q_K = np.eye(2)
    with pytest.raises(ValueError):
        verify_dependent(SMOOTH, alg, par)
    with pytest.raises(ValueError):
        verify_dependent(SMOOTH, alg, make_dep_params(alg, 0, dep_params_distance(alg, 0),
                                                        dep_params_distance(alg, 0)))
