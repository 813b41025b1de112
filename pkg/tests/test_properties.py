import numpy as np
from hypothesis import given, settings, strategies as st

from lyapcert.algorithms import ALGORITHMS
from lyapcert.interpolation import (
    Cocoercive, LipschitzOperator, MaximallyMonotone, PairCondition, StronglyMonotone, condition_value,
    enumerate_conditions, fmuL_matrix, pairwise_condition,
)
from lyapcert.oracle import (
    Quadratic, evaluate_quadform, gram, quadform, run_trajectory, sample_instance,
)
from lyapcert.structure import Stack

from helpers import problem_for, random_algorithm

pos = st.floats(0.05, 5.0)
seeds = st.integers(0, 2**31 - 1)


@given(st.sampled_from([MaximallyMonotone(), StronglyMonotone(0.7), LipschitzOperator(1.3), Cocoercive(0.4)]),
       seeds)
def test_operator_conditions_swap_invariant(cls, seed):
    rng = np.random.default_rng(seed)
    y1, y2, u1, u2 = rng.standard_normal((4, 3))
    c = pairwise_condition(cls)
    assert np.isclose(condition_value(c, (y1, y2), (u1, u2)), condition_value(c, (y2, y1), (u2, u1)))


@given(seeds, st.integers(1, 6), st.integers(1, 4))
def test_quadform_is_trace_against_gram(seed, n, d):
    rng = np.random.default_rng(seed)
    M, Z = rng.standard_normal((n, n)), rng.standard_normal((n, d))
    assert np.isclose(quadform(M, Z), np.trace(M @ gram(Z)))


@given(st.floats(-2.0, 2.0), pos, seeds)
def test_fmul_holds_on_quadratics(mu, span, seed):
    L = mu + span
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    H = Q @ np.diag(rng.uniform(mu, L, 3)) @ Q.T
    f = Quadratic(H, rng.standard_normal(3))
    M = fmuL_matrix(mu, L)
    assert np.allclose(M, M.T)
    y1, y2 = rng.standard_normal((2, 3))
    c = PairCondition(M, np.array([-1.0, 1.0]))
    v = condition_value(c, (y1, y2), (f.slope(y1), f.slope(y2)), (f.value(y1), f.value(y2)))
    assert v <= 1e-9 * (1 + np.abs(H).max() * np.sum((y1 - y2) ** 2))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(ALGORITHMS), seeds)
def test_lifted_conditions_match_concrete_values(name, seed):
    rng = np.random.default_rng(seed)
    alg = random_algorithm(name, rng)
    problem = problem_for(alg)
    inst = sample_instance(problem, 2, seed=seed)
    traj = run_trajectory(inst, alg, rng.standard_normal((alg.n, 2)), 1)
    st_ = Stack(alg, (0, 1))
    comp_of = np.repeat(np.arange(1, alg.m + 1), alg.mbars)
    fidx = [r for r in range(alg.mbar) if comp_of[r] in alg.I_func]

    def data(i, label):
        if label == "star":
            F = inst.F_star[alg.I_func.index(i)] if i in alg.I_func else None
            return inst.y_star, inst.u_star[i - 1], F
        j, k = label
        r = int(np.flatnonzero(comp_of == i)[0]) + j - 1
        F = traj.F[k][fidx.index(r)] if i in alg.I_func else None
        return traj.y[k][r], traj.u[k][r], F

    for i in range(1, alg.m + 1):
        for cond in enumerate_conditions(problem.component(i), i, 0, 1, alg.mbars[i - 1]):
            W, f = st_.lift(cond)
            (ya, ua, Fa), (yb, ub, Fb) = (data(i, p) for p in cond.points)
            direct = condition_value(cond, (ya, yb), (ua, ub), None if cond.a is None else (Fa, Fb))
            lifted = evaluate_quadform(W, f, traj, alg, (0, 1))
            assert abs(direct - lifted) <= 1e-9 * (1 + abs(direct))
