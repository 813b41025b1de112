import numpy as np
import pytest

from lyapcert import make_problem
from lyapcert.interpolation import (
    STAR, Cocoercive, Component, GradientDominated, LipschitzOperator, MaximallyMonotone,
    SmoothConvex, SmoothStronglyConvex, StronglyConvex, StronglyMonotone, condition_value,
    enumerate_conditions, gradient_dominated_conditions, make_class, pairwise_condition,
    point_labels,
)
from lyapcert.oracle import Quadratic, sample_instance

from helpers import FAMILIES, worst_condition


def test_maximally_monotone_matrix():
    pc = pairwise_condition(MaximallyMonotone())
    M = 0.5 * np.array([[0, 0, -1, 1], [0, 0, 1, -1], [-1, 1, 0, 0], [1, -1, 0, 0]])
    assert np.array_equal(pc.M, M)
    assert pc.a is None and not pc.ordered


@pytest.mark.parametrize("mu", [0.0, 0.5, 2.0])
def test_strongly_convex_without_smoothness(mu):
    pc = pairwise_condition(StronglyConvex(mu)) if mu else pairwise_condition(make_class("Convex"))
    M = 0.5 * np.array([[mu, -mu, 0, 1], [-mu, mu, 0, -1], [0, 0, 0, 0], [1, -1, 0, 0]])
    assert np.allclose(pc.M, M)
    assert np.array_equal(pc.a, [-1, 1]) and pc.ordered


def test_parameter_validation():
    with pytest.raises(ValueError):
        Cocoercive(0)
    with pytest.raises(ValueError):
        SmoothStronglyConvex(2, 1)
    with pytest.raises(ValueError):
        make_class("Nope")


def test_gradient_dominated_matrices():
    c1, c2 = gradient_dominated_conditions(0.5)
    expected = np.zeros((4, 4))
    expected[2, 2] = -1.0
    assert np.array_equal(c2.M, expected)
    assert not c1.M.any()
    for mu in (0.1, 1.0, 3.0):
        a1, a2 = (c.a for c in gradient_dominated_conditions(mu))
        assert np.array_equal(a1 + a2, np.zeros(2))


def test_gradient_dominated_stationary_equality():
    y, u, F = np.ones(3), np.zeros(3), 0.7
    for c in gradient_dominated_conditions(1.0):
        assert condition_value(c, (y, y + 1), (u, u), (F, F)) == 0.0


def test_condition_counts():
    assert len(enumerate_conditions(MaximallyMonotone(), 1, 0, 1, 1)) == 3
    assert len(enumerate_conditions(SmoothConvex(1), 1, 0, 0, 1)) == 2
    comp = Component((StronglyMonotone(1), LipschitzOperator(2)))
    assert len(enumerate_conditions(comp, 1, 0, 0, 1)) == 2
    assert point_labels(2, 0, 1)[-1] == STAR and len(point_labels(2, 0, 1)) == 5


def test_gradient_dominated_pairs_with_star_only():
    conds = enumerate_conditions(GradientDominated(0.5), 1, 0, 2, 1)
    assert len(conds) == 6
    assert all(c.points[1] == STAR for c in conds)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_sound_on_class_members(name):
    comp = Component.of(FAMILIES[name])
    problem = make_problem([comp])
    for seed in range(25):
        inst = sample_instance(problem, 3, seed=seed)
        rng = np.random.default_rng(1000 + seed)
        F_star = inst.F_star[0] if inst.F_star.size else None
        worst = worst_condition(comp, inst.members[0], inst.y_star, inst.u_star[0], F_star, rng)
        assert worst <= 1e-9, (name, seed, worst)


def test_detects_member_outside_class():
    # a quadratic with curvature 3 is not 1-smooth; some pair must be violated
    comp = Component.of(SmoothConvex(1))
    f = Quadratic(3 * np.eye(2), np.zeros(2))
    rng = np.random.default_rng(0)
    assert worst_condition(comp, f, np.zeros(2), np.zeros(2), 0.0, rng) > 1e-3
