import numpy as np
import pytest

from lyapcert import MaximallyMonotone, SmoothConvex, make_problem
from lyapcert.algorithms import douglas_rachford, gradient
from lyapcert.sdp import (
    FEASIBLE, INFEASIBLE, Affine, SDPModel, assemble_dpep, check_compatible, solve,
)
from lyapcert.structure import dim_chi, dim_zeta


def test_fixed_psd_matrix():
    m = SDPModel()
    X = m.symmetric("X", 2)
    m.add_zero(X - np.eye(2), "fix")
    m.add_psd(X, "X")
    v = solve(m)
    assert v.status == FEASIBLE and np.allclose(v.certificate["X"], np.eye(2), atol=1e-7)


def test_negative_multiplier_infeasible():
    m = SDPModel()
    lam = m.scalar("lam", nonneg=True)
    m.add_zero(lam + 1.0, "eq")
    assert solve(m).status == INFEASIBLE


def test_max_eigenvalue():
    m = SDPModel()
    c = m.scalar("c", nonneg=True)
    m.add_psd(c.times(np.eye(2)) - np.diag([0.3, 0.7]), "lmi")
    m.minimize(c)
    v = solve(m)
    assert v.feasible and v.objective == pytest.approx(0.7, abs=1e-7)
    assert v.diagnostics["recheck"] == "passed"


def test_pack_roundtrip():
    m = SDPModel()
    m.scalar("a")
    m.vector("b", 3)
    m.symmetric("S", 3)
    x = np.random.default_rng(0).standard_normal(m.nvar)
    assert np.array_equal(m.pack(m.unpack(x)), x)


def test_affine_algebra():
    m = SDPModel()
    S = m.symmetric("S", 2)
    T = np.array([[1.0, 2.0], [0.0, 1.0]])
    x = m.pack({"S": np.array([[1.0, 0.5], [0.5, 3.0]])})
    Sv = m.evaluate(S, x)
    assert np.allclose(m.evaluate(S.congruence(T), x), T.T @ Sv @ T)
    assert np.allclose(m.evaluate(S * 2 - np.eye(2), x), 2 * Sv - np.eye(2))


def test_dpep_zero_objective_operators_only():
    problem = make_problem([MaximallyMonotone(), MaximallyMonotone()])
    alg = douglas_rachford(1, 1)
    m = SDPModel()
    dz = dim_zeta(alg, (0, 0))
    assert dim_chi(alg, (0, 0)) == 0
    n = assemble_dpep(m, problem, alg, (0, 0), Affine.constant(np.zeros((dz, dz))), None, "t")
    assert n == 2
    assert not any(kind == "zero" for kind, *_ in m.constraints)
    v = solve(m)
    assert v.feasible
    assert max(abs(val) for key, val in v.certificate.items() if key.startswith("lam")) < 1e-6


def test_dpep_negative_definite_objective():
    problem = make_problem([SmoothConvex(1)])
    alg = gradient(1)
    m = SDPModel()
    dz, dc = dim_zeta(alg, (0, 0)), dim_chi(alg, (0, 0))
    assemble_dpep(m, problem, alg, (0, 0), Affine.constant(-1e-3 * np.eye(dz)),
                  Affine.constant(np.zeros(dc)), "t")
    assert solve(m).feasible


def test_dpep_positive_objective_infeasible():
    # sup of |y - y*|^2 over the class is unbounded
    problem = make_problem([SmoothConvex(1)])
    alg = gradient(1)
    m = SDPModel()
    dz, dc = dim_zeta(alg, (0, 0)), dim_chi(alg, (0, 0))
    row = np.array([1.0, 0.0, -1.0])
    assemble_dpep(m, problem, alg, (0, 0), Affine.constant(np.outer(row, row)),
                  Affine.constant(np.zeros(dc)), "t")
    assert solve(m).status == INFEASIBLE


def test_incompatible_layout():
    with pytest.raises(ValueError):
        check_compatible(make_problem([SmoothConvex(1)]), douglas_rachford(1, 1))
