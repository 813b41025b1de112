import math

import numpy as np
import pytest

from lyapcert import get_ABCD, make_algorithm
from lyapcert.algorithms import (
    ALGORITHMS, chambolle_pock, douglas_rachford, fgm_lambda, gradient, heavy_ball,
    nesterov_fgm, ogm, ogm_thetas,
)


def test_gradient_matrices():
    A, B, C, D = get_ABCD(gradient(0.3), 5)
    assert (A, B, C, D) == ([[1]], [[-0.3]], [[1]], [[0]])


def test_chambolle_pock_output_maps():
    tau, sigma, theta = 0.5, 2.0, 0.7
    _, _, C, D = get_ABCD(chambolle_pock(tau, sigma, theta), 0)
    assert np.allclose(C, [[1, -tau], [1, 1 / sigma - tau * (1 + theta)]])
    assert np.allclose(D, [[-tau, 0], [-tau * (1 + theta), -1 / sigma]])


def test_douglas_rachford_matrices():
    alg = douglas_rachford(1, 2)
    A, B, C, D = get_ABCD(alg, 0)
    assert np.array_equal(B, [[-2, -2]]) and np.array_equal(D, [[-1, 0], [-2, -1]])
    assert alg.n == 1 and alg.mbars == (1, 1) and alg.I_func == ()


def test_heavy_ball_matrices():
    A, B, _, _ = get_ABCD(heavy_ball(1, 0.5), 7)
    assert np.array_equal(A, [[1.5, -0.5], [1, 0]]) and np.array_equal(B, [[-1], [0]])


def test_fgm_first_momentum_is_zero():
    assert fgm_lambda(0) == 1 and fgm_lambda(1) == pytest.approx((1 + math.sqrt(5)) / 2)
    A, _, _, _ = get_ABCD(nesterov_fgm(1), 0)
    assert np.array_equal(A, [[1, 0], [1, 0]])
    lam = [fgm_lambda(k) for k in range(4)]
    A, _, _, _ = get_ABCD(nesterov_fgm(1), 2)
    assert A[0, 1] == pytest.approx(-(lam[2] - 1) / lam[3])


def test_ogm_last_theta_branch():
    th = ogm_thetas(10)
    assert th[10] == pytest.approx((1 + math.sqrt(1 + 8 * th[9] ** 2)) / 2)
    assert th[9] == pytest.approx((1 + math.sqrt(1 + 4 * th[8] ** 2)) / 2)
    A, B, _, _ = get_ABCD(ogm(1, 10), 9)
    a, b = (th[9] - 1) / th[10], th[9] / th[10]
    assert np.allclose(A, [[1 + a, -a], [1, 0]]) and np.allclose(B, [[-(1 + a + b)], [-1]])
    with pytest.raises(ValueError):
        ogm(1, 0)


def test_make_algorithm_validation():
    assert set(ALGORITHMS) == {"gradient", "heavy_ball", "nesterov_momentum", "nesterov_fgm",
                               "ogm", "douglas_rachford", "chambolle_pock"}
    with pytest.raises(ValueError):
        make_algorithm("gradient", {"gamma": -1})
    with pytest.raises(ValueError):
        make_algorithm("gradient", {"gamma": 1, "delta": 0})
    with pytest.raises(ValueError):
        make_algorithm("newton", {})
    alg = make_algorithm("douglas_rachford", {"gamma": 1, "lambda": 1}, I_func=(1, 2))
    assert alg.I_func == (1, 2) and alg.I_op == ()
