"""First-order methods as linear time-varying systems.

    x^{k+1} = A_k x^k + B_k u^k,   y^k = C_k x^k + D_k u^k,

where u^k stacks one (sub)gradient or operator evaluation per entry of y^k.
Entries of u and y are ordered by component, then by evaluation index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class AlgorithmSpec:
    n: int
    mbars: tuple
    I_func: tuple
    provider: Callable[[int], tuple]
    stationary: bool = True
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)
    budget: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("state dimension n must be >= 1")
        if any(mb < 1 for mb in self.mbars):
            raise ValueError("every component needs at least one evaluation")
        if not set(self.I_func) <= set(range(1, self.m + 1)):
            raise ValueError("I_func must be a subset of 1..m")

    @property
    def m(self) -> int:
        return len(self.mbars)

    @property
    def mbar(self) -> int:
        return sum(self.mbars)

    @property
    def I_op(self) -> tuple:
        return tuple(i for i in range(1, self.m + 1) if i not in self.I_func)

    @property
    def m_func(self) -> int:
        return len(self.I_func)

    @property
    def mbar_func(self) -> int:
        return sum(self.mbars[i - 1] for i in self.I_func)

    def get_ABCD(self, k: int):
        return get_ABCD(self, k)


def get_ABCD(alg: AlgorithmSpec, k: int):
    """System matrices at iteration k, with shapes checked."""
    if k < 0:
        raise ValueError(f"iteration index must be >= 0, got {k}")
    if alg.budget is not None and k > alg.budget:
        raise ValueError(f"{alg.name}: iteration {k} exceeds the budget K={alg.budget}")
    mats = tuple(np.atleast_2d(np.asarray(M, dtype=float)) for M in alg.provider(k))
    n, mb = alg.n, alg.mbar
    expected = ((n, n), (n, mb), (mb, n), (mb, mb))
    for name, M, shape in zip("ABCD", mats, expected):
        if M.shape != shape:
            raise ValueError(f"{alg.name}: {name}_{k} has shape {M.shape}, expected {shape}")
    return mats


def _const(A, B, C, D):
    mats = tuple(np.array(M, dtype=float) for M in (A, B, C, D))
    return lambda k: mats


def gradient(gamma):
    return AlgorithmSpec(1, (1,), (1,), _const([[1]], [[-gamma]], [[1]], [[0]]),
                         name="gradient", params={"gamma": gamma})


def heavy_ball(gamma, delta):
    """State (x^k, x^{k-1}); x^{k+1} = x^k - gamma grad f(x^k) + delta (x^k - x^{k-1})."""
    A = [[1 + delta, -delta], [1, 0]]
    return AlgorithmSpec(2, (1,), (1,), _const(A, [[-gamma], [0]], [[1, 0]], [[0]]),
                         name="heavy_ball", params={"gamma": gamma, "delta": delta})


def nesterov_momentum(gamma, delta):
    """State (x^k, x^{k-1}); gradient at y^k = x^k + delta (x^k - x^{k-1})."""
    A = [[1 + delta, -delta], [1, 0]]
    return AlgorithmSpec(2, (1,), (1,), _const(A, [[-gamma], [0]], [[1 + delta, -delta]], [[0]]),
                         name="nesterov_momentum", params={"gamma": gamma, "delta": delta})


@lru_cache(maxsize=None)
def _lambdas(count: int) -> tuple:
    lam = [1.0]
    while len(lam) < count:
        lam.append((1 + math.sqrt(1 + 4 * lam[-1] ** 2)) / 2)
    return tuple(lam)


def fgm_lambda(k: int) -> float:
    """lambda_0 = 1, lambda_{k+1} = (1 + sqrt(1 + 4 lambda_k^2)) / 2."""
    return _lambdas(k + 1)[k]


def nesterov_fgm(gamma):
    """Fast gradient method with momentum delta_k = (lambda_k - 1)/lambda_{k+1}.

    Two evaluations per iteration: grad f(y^k) and grad f(x^k), so that
    function values at x^k enter the analysis. State (x^k, x^{k-1}).
    """

    def provider(k):
        lam = _lambdas(k + 2)
        d = (lam[k] - 1) / lam[k + 1]
        A = np.array([[1 + d, -d], [1, 0]])
        B = np.array([[-gamma, 0], [0, 0]], dtype=float)
        return A, B, A.copy(), np.zeros((2, 2))

    return AlgorithmSpec(2, (2,), (1,), provider, stationary=False,
                         name="nesterov_fgm", params={"gamma": gamma})


def ogm_thetas(K: int) -> tuple:
    """theta_0 = 1, 4-branch recursion up to K-1, 8-branch at K."""
    th = [1.0]
    for k in range(1, K + 1):
        c = 8 if k == K else 4
        th.append((1 + math.sqrt(1 + c * th[-1] ** 2)) / 2)
    return tuple(th)


def ogm(L, K):
    """Optimized gradient method with budget K. State (x^k, y^k); gradient at x^k.

    The matrices at k = K only serve to evaluate y^K = x^K; A_K and B_K are set
    to a plain gradient step since no theta_{K+1} exists.
    """
    if K < 1 or int(K) != K:
        raise ValueError("OGM budget K must be a positive integer")
    K = int(K)
    th = ogm_thetas(K)

    def provider(k):
        if k < K:
            a = (th[k] - 1) / th[k + 1]
            b = th[k] / th[k + 1]
        else:
            a = b = 0.0
        A = [[1 + a, -a], [1, 0]]
        B = [[-(1 + a + b) / L], [-1 / L]]
        return np.array(A), np.array(B), np.array([[1.0, 0.0]]), np.zeros((1, 1))

    return AlgorithmSpec(2, (1,), (1,), provider, stationary=False, name="ogm",
                         params={"L": L, "K": K}, budget=K)


def douglas_rachford(gamma, lam):
    """x^{k+1} = x^k + lam (y_2^k - y_1^k) with y_1 = J_{gamma G_1}(x),
    y_2 = J_{gamma G_2}(2 y_1 - x); resolvents eliminated via u_i in G_i(y_i)."""
    B = [[-lam * gamma, -lam * gamma]]
    D = [[-gamma, 0], [-2 * gamma, -gamma]]
    return AlgorithmSpec(1, (1, 1), (), _const([[1]], B, [[1], [1]], D),
                         name="douglas_rachford", params={"gamma": gamma, "lambda": lam})


def chambolle_pock(tau, sigma, theta):
    """Primal-dual method on f_1 + f_2, state (primal, dual)."""
    A = [[1, -tau], [0, 0]]
    B = [[-tau, 0], [0, 1]]
    C = [[1, -tau], [1, 1 / sigma - tau * (1 + theta)]]
    D = [[-tau, 0], [-tau * (1 + theta), -1 / sigma]]
    return AlgorithmSpec(2, (1, 1), (1, 2), _const(A, B, C, D), name="chambolle_pock",
                         params={"tau": tau, "sigma": sigma, "theta": theta})


_BUILDERS = {
    "gradient": (gradient, ("gamma",)),
    "heavy_ball": (heavy_ball, ("gamma", "delta")),
    "nesterov_momentum": (nesterov_momentum, ("gamma", "delta")),
    "nesterov_fgm": (nesterov_fgm, ("gamma",)),
    "ogm": (ogm, ("L", "K")),
    "douglas_rachford": (douglas_rachford, ("gamma", "lambda")),
    "chambolle_pock": (chambolle_pock, ("tau", "sigma", "theta")),
}
_POSITIVE = {"gamma", "L", "K", "tau", "sigma", "lambda"}

ALGORITHMS = tuple(_BUILDERS)


def make_algorithm(name: str, params: dict, I_func=None) -> AlgorithmSpec:
    """Build a named method. ``I_func`` overrides which components are functions
    (e.g. Douglas-Rachford on two convex functions uses ``I_func=(1, 2)``)."""
    if name not in _BUILDERS:
        raise ValueError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
    builder, names = _BUILDERS[name]
    if set(params) != set(names):
        raise ValueError(f"{name} expects parameters {names}, got {tuple(params)}")
    for key in names:
        value = params[key]
        if not np.isfinite(value) or (key in _POSITIVE and value <= 0):
            raise ValueError(f"{name}: invalid value {key}={value}")
    alg = builder(*(params[key] for key in names))
    return alg if I_func is None else with_partition(alg, I_func)


def with_partition(alg: AlgorithmSpec, I_func) -> AlgorithmSpec:
    return AlgorithmSpec(alg.n, alg.mbars, tuple(sorted(I_func)), alg.provider,
                         alg.stationary, alg.name, alg.params, alg.budget)
