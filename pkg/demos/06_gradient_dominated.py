"""
Gradient method without convexity
=================================

f is 0.5-gradient dominated (Polyak-Lojasiewicz) and 1-smooth but need not
be convex. The certified rate for f(x^k) - f* is bracketed by two elementary
facts: the descent lemma combined with the PL inequality gives
rho <= 1 - mu gamma (2 - L gamma), and one-dimensional quadratics give
rho >= max over a in [mu, L] of (1 - gamma a)^2.
"""

import numpy as np

from lyapcert import GradientDominated, Smooth, make_problem
from lyapcert.algorithms import gradient
from lyapcert.lyap_independent import bisect_rho, params_linear_funcval

mu, L = 0.5, 1.0
problem = make_problem([[GradientDominated(mu), Smooth(L)]])
curv = np.linspace(mu, L, 501)

print(f"{'gamma':>6} {'lower':>8} {'rho':>8} {'upper':>8}")
for gamma in np.linspace(0.25, 1.75, 7):
    alg = gradient(gamma)
    rho = bisect_rho(problem, alg, params_linear_funcval(alg), tol=1e-5).rho
    lower = np.max((1 - gamma * curv) ** 2)
    upper = 1 - mu * gamma * (2 - L * gamma)
    print(f"{gamma:6.2f} {lower:8.4f} {rho:8.4f} {upper:8.4f}")
