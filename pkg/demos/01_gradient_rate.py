"""
Linear rate of the gradient method
==================================

Bisect the smallest contraction factor rho for which a quadratic Lyapunov
function certifies |x^{k+1} - x*|^2 <= rho |x^k - x*|^2 on smooth strongly
convex functions, and compare with the known tight value
max((1 - gamma mu)^2, (1 - gamma L)^2).
"""

import numpy as np

from lyapcert import SmoothStronglyConvex, make_problem
from lyapcert.algorithms import gradient
from lyapcert.lyap_independent import bisect_rho, params_linear_distance

mu, L = 0.5, 1.0
problem = make_problem([SmoothStronglyConvex(mu, L)])

print(f"{'gamma':>6} {'rho (SDP)':>12} {'rho (exact)':>12}")
for gamma in np.linspace(0.25, 1.75, 7):
    alg = gradient(gamma)
    # distance to the solution, no history (h = 0), one-step window (alpha = 0)
    res = bisect_rho(problem, alg, params_linear_distance(alg), tol=1e-6)
    exact = max((1 - gamma * mu) ** 2, (1 - gamma * L) ** 2)
    print(f"{gamma:6.2f} {res.rho:12.6f} {exact:12.6f}")
