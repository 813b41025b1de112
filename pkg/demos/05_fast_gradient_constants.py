"""
Finite-budget constants for accelerated methods
===============================================

Chain Lyapunov inequalities from |x^0 - x*|^2 to f(x^K) - f* and minimize
the constant c. For the fast gradient method the result sits below the
classical bound 1/(2 lambda_K^2); for the optimized gradient method it meets
1/(2 theta_K^2), which is known to be tight.
"""

from lyapcert import SmoothConvex, make_problem
from lyapcert.algorithms import fgm_lambda, nesterov_fgm, ogm, ogm_thetas
from lyapcert.lyap_dependent import (
    dep_params_distance, dep_params_funcval, make_dep_params, verify_dependent,
)

problem = make_problem([SmoothConvex(1)])

print(f"{'K':>3} {'c (FGM)':>11} {'1/(2 lam^2)':>12} {'c (OGM)':>11} {'1/(2 th^2)':>11}")
for K in range(1, 11):
    fgm = nesterov_fgm(1)
    # the second evaluation point of this method is x^k itself
    par = make_dep_params(fgm, K, dep_params_distance(fgm, 0, 1, 2), dep_params_funcval(fgm, K, 2))
    _, c_fgm = verify_dependent(problem, fgm, par)

    opt = ogm(1, K)
    par = make_dep_params(opt, K, dep_params_distance(opt, 0), dep_params_funcval(opt, K))
    _, c_ogm = verify_dependent(problem, opt, par)

    print(f"{K:3d} {c_fgm:11.6f} {1 / (2 * fgm_lambda(K) ** 2):12.6f} "
          f"{c_ogm:11.6f} {1 / (2 * ogm_thetas(K)[K] ** 2):11.6f}")
