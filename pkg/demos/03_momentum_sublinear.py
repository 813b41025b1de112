"""
Sublinear certificates for momentum methods
===========================================

Heavy-ball and constant Nesterov momentum on 1-smooth convex functions.
With rho = 1 a feasible certificate shows that f(x^k) - f* is summable
against a residual; keeping the monotone-residual condition (C4) upgrades
the conclusion to o(1/k).
"""

import numpy as np

from lyapcert import SmoothConvex, make_problem
from lyapcert.algorithms import heavy_ball, nesterov_momentum
from lyapcert.lyap_independent import params_sublinear_funcval, verify_independent

problem = make_problem([SmoothConvex(1)])
np.set_printoptions(precision=4, suppress=True)

for alg in (heavy_ball(1, 0.5), nesterov_momentum(1, 0.5)):
    par = params_sublinear_funcval(alg).with_(rho=1, remove_C4=False)
    v = verify_independent(problem, alg, par)
    print(f"{alg.name}: {v.status} (solver {v.diagnostics['solver_status']}, "
          f"re-check {v.diagnostics['recheck']})")
    if v.feasible:
        print("  Q =\n", v.certificate["Q"])
        print("  q =", v.certificate["q"])

# Momentum that is too aggressive loses the certificate.
alg = heavy_ball(1.9, 0.9)
v = verify_independent(problem, alg, params_sublinear_funcval(alg).with_(rho=1, remove_C4=False))
print(f"heavy_ball(1.9, 0.9): {v.status}")
