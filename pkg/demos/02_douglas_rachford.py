"""
Douglas-Rachford contraction over the step size
===============================================

Two monotone operators: G1 maximally monotone, G2 1-strongly monotone and
2-Lipschitz. For each step size gamma we bisect the smallest rho with
|y1^{k+1} - y*|^2 <= rho |y1^k - y*|^2 and then check the certificate
directly on simulated runs of random affine instances.
"""

import numpy as np

from lyapcert import Component, LipschitzOperator, MaximallyMonotone, StronglyMonotone, make_problem
from lyapcert.algorithms import douglas_rachford
from lyapcert.lyap_independent import bisect_rho, params_linear_distance
from lyapcert.oracle import independent_violations, run_trajectory, sample_instance

problem = make_problem([MaximallyMonotone(), Component((StronglyMonotone(1), LipschitzOperator(2)))])
lam = 2.0

print(f"{'gamma':>6} {'rho':>9} {'worst C1..C3 on 20 runs':>24}")
for gamma in (0.25, 0.5, 1.0, 2.0, 4.0):
    alg = douglas_rachford(gamma, lam)
    base = params_linear_distance(alg)
    res = bisect_rho(problem, alg, base, tol=1e-5)
    par = base.with_(rho=res.rho)

    # the certificate is a pair of matrices; evaluate its inequalities on
    # actual iterates, without going through any Gram matrix
    worst = -np.inf
    for seed in range(20):
        inst = sample_instance(problem, 3, seed=seed)
        x0 = np.random.default_rng(seed).standard_normal((1, 3))
        traj = run_trajectory(inst, alg, x0, 10)
        worst = max(worst, max(independent_violations(res.verdict.certificate, alg, par, traj).values()))
    print(f"{gamma:6.2f} {res.rho:9.5f} {worst:24.1e}")

# A full 100-point sweep is available through the command line:
#   lyapcert --config demos/configs/dr_rho_sweep.ini --out dr.csv
