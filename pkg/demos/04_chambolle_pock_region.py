"""
Where is Chambolle-Pock certified?
==================================

Scan the primal and dual step sizes at theta = 1 and record where a
summability certificate for |x^{k+1} - x^k|^2 exists, with no history
(h = alpha = 0) and with one step of history and overlap (h = alpha = 1).
"""

import numpy as np

from lyapcert import Convex, make_problem
from lyapcert.algorithms import chambolle_pock
from lyapcert.lyap_independent import params_sublinear_fpr, verify_independent

problem = make_problem([Convex(), Convex()])
steps = np.array([0.25, 0.5, 1.0, 1.5, 2.0])

for h in (0, 1):
    print(f"h = alpha = {h}    (rows tau, columns sigma; '#' certified)")
    print("      " + " ".join(f"{s:5.2f}" for s in steps))
    for tau in steps:
        marks = []
        for sigma in steps:
            alg = chambolle_pock(tau, sigma, 1.0)
            v = verify_independent(problem, alg, params_sublinear_fpr(alg, h=h, alpha=h).with_(rho=1))
            marks.append("#" if v.feasible else ".")
        print(f"{tau:5.2f} " + " ".join(f"{m:>5}" for m in marks))
    print()
