"""Shared test utilities: evaluate interpolation conditions on concrete data."""

import numpy as np

import lyapcert.interpolation as ic

# filled by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []

from lyapcert.interpolation import STAR, enumerate_conditions, condition_value

FAMILIES = {
    "Convex": ic.Convex(),
    "StronglyConvex": ic.StronglyConvex(0.5),
    "WeaklyConvex": ic.WeaklyConvex(0.7),
    "Smooth": ic.Smooth(1.5),
    "SmoothConvex": ic.SmoothConvex(2),
    "SmoothStronglyConvex": ic.SmoothStronglyConvex(0.3, 2),
    "SmoothWeaklyConvex": ic.SmoothWeaklyConvex(0.4, 1),
    "GradientDominated": ic.GradientDominated(0.5),
    "MaximallyMonotone": ic.MaximallyMonotone(),
    "StronglyMonotone": ic.StronglyMonotone(0.6),
    "LipschitzOperator": ic.LipschitzOperator(1.5),
    "Cocoercive": ic.Cocoercive(0.8),
    "StronglyMonotone+Lipschitz": ic.Component((ic.StronglyMonotone(1), ic.LipschitzOperator(2))),
}


def worst_condition(comp, member, y_star, u_star, F_star, rng, npts=3):
    """Largest violation of every condition of ``comp`` on random points of ``member``.

    Inequalities count positive values, equalities absolute values.
    """
    d = y_star.size
    ys = {(1, k): rng.standard_normal(d) * 2 for k in range(npts)}
    ys[STAR] = y_star
    us = {lab: member.slope(y) for lab, y in ys.items()}
    us[STAR] = u_star
    Fs = {lab: member.value(y) for lab, y in ys.items()}
    Fs[STAR] = F_star
    worst = -np.inf
    for cond in enumerate_conditions(comp, 1, 0, npts - 1, 1):
        a, b = cond.points
        F = None if cond.a is None else (Fs[a], Fs[b])
        v = condition_value(cond, (ys[a], ys[b]), (us[a], us[b]), F)
        worst = max(worst, abs(v) if cond.kind == "eq" else v)
    return worst


def random_algorithm(name, rng):
    """One random valid parameterization of a built-in method."""
    from lyapcert.algorithms import make_algorithm

    u = lambda lo, hi: float(rng.uniform(lo, hi))
    params = {
        "gradient": lambda: {"gamma": u(0.1, 2)},
        "heavy_ball": lambda: {"gamma": u(0.1, 2), "delta": u(-0.5, 0.9)},
        "nesterov_momentum": lambda: {"gamma": u(0.1, 2), "delta": u(-0.5, 0.9)},
        "nesterov_fgm": lambda: {"gamma": u(0.1, 2)},
        "ogm": lambda: {"L": u(0.5, 2), "K": int(rng.integers(4, 11))},
        "douglas_rachford": lambda: {"gamma": u(0.1, 2), "lambda": u(0.1, 1.9)},
        "chambolle_pock": lambda: {"tau": u(0.1, 2), "sigma": u(0.1, 2), "theta": u(0, 1)},
    }[name]()
    return make_algorithm(name, params)


def selection_error(alg, traj, hz):
    """Max deviation between selector products and the named trajectory pieces."""
    from lyapcert.oracle import chi_window, zeta_window
    from lyapcert.structure import Stack

    st = Stack(alg, hz)
    Z = zeta_window(traj, alg, hz)
    err = 0.0
    for k in range(hz[0], hz[1] + 1):
        err = max(err, np.abs(st.X(k) @ Z - traj.x[k]).max(),
                  np.abs(st.Y(k) @ Z - traj.y[k]).max(),
                  np.abs(st.U(k) @ Z - traj.u[k]).max())
    err = max(err, np.abs(st.X(hz[1] + 1) @ Z - traj.x[hz[1] + 1]).max())
    err = max(err, np.abs(st.Y_star() @ Z - traj.y_star).max(),
              np.abs(st.U_star() @ Z - traj.u_star).max())
    if alg.m_func:
        chi = chi_window(traj, alg, hz)
        comp_of = np.repeat(np.arange(1, alg.m + 1), alg.mbars)
        fidx = [r for r in range(alg.mbar) if comp_of[r] in alg.I_func]
        for k in range(hz[0], hz[1] + 1):
            for i in alg.I_func:
                first = int(np.flatnonzero(comp_of == i)[0])
                for j in range(1, alg.mbars[i - 1] + 1):
                    slot = fidx.index(first + j - 1)
                    err = max(err, abs(st.F(i, j, k) @ chi - traj.F[k][slot]))
        for kappa, i in enumerate(alg.I_func):
            err = max(err, abs(st.F(i, STAR) @ chi - traj.F_star[kappa]))
    return float(err)


def theta_error(alg, traj, h, alpha, k=0):
    """Max deviation of every shift map from the window it is meant to select."""
    from lyapcert.oracle import chi_window, zeta_window
    from lyapcert.structure import build_thetas

    cases = {
        "C1_0": ((0, h + alpha + 1), (0, h)),
        "C1_1": ((0, h + alpha + 1), (alpha + 1, alpha + 1 + h)),
        "C4_0": ((0, h + alpha + 2), (0, h + alpha + 1)),
        "C4_1": ((0, h + alpha + 2), (1, h + alpha + 2)),
        "dep_0": ((k, k + 1), (k, k)),
        "dep_1": ((k, k + 1), (k + 1, k + 1)),
    }
    err = 0.0
    for which, (big, small) in cases.items():
        Th, th = build_thetas(alg, h, alpha, which, k)
        err = max(err, np.abs(Th @ zeta_window(traj, alg, big) - zeta_window(traj, alg, small)).max())
        if th is not None:
            err = max(err, np.abs(th @ chi_window(traj, alg, big) - chi_window(traj, alg, small)).max())
    return float(err)


def problem_for(alg):
    """A problem whose component kinds match the algorithm layout."""
    from lyapcert import make_problem
    from lyapcert.interpolation import MaximallyMonotone, SmoothStronglyConvex

    return make_problem([SmoothStronglyConvex(0.5, 1.5) if i in alg.I_func else MaximallyMonotone()
                         for i in range(1, alg.m + 1)])
