"""Iteration-independent Lyapunov analysis.

With V(Q, q, k) a quadratic over (x^k, u^k..u^{k+h}, u*, y*) plus a linear
term in (F^k..F^{k+h}, F*), and R(S, s, k) the same over a window of length
h+alpha+2, search for (Q, q, S, s) such that

    C1: V(Q, q, k+alpha+1) <= rho V(Q, q, k) - R(S, s, k)
    C2: V(Q, q, k) >= V(P, p, k)
    C3: R(S, s, k) >= R(T, t, k)
    C4: R(S, s, k+1) <= R(S, s, k)

along every trajectory of the algorithm on every problem instance.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import sdp
from .sdp import Affine, NumericalFailure, SDPModel, Verdict
from .interpolation import STAR
from .structure import Stack, build_thetas, embed_symmetry, symmetry_basis, symmetry_generators


@dataclass
class IndepParams:
    P: np.ndarray
    p: Optional[np.ndarray]
    T: np.ndarray
    t: Optional[np.ndarray]
    rho: float = 1.0
    h: int = 0
    alpha: int = 0
    Q_equals_P: bool = False
    S_equals_T: bool = False
    q_equals_p: bool = False
    s_equals_t: bool = False
    remove_C2: bool = False
    remove_C3: bool = False
    remove_C4: bool = True

    def with_(self, **kw) -> "IndepParams":
        return replace(self, **kw)


def v_dims(alg, h):
    return alg.n + (h + 1) * alg.mbar + alg.m, (h + 1) * alg.mbar_func + alg.m_func


def r_dims(alg, h, alpha):
    return alg.n + (h + alpha + 2) * alg.mbar + alg.m, (h + alpha + 2) * alg.mbar_func + alg.m_func


def _zeros(alg, h, alpha, **kw):
    nv, cv = v_dims(alg, h)
    nr, cr = r_dims(alg, h, alpha)
    func = alg.m_func > 0
    return IndepParams(np.zeros((nv, nv)), np.zeros(cv) if func else None,
                       np.zeros((nr, nr)), np.zeros(cr) if func else None, h=h, alpha=alpha, **kw)


def _check_hat(h, alpha):
    if h < 0 or alpha < 0:
        raise ValueError("h and alpha must be >= 0")


def _outer(row):
    return np.outer(row, row)


def params_linear_distance(alg, h=0, alpha=0, i=1, j=1, tau=0) -> IndepParams:
    """V(P, p, k) = |y_{i,j}^{k+tau} - y*|^2."""
    _check_hat(h, alpha)
    if not 0 <= tau <= h:
        raise ValueError(f"tau must lie in [0, {h}]")
    st = Stack(alg, (0, h))
    par = _zeros(alg, h, alpha)
    par.P = _outer(st.P(i, j) @ st.Y(tau) - st.P(i, STAR) @ st.Y_star())
    return par


def params_linear_funcval(alg, h=0, alpha=0, j=1, tau=0) -> IndepParams:
    """V(P, p, k) = f(y_{1,j}^{k+tau}) - f(y*) for single-function problems."""
    _check_hat(h, alpha)
    if alg.m != 1 or alg.m_func != 1:
        raise ValueError("function-value measure needs m = m_func = 1")
    if not 0 <= tau <= h:
        raise ValueError(f"tau must lie in [0, {h}]")
    st = Stack(alg, (0, h))
    par = _zeros(alg, h, alpha)
    par.p = st.F(1, j, tau) - st.F(1, STAR)
    return par


def params_sublinear_optimality(alg, h=0, alpha=0, tau=0) -> IndepParams:
    """R(T, t, k) = |sum_i u_{i,1}^{k+tau}|^2 + sum_{i>=2} |y_{1,1}^{k+tau} - y_{i,1}^{k+tau}|^2."""
    _check_hat(h, alpha)
    if not 0 <= tau <= h + alpha + 1:
        raise ValueError(f"tau must lie in [0, {h + alpha + 1}]")
    st = Stack(alg, (0, h + alpha + 1))
    par = _zeros(alg, h, alpha)
    U, Y = st.U(tau), st.Y(tau)
    if alg.m == 1:
        par.T = _outer(st.P(1, 1) @ U)
    else:
        par.T = _outer(sum(st.P(i, 1) for i in range(1, alg.m + 1)) @ U)
        for i in range(2, alg.m + 1):
            par.T += _outer((st.P(1, 1) - st.P(i, 1)) @ Y)
    return par


def params_sublinear_fpr(alg, h=0, alpha=0, tau=0) -> IndepParams:
    """R(T, t, k) = |x^{k+tau+1} - x^{k+tau}|^2."""
    _check_hat(h, alpha)
    if not 0 <= tau <= h + alpha + 1:
        raise ValueError(f"tau must lie in [0, {h + alpha + 1}]")
    st = Stack(alg, (0, h + alpha + 1))
    par = _zeros(alg, h, alpha)
    D = st.X(tau + 1) - st.X(tau)
    par.T = D.T @ D
    return par


def params_sublinear_funcval(alg, h=0, alpha=0, j=1, tau=0) -> IndepParams:
    """R(T, t, k) = f(y_{1,j}^{k+tau}) - f(y*)."""
    _check_hat(h, alpha)
    if alg.m != 1 or alg.m_func != 1:
        raise ValueError("function-value measure needs m = m_func = 1")
    if not 0 <= tau <= h + alpha + 1:
        raise ValueError(f"tau must lie in [0, {h + alpha + 1}]")
    st = Stack(alg, (0, h + alpha + 1))
    par = _zeros(alg, h, alpha)
    par.t = st.F(1, j, tau) - st.F(1, STAR)
    return par


def _check_sizes(alg, par: IndepParams):
    nv, cv = v_dims(alg, par.h)
    nr, cr = r_dims(alg, par.h, par.alpha)
    if par.P.shape != (nv, nv) or par.T.shape != (nr, nr):
        raise ValueError(f"P must be {nv}x{nv} and T {nr}x{nr}; got {par.P.shape}, {par.T.shape}")
    if alg.m_func:
        if par.p is None or par.t is None or par.p.shape != (cv,) or par.t.shape != (cr,):
            raise ValueError(f"p must have length {cv} and t length {cr}")
    if not 0.0 <= par.rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")


def _annihilates(M, z, tol=1e-10):
    return np.abs(M @ z).max() <= tol * max(1.0, np.abs(M).max())


def shift_kernels(alg, par: IndepParams):
    """Symmetry directions of the V, R and C4 windows, or None.

    Every interpolation condition is blind to a common translation of all
    points and to opposite tilts of operator slopes. When P and T are blind
    to such a generator too (true for every built-in measure), Q and S may be
    taken blind to it as well: compressing them onto the complement keeps
    every constraint satisfied, since the shift maps commute with it.
    """
    h, alpha = par.h, par.alpha
    wins = ((0, h), (0, h + alpha + 1), (0, h + alpha + 2))
    gens = [g for g in symmetry_generators(alg, wins[2])
            if _annihilates(par.P, embed_symmetry(alg, g, wins[0]))
            and _annihilates(par.T, embed_symmetry(alg, g, wins[1]))]
    if not gens:
        return None
    return tuple(symmetry_basis(alg, gens, w) for w in wins)


def build_model(problem, alg, par: IndepParams):
    """Return (model, handles) for the iteration-independent feasibility SDP."""
    if not alg.stationary:
        raise ValueError(f"{alg.name} is not stationary; use the iteration-dependent analysis")
    sdp.check_compatible(problem, alg)
    _check_sizes(alg, par)
    h, alpha, rho = par.h, par.alpha, par.rho
    nv, cv = v_dims(alg, h)
    nr, cr = r_dims(alg, h, alpha)
    func = alg.m_func > 0
    model = SDPModel()
    Q = Affine.constant(par.P) if par.Q_equals_P else model.symmetric("Q", nv)
    S = Affine.constant(par.T) if par.S_equals_T else model.symmetric("S", nr)
    q = s = None
    if func:
        q = Affine.constant(par.p) if par.q_equals_p else model.vector("q", cv)
        s = Affine.constant(par.t) if par.s_equals_t else model.vector("s", cr)

    kern = shift_kernels(alg, par)
    zv = zr = z4 = None
    if kern is not None:
        zv, zr, z4 = kern
        if not par.Q_equals_P:
            sdp.invariance_constraint(model, Q, zv, "Q:shift")
        if not par.S_equals_T:
            sdp.invariance_constraint(model, S, zr, "S:shift")

    # C1 over [0, h+alpha+1]
    Th0, th0 = build_thetas(alg, h, alpha, "C1_0")
    Th1, th1 = build_thetas(alg, h, alpha, "C1_1")
    W = Q.congruence(Th1) - rho * Q.congruence(Th0) + S
    w = (q.linear_map(th1.T) - rho * q.linear_map(th0.T) + s) if func else None
    sdp.assemble_dpep(model, problem, alg, (0, h + alpha + 1), W, w, "C1", zr)

    if not par.remove_C2 and not (par.Q_equals_P and (par.q_equals_p or not func)):
        W = Affine.constant(par.P) - Q
        w = (Affine.constant(par.p) - q) if func else None
        sdp.assemble_dpep(model, problem, alg, (0, h), W, w, "C2", zv)

    if not par.remove_C3 and not (par.S_equals_T and (par.s_equals_t or not func)):
        W = Affine.constant(par.T) - S
        w = (Affine.constant(par.t) - s) if func else None
        sdp.assemble_dpep(model, problem, alg, (0, h + alpha + 1), W, w, "C3", zr)

    if not par.remove_C4:
        Th0, th0 = build_thetas(alg, h, alpha, "C4_0")
        Th1, th1 = build_thetas(alg, h, alpha, "C4_1")
        W = S.congruence(Th1) - S.congruence(Th0)
        w = (s.linear_map(th1.T) - s.linear_map(th0.T)) if func else None
        sdp.assemble_dpep(model, problem, alg, (0, h + alpha + 2), W, w, "C4", z4)
    return model


def verify_independent(problem, alg, par: IndepParams, tol: float = sdp.DEFAULT_TOL) -> Verdict:
    """Check the sufficient SDP condition for (C1)-(C4) at the given rho.

    The certificate holds Q, q, S, s (aliased values are filled in) and all
    multipliers.
    """
    model = build_model(problem, alg, par)
    verdict = sdp.solve(model, tol=tol)
    if verdict.feasible:
        cert = verdict.certificate
        if par.Q_equals_P:
            cert["Q"] = par.P.copy()
        if par.S_equals_T:
            cert["S"] = par.T.copy()
        if alg.m_func:
            if par.q_equals_p:
                cert["q"] = par.p.copy()
            if par.s_equals_t:
                cert["s"] = par.t.copy()
        cert["rho"] = par.rho
    return verdict


@dataclass
class BisectionResult:
    rho: Optional[float]
    bracket: tuple
    verdict: Optional[Verdict]
    n_solves: int


def bisect_rho(problem, alg, par: IndepParams, lower=0.0, upper=1.0, tol=1e-12,
               solver_tol: float = sdp.DEFAULT_TOL) -> BisectionResult:
    """Smallest rho in [lower, upper] for which the certificate exists.

    Returns ``rho=None`` when even ``upper`` is infeasible. A numerical failure
    at a midpoint is retried once at the three-quarter point of the bracket; a
    second failure raises NumericalFailure whose ``result`` attribute holds
    the last verified bracket. Interior-point accuracy limits the attainable
    resolution to roughly 1e-8 in rho, so tolerances much below that usually
    end in such a failure.
    """
    count = 0

    def run(rho):
        nonlocal count
        count += 1
        return verify_independent(problem, alg, par.with_(rho=rho), tol=solver_tol)

    def fail(rho, v, lo, hi, best):
        exc = NumericalFailure(f"numerical failure at rho={rho!r}: {v.diagnostics}")
        exc.result = BisectionResult(hi, (lo, hi), best, count)
        return exc

    top = run(upper)
    if top.status == sdp.NUMERICAL_FAILURE:
        raise fail(upper, top, lower, upper, None)
    if not top.feasible:
        return BisectionResult(None, (lower, upper), top, count)
    lo, hi, best = lower, upper, top
    while hi - lo > max(tol, 4 * np.spacing(hi)):
        mid = 0.5 * (lo + hi)
        v = run(mid)
        if v.status == sdp.NUMERICAL_FAILURE:
            mid = lo + 0.75 * (hi - lo)
            v = run(mid)
            if v.status == sdp.NUMERICAL_FAILURE:
                raise fail(mid, v, lo, hi, best)
        if v.feasible:
            hi, best = mid, v
        else:
            lo = mid
    return BisectionResult(hi, (lo, hi), best, count)
