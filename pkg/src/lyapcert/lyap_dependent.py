"""Chained iteration-dependent Lyapunov analysis over a finite budget K.

V(k) = Q(Q_k, (x^k, u^k, u*, y*)) + q_k^T (F^k, F*). Given the endpoint
pairs (Q_0, q_0) and (Q_K, q_K), find the intermediate pairs and the smallest
c >= 0 with V(K) <= V(K-1) <= ... <= V(1) <= c V(0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import sdp
from .interpolation import STAR
from .sdp import Affine, SDPModel, Verdict
from .structure import Stack, build_thetas, embed_symmetry, symmetry_basis, symmetry_generators


@dataclass
class DepParams:
    K: int
    Q_0: np.ndarray
    Q_K: np.ndarray
    q_0: Optional[np.ndarray] = None
    q_K: Optional[np.ndarray] = None


def dims(alg):
    return alg.n + alg.mbar + alg.m, alg.mbar_func + alg.m_func


def _zero_pair(alg):
    nq, nc = dims(alg)
    return np.zeros((nq, nq)), (np.zeros(nc) if alg.m_func else None)


def dep_params_funcval(alg, k, j=1):
    """V(k) = f(y_{1,j}^k) - f(y*)."""
    if alg.m != 1 or alg.m_func != 1:
        raise ValueError("function-value measure needs m = m_func = 1")
    st = Stack(alg, (k, k))
    Q, _ = _zero_pair(alg)
    return Q, st.F(1, j, k) - st.F(1, STAR)


def dep_params_distance(alg, k, i=1, j=1):
    """V(k) = |y_{i,j}^k - y*|^2."""
    st = Stack(alg, (k, k))
    row = st.P(i, j) @ st.Y(k) - st.P(i, STAR) @ st.Y_star()
    Q, q = _zero_pair(alg)
    return np.outer(row, row), q


def dep_params_fpr(alg, k):
    """V(k) = |x^{k+1} - x^k|^2."""
    st = Stack(alg, (k, k))
    D = st.X(k + 1) - st.X(k)
    _, q = _zero_pair(alg)
    return D.T @ D, q


def dep_params_optimality(alg, k):
    """V(k) = |sum_i u_{i,1}^k|^2 + sum_{i>=2} |y_{1,1}^k - y_{i,1}^k|^2."""
    st = Stack(alg, (k, k))
    U, Y = st.U(k), st.Y(k)
    _, q = _zero_pair(alg)
    if alg.m == 1:
        row = st.P(1, 1) @ U
        return np.outer(row, row), q
    row = sum(st.P(i, 1) for i in range(1, alg.m + 1)) @ U
    Q = np.outer(row, row)
    for i in range(2, alg.m + 1):
        r = (st.P(1, 1) - st.P(i, 1)) @ Y
        Q += np.outer(r, r)
    return Q, q


def make_dep_params(alg, K, start, end) -> DepParams:
    """Convenience: ``start`` and ``end`` are (Q, q) pairs."""
    return DepParams(K, start[0], end[0], start[1], end[1])


def build_model(problem, alg, par: DepParams):
    if par.K < 1:
        raise ValueError("budget K must be >= 1")
    if alg.budget is not None and par.K > alg.budget:
        raise ValueError(f"{alg.name}: K={par.K} exceeds the algorithm budget {alg.budget}")
    sdp.check_compatible(problem, alg)
    nq, nc = dims(alg)
    func = alg.m_func > 0
    for name, M in (("Q_0", par.Q_0), ("Q_K", par.Q_K)):
        if np.shape(M) != (nq, nq):
            raise ValueError(f"{name} must be {nq}x{nq}, got {np.shape(M)}")
    if func:
        for name, v in (("q_0", par.q_0), ("q_K", par.q_K)):
            if v is None or np.shape(v) != (nc,):
                raise ValueError(f"{name} must have length {nc}")
    K = par.K
    model = SDPModel()
    # Invariance of the free Q_k under trajectory symmetries is without loss
    # when both endpoints share it (see lyap_independent.shift_kernels).
    gens = [g for g in symmetry_generators(alg, (0, K))
            if all(np.abs(M @ embed_symmetry(alg, g, (k, k))).max() <= 1e-10 * max(1.0, np.abs(M).max())
                   for M, k in ((par.Q_0, 0), (par.Q_K, K)))]
    shift = bool(gens)
    if shift:
        zs = [symmetry_basis(alg, gens, (k, k)) for k in range(K + 1)]
        zw = [symmetry_basis(alg, gens, (k, k + 1)) for k in range(K)]
    c = model.scalar("c", nonneg=True)
    Qs = {0: Affine.constant(par.Q_0), K: Affine.constant(par.Q_K)}
    qs = {0: Affine.constant(par.q_0), K: Affine.constant(par.q_K)} if func else {}
    for k in range(1, K):
        Qs[k] = model.symmetric(f"Q_{k}", nq)
        if shift:
            sdp.invariance_constraint(model, Qs[k], zs[k], f"Q_{k}:shift")
        if func:
            qs[k] = model.vector(f"q_{k}", nc)
    for k in range(K):
        Th0, th0 = build_thetas(alg, 0, 0, "dep_0", k)
        Th1, th1 = build_thetas(alg, 0, 0, "dep_1", k)
        nxt = Qs[k + 1].congruence(Th1)
        if k == 0:
            W = nxt - c.times(Th0.T @ par.Q_0 @ Th0)
        else:
            W = nxt - Qs[k].congruence(Th0)
        w = None
        if func:
            w = qs[k + 1].linear_map(th1.T)
            w = w - c.times(th0.T @ par.q_0) if k == 0 else w - qs[k].linear_map(th0.T)
        sdp.assemble_dpep(model, problem, alg, (k, k + 1), W, w, f"step{k}",
                          zw[k] if shift else None)
    model.minimize(c)
    return model


def verify_dependent(problem, alg, par: DepParams, tol: float = sdp.DEFAULT_TOL):
    """Minimize c over the chained certificate; returns (Verdict, c or None)."""
    model = build_model(problem, alg, par)
    verdict = sdp.solve(model, tol=tol)
    if not verdict.feasible:
        return verdict, None
    cert = verdict.certificate
    cert["Q_0"], cert["Q_%d" % par.K] = np.array(par.Q_0, float), np.array(par.Q_K, float)
    if alg.m_func:
        cert["q_0"], cert["q_%d" % par.K] = np.array(par.q_0, float), np.array(par.q_K, float)
    return verdict, cert["c"]
