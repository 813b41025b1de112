"""Selection and stacking matrices over a window of iterations.

For a horizon [k_lo, k_hi] the stacked Hilbert-space variable is

    zeta = (x^{k_lo}, u^{k_lo}, ..., u^{k_hi}, u_1*, ..., u_{m-1}*, y*)

of length n + (k_hi - k_lo + 1) m̄ + m, and the stacked function values are

    chi = (F^{k_lo}, ..., F^{k_hi}, F*)

of length (k_hi - k_lo + 1) m̄_func + m_func. Every matrix below acts on
zeta (or chi) by left multiplication, one row per Hilbert-space vector.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np

from .algorithms import AlgorithmSpec, get_ABCD
from .interpolation import STAR


class Horizon(NamedTuple):
    lo: int
    hi: int


def _check_horizon(hz) -> Horizon:
    hz = Horizon(*hz)
    if not 0 <= hz.lo <= hz.hi:
        raise ValueError(f"invalid horizon [{hz.lo}, {hz.hi}]")
    return hz


def dim_zeta(alg: AlgorithmSpec, hz) -> int:
    return alg.n + (hz[1] - hz[0] + 1) * alg.mbar + alg.m


def dim_chi(alg: AlgorithmSpec, hz) -> int:
    return (hz[1] - hz[0] + 1) * alg.mbar_func + alg.m_func


def n_matrix(m: int) -> np.ndarray:
    """[I_{m-1}; -1^T], mapping (u_1*, ..., u_{m-1}*) to all m star slopes."""
    return np.vstack([np.eye(m - 1), -np.ones((1, m - 1))])


class Stack:
    """All selectors for one algorithm and horizon; X matrices are cached."""

    def __init__(self, alg: AlgorithmSpec, hz):
        self.alg = alg
        self.hz = _check_horizon(hz)
        self.dz = dim_zeta(alg, self.hz)
        self.dc = dim_chi(alg, self.hz)
        self._X = {}
        self._abcd = {}
        offs = np.cumsum((0,) + tuple(alg.mbars))
        self._p_off = {i: int(offs[i - 1]) for i in range(1, alg.m + 1)}
        f_off, acc = {}, 0
        for i in alg.I_func:
            f_off[i] = acc
            acc += alg.mbars[i - 1]
        self._f_off = f_off
        self._kappa = {i: r for r, i in enumerate(sorted(alg.I_func))}

    def abcd(self, k):
        if k not in self._abcd:
            self._abcd[k] = get_ABCD(self.alg, k)
        return self._abcd[k]

    def _range(self, k, extra=0):
        if not self.hz.lo <= k <= self.hz.hi + extra:
            raise ValueError(f"iteration {k} outside [{self.hz.lo}, {self.hz.hi + extra}]")

    def U(self, k) -> np.ndarray:
        self._range(k)
        mb = self.alg.mbar
        out = np.zeros((mb, self.dz))
        c0 = self.alg.n + (k - self.hz.lo) * mb
        out[:, c0:c0 + mb] = np.eye(mb)
        return out

    def U_star(self) -> np.ndarray:
        m = self.alg.m
        out = np.zeros((m, self.dz))
        c0 = self.dz - m
        out[:, c0:c0 + m - 1] = n_matrix(m)
        return out

    def Y_star(self) -> np.ndarray:
        out = np.zeros((self.alg.m, self.dz))
        out[:, -1] = 1.0
        return out

    def X(self, k) -> np.ndarray:
        self._range(k, extra=1)
        if k not in self._X:
            if k == self.hz.lo:
                X = np.zeros((self.alg.n, self.dz))
                X[:, :self.alg.n] = np.eye(self.alg.n)
            else:
                A, B, _, _ = self.abcd(k - 1)
                X = A @ self.X(k - 1) + B @ self.U(k - 1)
            self._X[k] = X
        return self._X[k]

    def Y(self, k) -> np.ndarray:
        self._range(k)
        _, _, C, D = self.abcd(k)
        return C @ self.X(k) + D @ self.U(k)

    def P(self, i, j) -> np.ndarray:
        """Unit row picking evaluation j of component i (or the star slot)."""
        if not 1 <= i <= self.alg.m:
            raise ValueError(f"component index {i} out of range")
        if j == STAR:
            out = np.zeros(self.alg.m)
            out[i - 1] = 1.0
            return out
        if not 1 <= j <= self.alg.mbars[i - 1]:
            raise ValueError(f"evaluation index {j} out of range for component {i}")
        out = np.zeros(self.alg.mbar)
        out[self._p_off[i] + j - 1] = 1.0
        return out

    def F(self, i, j, k=None) -> np.ndarray:
        """Unit row of length dim_chi picking F_{i,j}^k, or F_i* when j is STAR."""
        if i not in self._f_off:
            raise ValueError(f"component {i} is not a function component")
        out = np.zeros(self.dc)
        nblk = self.hz.hi - self.hz.lo + 1
        if j == STAR:
            out[nblk * self.alg.mbar_func + self._kappa[i]] = 1.0
            return out
        self._range(k)
        if not 1 <= j <= self.alg.mbars[i - 1]:
            raise ValueError(f"evaluation index {j} out of range for component {i}")
        out[(k - self.hz.lo) * self.alg.mbar_func + self._f_off[i] + j - 1] = 1.0
        return out

    def y_row(self, i, label) -> np.ndarray:
        if label == STAR:
            return self.P(i, STAR) @ self.Y_star()
        j, k = label
        return self.P(i, j) @ self.Y(k)

    def u_row(self, i, label) -> np.ndarray:
        if label == STAR:
            return self.P(i, STAR) @ self.U_star()
        j, k = label
        return self.P(i, j) @ self.U(k)

    def f_row(self, i, label) -> np.ndarray:
        if label == STAR:
            return self.F(i, STAR)
        j, k = label
        return self.F(i, j, k)

    def E(self, i, labels) -> np.ndarray:
        """y-rows of every label, then u-rows of every label."""
        return np.vstack([self.y_row(i, l) for l in labels] + [self.u_row(i, l) for l in labels])

    def lift(self, cond):
        """Return (W, f) with Q(W, zeta) + f^T chi equal to the condition value."""
        E = self.E(cond.i, cond.points)
        W = E.T @ cond.M @ E
        W = 0.5 * (W + W.T)
        f = None
        if cond.a is not None:
            f = np.vstack([self.f_row(cond.i, l) for l in cond.points]).T @ cond.a
        return W, f


def build_X(alg, hz, k):
    return Stack(alg, hz).X(k)


def build_Y(alg, hz, k):
    return Stack(alg, hz).Y(k)


def build_Y_star(alg, hz):
    return Stack(alg, hz).Y_star()


def build_U(alg, hz, k):
    return Stack(alg, hz).U(k)


def build_U_star(alg, hz):
    return Stack(alg, hz).U_star()


def build_P(alg, i, j):
    return Stack(alg, (0, 0)).P(i, j)


def build_F(alg, i, j, k, hz):
    return Stack(alg, hz).F(i, j, k)


def lift_condition(cond, alg, hz):
    return Stack(alg, hz).lift(cond)


def build_thetas(alg: AlgorithmSpec, h: int, alpha: int, which: str, k: int = 0):
    """Shift maps (Theta, theta) between stacked windows.

    which = "C1_0"/"C1_1": windows of length h+1 inside [0, h+alpha+1],
    taken at offset 0 and alpha+1. "C4_0"/"C4_1": windows of length
    h+alpha+2 inside [0, h+alpha+2], at offset 0 and 1. "dep_0"/"dep_1":
    single-iterate windows inside [k, k+1], at offset 0 and 1.
    theta is None when there are no function components.
    """
    if h < 0 or alpha < 0:
        raise ValueError("h and alpha must be >= 0")
    family, _, side = which.partition("_")
    if family == "C1":
        hz, width, shift = (0, h + alpha + 1), h + 1, alpha + 1
    elif family == "C4":
        hz, width, shift = (0, h + alpha + 2), h + alpha + 2, 1
    elif family == "dep":
        if k < 0:
            raise ValueError("iteration index must be >= 0")
        hz, width, shift = (k, k + 1), 1, 1
    else:
        raise ValueError(f"unknown shift map {which!r}")
    if side not in ("0", "1"):
        raise ValueError(f"unknown shift map {which!r}")
    st = Stack(alg, hz)
    n, mb, m = alg.n, alg.mbar, alg.m
    mbf, mf = alg.mbar_func, alg.m_func
    nblk = hz[1] - hz[0] + 1
    rows = n + width * mb + m
    Th = np.zeros((rows, st.dz))
    if side == "0":
        Th[:n + width * mb, :n + width * mb] = np.eye(n + width * mb)
    else:
        Th[:n] = st.X(hz[0] + shift)
        c0 = n + shift * mb
        Th[n:n + width * mb, c0:c0 + width * mb] = np.eye(width * mb)
    Th[rows - m:, st.dz - m:] = np.eye(m)
    th = None
    if mf:
        th = np.zeros((width * mbf + mf, nblk * mbf + mf))
        c0 = 0 if side == "0" else shift * mbf
        th[:width * mbf, c0:c0 + width * mbf] = np.eye(width * mbf)
        th[width * mbf:, nblk * mbf:] = np.eye(mf)
    return Th, th



def symmetry_generators(alg: AlgorithmSpec, hz, atol: float = 1e-10) -> list:
    """Directions in which whole trajectories can move without changing any
    difference y_i - y_j or u_i - u_j of points belonging to one component.

    Two families are tried: a common translation of every y (slopes fixed),
    and a tilt adding c_i to every slope of operator component i with
    sum_i c_i = 0. Each generator is (x0, u_shift, ustar_shift, y_shift), with
    x0 a state offset that is consistent with every (A_k, B_k, C_k, D_k) on
    the horizon, so the same generator embeds into every sub-window.
    """
    st = Stack(alg, hz)
    n, m, mb = alg.n, alg.m, alg.mbar
    comp_of = np.repeat(np.arange(m), alg.mbars)
    ops = list(alg.I_op)
    cands = [(np.zeros(m), 1.0)]
    for i in ops[:-1]:
        c = np.zeros(m)
        c[i - 1], c[ops[-1] - 1] = 1.0, -1.0
        cands.append((c, 0.0))
    out = []
    for c, shift in cands:
        u = c[comp_of]
        rows, rhs = [], []
        for k in range(st.hz.lo, st.hz.hi + 1):
            A, B, C, D = st.abcd(k)
            rows += [C, A - np.eye(n)]
            rhs += [shift * np.ones(mb) - D @ u, -B @ u]
        G, r = np.vstack(rows), np.concatenate(rhs)
        x0 = np.linalg.lstsq(G, r, rcond=None)[0]
        if np.max(np.abs(G @ x0 - r)) <= atol * max(1.0, np.abs(r).max()):
            out.append((x0, u, c[:m - 1], shift))
    return out


def embed_symmetry(alg: AlgorithmSpec, gen, hz) -> np.ndarray:
    """zeta for one symmetry generator over the window hz."""
    x0, u, ustar, shift = gen
    hz = _check_horizon(hz)
    z = np.zeros(dim_zeta(alg, hz))
    z[:alg.n] = x0
    nblk = hz.hi - hz.lo + 1
    z[alg.n:alg.n + nblk * alg.mbar] = np.tile(u, nblk)
    z[len(z) - alg.m:len(z) - 1] = ustar
    z[-1] = shift
    return z


def symmetry_basis(alg: AlgorithmSpec, gens, hz) -> Optional[np.ndarray]:
    """Columns embed_symmetry(g) for each generator, or None if there are none."""
    if not gens:
        return None
    return np.column_stack([embed_symmetry(alg, g, hz) for g in gens])
