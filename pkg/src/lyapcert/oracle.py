"""Concrete problem instances, trajectories and direct evaluation of the
stacked quadratic forms.

Everything here works on actual points in R^d, never on Gram matrices, so it
gives an independent check of the selection matrices and of certificates
returned by the SDP layer.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .algorithms import AlgorithmSpec, get_ABCD
from .interpolation import INF, Component, mu_L
from .structure import dim_chi, dim_zeta

_OPEN_SPAN = 2.0  # spectral width used when a class has no upper bound


# --- member families ---------------------------------------------------------

@dataclass
class Quadratic:
    """f(y) = y^T H y / 2 + b^T y + c."""

    H: np.ndarray
    b: np.ndarray
    c: float = 0.0
    kind = "func"

    def value(self, y):
        return float(0.5 * y @ self.H @ y + self.b @ y + self.c)

    def slope(self, y):
        return self.H @ y + self.b

    def implicit(self, rhs, s):
        """y with y = rhs + s * grad f(y)."""
        return _affine_implicit(self.H, self.b, rhs, s)


@dataclass
class AffineOperator:
    """G(y) = M y + b."""

    M: np.ndarray
    b: np.ndarray
    kind = "op"

    def value(self, y):
        return None

    def slope(self, y):
        return self.M @ y + self.b

    def implicit(self, rhs, s):
        return _affine_implicit(self.M, self.b, rhs, s)


@dataclass
class DoubleWell:
    """f(y) = a * sum_i (|y_i - c_i| - 1)^2, nonconvex with minimum value 0.

    |grad f|^2 = 4a f, so f is gradient dominated with constant 2a. The kink
    at y_i = c_i is assigned the slope of the right branch.
    """

    a: float
    center: np.ndarray
    kind = "func"

    def value(self, y):
        return float(self.a * np.sum((np.abs(y - self.center) - 1.0) ** 2))

    def slope(self, y):
        r = y - self.center
        sign = np.where(r >= 0, 1.0, -1.0)
        return 2.0 * self.a * (np.abs(r) - 1.0) * sign

    def implicit(self, rhs, s):
        if s > 0:
            raise ValueError("double-well step needs a nonpositive feedback coefficient")
        t = -s
        r = rhs - self.center
        sign = np.where(r >= 0, 1.0, -1.0)
        # proximal point of t*f, coordinatewise on the branch containing r
        return self.center + sign * (np.abs(r) + 2 * self.a * t) / (1 + 2 * self.a * t)


def _affine_implicit(M, b, rhs, s):
    lhs = np.eye(len(b)) - s * M
    if np.linalg.cond(lhs) > 1e12:
        raise np.linalg.LinAlgError("singular resolvent system")
    return np.linalg.solve(lhs, rhs + s * b)


# --- instances ---------------------------------------------------------------

@dataclass
class ConcreteInstance:
    members: list
    d: int
    y_star: np.ndarray
    u_star: np.ndarray  # (m, d), rows sum to zero
    F_star: np.ndarray  # one value per function component

    @property
    def m(self):
        return len(self.members)


def _func_interval(comp: Component):
    lo, hi = -INF, INF
    for cls in comp.classes:
        if cls.tag == "GradientDominated":
            continue
        mu, L = mu_L(cls)
        lo, hi = max(lo, mu), min(hi, L)
    return lo, hi


def _spectrum(rng, d, lo, hi):
    """d eigenvalues in [lo, hi]; both ends are hit when d >= 2."""
    ev = rng.uniform(lo, hi, size=d)
    if d >= 2:
        ev[:2] = lo, hi
    return rng.permutation(ev)


def _rotate(rng, ev):
    Qm, _ = np.linalg.qr(rng.standard_normal((len(ev), len(ev))))
    return (Qm * ev) @ Qm.T


def _sample_quadratic_H(comp: Component, d, rng):
    tags = {c.tag for c in comp.classes}
    lo, hi = _func_interval(comp)
    if "GradientDominated" in tags:
        mu_gd = next(c.get("mu_gd") for c in comp.classes if c.tag == "GradientDominated")
        top = hi if hi < INF else mu_gd + _OPEN_SPAN
        if top < mu_gd or lo > 0:
            # nonzero eigenvalues must be >= mu_gd; no zero allowed when lo > 0
            if max(lo, mu_gd) > top:
                raise ValueError("no quadratic member for this gradient-dominated class")
            return _rotate(rng, _spectrum(rng, d, max(lo, mu_gd), top))
        ev = _spectrum(rng, d, mu_gd, top)
        ev[rng.random(d) < 0.3] = 0.0
        return _rotate(rng, ev)
    if lo == -INF:
        raise ValueError("no quadratic member registered for this class")
    if hi == INF:
        hi = max(lo, 0.0) + _OPEN_SPAN
    return _rotate(rng, _spectrum(rng, d, lo, hi))


def _operator_bounds(comp: Component):
    mono, lip, coco = None, INF, None
    for cls in comp.classes:
        if cls.tag == "MaximallyMonotone":
            mono = max(mono or 0.0, 0.0)
        elif cls.tag == "StronglyMonotone":
            mono = max(mono or 0.0, cls.get("mu"))
        elif cls.tag == "LipschitzOperator":
            lip = min(lip, cls.get("L"))
        elif cls.tag == "Cocoercive":
            coco = max(coco or 0.0, cls.get("beta"))
            mono = max(mono or 0.0, 0.0)
    return mono, lip, coco


def operator_violation(M, mono, lip, coco) -> float:
    """Largest violation of the affine class inequalities (<= 0 means member)."""
    S = 0.5 * (M + M.T)
    out = [-np.inf]
    if mono is not None:
        out.append(mono - np.linalg.eigvalsh(S)[0])
    if lip < INF:
        out.append(np.linalg.norm(M, 2) - lip)
    if coco is not None:
        out.append(np.linalg.eigvalsh(coco * M.T @ M - S)[-1])
    return float(max(out))


def _sample_operator_M(comp: Component, d, rng):
    mono, lip, coco = _operator_bounds(comp)
    lo = mono if mono is not None else (-lip if lip < INF else None)
    if lo is None:
        raise ValueError("no affine member registered for this class")
    hi = lip
    if coco is not None:
        hi = min(hi, 1.0 / coco)
    if hi == INF:
        hi = max(lo, 0.0) + _OPEN_SPAN
    if lo > hi:
        raise ValueError("operator class is empty")
    S = _rotate(rng, _spectrum(rng, d, lo, hi))
    G = rng.standard_normal((d, d))
    K = (G - G.T) * (max(abs(lo), abs(hi), 1.0) / 2)
    for _ in range(60):
        if operator_violation(S + K, mono, lip, coco) <= 1e-12:
            return S + K
        K = 0.5 * K
    return S


def sample_instance(problem, d: int, seed=None, family: str = "auto") -> ConcreteInstance:
    """Draw one member per component and a matching solution triple.

    Function components are quadratics (or, for a lone GradientDominated
    class, optionally a double-well function); operator components are
    affine. The data are drawn first and y* is obtained by solving the
    stationarity system sum_i grad_i(y) = 0 (resampling if the solve is
    inaccurate). ``family`` may force "quadratic" or "double_well".
    """
    if d < 2:
        raise ValueError("instance dimension d must be >= 2")
    rng = np.random.default_rng(seed)
    comps = problem.components
    only_gd = len(comps) == 1 and all(c.tag == "GradientDominated" for c in comps[0].classes)
    use_well = family == "double_well" or (family == "auto" and only_gd and rng.random() < 0.5)
    if use_well:
        if not only_gd:
            raise ValueError("double-well members exist only for a lone GradientDominated class")
        mu_gd = comps[0].classes[0].get("mu_gd")
        center = rng.standard_normal(d)
        member = DoubleWell(0.5 * mu_gd * (1 + rng.random()), center)
        y_star = center + rng.choice([-1.0, 1.0], size=d)
        return ConcreteInstance([member], d, y_star, np.zeros((1, d)), np.array([0.0]))

    mats, kinds = [], []
    for comp in comps:
        if comp.kind == "func":
            mats.append(_sample_quadratic_H(comp, d, rng))
        else:
            mats.append(_sample_operator_M(comp, d, rng))
        kinds.append(comp.kind)
    A = sum(mats)
    for _ in range(100):
        # the last shift keeps sum_i b_i in range(A), so a solution exists
        # even when A is singular (e.g. an eigenvalue at a class bound of 0)
        bs = [rng.standard_normal(d) for _ in mats[:-1]]
        bs.append(-A @ rng.standard_normal(d) - sum(bs, np.zeros(d)))
        y_star, *_ = np.linalg.lstsq(A, -sum(bs), rcond=None)
        if np.linalg.norm(A @ y_star + sum(bs)) <= 1e-10 * (1 + np.linalg.norm(sum(bs))):
            break
    else:
        raise ValueError("could not draw a solvable instance")
    members = []
    for Mi, bi, kind in zip(mats, bs, kinds):
        if kind == "func":
            members.append(Quadratic(Mi, bi, float(rng.standard_normal())))
        else:
            members.append(AffineOperator(Mi, bi))
    u_star = np.array([mem.slope(y_star) for mem in members])
    u_star[-1] = -u_star[:-1].sum(axis=0)
    F_star = np.array([mem.value(y_star) for mem in members if mem.kind == "func"])
    return ConcreteInstance(members, d, y_star, u_star, F_star)


# --- trajectories ------------------------------------------------------------

@dataclass
class Trajectory:
    x: list  # x^0 .. x^{K+1}, each (n, d)
    u: list  # u^0 .. u^K, each (mbar, d)
    y: list
    F: list  # function values per iteration, (mbar_func,)
    y_star: np.ndarray
    u_star: np.ndarray
    F_star: np.ndarray

    @property
    def K(self):
        return len(self.u) - 1


def _layout(alg):
    comp_of = np.repeat(np.arange(alg.m), alg.mbars)
    return comp_of


def run_trajectory(instance: ConcreteInstance, alg: AlgorithmSpec, x0, K: int) -> Trajectory:
    """Simulate K+1 iterations (k = 0..K), solving the implicit rows of D."""
    if instance.m != alg.m:
        raise ValueError(f"instance has {instance.m} components, algorithm expects {alg.m}")
    for i, mem in enumerate(instance.members, start=1):
        if (mem.kind == "func") != (i in alg.I_func):
            raise ValueError(f"component {i}: instance kind does not match the algorithm layout")
    x = np.array(x0, dtype=float).reshape(alg.n, instance.d)
    comp_of = _layout(alg)
    fidx = [r for r in range(alg.mbar) if comp_of[r] + 1 in alg.I_func]
    xs, us, ys, Fs = [x], [], [], []
    for k in range(K + 1):
        A, B, C, D = get_ABCD(alg, k)
        if np.any(np.abs(np.triu(D, 1)) > 0):
            raise ValueError(f"{alg.name}: D_{k} is not lower triangular")
        y = np.zeros((alg.mbar, instance.d))
        u = np.zeros((alg.mbar, instance.d))
        for r in range(alg.mbar):
            mem = instance.members[comp_of[r]]
            rhs = C[r] @ x + D[r, :r] @ u[:r]
            y[r] = mem.implicit(rhs, D[r, r]) if D[r, r] != 0 else rhs
            u[r] = mem.slope(y[r])
        x = A @ x + B @ u
        xs.append(x)
        us.append(u)
        ys.append(y)
        Fs.append(np.array([instance.members[comp_of[r]].value(y[r]) for r in fidx]))
    return Trajectory(xs, us, ys, Fs, instance.y_star, instance.u_star, instance.F_star)


def recursion_residual(traj: Trajectory, alg: AlgorithmSpec) -> float:
    """max |x^{k+1} - A x^k - B u^k|, |y^k - C x^k - D u^k| over the run."""
    out = 0.0
    for k in range(traj.K + 1):
        A, B, C, D = get_ABCD(alg, k)
        out = max(out,
                  np.abs(traj.x[k + 1] - A @ traj.x[k] - B @ traj.u[k]).max(),
                  np.abs(traj.y[k] - C @ traj.x[k] - D @ traj.u[k]).max())
    return float(out)


# --- stacked windows ---------------------------------------------------------

def zeta_window(traj: Trajectory, alg: AlgorithmSpec, hz) -> np.ndarray:
    """(x^lo, u^lo, ..., u^hi, u_1*, ..., u_{m-1}*, y*) as a (dim_zeta, d) array."""
    lo, hi = hz
    if hi > traj.K:
        raise ValueError(f"window [{lo}, {hi}] exceeds the trajectory (K={traj.K})")
    parts = [traj.x[lo]] + [traj.u[k] for k in range(lo, hi + 1)]
    parts += [traj.u_star[:alg.m - 1], traj.y_star[None, :]]
    Z = np.vstack(parts)
    assert Z.shape[0] == dim_zeta(alg, hz)
    return Z


def chi_window(traj: Trajectory, alg: AlgorithmSpec, hz) -> np.ndarray:
    """(F^lo, ..., F^hi, F*) as a vector of length dim_chi."""
    lo, hi = hz
    if hi > traj.K:
        raise ValueError(f"window [{lo}, {hi}] exceeds the trajectory (K={traj.K})")
    out = np.concatenate([traj.F[k] for k in range(lo, hi + 1)] + [traj.F_star])
    assert out.size == dim_chi(alg, hz)
    return out


def gram(Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    return Z @ Z.T


def quadform(M, Z) -> float:
    """Q(M, z) = sum_ij M_ij <z_i, z_j>."""
    return float(np.sum(np.asarray(M) * gram(Z)))


def evaluate_quadform(W, w, traj: Trajectory, alg: AlgorithmSpec, hz) -> float:
    """Q(W, zeta) + w^T chi on the window hz of a trajectory."""
    Z = zeta_window(traj, alg, hz)
    W = np.asarray(W, dtype=float)
    if W.shape != (Z.shape[0], Z.shape[0]):
        raise ValueError(f"W must be {Z.shape[0]}x{Z.shape[0]}, got {W.shape}")
    val = quadform(W, Z)
    if w is not None and alg.m_func:
        chi = chi_window(traj, alg, hz)
        w = np.asarray(w, dtype=float)
        if w.shape != chi.shape:
            raise ValueError(f"w must have length {chi.size}, got {w.size}")
        val += float(w @ chi)
    return val


# --- certificate re-validation ----------------------------------------------

def independent_violations(cert: dict, alg: AlgorithmSpec, par, traj: Trajectory) -> dict:
    """Largest realized violation of each Lyapunov condition along ``traj``.

    Uses the window evaluations directly, so no shift map is involved.
    Positive numbers are violations.
    """
    h, a, rho = par.h, par.alpha, cert.get("rho", par.rho)
    Q, q, S, s = cert["Q"], cert.get("q"), cert["S"], cert.get("s")

    def V(M, v, k):
        return evaluate_quadform(M, v, traj, alg, (k, k + h))

    def R(M, v, k):
        return evaluate_quadform(M, v, traj, alg, (k, k + h + a + 1))

    out = {"C1": -np.inf, "C2": -np.inf, "C3": -np.inf, "C4": -np.inf}
    for k in range(traj.K - (h + a + 1) + 1):
        out["C1"] = max(out["C1"], V(Q, q, k + a + 1) - rho * V(Q, q, k) + R(S, s, k))
        out["C3"] = max(out["C3"], R(par.T, par.t, k) - R(S, s, k))
        if not par.remove_C4 and k + h + a + 2 <= traj.K:
            out["C4"] = max(out["C4"], R(S, s, k + 1) - R(S, s, k))
    for k in range(traj.K - h + 1):
        out["C2"] = max(out["C2"], V(par.P, par.p, k) - V(Q, q, k))
    return out


def dependent_violations(cert: dict, alg: AlgorithmSpec, K: int, traj: Trajectory) -> float:
    """Largest violation of V(k+1) <= V(k) (k >= 1) and V(1) <= c V(0)."""
    c = cert["c"]
    vals = [evaluate_quadform(cert[f"Q_{k}"], cert.get(f"q_{k}"), traj, alg, (k, k))
            for k in range(K + 1)]
    worst = vals[1] - c * vals[0]
    for k in range(1, K):
        worst = max(worst, vals[k + 1] - vals[k])
    return float(worst)
