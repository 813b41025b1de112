"""A small semidefinite modeling layer and the dual performance-estimation block.

Variables are flattened into one real vector x. Every expression is affine in
x and stored as ``const + sum_v coef[v] @ x_v`` with the expression flattened
row-major. Constraints are either "psd" (symmetric matrix expression is PSD),
"zero" (expression vanishes) or "nonneg" (sign-constrained scalar variables).

The model is handed to the conic solver in the standard form

    minimize c^T x   s.t.   A x + s = b,   s in Zero x Nonneg x PSD_1 x ... ,

where PSD cones use the scaled upper-triangular vectorization.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .structure import Stack

log = logging.getLogger(__name__)

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical_failure"
DEFAULT_TOL = 1e-9


class NumericalFailure(RuntimeError):
    pass


@dataclass
class _Var:
    name: str
    kind: str  # scalar | vector | sym
    shape: tuple
    offset: int
    size: int
    nonneg: bool = False


class Affine:
    """Affine expression; ``terms`` maps a variable index to a coefficient block."""

    __array_priority__ = 100

    def __init__(self, shape, const=None, terms=None):
        self.shape = tuple(shape)
        size = int(np.prod(self.shape)) if self.shape else 1
        self.const = np.zeros(size) if const is None else np.asarray(const, dtype=float).reshape(size)
        self.terms = {} if terms is None else terms

    @property
    def size(self):
        return self.const.size

    @staticmethod
    def constant(value):
        value = np.asarray(value, dtype=float)
        return Affine(value.shape, value.ravel())

    def _merge(self, other, sign):
        other = other if isinstance(other, Affine) else Affine.constant(other)
        if other.shape != self.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        terms = dict(self.terms)
        for v, c in other.terms.items():
            terms[v] = terms[v] + sign * c if v in terms else sign * c
        return Affine(self.shape, self.const + sign * other.const, terms)

    def __add__(self, other):
        return self._merge(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._merge(other, -1.0)

    def __rsub__(self, other):
        return (-self)._merge(other, 1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, a):
        a = float(a)
        return Affine(self.shape, a * self.const, {v: a * c for v, c in self.terms.items()})

    __rmul__ = __mul__

    def linear_map(self, G):
        """Return the expression ``G @ self`` for a vector expression."""
        G = np.atleast_2d(np.asarray(G, dtype=float))
        return Affine((G.shape[0],), G @ self.const, {v: G @ c for v, c in self.terms.items()})

    def congruence(self, T):
        """Return ``T^T @ self @ T`` for a square matrix expression."""
        T = np.asarray(T, dtype=float)
        K = np.kron(T.T, T.T)
        q = T.shape[1]
        return Affine((q, q), K @ self.const, {v: K @ c for v, c in self.terms.items()})

    def sandwich(self, A, B):
        """Return ``A^T @ self @ B`` for a matrix expression."""
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        K = np.kron(A.T, B.T)
        shape = (A.shape[1], B.shape[1])
        return Affine(shape, K @ self.const, {v: K @ c for v, c in self.terms.items()})

    def rows(self, idx):
        """Sub-expression made of the given flat entries."""
        idx = np.asarray(idx, dtype=int)
        return Affine((idx.size,), self.const[idx], {v: c[idx] for v, c in self.terms.items()})

    def times(self, M):
        """Scalar expression times a constant array."""
        if self.size != 1:
            raise ValueError("times() needs a scalar expression")
        M = np.asarray(M, dtype=float)
        col = M.reshape(-1, 1)
        return Affine(M.shape, self.const[0] * M.ravel(), {v: col @ c for v, c in self.terms.items()})


@dataclass
class Verdict:
    status: str
    certificate: Optional[dict] = None
    objective: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE

    def __bool__(self):
        return self.feasible


class SDPModel:
    def __init__(self):
        self.vars: list[_Var] = []
        self.nvar = 0
        self.constraints: list[tuple] = []  # (kind, name, Affine)
        self.objective: Optional[Affine] = None

    def _add(self, name, kind, shape, size, nonneg=False):
        var = _Var(name, kind, shape, self.nvar, size, nonneg)
        self.vars.append(var)
        self.nvar += size
        return len(self.vars) - 1

    def scalar(self, name, nonneg=False) -> Affine:
        idx = self._add(name, "scalar", (), 1, nonneg)
        if nonneg:
            self.constraints.append(("nonneg", name, None, idx))
        return Affine((), None, {idx: np.ones((1, 1))})

    def vector(self, name, size) -> Affine:
        idx = self._add(name, "vector", (size,), size)
        return Affine((size,), None, {idx: np.eye(size)})

    def symmetric(self, name, size) -> Affine:
        idx = self._add(name, "sym", (size, size), size * (size + 1) // 2)
        return Affine((size, size), None, {idx: self._sym_coef(self.vars[idx])})

    def add_psd(self, expr: Affine, name="", basis=None):
        """Require ``expr`` PSD. With ``basis`` (orthonormal columns R) the
        solver only sees ``R^T expr R``; this is equivalent only if ``expr``
        vanishes on the orthogonal complement of R, which the caller must
        guarantee. The re-check always uses the full matrix."""
        if len(expr.shape) != 2 or expr.shape[0] != expr.shape[1]:
            raise ValueError("PSD constraint needs a square matrix expression")
        self._check_vars(expr)
        self.constraints.append(("psd", name, expr, basis))

    def add_zero(self, expr: Affine, name=""):
        self._check_vars(expr)
        self.constraints.append(("zero", name, expr, None))

    def minimize(self, expr: Affine):
        if expr.size != 1:
            raise ValueError("objective must be scalar")
        self.objective = expr

    def _check_vars(self, expr):
        for v in expr.terms:
            if not 0 <= v < len(self.vars):
                raise ValueError("expression refers to a variable of another model")

    # --- evaluation -------------------------------------------------------
    def evaluate(self, expr: Affine, x: np.ndarray):
        out = expr.const.copy()
        for v, c in expr.terms.items():
            var = self.vars[v]
            out += c @ x[var.offset:var.offset + var.size]
        return out.reshape(expr.shape) if expr.shape else float(out[0])

    def unpack(self, x: np.ndarray) -> dict:
        vals = {}
        for idx, var in enumerate(self.vars):
            if var.kind == "sym":
                expr = Affine(var.shape, None, {idx: self._sym_coef(var)})
                vals[var.name] = self.evaluate(expr, x)
            elif var.kind == "vector":
                vals[var.name] = x[var.offset:var.offset + var.size].copy()
            else:
                vals[var.name] = float(x[var.offset])
        return vals

    def pack(self, values: dict) -> np.ndarray:
        """Inverse of ``unpack``: the variable vector from named values."""
        x = np.zeros(self.nvar)
        for var in self.vars:
            if var.name not in values:
                raise KeyError(f"no value for variable {var.name!r}")
            v = np.asarray(values[var.name], dtype=float)
            if var.kind == "sym":
                v = v[np.triu_indices(var.shape[0])]
            x[var.offset:var.offset + var.size] = np.ravel(v)
        return x

    @staticmethod
    def _sym_coef(var):
        size = var.shape[0]
        C = np.zeros((size * size, var.size))
        for t, (r, c) in enumerate(zip(*np.triu_indices(size))):
            C[r * size + c, t] = 1.0
            C[c * size + r, t] = 1.0
        return C

    # --- conic form -------------------------------------------------------
    def _dense_rows(self, expr: Affine):
        G = np.zeros((expr.size, self.nvar))
        for v, c in expr.terms.items():
            var = self.vars[v]
            G[:, var.offset:var.offset + var.size] += c
        return G

    def conic_form(self):
        """Return (c, A, b, cone_spec) with cone_spec a list of (kind, dim)."""
        zero_rows, nonneg_rows, psd_blocks = [], [], []
        for kind, name, expr, idx in self.constraints:
            if kind == "zero":
                zero_rows.append((self._dense_rows(expr), expr.const))
            elif kind == "nonneg":
                var = self.vars[idx]
                G = np.zeros((1, self.nvar))
                G[0, var.offset] = 1.0
                nonneg_rows.append((G, np.zeros(1)))
            else:
                if idx is not None:
                    expr = expr.congruence(idx)
                p = expr.shape[0]
                G = self._dense_rows(expr)
                r, c = _svec_order(p)
                scale = np.where(r == c, 1.0, np.sqrt(2.0))
                flat = r * p + c
                psd_blocks.append((G[flat] * scale[:, None], expr.const[flat] * scale, p))
        blocks, cones = [], []
        if zero_rows:
            blocks.append(zero_rows)
            cones.append(("zero", sum(g.shape[0] for g, _ in zero_rows)))
        if nonneg_rows:
            blocks.append(nonneg_rows)
            cones.append(("nonneg", len(nonneg_rows)))
        Gs = [g for blk in blocks for g, _ in blk] + [g for g, _, _ in psd_blocks]
        gs = [h for blk in blocks for _, h in blk] + [h for _, h, _ in psd_blocks]
        cones += [("psd", p) for _, _, p in psd_blocks]
        G = np.vstack(Gs) if Gs else np.zeros((0, self.nvar))
        g = np.concatenate(gs) if gs else np.zeros(0)
        # s = G x + g  <=>  A x + s = b with A = -G, b = g
        c = np.zeros(self.nvar)
        if self.objective is not None:
            c = self._dense_rows(self.objective)[0]
        else:
            # Pure feasibility: minimizing the sum of the sign-constrained
            # multipliers keeps the iterates bounded when the feasible set is
            # unbounded, which otherwise stalls the interior-point method.
            for v in self.vars:
                if v.nonneg:
                    c[v.offset:v.offset + v.size] = 1.0
        return c, sp.csc_matrix(-G), g, cones

    def dump_triplets(self, path):
        """Write the constraint data as plain-text sparse triplets.

        One line per nonzero: ``constraint-id variable-id row col value``.
        Constraint ids count from 1 in declaration order; PSD blocks are
        written as handed to the solver (after null-space restriction).
        Variable-id 0 is the
        constant term and variable-id v >= 1 is the v-th scalar entry of x.
        PSD constraints list upper-triangular entries; vector constraints use
        col = 0; sign constraints on a variable appear as a single entry.
        """
        with open(path, "w") as fh:
            for cid, (kind, name, expr, idx) in enumerate(self.constraints, start=1):
                if kind == "nonneg":
                    fh.write(f"{cid} {self.vars[idx].offset + 1} 0 0 1\n")
                    continue
                if kind == "psd" and idx is not None:
                    expr = expr.congruence(idx)
                G = self._dense_rows(expr)
                if kind == "psd":
                    p = expr.shape[0]
                    r, c = np.triu_indices(p)
                    entries = list(zip(r, c, r * p + c))
                else:
                    entries = [(r, 0, r) for r in range(expr.size)]
                for r, c, flat in entries:
                    if expr.const[flat] != 0:
                        fh.write(f"{cid} 0 {r} {c} {expr.const[flat]:.17g}\n")
                    for v in np.flatnonzero(G[flat]):
                        fh.write(f"{cid} {v + 1} {r} {c} {G[flat, v]:.17g}\n")

    # --- verification -----------------------------------------------------
    def check(self, x: np.ndarray) -> dict:
        """Largest violation per constraint kind, evaluated directly on x."""
        worst = {"psd": 0.0, "zero": 0.0, "nonneg": 0.0}
        for kind, name, expr, idx in self.constraints:
            if kind == "nonneg":
                viol = max(0.0, -float(x[self.vars[idx].offset]))
            elif kind == "zero":
                val = np.atleast_1d(self.evaluate(expr, x))
                viol = float(np.max(np.abs(val))) if val.size else 0.0
            else:
                M = self.evaluate(expr, x)
                viol = max(0.0, -float(np.linalg.eigvalsh(0.5 * (M + M.T))[0]))
            worst[kind] = max(worst[kind], viol)
        return worst

    def data_span(self) -> float:
        mags = []
        for kind, name, expr, idx in self.constraints:
            if expr is None:
                continue
            for c in list(expr.terms.values()) + [expr.const]:
                a = np.abs(c)
                a = a[a > 1e-12 * a.max()] if a.size and a.max() > 0 else a[:0]
                if a.size:
                    mags += [a.min(), a.max()]
        return max(mags) / min(mags) if mags else 1.0


def _svec_order(p):
    """Upper triangle, column by column: (0,0), (0,1), (1,1), (0,2), ..."""
    rows, cols = [], []
    for c in range(p):
        for r in range(c + 1):
            rows.append(r)
            cols.append(c)
    return np.array(rows), np.array(cols)


_ATTEMPTS = ({}, {"equilibrate_enable": False}, {"max_step_fraction": 0.95})


def solve(model: SDPModel, tol: float = DEFAULT_TOL, max_iter: int = 500) -> Verdict:
    """Solve with the Clarabel interior-point backend and re-check the result.

    A feasible verdict needs both solver-reported success and a direct
    substitution of the solution into every constraint with violations at
    most ``10 * tol * max(1, |x|_inf)``. When an attempt ends without a clean
    verdict (or only at reduced accuracy) the solve is repeated with data
    equilibration disabled, then with a shorter maximum step; both avoid
    early stalls on nearly degenerate LMIs. A verified reduced-accuracy point
    is kept as a fallback.
    """
    try:
        import clarabel
    except ImportError as exc:  # pragma: no cover
        raise RuntimeError("conic backend 'clarabel' is not available") from exc

    span = model.data_span()
    if span > 1e8:
        log.warning("constraint data magnitudes span %.1e; results may be inaccurate", span)
    c, A, b, cones = model.conic_form()
    cone_objs = []
    for kind, dim in cones:
        if kind == "zero":
            cone_objs.append(clarabel.ZeroConeT(dim))
        elif kind == "nonneg":
            cone_objs.append(clarabel.NonnegativeConeT(dim))
        else:
            cone_objs.append(clarabel.PSDTriangleConeT(dim))
    P = sp.csc_matrix((model.nvar, model.nvar))
    verdict = fallback = None
    for attempt, overrides in enumerate(_ATTEMPTS):
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.max_iter = max_iter
        settings.tol_feas = tol
        settings.tol_gap_abs = tol
        settings.tol_gap_rel = tol
        settings.tol_infeas_abs = tol
        settings.tol_infeas_rel = tol
        for key, value in overrides.items():
            setattr(settings, key, value)
        t0 = time.perf_counter()
        sol = clarabel.DefaultSolver(P, c, A, b, cone_objs, settings).solve()
        verdict = _classify(model, sol, c, tol)
        verdict.diagnostics.update(
            solve_time=time.perf_counter() - t0,
            attempt=attempt,
            n_variables=model.nvar,
            n_rows=int(A.shape[0]),
        )
        status = verdict.diagnostics["solver_status"]
        if status == "PrimalInfeasible" or (verdict.feasible and status == "Solved"):
            return verdict
        if verdict.feasible and fallback is None:
            fallback = verdict
    return fallback or verdict


def _classify(model, sol, c, tol) -> Verdict:
    status = str(sol.status)
    diag = {"solver_status": status, "iterations": int(sol.iterations)}
    if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        diag["reduced_accuracy"] = status.startswith("Almost")
        return Verdict(INFEASIBLE, diagnostics=diag)
    if status not in ("Solved", "AlmostSolved"):
        return Verdict(NUMERICAL_FAILURE, diagnostics=diag)
    x = np.asarray(sol.x, dtype=float)
    worst = model.check(x)
    bound = 10.0 * tol * max(1.0, float(np.max(np.abs(x))) if x.size else 1.0)
    diag["violations"] = worst
    diag["recheck_bound"] = bound
    if max(worst.values()) > bound:
        diag["recheck"] = "failed"
        return Verdict(NUMERICAL_FAILURE, diagnostics=diag)
    diag["recheck"] = "passed"
    obj = float(c @ x) if model.objective is not None else None
    return Verdict(FEASIBLE, model.unpack(x), obj, diag)


def assemble_dpep(model: SDPModel, problem, alg, hz, W: Affine, w: Optional[Affine], tag: str,
                  kernel=None):
    """Add the sufficient condition for sup Q(W, zeta) + w^T chi <= 0.

    For every interpolation condition (W_l, f_l) a multiplier lam_l >= 0 is
    created, and the block

        -W + sum_l lam_l W_l  PSD,      -w + sum_l lam_l f_l = 0

    is added (the equality only when there are function components).

    ``kernel`` optionally holds columns that the caller guarantees to lie in
    the null space of W (and that every W_l annihilates). The PSD cone is then
    restricted to its orthogonal complement, which restores strict
    feasibility; the re-check still uses the full matrix.
    """
    check_compatible(problem, alg)
    st = Stack(alg, hz)
    if W.shape != (st.dz, st.dz):
        raise ValueError(f"{tag}: W has shape {W.shape}, expected {(st.dz, st.dz)}")
    if st.dc and w is not None and w.shape != (st.dc,):
        raise ValueError(f"{tag}: w has shape {w.shape}, expected {(st.dc,)}")
    from .interpolation import enumerate_conditions

    lmi = -W
    eq = (-w) if (st.dc and w is not None) else (Affine.constant(np.zeros(st.dc)) if st.dc else None)
    lifted = []
    for i in range(1, problem.m + 1):
        for cond in enumerate_conditions(problem.component(i), i, hz[0], hz[1], alg.mbars[i - 1]):
            lifted.append((cond, *st.lift(cond)))
    for count, (cond, Wl, fl) in enumerate(lifted):
        lam = model.scalar(f"lam[{tag}][{count}]", nonneg=(cond.kind == "ineq"))
        lmi = lmi + lam.times(Wl)
        if eq is not None and fl is not None:
            eq = eq + lam.times(fl)
    if kernel is None:
        model.add_psd(lmi, f"{tag}:psd")
    else:
        z = np.asarray(kernel, dtype=float).reshape(st.dz, -1)
        scale = max((np.abs(Wl).max() for _, Wl, _ in lifted), default=1.0)
        if any(np.abs(Wl @ z).max() > 1e-9 * scale * np.abs(z).max() for _, Wl, _ in lifted):
            raise ValueError(f"{tag}: kernel directions are not annihilated by the conditions")
        model.add_psd(lmi, f"{tag}:psd", basis=_complement(z))
    if eq is not None:
        model.add_zero(eq, f"{tag}:eq")
    return len(lifted)


def _complement(Z):
    """Orthonormal basis of the orthogonal complement of range(Z)."""
    U, _, _ = np.linalg.svd(Z, full_matrices=True)
    return U[:, Z.shape[1]:]


def invariance_constraint(model: SDPModel, M: Affine, Z, name: str):
    """Require M Z = 0 for a square matrix expression M."""
    model.add_zero(M.sandwich(np.eye(M.shape[0]), np.reshape(Z, (M.shape[0], -1))), name)


def check_compatible(problem, alg):
    if problem.m != alg.m:
        raise ValueError(f"problem has {problem.m} components, algorithm expects {alg.m}")
    if tuple(problem.I_func) != tuple(alg.I_func):
        raise ValueError(
            f"function components differ: problem {problem.I_func}, algorithm {alg.I_func}"
        )
