"""Quadratic interpolation conditions for function and operator classes.

Every condition is written over two points in the variable order
``(y_i, y_j, u_i, u_j)`` and reads

    Q(M, (y_i, y_j, u_i, u_j)) + a[0] * F_i + a[1] * F_j <= 0

for function classes, and ``Q(M, ...) <= 0`` for operator classes, where
``Q(M, z) = trace(M @ Gram(z))``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

INF = math.inf
STAR = "star"

FUNC_TAGS = (
    "Convex",
    "StronglyConvex",
    "WeaklyConvex",
    "Smooth",
    "SmoothConvex",
    "SmoothStronglyConvex",
    "SmoothWeaklyConvex",
    "GradientDominated",
)
OP_TAGS = ("MaximallyMonotone", "StronglyMonotone", "LipschitzOperator", "Cocoercive")

_REQUIRED = {
    "Convex": (),
    "StronglyConvex": ("mu",),
    "WeaklyConvex": ("mu_tilde",),
    "Smooth": ("L",),
    "SmoothConvex": ("L",),
    "SmoothStronglyConvex": ("mu", "L"),
    "SmoothWeaklyConvex": ("mu_tilde", "L"),
    "GradientDominated": ("mu_gd",),
    "MaximallyMonotone": (),
    "StronglyMonotone": ("mu",),
    "LipschitzOperator": ("L",),
    "Cocoercive": ("beta",),
}


@dataclass(frozen=True)
class ComponentClass:
    tag: str
    params: tuple = ()

    def __post_init__(self):
        if self.tag not in _REQUIRED:
            raise ValueError(f"unknown class tag {self.tag!r}")
        given = dict(self.params)
        need = _REQUIRED[self.tag]
        if set(given) != set(need):
            raise ValueError(f"{self.tag} expects parameters {need}, got {tuple(given)}")
        for name, value in given.items():
            if not (value > 0):
                raise ValueError(f"{self.tag}: parameter {name} must be > 0, got {value}")
        if self.tag == "SmoothStronglyConvex" and not given["mu"] < given["L"]:
            raise ValueError("SmoothStronglyConvex requires 0 < mu < L")

    @property
    def kind(self) -> str:
        return "func" if self.tag in FUNC_TAGS else "op"

    def get(self, name: str) -> float:
        return dict(self.params)[name]

    def __repr__(self):
        args = ", ".join(f"{k}={v:g}" for k, v in self.params)
        return f"{self.tag}({args})"


def _make(tag, **params):
    return ComponentClass(tag, tuple(sorted((k, float(v)) for k, v in params.items())))


def Convex():
    return _make("Convex")


def StronglyConvex(mu):
    return _make("StronglyConvex", mu=mu)


def WeaklyConvex(mu_tilde):
    return _make("WeaklyConvex", mu_tilde=mu_tilde)


def Smooth(L):
    return _make("Smooth", L=L)


def SmoothConvex(L):
    return _make("SmoothConvex", L=L)


def SmoothStronglyConvex(mu, L):
    return _make("SmoothStronglyConvex", mu=mu, L=L)


def SmoothWeaklyConvex(mu_tilde, L):
    return _make("SmoothWeaklyConvex", mu_tilde=mu_tilde, L=L)


def GradientDominated(mu_gd):
    return _make("GradientDominated", mu_gd=mu_gd)


def MaximallyMonotone():
    return _make("MaximallyMonotone")


def StronglyMonotone(mu):
    return _make("StronglyMonotone", mu=mu)


def LipschitzOperator(L):
    return _make("LipschitzOperator", L=L)


def Cocoercive(beta):
    return _make("Cocoercive", beta=beta)


def make_class(tag: str, **params) -> ComponentClass:
    """Build a class from its tag name, e.g. ``make_class("Smooth", L=1)``."""
    return _make(tag, **params)


@dataclass(frozen=True)
class Component:
    """Intersection of classes of the same kind (function or operator)."""

    classes: tuple

    def __post_init__(self):
        if len(self.classes) == 0:
            raise ValueError("a component needs at least one class")
        kinds = {c.kind for c in self.classes}
        if len(kinds) > 1:
            raise ValueError(f"mixed function/operator intersection: {list(self.classes)}")

    @property
    def kind(self) -> str:
        return self.classes[0].kind

    @classmethod
    def of(cls, spec) -> "Component":
        if isinstance(spec, Component):
            return spec
        if isinstance(spec, ComponentClass):
            return cls((spec,))
        return cls(tuple(spec))


@dataclass(frozen=True)
class PairCondition:
    """One two-point condition. ``a`` is None for operator classes."""

    M: np.ndarray
    a: Optional[np.ndarray]
    kind: str = "ineq"
    ordered: bool = True


@dataclass
class InterpCondition:
    """A condition bound to concrete point labels of component ``i``."""

    i: int
    points: tuple
    M: np.ndarray
    a: Optional[np.ndarray]
    kind: str = "ineq"
    source: str = field(default="", repr=False)


def mu_L(cls: ComponentClass) -> tuple[float, float]:
    """Map a function class onto the (mu, L) pair of F_{mu,L}."""
    tag = cls.tag
    if tag == "Convex":
        return 0.0, INF
    if tag == "StronglyConvex":
        return cls.get("mu"), INF
    if tag == "WeaklyConvex":
        return -cls.get("mu_tilde"), INF
    if tag == "Smooth":
        return -cls.get("L"), cls.get("L")
    if tag == "SmoothConvex":
        return 0.0, cls.get("L")
    if tag == "SmoothStronglyConvex":
        return cls.get("mu"), cls.get("L")
    if tag == "SmoothWeaklyConvex":
        return -cls.get("mu_tilde"), cls.get("L")
    raise ValueError(f"{tag} is not an F_(mu,L) class")


def fmuL_matrix(mu: float, L: float) -> np.ndarray:
    if L == INF:
        return 0.5 * np.array(
            [[mu, -mu, 0, 1], [-mu, mu, 0, -1], [0, 0, 0, 0], [1, -1, 0, 0]], dtype=float
        )
    if not mu < L:
        raise ValueError("F_(mu,L) needs mu < L")
    return (
        np.array(
            [
                [mu * L, -mu * L, -mu, L],
                [-mu * L, mu * L, mu, -L],
                [-mu, mu, 1, -1],
                [L, -L, -1, 1],
            ],
            dtype=float,
        )
        / (2 * (L - mu))
    )


_MONO = 0.5 * np.array([[0, 0, -1, 1], [0, 0, 1, -1], [-1, 1, 0, 0], [1, -1, 0, 0]], dtype=float)


def pairwise_condition(cls: ComponentClass) -> PairCondition:
    """Return the two-point condition of ``cls``.

    Function classes yield ordered conditions with ``a = (-1, 1)``; the four
    operator classes yield swap-symmetric (unordered) conditions.
    """
    tag = cls.tag
    if tag in FUNC_TAGS and tag != "GradientDominated":
        mu, L = mu_L(cls)
        return PairCondition(fmuL_matrix(mu, L), np.array([-1.0, 1.0]), "ineq", True)
    if tag == "MaximallyMonotone":
        return PairCondition(_MONO.copy(), None, "ineq", False)
    if tag == "StronglyMonotone":
        mu = cls.get("mu")
        M = _MONO.copy()
        M[:2, :2] = mu * np.array([[1.0, -1.0], [-1.0, 1.0]])
        return PairCondition(M, None, "ineq", False)
    if tag == "LipschitzOperator":
        L2 = cls.get("L") ** 2
        M = np.zeros((4, 4))
        M[:2, :2] = L2 * np.array([[-1.0, 1.0], [1.0, -1.0]])
        M[2:, 2:] = np.array([[1.0, -1.0], [-1.0, 1.0]])
        return PairCondition(M, None, "ineq", False)
    if tag == "Cocoercive":
        beta = cls.get("beta")
        M = _MONO.copy()
        M[2:, 2:] = beta * np.array([[1.0, -1.0], [-1.0, 1.0]])
        return PairCondition(M, None, "ineq", False)
    raise ValueError(f"no interpolation condition registered for {tag}")


def gradient_dominated_conditions(mu_gd: float) -> list[PairCondition]:
    """Two conditions between a point and the minimizer (whose slope is zero):
    ``F_star - F_i <= 0`` and ``F_i - F_star - |u_i|^2 / (2 mu_gd) <= 0``."""
    if not mu_gd > 0:
        raise ValueError("mu_gd must be > 0")
    M2 = np.zeros((4, 4))
    M2[2, 2] = -1.0 / (2.0 * mu_gd)
    return [
        PairCondition(np.zeros((4, 4)), np.array([-1.0, 1.0]), "ineq", True),
        PairCondition(M2, np.array([1.0, -1.0]), "ineq", True),
    ]


def point_labels(mbar_i: int, k_lo: int, k_hi: int) -> list:
    return [(j, k) for k in range(k_lo, k_hi + 1) for j in range(1, mbar_i + 1)] + [STAR]


def enumerate_conditions(comp, i: int, k_lo: int, k_hi: int, mbar_i: int) -> list[InterpCondition]:
    """All conditions of component ``i`` over the iterations ``k_lo..k_hi``.

    Ordering is deterministic: classes in declaration order, then labels in
    (iteration, evaluation) order with the star label last.
    """
    if k_lo > k_hi:
        raise ValueError(f"empty horizon [{k_lo}, {k_hi}]")
    comp = Component.of(comp)
    labels = point_labels(mbar_i, k_lo, k_hi)
    out = []
    for cls in comp.classes:
        if cls.tag == "GradientDominated":
            conds = gradient_dominated_conditions(cls.get("mu_gd"))
            for lab in labels[:-1]:
                for c in conds:
                    out.append(InterpCondition(i, (lab, STAR), c.M, c.a, c.kind, cls.tag))
            continue
        pc = pairwise_condition(cls)
        pairs = itertools.permutations(labels, 2) if pc.ordered else itertools.combinations(labels, 2)
        for pair in pairs:
            out.append(InterpCondition(i, pair, pc.M, pc.a, pc.kind, cls.tag))
    return out


def condition_value(cond, y_pair, u_pair, F_pair=None) -> float:
    """Evaluate one condition on concrete points (arrays of equal length)."""
    z = np.vstack([np.atleast_1d(y_pair[0]), np.atleast_1d(y_pair[1]),
                   np.atleast_1d(u_pair[0]), np.atleast_1d(u_pair[1])])
    val = float(np.sum(z * (cond.M @ z)))
    if cond.a is not None:
        val += float(cond.a @ np.asarray(F_pair, dtype=float))
    return val
