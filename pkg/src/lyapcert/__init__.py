"""Lyapunov certificate synthesis for first-order methods via semidefinite programming."""

from .algorithms import AlgorithmSpec, get_ABCD, make_algorithm
from .interpolation import (
    Cocoercive,
    Component,
    ComponentClass,
    Convex,
    GradientDominated,
    LipschitzOperator,
    MaximallyMonotone,
    Smooth,
    SmoothConvex,
    SmoothStronglyConvex,
    SmoothWeaklyConvex,
    StronglyConvex,
    StronglyMonotone,
    WeaklyConvex,
)
from .problem import InclusionProblem, make_problem
from .sdp import Verdict

__version__ = "0.1.0"
