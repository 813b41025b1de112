"""Inclusion problems: find y with 0 in sum_i d f_i(y) + sum_i G_i(y).

Component order matters. It fixes the meaning of u_i and m̄_i in the
algorithm and the ordering of function values in every stacked vector.
Indices are 1-based throughout, matching the usual mathematical notation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .interpolation import Component


@dataclass(frozen=True)
class InclusionProblem:
    components: tuple

    @property
    def m(self) -> int:
        return len(self.components)

    @property
    def I_func(self) -> tuple:
        return tuple(i + 1 for i, c in enumerate(self.components) if c.kind == "func")

    @property
    def I_op(self) -> tuple:
        return tuple(i + 1 for i, c in enumerate(self.components) if c.kind == "op")

    @property
    def m_func(self) -> int:
        return len(self.I_func)

    @property
    def m_op(self) -> int:
        return len(self.I_op)

    def component(self, i: int) -> Component:
        return self.components[i - 1]


def make_problem(components) -> InclusionProblem:
    """Build a problem from a list whose entries are a class, or a list of
    classes meaning their intersection."""
    components = list(components)
    if not components:
        raise ValueError("an inclusion problem needs at least one component")
    comps = []
    for idx, spec in enumerate(components, start=1):
        try:
            comps.append(Component.of(spec))
        except ValueError as exc:
            raise ValueError(f"component {idx}: {exc}") from None
    has_gd = [i for i, c in enumerate(comps, start=1)
              if any(cl.tag == "GradientDominated" for cl in c.classes)]
    if has_gd and len(comps) != 1:
        raise ValueError(f"component {has_gd[0]}: GradientDominated requires a single-component problem")
    return InclusionProblem(tuple(comps))
