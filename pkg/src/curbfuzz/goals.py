"""Violation-goal decomposition.

A specification is split into a set of smaller formulas, each describing
one distinct way of violating it: violating any goal implies violating
the source formula.  The decomposition rules are

* a proposition is its own single goal;
* ``not p`` decomposes as the pushed-down negation of ``p``;
* ``a and b`` contributes the union of both sides' goals;
* ``a or b`` contributes pairwise disjunctions (violating ``x or y``
  forces both sides below zero, so soundness is preserved);
* ``X``/``G``/``F`` wrap each child goal;
* ``a U_I b`` contributes the cross product ``x U_I y``.

Goal ids encode the decomposition path, so they are stable across runs.
"""
from __future__ import annotations

from dataclasses import dataclass

from .formulas import (
    And,
    Always,
    Eventually,
    FalseConst,
    Formula,
    Next,
    Not,
    Or,
    Prop,
    TrueConst,
    Until,
    format_formula,
)
from .monitor import negate

DEFAULT_GOAL_CAP = 4096


class GoalExplosion(ValueError):
    """Decomposition would exceed the configured goal cap."""

    def __init__(self, count: int, cap: int, subformula: Formula):
        self.count = count
        self.cap = cap
        self.subformula = subformula
        text = format_formula(subformula)
        if len(text) > 120:
            text = text[:117] + "..."
        super().__init__(f"{count} goals exceed the cap of {cap} (offending: {text})")


@dataclass(frozen=True, slots=True)
class ViolationGoal:
    id: str
    formula: Formula


@dataclass(frozen=True, slots=True)
class GoalSet:
    source: Formula
    goals: tuple[ViolationGoal, ...]

    def __iter__(self):
        return iter(self.goals)

    def __len__(self) -> int:
        return len(self.goals)

    def ids(self) -> tuple[str, ...]:
        return tuple(g.id for g in self.goals)


def goal_count(f: Formula) -> int:
    """Number of goals :func:`decompose` would produce, without building them."""
    if isinstance(f, (Prop, TrueConst, FalseConst)):
        return 1
    if isinstance(f, Not):
        return goal_count(negate(f.child))
    if isinstance(f, And):
        return goal_count(f.left) + goal_count(f.right)
    if isinstance(f, (Or, Until)):
        return goal_count(f.left) * goal_count(f.right)
    if isinstance(f, (Next, Always, Eventually)):
        return goal_count(f.child)
    raise TypeError(f"not a formula: {f!r}")


def _paths(f: Formula) -> list[tuple[str, Formula]]:
    if isinstance(f, (Prop, TrueConst, FalseConst)):
        return [("mu", f)]
    if isinstance(f, Not):
        return [(f"N.{p}", g) for p, g in _paths(negate(f.child))]
    if isinstance(f, And):
        return [(f"and0.{p}", g) for p, g in _paths(f.left)] + [
            (f"and1.{p}", g) for p, g in _paths(f.right)
        ]
    if isinstance(f, Or):
        return [
            (f"or({pl})({pr})", Or(gl, gr))
            for pl, gl in _paths(f.left)
            for pr, gr in _paths(f.right)
        ]
    if isinstance(f, Next):
        return [(f"X.{p}", Next(g)) for p, g in _paths(f.child)]
    if isinstance(f, Until):
        return [
            (f"U({pl})({pr})", Until(f.interval, gl, gr))
            for pl, gl in _paths(f.left)
            for pr, gr in _paths(f.right)
        ]
    if isinstance(f, Always):
        return [(f"G.{p}", Always(f.interval, g)) for p, g in _paths(f.child)]
    if isinstance(f, Eventually):
        return [(f"F.{p}", Eventually(f.interval, g)) for p, g in _paths(f.child)]
    raise TypeError(f"not a formula: {f!r}")


def _first_over_cap(f: Formula, cap: int) -> Formula:
    """Deepest subformula whose own goal count already exceeds the cap."""
    children: tuple[Formula, ...]
    if isinstance(f, (Prop, TrueConst, FalseConst)):
        return f
    if isinstance(f, Not):
        children = (f.child,)
    elif isinstance(f, (And, Or, Until)):
        children = (f.left, f.right)
    else:
        children = (f.child,)
    for c in children:
        if goal_count(c) > cap:
            return _first_over_cap(c, cap)
    return f


def decompose(f: Formula, law_name: str = "goal", cap: int = DEFAULT_GOAL_CAP) -> GoalSet:
    """Deterministic ordered goal set for ``f``; raises :class:`GoalExplosion`
    when more than ``cap`` goals would be produced."""
    count = goal_count(f)
    if count > cap:
        raise GoalExplosion(count, cap, _first_over_cap(f, cap))
    goals = tuple(
        ViolationGoal(f"{law_name}/{path}", g) for path, g in _paths(f)
    )
    return GoalSet(f, goals)
