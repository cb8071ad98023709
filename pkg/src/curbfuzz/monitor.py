"""Quantitative robustness evaluation and formula negation.

Robustness semantics over a finite trace, evaluated in discrete steps:

* propositions ``f(x) cmp 0`` map to ``-v``, ``v``, ``|v|`` or ``-|v|``
  with ``v`` the expression valuation at the step (for ``<=``/``<``,
  ``>=``/``>``, ``!=``, ``==`` respectively);
* ``not`` negates, ``and`` takes min, ``or`` takes max;
* ``a U[l,u] b`` at step t is the sup over witnesses t1 in
  ``[t+l, min(t+u, end)]`` of ``min(rho(b, t1), inf of rho(a) over
  [t+l, t1))`` - the left operand covers the window up to but excluding
  the witness step, so nested negation identities hold exactly;
* a sup over an empty witness set is ``-LARGE``, an inf over an empty
  set is ``+LARGE``; the finite sentinel LARGE (default 1e9) stands in
  for infinity and must dominate every signal magnitude;
* ``true``/``false`` carry robustness ``+LARGE``/``-LARGE`` so that the
  sugar identities ``F_I p == true U_I p`` and ``G_I p == not F_I not p``
  hold bit-for-bit (a *parsed* proposition ``0 >= 0`` still evaluates to
  0 by the comparator table);
* ``X p`` at the final step evaluates to 0.0, which counts as violated
  and is its own negation, keeping ``rho(negate(f)) == rho(not f)``
  exact at the trace boundary.

Robustness <= 0 means the formula is violated at the evaluation step.
"""
from __future__ import annotations

import numpy as np

from .formulas import (
    And,
    Always,
    Eventually,
    FALSE,
    Formula,
    FalseConst,
    Next,
    Not,
    Or,
    Prop,
    Proposition,
    TRUE,
    TrueConst,
    Until,
    formula_signals,
)
from .traces import Trace

LARGE = 1.0e9


class UnknownSignal(KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"formula references undeclared signal {name!r}")


class IndexOutOfRange(IndexError):
    def __init__(self, t: int, length: int):
        self.t = t
        self.length = length
        super().__init__(f"time step {t} outside trace of length {length}")


def _prop_values(pred: Proposition, trace: Trace) -> np.ndarray:
    n = len(trace)
    acc = np.zeros(n, dtype=np.float64)
    for name, coef in pred.expr.terms:
        col = trace.signals.get(name)
        if col is None:
            raise UnknownSignal(name)
        acc = acc + coef * col
    acc = acc + pred.expr.const
    if pred.cmp in ("<", "<="):
        return -acc
    if pred.cmp in (">", ">="):
        return acc
    if pred.cmp == "!=":
        return np.abs(acc)
    return -np.abs(acc)  # '=='


def _until_core(a: np.ndarray, b: np.ndarray, window: int | None,
                large: float) -> np.ndarray:
    """core[s] = sup over t1 in [s, min(s+window, end)] of
    min(b[t1], inf of a over [s, t1))."""
    n = len(b)
    core = np.empty(n, dtype=np.float64)
    if window is None:
        core[n - 1] = b[n - 1]
        for s in range(n - 2, -1, -1):
            core[s] = max(b[s], min(a[s], core[s + 1]))
        return core
    for s in range(n):
        m = min(s + window, n - 1)
        seg_b = b[s : m + 1]
        if m > s:
            prefix = np.minimum.accumulate(a[s:m])
            inner = np.concatenate(([large], prefix))
        else:
            inner = np.array([large])
        core[s] = float(np.max(np.minimum(seg_b, inner)))
    return core


def _shift_window(core_like: np.ndarray, lower: int, fill: float) -> np.ndarray:
    n = len(core_like)
    out = np.full(n, fill, dtype=np.float64)
    if lower < n:
        out[: n - lower] = core_like[lower:]
    return out


def robustness_signal(f: Formula, trace: Trace, large: float = LARGE) -> np.ndarray:
    """Robustness of ``f`` at every time step of the trace, as one array."""
    n = len(trace)
    if isinstance(f, Prop):
        return _prop_values(f.pred, trace)
    if isinstance(f, TrueConst):
        return np.full(n, large, dtype=np.float64)
    if isinstance(f, FalseConst):
        return np.full(n, -large, dtype=np.float64)
    if isinstance(f, Not):
        return -robustness_signal(f.child, trace, large)
    if isinstance(f, And):
        return np.minimum(
            robustness_signal(f.left, trace, large),
            robustness_signal(f.right, trace, large),
        )
    if isinstance(f, Or):
        return np.maximum(
            robustness_signal(f.left, trace, large),
            robustness_signal(f.right, trace, large),
        )
    if isinstance(f, Next):
        child = robustness_signal(f.child, trace, large)
        out = np.empty(n, dtype=np.float64)
        out[: n - 1] = child[1:]
        out[n - 1] = 0.0
        return out
    if isinstance(f, Until):
        a = robustness_signal(f.left, trace, large)
        b = robustness_signal(f.right, trace, large)
        window = None if f.interval.upper is None else f.interval.upper - f.interval.lower
        core = _until_core(a, b, window, large)
        return _shift_window(core, f.interval.lower, -large)
    if isinstance(f, Eventually):
        child = robustness_signal(f.child, trace, large)
        window = None if f.interval.upper is None else f.interval.upper - f.interval.lower
        core = _sliding_max(child, window)
        return _shift_window(core, f.interval.lower, -large)
    if isinstance(f, Always):
        child = robustness_signal(f.child, trace, large)
        window = None if f.interval.upper is None else f.interval.upper - f.interval.lower
        core = -_sliding_max(-child, window)
        return _shift_window(core, f.interval.lower, large)
    raise TypeError(f"not a formula: {f!r}")


def _sliding_max(values: np.ndarray, window: int | None) -> np.ndarray:
    """out[s] = max of values over [s, min(s+window, end)]."""
    n = len(values)
    if window is None:
        return np.maximum.accumulate(values[::-1])[::-1]
    out = np.empty(n, dtype=np.float64)
    for s in range(n):
        out[s] = float(np.max(values[s : min(s + window, n - 1) + 1]))
    return out


def robustness(f: Formula, trace: Trace, t: int = 0, large: float = LARGE) -> float:
    """Robustness degree of ``f`` on ``trace`` at step ``t``; <= 0 means violated."""
    if not 0 <= t < len(trace):
        raise IndexOutOfRange(t, len(trace))
    for name in formula_signals(f):
        if name not in trace.signals:
            raise UnknownSignal(name)
    return float(robustness_signal(f, trace, large)[t])


def satisfies(f: Formula, trace: Trace, large: float = LARGE) -> bool:
    """True iff robustness at step 0 is strictly positive."""
    return robustness(f, trace, 0, large) > 0


_CMP_NEGATION = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}


def negate_prop(pred: Proposition) -> Proposition:
    """Flip the comparator (< to >=, <= to >, = to !=, and back); the
    expression is untouched.  Involutive."""
    return Proposition(pred.expr, _CMP_NEGATION[pred.cmp])


def negate(f: Formula) -> Formula:
    """Negation with the ``not`` operator pushed away entirely.

    Satisfies ``robustness(negate(f), tr, t) == robustness(Not(f), tr, t)``
    exactly.  Until expands to the weak-until form
    ``(G_I n(b)) or (n(b) U_I (n(a) and n(b)))``.
    """
    if isinstance(f, Prop):
        return Prop(negate_prop(f.pred))
    if isinstance(f, TrueConst):
        return FALSE
    if isinstance(f, FalseConst):
        return TRUE
    if isinstance(f, Not):
        return _positive(f.child)
    if isinstance(f, And):
        return Or(negate(f.left), negate(f.right))
    if isinstance(f, Or):
        return And(negate(f.left), negate(f.right))
    if isinstance(f, Next):
        return Next(negate(f.child))
    if isinstance(f, Until):
        na, nb = negate(f.left), negate(f.right)
        return Or(Always(f.interval, nb), Until(f.interval, nb, And(na, nb)))
    if isinstance(f, Always):
        return Eventually(f.interval, negate(f.child))
    if isinstance(f, Eventually):
        return Always(f.interval, negate(f.child))
    raise TypeError(f"not a formula: {f!r}")


def _positive(f: Formula) -> Formula:
    """Rebuild ``f`` without ``not`` nodes, preserving robustness exactly."""
    if isinstance(f, (Prop, TrueConst, FalseConst)):
        return f
    if isinstance(f, Not):
        return negate(f.child)
    if isinstance(f, And):
        return And(_positive(f.left), _positive(f.right))
    if isinstance(f, Or):
        return Or(_positive(f.left), _positive(f.right))
    if isinstance(f, Next):
        return Next(_positive(f.child))
    if isinstance(f, Until):
        return Until(f.interval, _positive(f.left), _positive(f.right))
    if isinstance(f, Always):
        return Always(f.interval, _positive(f.child))
    if isinstance(f, Eventually):
        return Eventually(f.interval, _positive(f.child))
    raise TypeError(f"not a formula: {f!r}")
