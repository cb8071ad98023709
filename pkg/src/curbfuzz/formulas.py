"""Specification-language AST: propositions, boolean and temporal operators.

Formulas are immutable trees built from linear-arithmetic propositions,
``not``/``and``/``or``, and the temporal operators next (``X``),
until (``U``), always (``G``) and eventually (``F``), the latter three
carrying discrete time-step intervals.  ``G`` and ``F`` are sugar over
``U`` and can be removed with :func:`desugar`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

COMPARATORS = ("<", "<=", ">", ">=", "==", "!=")


@dataclass(frozen=True, slots=True)
class Interval:
    """Discrete time-step interval ``[lower, upper]``; ``upper=None`` means unbounded."""

    lower: int = 0
    upper: int | None = None

    def __post_init__(self) -> None:
        if self.lower < 0:
            raise ValueError(f"interval lower bound must be >= 0, got {self.lower}")
        if self.upper is not None and self.upper < self.lower:
            raise ValueError(f"empty interval [{self.lower},{self.upper}]")

    @property
    def is_default(self) -> bool:
        return self.lower == 0 and self.upper is None

    def __str__(self) -> str:
        hi = "inf" if self.upper is None else str(self.upper)
        return f"[{self.lower},{hi}]"


DEFAULT_INTERVAL = Interval(0, None)


def _fmt_num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


@dataclass(frozen=True, slots=True)
class LinearExpr:
    """Linear combination of named signals plus a constant.

    ``terms`` holds (signal, coefficient) pairs, each signal at most once,
    in first-appearance order so formatting is stable.
    """

    terms: tuple[tuple[str, float], ...] = ()
    const: float = 0.0

    def __post_init__(self) -> None:
        names = [n for n, _ in self.terms]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate signal in expression: {names}")

    @property
    def signals(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.terms)

    def scale(self, k: float) -> "LinearExpr":
        return LinearExpr(tuple((n, k * c) for n, c in self.terms), k * self.const)

    def add(self, other: "LinearExpr") -> "LinearExpr":
        coeffs = {n: c for n, c in self.terms}
        order = [n for n, _ in self.terms]
        for n, c in other.terms:
            if n in coeffs:
                coeffs[n] = coeffs[n] + c
            else:
                coeffs[n] = c
                order.append(n)
        return LinearExpr(tuple((n, coeffs[n]) for n in order), self.const + other.const)

    def sub(self, other: "LinearExpr") -> "LinearExpr":
        return self.add(other.scale(-1.0))

    def __str__(self) -> str:
        if not self.terms:
            return _fmt_num(self.const)
        parts: list[str] = []
        for i, (name, coef) in enumerate(self.terms):
            mag = abs(coef)
            body = name if mag == 1.0 else f"{_fmt_num(mag)} * {name}"
            if i == 0:
                parts.append(body if coef >= 0 else f"-{body}")
            else:
                parts.append(f"{'+' if coef >= 0 else '-'} {body}")
        return " ".join(parts)


@dataclass(frozen=True, slots=True)
class Proposition:
    """Atomic constraint ``expr cmp 0`` with a linear ``expr``.

    Surface comparisons ``e1 cmp e2`` are normalised to ``e1 - e2 cmp 0``
    at parse time; the printer moves the constant back to the right-hand
    side for readability.
    """

    expr: LinearExpr
    cmp: str

    def __post_init__(self) -> None:
        if self.cmp not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.cmp!r}")

    def __str__(self) -> str:
        rhs = -self.expr.const
        if rhs == 0:
            rhs = 0.0  # normalise -0.0
        lhs = LinearExpr(self.expr.terms, 0.0)
        left = str(lhs) if self.expr.terms else _fmt_num(self.expr.const)
        right = _fmt_num(rhs) if self.expr.terms else "0"
        return f"{left} {self.cmp} {right}"


@dataclass(frozen=True, slots=True)
class Prop:
    pred: Proposition


@dataclass(frozen=True, slots=True)
class TrueConst:
    """Boolean constant ``true`` (robustness +LARGE, see the monitor)."""


@dataclass(frozen=True, slots=True)
class FalseConst:
    """Boolean constant ``false`` (robustness -LARGE)."""


@dataclass(frozen=True, slots=True)
class Not:
    child: "Formula"


@dataclass(frozen=True, slots=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Next:
    child: "Formula"


@dataclass(frozen=True, slots=True)
class Until:
    interval: Interval
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Always:
    interval: Interval
    child: "Formula"


@dataclass(frozen=True, slots=True)
class Eventually:
    interval: Interval
    child: "Formula"


Formula = Union[
    Prop, TrueConst, FalseConst, Not, And, Or, Next, Until, Always, Eventually
]

TRUE = TrueConst()
FALSE = FalseConst()


def prop(expr: LinearExpr, cmp: str) -> Prop:
    return Prop(Proposition(expr, cmp))


def signal_prop(name: str, cmp: str, threshold: float) -> Prop:
    """Convenience constructor for ``name cmp threshold``."""
    return prop(LinearExpr(((name, 1.0),), -threshold), cmp)


def _ivl_suffix(interval: Interval) -> str:
    return "" if interval.is_default else str(interval)


def format_formula(f: Formula) -> str:
    """Canonical text form; ``parse_spec(format_formula(f)) == f``.

    Operands of every operator are parenthesised, so the output is
    precedence-proof regardless of nesting.
    """
    if isinstance(f, Prop):
        return str(f.pred)
    if isinstance(f, TrueConst):
        return "true"
    if isinstance(f, FalseConst):
        return "false"
    if isinstance(f, Not):
        return f"not ({format_formula(f.child)})"
    if isinstance(f, And):
        return f"({format_formula(f.left)}) and ({format_formula(f.right)})"
    if isinstance(f, Or):
        return f"({format_formula(f.left)}) or ({format_formula(f.right)})"
    if isinstance(f, Next):
        return f"X ({format_formula(f.child)})"
    if isinstance(f, Until):
        return (
            f"({format_formula(f.left)}) U{_ivl_suffix(f.interval)}"
            f" ({format_formula(f.right)})"
        )
    if isinstance(f, Always):
        return f"G{_ivl_suffix(f.interval)} ({format_formula(f.child)})"
    if isinstance(f, Eventually):
        return f"F{_ivl_suffix(f.interval)} ({format_formula(f.child)})"
    raise TypeError(f"not a formula: {f!r}")


def desugar(f: Formula) -> Formula:
    """Rewrite ``F``/``G`` into ``U`` form: ``F_I p == true U_I p`` and
    ``G_I p == not (true U_I not p)``; other nodes are rebuilt unchanged."""
    if isinstance(f, (Prop, TrueConst, FalseConst)):
        return f
    if isinstance(f, Not):
        return Not(desugar(f.child))
    if isinstance(f, And):
        return And(desugar(f.left), desugar(f.right))
    if isinstance(f, Or):
        return Or(desugar(f.left), desugar(f.right))
    if isinstance(f, Next):
        return Next(desugar(f.child))
    if isinstance(f, Until):
        return Until(f.interval, desugar(f.left), desugar(f.right))
    if isinstance(f, Eventually):
        return Until(f.interval, TRUE, desugar(f.child))
    if isinstance(f, Always):
        return Not(Until(f.interval, TRUE, Not(desugar(f.child))))
    raise TypeError(f"not a formula: {f!r}")


def formula_signals(f: Formula) -> frozenset[str]:
    """All signal names referenced anywhere in the formula."""
    out: set[str] = set()

    def walk(g: Formula) -> None:
        if isinstance(g, Prop):
            out.update(g.pred.expr.signals)
        elif isinstance(g, (TrueConst, FalseConst)):
            pass
        elif isinstance(g, (Not, Next)):
            walk(g.child)
        elif isinstance(g, (And, Or)):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, Until):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, (Always, Eventually)):
            walk(g.child)
        else:
            raise TypeError(f"not a formula: {g!r}")

    walk(f)
    return frozenset(out)


def formula_depth(f: Formula) -> int:
    if isinstance(f, (Prop, TrueConst, FalseConst)):
        return 1
    if isinstance(f, (Not, Next)):
        return 1 + formula_depth(f.child)
    if isinstance(f, (And, Or)):
        return 1 + max(formula_depth(f.left), formula_depth(f.right))
    if isinstance(f, Until):
        return 1 + max(formula_depth(f.left), formula_depth(f.right))
    if isinstance(f, (Always, Eventually)):
        return 1 + formula_depth(f.child)
    raise TypeError(f"not a formula: {f!r}")


def formula_size(f: Formula) -> int:
    if isinstance(f, (Prop, TrueConst, FalseConst)):
        return 1
    if isinstance(f, (Not, Next)):
        return 1 + formula_size(f.child)
    if isinstance(f, (And, Or, Until)):
        return 1 + formula_size(f.left) + formula_size(f.right)
    if isinstance(f, (Always, Eventually)):
        return 1 + formula_size(f.child)
    raise TypeError(f"not a formula: {f!r}")
