"""Tokenizer and recursive-descent parser for the specification language.

Grammar (loosest binding first):

    formula    := or_expr [ "U" [interval] formula ]      # right-assoc
    or_expr    := and_expr { "or" and_expr }
    and_expr   := unary { "and" unary }
    unary      := "not" unary | ("G"|"F") [interval] unary | "X" unary | atom
    atom       := "(" formula ")" | "true" | "false" | comparison
    comparison := arith cmp arith
    interval   := "[" int "," (int | "inf") "]"

Arithmetic is linear over signal names and decimal literals with ``+``,
``-`` and scalar ``*``.  ``#`` starts a comment running to end of line.

Law-pack files hold one named law per block::

    law <name> ["description"] { <formula> }
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .formulas import (
    COMPARATORS,
    And,
    Always,
    Eventually,
    FALSE,
    Formula,
    Interval,
    LinearExpr,
    Next,
    Not,
    Or,
    Prop,
    Proposition,
    TRUE,
    Until,
)


class SpecSyntaxError(ValueError):
    """Malformed specification text, with position and expected tokens."""

    def __init__(self, message: str, line: int, column: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.column = column
        self.expected = expected
        detail = f"{message} at line {line}, column {column}"
        if expected:
            detail += f" (expected one of: {', '.join(expected)})"
        super().__init__(detail)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|==|!=|<|>|\(|\)|\[|\]|\{|\}|,|\+|-|\*)
  | (?P<string>"[^"\n]*")
    """,
    re.VERBOSE,
)

_KEYWORDS = {"and", "or", "not", "G", "F", "X", "U", "true", "false", "inf", "law"}


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # 'number' | 'name' | 'op' | 'keyword' | 'string' | 'eof'
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    line_start = 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SpecSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind == "ws":
            nl = value.count("\n")
            if nl:
                line += nl
                line_start = pos + value.rfind("\n") + 1
        elif kind == "comment":
            pass
        elif kind == "name" and value in _KEYWORDS:
            tokens.append(Token("keyword", value, line, col))
        else:
            tokens.append(Token(kind, value, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, len(text) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def _fail(self, expected: tuple[str, ...]) -> SpecSyntaxError:
        tok = self.cur
        what = "end of input" if tok.kind == "eof" else repr(tok.text)
        return SpecSyntaxError(f"unexpected {what}", tok.line, tok.column, expected)

    def advance(self) -> Token:
        tok = self.cur
        self.i += 1
        return tok

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        tok = self.cur
        if tok.kind == kind and (text is None or tok.text == text):
            return self.advance()
        return None

    def expect(self, kind: str, text: str | None = None) -> Token:
        got = self.accept(kind, text)
        if got is None:
            raise self._fail((text if text is not None else kind,))
        return got

    # -- formula levels ------------------------------------------------

    def formula(self) -> Formula:
        left = self.or_expr()
        if self.accept("keyword", "U"):
            interval = self.opt_interval()
            right = self.formula()
            return Until(interval, left, right)
        return left

    def or_expr(self) -> Formula:
        node = self.and_expr()
        while self.accept("keyword", "or"):
            node = Or(node, self.and_expr())
        return node

    def and_expr(self) -> Formula:
        node = self.unary()
        while self.accept("keyword", "and"):
            node = And(node, self.unary())
        return node

    def unary(self) -> Formula:
        if self.accept("keyword", "not"):
            return Not(self.unary())
        if self.accept("keyword", "G"):
            return Always(self.opt_interval(), self.unary())
        if self.accept("keyword", "F"):
            return Eventually(self.opt_interval(), self.unary())
        if self.accept("keyword", "X"):
            return Next(self.unary())
        return self.atom()

    def atom(self) -> Formula:
        if self.accept("op", "("):
            node = self.formula()
            self.expect("op", ")")
            return node
        if self.accept("keyword", "true"):
            return TRUE
        if self.accept("keyword", "false"):
            return FALSE
        if self.cur.kind in ("number", "name") or (
            self.cur.kind == "op" and self.cur.text == "-"
        ):
            return self.comparison()
        raise self._fail(("(", "true", "false", "not", "G", "F", "X", "comparison"))

    def opt_interval(self) -> Interval:
        if not self.accept("op", "["):
            return Interval(0, None)
        lo_tok = self.expect("number")
        lo = self._int_bound(lo_tok)
        self.expect("op", ",")
        if self.accept("keyword", "inf"):
            hi: int | None = None
        else:
            hi = self._int_bound(self.expect("number"))
        self.expect("op", "]")
        try:
            return Interval(lo, hi)
        except ValueError as exc:
            raise SpecSyntaxError(str(exc), lo_tok.line, lo_tok.column) from exc

    def _int_bound(self, tok: Token) -> int:
        if not re.fullmatch(r"\d+", tok.text):
            raise SpecSyntaxError(
                f"interval bounds are integer time steps, got {tok.text!r}",
                tok.line,
                tok.column,
            )
        return int(tok.text)

    # -- comparisons and linear arithmetic ------------------------------

    def comparison(self) -> Formula:
        lhs = self.arith()
        tok = self.cur
        if tok.kind == "op" and tok.text in COMPARATORS:
            self.advance()
            rhs = self.arith()
            return Prop(Proposition(lhs.sub(rhs), tok.text))
        raise self._fail(COMPARATORS)

    def arith(self) -> LinearExpr:
        node = self.term()
        while True:
            if self.accept("op", "+"):
                node = node.add(self.term())
            elif self.accept("op", "-"):
                node = node.sub(self.term())
            else:
                return node

    def term(self) -> LinearExpr:
        node = self.factor()
        while self.accept("op", "*"):
            rhs = self.factor()
            if rhs.terms and node.terms:
                tok = self.cur
                raise SpecSyntaxError(
                    "nonlinear product of signals is not supported", tok.line, tok.column
                )
            if rhs.terms:
                node, rhs = rhs, node
            node = node.scale(rhs.const)
        return node

    def factor(self) -> LinearExpr:
        if self.accept("op", "-"):
            return self.factor().scale(-1.0)
        tok = self.cur
        if tok.kind == "number":
            self.advance()
            return LinearExpr((), float(tok.text))
        if tok.kind == "name":
            self.advance()
            return LinearExpr(((tok.text, 1.0),), 0.0)
        raise self._fail(("number", "signal name"))


def parse_spec(text: str) -> Formula:
    """Parse one formula; raises :class:`SpecSyntaxError` on malformed input."""
    parser = _Parser(tokenize(text))
    node = parser.formula()
    if parser.cur.kind != "eof":
        raise parser._fail(("end of input",))
    return node


@dataclass(frozen=True, slots=True)
class Law:
    name: str
    formula: Formula
    description: str = ""


@dataclass(frozen=True, slots=True)
class LawPack:
    laws: tuple[Law, ...] = field(default=())

    def __iter__(self):
        return iter(self.laws)

    def __len__(self) -> int:
        return len(self.laws)

    def get(self, name: str) -> Law:
        for law in self.laws:
            if law.name == name:
                return law
        raise KeyError(f"no law named {name!r}")


def parse_law_pack(text: str) -> LawPack:
    """Parse a law-pack file: ``law <name> ["description"] { <formula> }`` blocks."""
    parser = _Parser(tokenize(text))
    laws: list[Law] = []
    names: set[str] = set()
    if parser.cur.kind == "eof":
        tok = parser.cur
        raise SpecSyntaxError("empty law pack", tok.line, tok.column, ("law",))
    while parser.cur.kind != "eof":
        parser.expect("keyword", "law")
        name_tok = parser.expect("name")
        if name_tok.text in names:
            raise SpecSyntaxError(
                f"duplicate law name {name_tok.text!r}", name_tok.line, name_tok.column
            )
        names.add(name_tok.text)
        desc = ""
        desc_tok = parser.accept("string")
        if desc_tok is not None:
            desc = desc_tok.text[1:-1]
        parser.expect("op", "{")
        formula = parser.formula()
        parser.expect("op", "}")
        laws.append(Law(name_tok.text, formula, desc))
    return LawPack(tuple(laws))
