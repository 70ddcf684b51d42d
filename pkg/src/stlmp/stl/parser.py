"""Recursive-descent parser for the concrete formula syntax.

Grammar (whitespace insignificant, numbers are decimal literals):

    formula  := or
    or       := and ('|' and)*
    and      := until ('&' until)*
    until    := unary ('U' interval until)?
    unary    := '!' unary | 'G' interval '(' formula ')'
              | 'F' interval '(' formula ')' | '(' formula ')' | 'true' | atom
    atom     := 'ball' '(' name ',' point ')' ('<='|'>=') number
              | ['!'] 'box' '(' name ',' point ',' point ')'
              | 'halfplane' '(' axis ',' number ',' number ')'
    point    := '(' number ',' number ')'
    interval := '[' number ',' number ']'
    axis     := 'x' | 'y' | integer

`&` binds tighter than `|`; `!box(...)` is the complement-box atom form.
Timed operators may not be nested: window bounds are absolute times, so an
inner timed operator would not depend on its evaluation instant, and the
two readings (absolute vs. shifted) silently diverge.  Such formulas are
rejected here rather than guessed at.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
    Always,
    And,
    AxisBox,
    BallDistance,
    Eventually,
    Formula,
    HalfPlaneProduct,
    IntervalError,
    Not,
    Or,
    Predicate,
    StlSyntaxError,
    TimeInterval,
    TrueFormula,
    Until,
    contains_temporal,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|[()\[\],!&|])
    """,
    re.VERBOSE,
)

_AXIS_NAMES = {"x": 0, "y": 1, "x0": 0, "x1": 1}


@dataclass(frozen=True)
class _Token:
    kind: str  # 'number' | 'name' | literal op | 'end'
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise StlSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind != "ws":
            tok_kind = value if kind == "op" else kind
            tokens.append(_Token(tok_kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    tokens.append(_Token("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "end":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            found = tok.text or "end of input"
            raise StlSyntaxError(f"found {found!r}", tok.line, tok.col, expected=(what or kind,))
        return self.advance()

    def number(self) -> float:
        return float(self.expect("number", "number").text)

    # --- grammar rules ---

    def formula(self) -> Formula:
        node = self.and_expr()
        while self.peek().kind == "|":
            self.advance()
            node = Or(node, self.and_expr())
        return node

    def and_expr(self) -> Formula:
        node = self.until_expr()
        while self.peek().kind == "&":
            self.advance()
            node = And(node, self.until_expr())
        return node

    def until_expr(self) -> Formula:
        node = self.unary()
        tok = self.peek()
        if tok.kind == "name" and tok.text == "U":
            self.advance()
            interval = self.interval(tok)
            right = self.until_expr()
            result = Until(node, right, interval)
            self._reject_nesting(result, tok)
            return result
        return node

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "!":
            nxt = self.tokens[self.pos + 1]
            if nxt.kind == "name" and nxt.text == "box":
                self.advance()
                return self.box_atom(inside=False)
            self.advance()
            return Not(self.unary())
        if tok.kind == "(":
            self.advance()
            node = self.formula()
            self.expect(")")
            return node
        if tok.kind == "name":
            if tok.text in ("G", "F"):
                self.advance()
                interval = self.interval(tok)
                self.expect("(")
                child = self.formula()
                self.expect(")")
                node = Always(child, interval) if tok.text == "G" else Eventually(child, interval)
                self._reject_nesting(node, tok)
                return node
            if tok.text == "true":
                self.advance()
                return TrueFormula()
            if tok.text == "ball":
                self.advance()
                return self.ball_atom()
            if tok.text == "box":
                return self.box_atom(inside=True)
            if tok.text == "halfplane":
                self.advance()
                return self.halfplane_atom()
        found = tok.text or "end of input"
        raise StlSyntaxError(
            f"found {found!r}",
            tok.line,
            tok.col,
            expected=("true", "ball", "box", "halfplane", "G", "F", "!", "("),
        )

    def _reject_nesting(self, node: Formula, tok: _Token) -> None:
        if any(contains_temporal(c) for c in ((node.left, node.right) if isinstance(node, Until) else (node.child,))):
            raise StlSyntaxError(
                "timed operators cannot be nested: window bounds are absolute times",
                tok.line,
                tok.col,
            )

    def interval(self, at: _Token) -> TimeInterval:
        self.expect("[")
        t1 = self.number()
        self.expect(",")
        t2 = self.number()
        self.expect("]")
        try:
            return TimeInterval(t1, t2)
        except IntervalError as err:
            raise IntervalError(f"{at.line}:{at.col}: {err}") from None

    def point(self) -> tuple[float, float]:
        self.expect("(")
        x = self.number()
        self.expect(",")
        y = self.number()
        self.expect(")")
        return (x, y)

    def ball_atom(self) -> Predicate:
        self.expect("(")
        self.expect("name", "signal variable")
        self.expect(",")
        center = self.point()
        self.expect(")")
        tok = self.peek()
        if tok.kind not in ("<=", ">="):
            raise StlSyntaxError(f"found {tok.text!r}", tok.line, tok.col, expected=("<=", ">="))
        self.advance()
        radius = self.number()
        return Predicate(BallDistance(center=center, radius=radius, inside=(tok.kind == "<=")))

    def box_atom(self, inside: bool) -> Predicate:
        self.expect("name")  # 'box', already checked by the caller
        self.expect("(")
        self.expect("name", "signal variable")
        self.expect(",")
        lower = self.point()
        self.expect(",")
        upper = self.point()
        self.expect(")")
        return Predicate(AxisBox(lower=lower, upper=upper, inside=inside))

    def halfplane_atom(self) -> Predicate:
        self.expect("(")
        tok = self.peek()
        if tok.kind == "name":
            if tok.text not in _AXIS_NAMES:
                raise StlSyntaxError(
                    f"unknown axis {tok.text!r}", tok.line, tok.col, expected=tuple(_AXIS_NAMES)
                )
            axis = _AXIS_NAMES[self.advance().text]
        else:
            axis = int(self.number())
        self.expect(",")
        a = self.number()
        self.expect(",")
        b = self.number()
        self.expect(")")
        return Predicate(HalfPlaneProduct(axis=axis, a=a, b=b))


def parse_formula(text: str) -> Formula:
    """Parse concrete syntax into a formula AST.

    Raises StlSyntaxError (with line/column and the expected tokens) on
    malformed input and IntervalError for windows with t1 >= t2 or t1 < 0.
    """
    parser = _Parser(text)
    node = parser.formula()
    tok = parser.peek()
    if tok.kind != "end":
        raise StlSyntaxError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return node
