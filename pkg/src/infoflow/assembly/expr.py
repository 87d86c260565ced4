"""Tiny transform-expression language.

Literals (decimal, double-quoted text, true/false), element references,
arithmetic on numbers (+ - * /), and `&` text concatenation. Precedence:
(* /) over (+ -) over (&), all left-associative. Any null operand makes the
whole expression null.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from infoflow.errors import EvalError, MissingElement, ParseError
from infoflow.model.values import NULL, Value, canonical_decimal, encode_value


@dataclass(frozen=True)
class Literal:
    value: Value


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expression"
    right: "Expression"


Expression = Literal | Ref | BinOp

_PRECEDENCE = {"&": 1, "+": 2, "-": 2, "*": 3, "/": 3}

_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<number>\d+(?:\.\d+)?)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<string>"(?:[^"\\]|\\.)*")
      | (?P<op>[-+*/&()])
    )""",
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:].lstrip()
            if not rest:
                break
            at = len(text) - len(rest)
            raise ParseError(f"unexpected character {rest[0]!r}", position=at)
        for kind in ("number", "ident", "string", "op"):
            tok = m.group(kind)
            if tok is not None:
                tokens.append((kind, tok, m.start(kind)))
                break
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _unescape(raw: str) -> str:
    body = raw[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            if i + 1 >= len(body) or body[i + 1] not in '"\\':
                raise ParseError(f"bad escape in string literal: {raw!r}")
            out.append(body[i + 1])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _escape(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected: str):
        kind, tok, pos = self.peek()
        found = "end of input" if kind == "end" else repr(tok)
        raise ParseError(f"expected {expected}, found {found}", position=pos)

    def parse(self) -> Expression:
        e = self.concat()
        if self.peek()[0] != "end":
            self.fail("end of input")
        return e

    def binary(self, ops: tuple[str, ...], next_level) -> Expression:
        left = next_level()
        while self.peek()[0] == "op" and self.peek()[1] in ops:
            op = self.advance()[1]
            left = BinOp(op, left, next_level())
        return left

    def concat(self):
        return self.binary(("&",), self.additive)

    def additive(self):
        return self.binary(("+", "-"), self.term)

    def term(self):
        return self.binary(("*", "/"), self.factor)

    def factor(self) -> Expression:
        kind, tok, pos = self.peek()
        if kind == "number":
            self.advance()
            return Literal(Value.number(tok))
        if kind == "string":
            self.advance()
            return Literal(Value.text(_unescape(tok)))
        if kind == "ident":
            self.advance()
            if tok == "true":
                return Literal(Value.boolean(True))
            if tok == "false":
                return Literal(Value.boolean(False))
            return Ref(tok)
        if kind == "op" and tok == "(":
            self.advance()
            e = self.concat()
            if self.peek()[:2] != ("op", ")"):
                self.fail("')'")
            self.advance()
            return e
        self.fail("a literal, element name, or '('")


def parse_expr(text: str) -> Expression:
    return _Parser(text).parse()


def print_expr(e: Expression) -> str:
    """Render with the minimal parentheses that reparse to the same tree."""
    if isinstance(e, Literal):
        v = e.value
        if v.tag == "text":
            return _escape(v.payload)
        return encode_value(v)
    if isinstance(e, Ref):
        return e.name
    prec = _PRECEDENCE[e.op]

    def side(child, tighter_ok: int) -> str:
        rendered = print_expr(child)
        if isinstance(child, BinOp) and _PRECEDENCE[child.op] < tighter_ok:
            return f"({rendered})"
        return rendered

    # left child may share this precedence (left-assoc); right child may not
    return f"{side(e.left, prec)} {e.op} {side(e.right, prec + 1)}"


def referenced_names(e: Expression) -> set[str]:
    if isinstance(e, Ref):
        return {e.name}
    if isinstance(e, BinOp):
        return referenced_names(e.left) | referenced_names(e.right)
    return set()


def static_type(e: Expression, element_types: dict[str, str]) -> str:
    """Result tag of an expression, derivable without evaluating it."""
    if isinstance(e, Literal):
        return e.value.tag
    if isinstance(e, Ref):
        return element_types[e.name]
    return "text" if e.op == "&" else "number"


def eval_expr(e: Expression, row: dict[str, Value]) -> Value:
    if isinstance(e, Literal):
        return e.value
    if isinstance(e, Ref):
        if e.name not in row:
            raise MissingElement(e.name)
        return row[e.name]
    left = eval_expr(e.left, row)
    right = eval_expr(e.right, row)
    if left.is_null or right.is_null:
        return NULL
    if e.op == "&":
        return Value.text(encode_value(left) + encode_value(right))
    if left.tag != "number" or right.tag != "number":
        raise EvalError(f"operator {e.op!r} needs numbers, got {left.tag}/{right.tag}")
    a, b = left.payload, right.payload
    if e.op == "+":
        return Value.number(a + b)
    if e.op == "-":
        return Value.number(a - b)
    if e.op == "*":
        return Value.number(a * b)
    if b == 0:
        raise EvalError("division by zero")
    return Value.number(canonical_decimal(a) / canonical_decimal(b))
