"""A small calculus of discrete distributions.

Formulas are built from ``one`` and ``zero`` with sum, minimum, scaling
by a nonnegative rational and convex choice ``(P)_[D]:(P)`` whose weight
``D`` may depend on environment variables valued in ``[0, 1]``.

Concrete syntax::

    formula := term ('+' term)*
    term    := NUMBER '*' term | atom
    atom    := 'one' | 'zero' | 'min' '(' formula ',' formula ')'
             | '(' formula ')' [ '_' '[' weight ']' ':' '(' formula ')' ]
    weight  := wterm ('+' wterm)*
    wterm   := NUMBER ['*' IDENT] | IDENT

Numbers are integers, ``a/b`` fractions or decimals (read exactly).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

from . import pmf as P
from .errors import DegenerateWeight, FormulaSyntaxError, InvalidWeight, UnboundVariable
from .rationals import as_fraction, format_rational, parse_rational

__all__ = [
    "One",
    "Zero",
    "Sum",
    "Min",
    "Scale",
    "Choice",
    "DExpr",
    "Formula",
    "Environment",
    "parse_formula",
    "format_formula",
    "free_vars",
    "evaluate",
    "encode_pmf",
    "parse_env_binding",
]


@dataclass(frozen=True)
class DExpr:
    """Affine weight ``constant + sum(coef * var)``."""

    constant: Fraction = Fraction(0)
    terms: tuple[tuple[Fraction, str], ...] = ()

    def __post_init__(self):
        constant = as_fraction(self.constant)
        terms = tuple((as_fraction(c), str(v)) for c, v in self.terms)
        object.__setattr__(self, "constant", constant)
        object.__setattr__(self, "terms", terms)
        names = [v for _, v in terms]
        if len(set(names)) != len(names):
            raise InvalidWeight(f"variable repeated in weight: {names}")
        coefs = [constant] + [c for c, _ in terms]
        if any(not 0 <= c <= 1 for c in coefs):
            raise InvalidWeight("weight coefficients must lie in [0, 1]")
        if sum(coefs) > 1:
            raise InvalidWeight(f"weight coefficients sum to {sum(coefs)} > 1")

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(v for _, v in self.terms)

    def evaluate(self, env: Mapping[str, Fraction]) -> Fraction:
        total = self.constant
        for coef, name in self.terms:
            if name not in env:
                raise UnboundVariable(name)
            total += coef * as_fraction(env[name])
        if not 0 <= total <= 1:
            raise InvalidWeight(f"weight evaluates to {total}, outside [0, 1]")
        return total

    def __str__(self):
        parts = [f"{format_rational(c)}*{v}" for c, v in self.terms]
        if self.constant or not parts:
            parts.append(format_rational(self.constant))
        return " + ".join(parts)


@dataclass(frozen=True)
class One:
    pass


@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class Sum:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Min:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Scale:
    factor: Fraction
    body: "Formula"

    def __post_init__(self):
        factor = as_fraction(self.factor)
        if factor < 0:
            raise ValueError("scale factor must be nonnegative")
        object.__setattr__(self, "factor", factor)


@dataclass(frozen=True)
class Choice:
    left: "Formula"
    weight: DExpr
    right: "Formula"


Formula = Union[One, Zero, Sum, Min, Scale, Choice]


class Environment(dict):
    """Variable valuations, each an exact rational in ``[0, 1]``."""

    def __init__(self, bindings=(), **kw):
        super().__init__()
        items = dict(bindings, **kw)
        for name, value in items.items():
            value = as_fraction(value)
            if not 0 <= value <= 1:
                raise InvalidWeight(f"environment value {name}={value} outside [0, 1]")
            super().__setitem__(name, value)

    def __setitem__(self, key, value):
        raise TypeError("Environment is immutable")


def parse_env_binding(text: str) -> tuple[str, Fraction]:
    """Parse ``name=a/b`` as used by ``--env`` on the command line."""
    if "=" not in text:
        raise ValueError(f"expected name=value, got {text!r}")
    name, value = text.split("=", 1)
    name = name.strip()
    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
        raise ValueError(f"invalid variable name {name!r}")
    return name, parse_rational(value.strip())


# --- parsing ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:/\d+)?|\.\d+)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*|_[A-Za-z0-9_]+)
  | (?P<op>[+*(),_:\[\]])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"one", "zero", "min"}


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            if kind == "ident" and m.group() in _KEYWORDS:
                kind = "keyword"
            tokens.append(_Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return FormulaSyntaxError(message, tok.line, tok.column)

    def accept(self, text) -> bool:
        if self.tok.text == text and self.tok.kind in ("op", "keyword"):
            self.pos += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def number(self) -> Fraction:
        tok = self.tok
        if tok.kind != "number":
            raise self.error(f"expected a number, found {tok.text or 'end of input'!r}")
        self.pos += 1
        try:
            return parse_rational(tok.text)
        except ValueError as exc:
            raise self.error(str(exc), tok) from None

    def formula(self) -> Formula:
        node = self.term()
        while self.accept("+"):
            node = Sum(node, self.term())
        return node

    def term(self) -> Formula:
        if self.tok.kind == "number":
            k = self.number()
            self.expect("*")
            return Scale(k, self.term())
        return self.atom()

    def atom(self) -> Formula:
        tok = self.tok
        if self.accept("one"):
            return One()
        if self.accept("zero"):
            return Zero()
        if self.accept("min"):
            self.expect("(")
            left = self.formula()
            self.expect(",")
            right = self.formula()
            self.expect(")")
            return Min(left, right)
        if self.accept("("):
            inner = self.formula()
            self.expect(")")
            if self.accept("_"):
                self.expect("[")
                weight = self.weight()
                self.expect("]")
                self.expect(":")
                self.expect("(")
                right = self.formula()
                self.expect(")")
                return Choice(inner, weight, right)
            return inner
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")

    def weight(self) -> DExpr:
        start = self.tok
        constant = Fraction(0)
        terms: list[tuple[Fraction, str]] = []
        while True:
            if self.tok.kind == "ident":
                terms.append((Fraction(1), self.tok.text))
                self.pos += 1
            else:
                coef = self.number()
                if self.accept("*"):
                    if self.tok.kind != "ident":
                        raise self.error("expected a variable name after '*'")
                    terms.append((coef, self.tok.text))
                    self.pos += 1
                else:
                    constant += coef
            if not self.accept("+"):
                break
        try:
            return DExpr(constant, tuple(terms))
        except InvalidWeight as exc:
            raise InvalidWeight(f"{exc} (line {start.line}, column {start.column})") from None


def parse_formula(text: str) -> Formula:
    parser = _Parser(text)
    node = parser.formula()
    if parser.tok.kind != "eof":
        raise parser.error(f"unexpected trailing input {parser.tok.text!r}")
    return node


def format_formula(f: Formula) -> str:
    """Render ``f`` in the concrete syntax; re-parsing gives ``f`` back."""
    if isinstance(f, One):
        return "one"
    if isinstance(f, Zero):
        return "zero"
    if isinstance(f, Sum):
        right = format_formula(f.right)
        if isinstance(f.right, Sum):
            right = f"({right})"
        return f"{format_formula(f.left)} + {right}"
    if isinstance(f, Min):
        return f"min({format_formula(f.left)}, {format_formula(f.right)})"
    if isinstance(f, Scale):
        body = format_formula(f.body)
        if isinstance(f.body, Sum):
            body = f"({body})"
        return f"{format_rational(f.factor)}*{body}"
    if isinstance(f, Choice):
        return f"({format_formula(f.left)})_[{f.weight}]:({format_formula(f.right)})"
    raise TypeError(f"not a formula: {f!r}")


# --- semantics ---------------------------------------------------------------


def free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, (One, Zero)):
        return frozenset()
    if isinstance(f, Scale):
        return free_vars(f.body)
    if isinstance(f, Choice):
        return free_vars(f.left) | f.weight.variables | free_vars(f.right)
    return free_vars(f.left) | free_vars(f.right)


def evaluate(f: Formula, env: Mapping[str, Fraction] | None = None) -> P.Pmf:
    """Exact pmf denoted by ``f`` under ``env``."""
    env = {} if env is None else env
    if isinstance(f, One):
        return P.point_mass(1)
    if isinstance(f, Zero):
        return P.point_mass(0)
    if isinstance(f, Sum):
        return P.pmf_sum(evaluate(f.left, env), evaluate(f.right, env))
    if isinstance(f, Min):
        return P.pmf_min(evaluate(f.left, env), evaluate(f.right, env))
    if isinstance(f, Scale):
        return P.pmf_scale_rat(evaluate(f.body, env), f.factor)
    if isinstance(f, Choice):
        weight = f.weight.evaluate(env)
        return P.pmf_convex(evaluate(f.left, env), evaluate(f.right, env), weight)
    raise TypeError(f"not a formula: {f!r}")


def encode_pmf(f: P.Pmf) -> Formula:
    """Formula whose value under the empty environment is exactly ``f``.

    Support points are taken in ascending order; point ``z_i`` is chosen
    with its probability conditioned on none of the earlier points having
    been chosen.
    """
    items = f.scalar_items()
    remaining = Fraction(1)
    branches = []
    for value, prob in items[:-1]:
        if remaining == 0:
            raise DegenerateWeight("conditional weight has a zero denominator")
        branches.append((value, prob / remaining))
        remaining -= prob
    node: Formula = Scale(items[-1][0], One())
    for value, weight in reversed(branches):
        node = Choice(Scale(value, One()), DExpr(weight), node)
    return node
