"""Recursive-descent parser for polynomial expressions.

Grammar (whitespace insensitive):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' ['+' | '-'] INT)?
    atom   := NUMBER | NAME | '(' expr ')'

Numbers are integers or decimals and are read exactly (0.5 is 1/2), so a
rational literal is just `3/2`. Division is only allowed by constants.
"""

import re
from fractions import Fraction

from .errors import NegativeExponentError, ParseError, UnknownSymbolError
from .poly import Poly

_TOKEN = re.compile(r"\s*(?:(?P<number>\d+(?:\.\d+)?|\.\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
                    r"|(?P<op>[-+*/^()]))")


def default_symbols(n_dof: int) -> dict[str, Poly]:
    """q1..qn, p1..pn; plus q, p for n=1 and x, y, px, py for n=2."""
    symbols = {}
    for i in range(n_dof):
        symbols[f"q{i + 1}"] = Poly.q(i, n_dof)
        symbols[f"p{i + 1}"] = Poly.p(i, n_dof)
    if n_dof == 1:
        symbols['q'] = Poly.q(0, 1)
        symbols['p'] = Poly.p(0, 1)
    if n_dof == 2:
        symbols.update(x=Poly.q(0, 2), y=Poly.q(1, 2), px=Poly.p(0, 2), py=Poly.p(1, 2))
    return symbols


def generator_symbols(m: int) -> dict[str, Poly]:
    """J1..Jm as variables of an m-variable ring."""
    return {f"J{i + 1}": Poly.var(i, m) for i in range(m)}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == '':
            break
        match = _TOKEN.match(text, pos)
        if not match:
            start = len(text) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", text, start)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append((kind, match.group(kind), start))
        pos = match.end()
    tokens.append(('end', '', len(text)))
    return tokens


class _Parser:

    def __init__(self, text: str, nvars: int, symbols: dict[str, Poly]):
        self.text = text
        self.nvars = nvars
        self.symbols = symbols
        self.tokens = _tokenize(text)
        self.index = 0

    @property
    def current(self):
        return self.tokens[self.index]

    def _advance(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def _accept(self, op: str) -> bool:
        kind, value, _ = self.current
        if kind == 'op' and value == op:
            self.index += 1
            return True
        return False

    def _fail(self, message: str):
        kind, value, pos = self.current
        found = 'end of input' if kind == 'end' else repr(value)
        raise ParseError(f"{message}, found {found}", self.text, pos)

    def parse(self) -> Poly:
        result = self._expr()
        if self.current[0] != 'end':
            self._fail("expected operator")
        return result

    def _expr(self) -> Poly:
        result = self._term()
        while True:
            if self._accept('+'):
                result = result + self._term()
            elif self._accept('-'):
                result = result - self._term()
            else:
                return result

    def _term(self) -> Poly:
        result = self._unary()
        while True:
            if self._accept('*'):
                result = result * self._unary()
            elif self.current[1] == '/' and self.current[0] == 'op':
                pos = self._advance()[2]
                divisor = self._unary()
                if not divisor.is_constant() or divisor.is_zero():
                    raise ParseError("division by a non-constant or zero", self.text, pos)
                result = result / divisor
            else:
                return result

    def _unary(self) -> Poly:
        if self._accept('-'):
            return -self._unary()
        if self._accept('+'):
            return self._unary()
        return self._power()

    def _power(self) -> Poly:
        base = self._atom()
        if not self._accept('^'):
            return base
        sign_pos = self.current[2]
        negative = False
        if self._accept('-'):
            negative = True
        else:
            self._accept('+')
        kind, value, pos = self.current
        if kind != 'number' or not value.isdigit():
            self._fail("expected integer exponent")
        self._advance()
        if negative:
            raise NegativeExponentError("negative exponent", self.text, sign_pos)
        return base ** int(value)

    def _atom(self) -> Poly:
        kind, value, pos = self.current
        if kind == 'number':
            self._advance()
            return Poly.constant(Fraction(value), self.nvars)
        if kind == 'name':
            self._advance()
            if value not in self.symbols:
                raise UnknownSymbolError(f"unknown symbol {value!r}", self.text, pos)
            return self.symbols[value]
        if self._accept('('):
            inner = self._expr()
            if not self._accept(')'):
                self._fail("expected ')'")
            return inner
        self._fail("expected number, symbol or '('")


def parse_poly(text: str, n_dof: int | None = None,
               symbols: dict[str, Poly] | None = None, nvars: int | None = None) -> Poly:
    """Parse `text` into an exact Poly.

    With only n_dof, the default canonical symbols are bound. Extra entries
    in `symbols` (e.g. a parameter k bound to a constant) are merged on top.
    Pass `nvars` for generator-variable rings (J1..Jm).
    """
    if nvars is None:
        if n_dof is None or n_dof < 1:
            raise ValueError(f"n_dof must be a positive integer, got {n_dof}")
        nvars = 2 * n_dof
        table = default_symbols(n_dof)
    else:
        table = generator_symbols(nvars)
    if symbols:
        for name, value in symbols.items():
            if not isinstance(value, Poly):
                value = Poly.constant(value, nvars)
            table[name] = value
    for name, value in table.items():
        if value.nvars != nvars:
            raise ValueError(f"Symbol {name!r} has {value.nvars} variables, expected {nvars}")
    return _Parser(text, nvars, table).parse()
