"""Propositional goal formulas.

Concrete syntax, loosest binding first::

    formula := disj ( '->' formula )?        # right associative
    disj    := conj ( '|' conj )*
    conj    := unary ( '&' unary )*
    unary   := '~' unary | atom | 'true' | 'false' | '(' formula ')'
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


Formula = Union[Atom, Const, Not, And, Or, Implies]

FALSE = Const(False)
TRUE = Const(True)

_TOKEN = re.compile(r"\s*(?:(->)|([&|~()])|([A-Za-z_][A-Za-z0-9_]*))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None:
            rest = text[pos:].lstrip()
            if rest:
                off = len(text[: len(text) - len(rest)].encode())
                raise FormulaSyntaxError(f"unexpected character {rest[0]!r}", off)
            break
        start = m.start(m.lastindex)
        tokens.append((m.group(m.lastindex), len(text[:start].encode())))
        pos = m.end()
    tokens.append(("", len(text.encode())))
    return tokens


class _Parser:
    def __init__(self, text: str, atoms):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.atoms = None if atoms is None else set(atoms)

    def peek(self) -> str:
        return self.tokens[self.pos][0]

    def take(self, expected: str | None = None):
        tok, off = self.tokens[self.pos]
        if expected is not None and tok != expected:
            found = repr(tok) if tok else "end of input"
            raise FormulaSyntaxError(f"expected {expected!r}, found {found}", off)
        self.pos += 1
        return tok, off

    def formula(self) -> Formula:
        left = self.disj()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.formula())
        return left

    def disj(self) -> Formula:
        node = self.conj()
        while self.peek() == "|":
            self.take()
            node = Or(node, self.conj())
        return node

    def conj(self) -> Formula:
        node = self.unary()
        while self.peek() == "&":
            self.take()
            node = And(node, self.unary())
        return node

    def unary(self) -> Formula:
        tok, off = self.tokens[self.pos]
        if tok == "~":
            self.take()
            return Not(self.unary())
        if tok == "(":
            self.take()
            node = self.formula()
            self.take(")")
            return node
        if tok == "true":
            self.take()
            return TRUE
        if tok == "false":
            self.take()
            return FALSE
        if tok and (tok[0].isalpha() or tok[0] == "_"):
            if self.atoms is not None and tok not in self.atoms:
                raise FormulaSyntaxError(f"undeclared atom {tok!r}", off)
            self.take()
            return Atom(tok)
        raise FormulaSyntaxError(f"unexpected {tok!r}" if tok else "unexpected end of input", off)


def parse(text: str, atoms: Sequence[str] | None = None) -> Formula:
    """Parse ``text``; atoms must be among ``atoms`` when given."""
    if not text.strip():
        raise FormulaSyntaxError("empty formula", 0)
    p = _Parser(text, atoms)
    node = p.formula()
    tok, off = p.tokens[p.pos]
    if tok:
        raise FormulaSyntaxError(f"trailing input {tok!r}", off)
    return node


def evaluate(f: Formula, valuation: Mapping[str, bool]) -> bool:
    if isinstance(f, Atom):
        try:
            return bool(valuation[f.name])
        except KeyError:
            raise KeyError(f"valuation does not assign atom {f.name!r}") from None
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Not):
        return not evaluate(f.arg, valuation)
    if isinstance(f, And):
        return evaluate(f.left, valuation) and evaluate(f.right, valuation)
    if isinstance(f, Or):
        return evaluate(f.left, valuation) or evaluate(f.right, valuation)
    if isinstance(f, Implies):
        return (not evaluate(f.left, valuation)) or evaluate(f.right, valuation)
    raise TypeError(f"not a formula: {f!r}")


def atoms_of(f: Formula) -> frozenset:
    if isinstance(f, Atom):
        return frozenset([f.name])
    if isinstance(f, Const):
        return frozenset()
    if isinstance(f, Not):
        return atoms_of(f.arg)
    return atoms_of(f.left) | atoms_of(f.right)


def to_text(f: Formula) -> str:
    """Fully parenthesised rendering; ``parse(to_text(f)) == f``."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        return "~" + to_text(f.arg)
    op = {And: "&", Or: "|", Implies: "->"}[type(f)]
    return f"({to_text(f.left)} {op} {to_text(f.right)})"
