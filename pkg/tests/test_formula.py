import itertools

import numpy as np
import pytest

from endogoals import FormulaSyntaxError, evaluate, parse
from endogoals.formula import And, Atom, Const, Implies, Not, Or, atoms_of, to_text

from oracles import random_formula, truth_table


def test_precedence_and_associativity():
    assert parse("a | b & c") == Or(Atom("a"), And(Atom("b"), Atom("c")))
    assert parse("~a & b") == And(Not(Atom("a")), Atom("b"))
    assert parse("a -> b -> c") == Implies(Atom("a"), Implies(Atom("b"), Atom("c")))
    assert parse("a & b & c") == And(And(Atom("a"), Atom("b")), Atom("c"))
    assert parse("true | false") == Or(Const(True), Const(False))


@pytest.mark.parametrize("text", ["", "   ", "a &", "(a", "a b", "a ^ b", "~", ")"])
def test_syntax_errors(text):
    with pytest.raises(FormulaSyntaxError):
        parse(text)


def test_error_reports_offset():
    with pytest.raises(FormulaSyntaxError) as exc:
        parse("a & & b")
    assert exc.value.offset == 4


def test_unknown_atom_rejected_when_atoms_given():
    with pytest.raises(FormulaSyntaxError):
        parse("p & z", atoms=["p", "q"])
    assert parse("p & q", atoms=["p", "q"]) == And(Atom("p"), Atom("q"))


def test_evaluate_missing_atom():
    with pytest.raises(KeyError):
        evaluate(parse("p"), {})


def test_atoms_of():
    assert atoms_of(parse("(p -> ~q) | true & r")) == {"p", "q", "r"}


def test_random_formulas_against_python_semantics():
    rng = np.random.default_rng(7)
    atoms = ["p", "q", "r"]
    for _ in range(500):
        text, py = random_formula(rng, atoms)
        f = parse(text)
        got = [evaluate(f, dict(zip(atoms, bits))) for bits in itertools.product((False, True), repeat=3)]
        assert got == truth_table(py, atoms), text
        assert parse(to_text(f)) == f
