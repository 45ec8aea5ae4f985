"""Line-oriented game files.

Strategic game::

    game strategic
    players 2
    strategy 0 U
    strategy 0 D
    strategy 1 L
    strategy 1 R
    payoff U,L 3 3
    ...
    goal 0 D,R
    boost all offset 3
    budget 0 U,L 5

Boolean game::

    game boolean
    players 2
    atoms sa sb
    control 0 sa
    control 1 sb
    goalformula 1 "sa & sb"
    cost 0 * 4
    cost 0 sa=1 5
    epsilon 1
    budgetmode effective

Either kind may carry ``transfer <giver> <profile> -> <receiver> : <amount>``
and ``tax <player> <profile> : <amount>`` lines.  Boolean profiles are
``atom=0|1`` lists covering every atom.  ``#`` starts a comment.
"""
from __future__ import annotations

import itertools
import math
import shlex
from dataclasses import dataclass, field

import numpy as np

from .boolean import BooleanGame, to_goal_game
from .core import BoostSpec, BudgetConstraints, GoalAssignment, StrategicGame
from .formula import FALSE, FormulaSyntaxError, parse, to_text
from .transfers import TaxationMechanism, TransferFunction

DEFAULT_BOOST = BoostSpec.offset(1.0)


class GameFileError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(eq=False)
class GameDescription:
    """Everything a game file can say."""

    kind: str
    game: StrategicGame
    goals: GoalAssignment
    boosts: tuple
    budgets: BudgetConstraints
    boolean: BooleanGame | None = None
    budget_mode: str = "effective"
    explicit_budgets: bool = False
    transfers: TransferFunction | None = None
    taxes: TaxationMechanism | None = None

    def endogenous(self):
        from .endogenous import EndogenousGame

        if self.boolean is not None:
            return EndogenousGame.from_boolean(self.boolean, self.budget_mode)
        rule = "explicit" if self.explicit_budgets else "payoff"
        return EndogenousGame(self.game, self.goals, self.boosts, self.budgets, budget_rule=rule)

    def profile(self, text: str) -> tuple[int, ...]:
        return parse_profile(self, text)

    def format_profile(self, profile) -> str:
        return format_profile(self, profile)


def fmt(x: float) -> str:
    """Shortest text for a number: integers without a decimal point."""
    x = float(x)
    if x == 0:
        return "0"
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _number(tok: str, line: int, what: str = "number") -> float:
    try:
        x = float(tok)
    except ValueError:
        raise GameFileError(f"bad {what} {tok!r}", line) from None
    if not math.isfinite(x):
        raise GameFileError(f"{what} must be finite", line)
    return x


def _player(tok: str, n: int | None, line: int) -> int:
    if n is None:
        raise GameFileError("'players' must come first", line)
    try:
        i = int(tok)
    except ValueError:
        raise GameFileError(f"bad player id {tok!r}", line) from None
    if not 0 <= i < n:
        raise GameFileError(f"player {i} out of range 0..{n - 1}", line)
    return i


def _tokens(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        try:
            toks = shlex.split(raw, comments=True)
        except ValueError as exc:
            raise GameFileError(str(exc), lineno) from None
        if toks:
            yield lineno, toks


# -- profiles -------------------------------------------------------------------


def _strategic_profile(game: StrategicGame, text: str, line=None) -> tuple[int, ...]:
    labels = text.split(",")
    try:
        return game.profile_index(labels)
    except ValueError as exc:
        raise GameFileError(str(exc), line) from None


def _boolean_valuation(b: BooleanGame, text: str, line=None, partial=False) -> dict:
    out = {}
    for part in text.split(","):
        atom, eq, bit = part.partition("=")
        if not eq or bit not in ("0", "1"):
            raise GameFileError(f"bad assignment {part!r}; expected atom=0 or atom=1", line)
        if atom not in b.atoms:
            raise GameFileError(f"undeclared atom {atom!r}", line)
        if atom in out:
            raise GameFileError(f"atom {atom!r} assigned twice", line)
        out[atom] = bit == "1"
    if not partial and set(out) != set(b.atoms):
        missing = [a for a in b.atoms if a not in out]
        raise GameFileError(f"outcome leaves atoms {missing} unassigned", line)
    return out


def parse_profile(desc: GameDescription, text: str, line=None) -> tuple[int, ...]:
    if desc.boolean is not None:
        b = desc.boolean
        val = _boolean_valuation(b, text, line)
        return b.profile_of(tuple(val[a] for a in b.atoms))
    return _strategic_profile(desc.game, text, line)


def format_profile(desc: GameDescription, profile) -> str:
    if desc.boolean is not None:
        b = desc.boolean
        v = b.valuation_of(profile)
        return ",".join(f"{a}={int(x)}" for a, x in zip(b.atoms, v))
    return ",".join(desc.game.profile_labels(tuple(profile)))


# -- parsing ----------------------------------------------------------------------


def parse_game_file(text: str) -> GameDescription:
    lines = list(_tokens(text))
    if not lines or lines[0][1][0] != "game":
        raise GameFileError("file must start with 'game strategic' or 'game boolean'", lines[0][0] if lines else None)
    lineno, toks = lines[0]
    if len(toks) != 2 or toks[1] not in ("strategic", "boolean"):
        raise GameFileError("expected 'game strategic' or 'game boolean'", lineno)
    if toks[1] == "strategic":
        return _parse_strategic(lines[1:])
    return _parse_boolean(lines[1:])


def _players(toks, lineno, n):
    if n is not None:
        raise GameFileError("duplicate 'players' line", lineno)
    if len(toks) != 2:
        raise GameFileError("usage: players <n>", lineno)
    try:
        n = int(toks[1])
    except ValueError:
        raise GameFileError(f"bad player count {toks[1]!r}", lineno) from None
    if n < 1:
        raise GameFileError("need at least one player", lineno)
    return n


def _split_payment_lines(lines):
    body, payments = [], []
    for lineno, toks in lines:
        (payments if toks[0] in ("transfer", "tax") else body).append((lineno, toks))
    return body, payments


def _parse_strategic(lines) -> GameDescription:
    body, payments = _split_payment_lines(lines)
    n = None
    strategies = None
    payoff_lines, goal_lines, boost_lines, budget_lines = [], [], [], []
    for lineno, toks in body:
        kw = toks[0]
        if kw == "players":
            n = _players(toks, lineno, n)
            strategies = [[] for _ in range(n)]
        elif kw == "strategy":
            if len(toks) != 3:
                raise GameFileError("usage: strategy <player> <label>", lineno)
            i = _player(toks[1], n, lineno)
            label = toks[2]
            if "," in label:
                raise GameFileError("strategy labels cannot contain commas", lineno)
            if label in strategies[i]:
                raise GameFileError(f"duplicate strategy {label!r} for player {i}", lineno)
            if payoff_lines or goal_lines or budget_lines:
                raise GameFileError("strategies must be declared before profiles are used", lineno)
            strategies[i].append(label)
        elif kw == "payoff":
            payoff_lines.append((lineno, toks))
        elif kw == "goal":
            goal_lines.append((lineno, toks))
        elif kw == "boost":
            boost_lines.append((lineno, toks))
        elif kw == "budget":
            budget_lines.append((lineno, toks))
        else:
            raise GameFileError(f"unknown keyword {kw!r}", lineno)
    if n is None:
        raise GameFileError("missing 'players' line")
    for i, s in enumerate(strategies):
        if not s:
            raise GameFileError(f"player {i} has no strategies")
    labels = tuple(tuple(s) for s in strategies)
    shape = tuple(len(s) for s in labels)
    skeleton = StrategicGame(labels, np.zeros(shape + (n,)))
    payoff = np.zeros(shape + (n,))
    seen = set()
    for lineno, toks in payoff_lines:
        if len(toks) != 2 + n:
            raise GameFileError(f"usage: payoff <profile> followed by {n} numbers", lineno)
        prof = _strategic_profile(skeleton, toks[1], lineno)
        if prof in seen:
            raise GameFileError(f"duplicate payoff line for {toks[1]}", lineno)
        seen.add(prof)
        payoff[prof] = [_number(t, lineno, "payoff") for t in toks[2:]]
    if len(seen) != int(np.prod(shape)):
        missing = next(p for p in skeleton.profiles() if p not in seen)
        raise GameFileError(f"incomplete payoff table: no line for {','.join(skeleton.profile_labels(missing))}")
    game = StrategicGame(labels, payoff)
    goals = [set() for _ in range(n)]
    for lineno, toks in goal_lines:
        if len(toks) != 3:
            raise GameFileError("usage: goal <player> <profile>", lineno)
        goals[_player(toks[1], n, lineno)].add(_strategic_profile(game, toks[2], lineno))
    boosts = [DEFAULT_BOOST] * n
    for lineno, toks in boost_lines:
        if len(toks) != 4 or toks[2] not in ("offset", "regret"):
            raise GameFileError("usage: boost <player|all> offset|regret <value>", lineno)
        try:
            spec = BoostSpec(toks[2], _number(toks[3], lineno, "boost parameter"))
        except ValueError as exc:
            raise GameFileError(str(exc), lineno) from None
        if toks[1] == "all":
            boosts = [spec] * n
        else:
            boosts[_player(toks[1], n, lineno)] = spec
    bound = np.array(payoff)
    explicit = set()
    for lineno, toks in budget_lines:
        if len(toks) != 4:
            raise GameFileError("usage: budget <player> <profile> <bound>", lineno)
        i = _player(toks[1], n, lineno)
        prof = _strategic_profile(game, toks[2], lineno)
        if (i, prof) in explicit:
            raise GameFileError(f"duplicate budget for player {i} at {toks[2]}", lineno)
        explicit.add((i, prof))
        bound[prof + (i,)] = _number(toks[3], lineno, "budget")
    desc = GameDescription(
        "strategic",
        game,
        GoalAssignment(tuple(frozenset(g) for g in goals)),
        tuple(boosts),
        BudgetConstraints(bound),
        explicit_budgets=not np.array_equal(bound, payoff),
    )
    _parse_payments(desc, payments)
    return desc


def _parse_boolean(lines) -> GameDescription:
    body, payments = _split_payment_lines(lines)
    n = None
    atoms = None
    control = None
    formulas = {}
    cost_lines = []
    epsilon = None
    mode = None
    for lineno, toks in body:
        kw = toks[0]
        if kw == "players":
            n = _players(toks, lineno, n)
            control = [[] for _ in range(n)]
        elif kw == "atoms":
            if atoms is not None:
                raise GameFileError("duplicate 'atoms' line", lineno)
            atoms = toks[1:]
            if not atoms:
                raise GameFileError("usage: atoms <atom> ...", lineno)
            for a in atoms:
                if not a.isidentifier() or a in ("true", "false"):
                    raise GameFileError(f"bad atom name {a!r}", lineno)
            if len(set(atoms)) != len(atoms):
                raise GameFileError("duplicate atom names", lineno)
        elif kw == "control":
            if atoms is None:
                raise GameFileError("'atoms' must come before 'control'", lineno)
            if len(toks) < 3:
                raise GameFileError("usage: control <player> <atom> ...", lineno)
            i = _player(toks[1], n, lineno)
            for a in toks[2:]:
                if a not in atoms:
                    raise GameFileError(f"undeclared atom {a!r}", lineno)
                if any(a in c for c in control):
                    raise GameFileError(f"atom {a!r} is already controlled", lineno)
                control[i].append(a)
        elif kw == "goalformula":
            if len(toks) != 3:
                raise GameFileError('usage: goalformula <player> "<formula>"', lineno)
            i = _player(toks[1], n, lineno)
            if atoms is None:
                raise GameFileError("'atoms' must come before goal formulas", lineno)
            if i in formulas:
                raise GameFileError(f"duplicate goal formula for player {i}", lineno)
            try:
                formulas[i] = parse(toks[2], atoms)
            except FormulaSyntaxError as exc:
                raise GameFileError(f"goal formula: {exc}", lineno) from None
        elif kw == "cost":
            cost_lines.append((lineno, toks))
        elif kw == "epsilon":
            if epsilon is not None or len(toks) != 2:
                raise GameFileError("usage: epsilon <value> (once)", lineno)
            epsilon = _number(toks[1], lineno, "epsilon")
            if epsilon <= 0:
                raise GameFileError("epsilon must be positive", lineno)
        elif kw == "budgetmode":
            if mode is not None or len(toks) != 2 or toks[1] not in ("effective", "literal"):
                raise GameFileError("usage: budgetmode effective|literal (once)", lineno)
            mode = toks[1]
        else:
            raise GameFileError(f"unknown keyword {kw!r}", lineno)
    if n is None or atoms is None:
        raise GameFileError("a boolean game needs 'players' and 'atoms' lines")
    k = len(atoms)
    cost = np.zeros((2**k, n))
    try:
        skeleton = BooleanGame(tuple(atoms), tuple(tuple(c) for c in control), cost, (FALSE,) * n)
    except ValueError as exc:
        raise GameFileError(str(exc)) from None
    for lineno, toks in cost_lines:
        if len(toks) != 4:
            raise GameFileError("usage: cost <player> <pattern|*> <value>", lineno)
        i = _player(toks[1], n, lineno)
        c = _number(toks[3], lineno, "cost")
        if c < 0:
            raise GameFileError("costs must be non-negative", lineno)
        pattern = {} if toks[2] == "*" else _boolean_valuation(skeleton, toks[2], lineno, partial=True)
        for idx, v in enumerate(itertools.product((False, True), repeat=k)):
            if all(v[atoms.index(a)] == bit for a, bit in pattern.items()):
                cost[idx, i] = c
    goals = tuple(formulas.get(i, FALSE) for i in range(n))
    b = BooleanGame(tuple(atoms), tuple(tuple(c) for c in control), cost, goals, 1.0 if epsilon is None else epsilon)
    mode = mode or "effective"
    game, gassign, boost, bound = to_goal_game(b, mode)
    desc = GameDescription("boolean", game, gassign, (boost,) * n, bound, b, mode)
    _parse_payments(desc, payments)
    return desc


def _parse_payments(desc: GameDescription, payments) -> None:
    n = desc.game.n_players
    pay = np.zeros((n,) + desc.game.payoff.shape)
    tax = np.zeros(desc.game.payoff.shape)
    seen_t = seen_a = False
    for lineno, toks in payments:
        if toks[0] == "transfer":
            if len(toks) != 7 or toks[3] != "->" or toks[5] != ":":
                raise GameFileError("usage: transfer <giver> <profile> -> <receiver> : <amount>", lineno)
            i = _player(toks[1], n, lineno)
            j = _player(toks[4], n, lineno)
            if i == j:
                raise GameFileError("a player cannot pay themselves", lineno)
            prof = parse_profile(desc, toks[2], lineno)
            amt = _number(toks[6], lineno, "amount")
            if amt < 0:
                raise GameFileError("transfers must be non-negative", lineno)
            if pay[(i,) + prof + (j,)] != 0:
                raise GameFileError("duplicate transfer line", lineno)
            pay[(i,) + prof + (j,)] = amt
            seen_t = True
        else:
            if len(toks) != 5 or toks[3] != ":":
                raise GameFileError("usage: tax <player> <profile> : <amount>", lineno)
            i = _player(toks[1], n, lineno)
            prof = parse_profile(desc, toks[2], lineno)
            amt = _number(toks[4], lineno, "amount")
            if amt < 0:
                raise GameFileError("taxes must be non-negative", lineno)
            if tax[prof + (i,)] != 0:
                raise GameFileError("duplicate tax line", lineno)
            tax[prof + (i,)] = amt
            seen_a = True
    desc.transfers = TransferFunction(pay) if seen_t else None
    desc.taxes = TaxationMechanism(tax) if seen_a else None


def parse_payment_file(desc: GameDescription, text: str):
    """Read a file of ``transfer``/``tax`` lines against the game in ``desc``.

    Returns ``(transfers, taxes)``; either may be ``None``.
    """
    lines = list(_tokens(text))
    for lineno, toks in lines:
        if toks[0] not in ("transfer", "tax"):
            raise GameFileError(f"unexpected keyword {toks[0]!r} in a payment file", lineno)
    scratch = GameDescription(desc.kind, desc.game, desc.goals, desc.boosts, desc.budgets, desc.boolean)
    _parse_payments(scratch, lines)
    return scratch.transfers, scratch.taxes


# -- printing ---------------------------------------------------------------------


def _payment_lines(desc: GameDescription) -> list[str]:
    out = []
    if desc.transfers is not None:
        pay = desc.transfers.pay
        for i in range(pay.shape[0]):
            for prof in desc.game.profiles():
                for j in range(pay.shape[-1]):
                    x = pay[(i,) + prof + (j,)]
                    if x != 0:
                        out.append(f"transfer {i} {format_profile(desc, prof)} -> {j} : {fmt(x)}")
    if desc.taxes is not None:
        tax = desc.taxes.tax
        for i in range(desc.game.n_players):
            for prof in desc.game.profiles():
                x = tax[prof + (i,)]
                if x != 0:
                    out.append(f"tax {i} {format_profile(desc, prof)} : {fmt(x)}")
    return out


def print_game_file(desc: GameDescription) -> str:
    if desc.boolean is not None:
        return _print_boolean(desc)
    g = desc.game
    n = g.n_players
    out = ["game strategic", f"players {n}"]
    for i, labels in enumerate(g.strategies):
        out.extend(f"strategy {i} {s}" for s in labels)
    for prof in g.profiles():
        out.append(f"payoff {format_profile(desc, prof)} " + " ".join(fmt(x) for x in g.payoff[prof]))
    for i, goals in enumerate(desc.goals.goals):
        out.extend(f"goal {i} {format_profile(desc, p)}" for p in sorted(goals))
    boosts = tuple(desc.boosts)
    if all(b == boosts[0] for b in boosts):
        if boosts[0] != DEFAULT_BOOST:
            out.append(f"boost all {boosts[0].family} {fmt(boosts[0].value)}")
    else:
        for i, b in enumerate(boosts):
            if b != DEFAULT_BOOST:
                out.append(f"boost {i} {b.family} {fmt(b.value)}")
    for i in range(n):
        for prof in g.profiles():
            b = desc.budgets.bound[prof + (i,)]
            if b != g.payoff[prof + (i,)]:
                out.append(f"budget {i} {format_profile(desc, prof)} {fmt(b)}")
    out.extend(_payment_lines(desc))
    return "\n".join(out) + "\n"


def _print_boolean(desc: GameDescription) -> str:
    b = desc.boolean
    out = ["game boolean", f"players {b.n_players}", "atoms " + " ".join(b.atoms)]
    for i, owned in enumerate(b.control):
        out.append(f"control {i} " + " ".join(owned))
    for i, f in enumerate(b.goals):
        if f != FALSE:
            out.append(f'goalformula {i} "{to_text(f)}"')
    for i in range(b.n_players):
        for idx, v in enumerate(itertools.product((False, True), repeat=len(b.atoms))):
            c = b.cost[idx, i]
            if c != 0:
                pattern = ",".join(f"{a}={int(x)}" for a, x in zip(b.atoms, v))
                out.append(f"cost {i} {pattern} {fmt(c)}")
    out.append(f"epsilon {fmt(b.epsilon)}")
    out.append(f"budgetmode {desc.budget_mode}")
    out.extend(_payment_lines(desc))
    return "\n".join(out) + "\n"


def strategic_description(game, goals=None, boosts=None, budgets=None, transfers=None, taxes=None) -> GameDescription:
    n = game.n_players
    goals = GoalAssignment.empty(n) if goals is None else goals
    boosts = (DEFAULT_BOOST,) * n if boosts is None else tuple(boosts)
    explicit = budgets is not None and not np.array_equal(budgets.bound, game.payoff)
    budgets = BudgetConstraints.at_payoff(game) if budgets is None else budgets
    return GameDescription("strategic", game, goals, boosts, budgets, explicit_budgets=explicit,
                           transfers=transfers, taxes=taxes)


def boolean_description(b: BooleanGame, mode: str = "effective") -> GameDescription:
    game, goals, boost, bound = to_goal_game(b, mode)
    return GameDescription("boolean", game, goals, (boost,) * b.n_players, bound, b, mode)
