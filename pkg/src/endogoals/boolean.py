"""Boolean games and their translation into strategic games with goals."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import BoostSpec, BudgetConstraints, GoalAssignment, StrategicGame, _frozen
from .formula import FALSE, Formula, atoms_of, evaluate

Valuation = tuple[bool, ...]


@dataclass(frozen=True, eq=False)
class BooleanGame:
    """Players controlling disjoint atoms, with costs and goal formulas.

    ``cost`` has shape ``(2**len(atoms), n)`` and is indexed by the position of
    a valuation in :func:`valuations` order.
    """

    atoms: tuple[str, ...]
    control: tuple[tuple[str, ...], ...]
    cost: np.ndarray
    goals: tuple[Formula, ...]
    epsilon: float = 1.0

    def __post_init__(self):
        atoms = tuple(self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if len(set(atoms)) != len(atoms):
            raise ValueError("duplicate atom names")
        order = {a: k for k, a in enumerate(atoms)}
        control = []
        for i, owned in enumerate(self.control):
            if not owned:
                raise ValueError(f"player {i} controls no atoms")
            for a in owned:
                if a not in order:
                    raise ValueError(f"player {i} controls undeclared atom {a!r}")
            control.append(tuple(sorted(owned, key=order.__getitem__)))
        flat = [a for owned in control for a in owned]
        if len(flat) != len(set(flat)):
            raise ValueError("control sets overlap")
        if set(flat) != set(atoms):
            missing = sorted(set(atoms) - set(flat), key=order.__getitem__)
            raise ValueError(f"atoms {missing} are not controlled by any player")
        object.__setattr__(self, "control", tuple(control))
        n = len(control)
        cost = _frozen(self.cost)
        if cost.shape != (2 ** len(atoms), n):
            raise ValueError(f"cost table must have shape {(2 ** len(atoms), n)}")
        if not np.all(np.isfinite(cost)) or np.any(cost < 0):
            raise ValueError("costs must be finite and non-negative")
        object.__setattr__(self, "cost", cost)
        goals = tuple(self.goals)
        if len(goals) != n:
            raise ValueError("need one goal formula per player")
        for i, g in enumerate(goals):
            unknown = atoms_of(g) - set(atoms)
            if unknown:
                raise ValueError(f"goal of player {i} uses undeclared atoms {sorted(unknown)}")
        object.__setattr__(self, "goals", goals)
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError("epsilon must be a positive real")

    @property
    def n_players(self) -> int:
        return len(self.control)

    def valuation_index(self, v: Valuation) -> int:
        idx = 0
        for bit in v:
            idx = 2 * idx + int(bool(bit))
        return idx

    def as_dict(self, v: Valuation) -> dict[str, bool]:
        return dict(zip(self.atoms, v))

    def satisfies(self, v: Valuation, player: int) -> bool:
        return evaluate(self.goals[player], self.as_dict(v))

    def choices(self, player: int) -> list[tuple[bool, ...]]:
        """Player's choices over their atoms, lexicographic with false first."""
        return list(itertools.product((False, True), repeat=len(self.control[player])))

    def choice_label(self, player: int, choice: Sequence[bool]) -> str:
        return "/".join(f"{a}={int(b)}" for a, b in zip(self.control[player], choice))

    def profile_of(self, v: Valuation) -> tuple[int, ...]:
        d = self.as_dict(v)
        prof = []
        for owned in self.control:
            idx = 0
            for a in owned:
                idx = 2 * idx + int(d[a])
            prof.append(idx)
        return tuple(prof)

    def valuation_of(self, profile: Sequence[int]) -> Valuation:
        d = {}
        for owned, idx in zip(self.control, profile):
            bits = format(idx, f"0{len(owned)}b")
            for a, b in zip(owned, bits):
                d[a] = b == "1"
        return tuple(d[a] for a in self.atoms)

    def cost_tensor(self) -> np.ndarray:
        """Costs rearranged on the profile grid, shape ``(*sizes, n)``."""
        shape = tuple(2 ** len(c) for c in self.control)
        out = np.zeros(shape + (self.n_players,))
        for prof in itertools.product(*(range(k) for k in shape)):
            out[prof] = self.cost[self.valuation_index(self.valuation_of(prof))]
        return out

    def with_cost(self, cost) -> "BooleanGame":
        return BooleanGame(self.atoms, self.control, cost, self.goals, self.epsilon)


def valuations(b: BooleanGame) -> list[Valuation]:
    """All valuations of ``b.atoms`` in lexicographic order (false < true)."""
    return list(itertools.product((False, True), repeat=len(b.atoms)))


def mu(b: BooleanGame, effective_cost: np.ndarray, player: int) -> float:
    """Regret boost: the player's worst effective cost over all valuations."""
    return float(np.max(np.asarray(effective_cost)[..., player]))


def to_goal_game(b: BooleanGame, budgets: str = "effective"):
    """Strategic game with goals corresponding to ``b``.

    Returns ``(game, goals, boost, budgets)``.  Payoffs are negated costs, goal
    profiles are the valuations satisfying each formula and the boost is the
    regret family with ``b.epsilon``.  ``budgets="effective"`` caps payoffs at
    zero (effective costs stay non-negative); ``"literal"`` caps them at the
    negated costs, forbidding any net receipt.
    """
    strategies = tuple(
        tuple(b.choice_label(i, c) for c in b.choices(i)) for i in range(b.n_players)
    )
    payoff = -b.cost_tensor()
    game = StrategicGame(strategies, payoff + 0.0)
    goal_sets = [set() for _ in range(b.n_players)]
    for v in valuations(b):
        prof = b.profile_of(v)
        for i in range(b.n_players):
            if b.satisfies(v, i):
                goal_sets[i].add(prof)
    goals = GoalAssignment(tuple(frozenset(g) for g in goal_sets))
    if budgets == "effective":
        bound = BudgetConstraints.constant(game, 0.0)
    elif budgets == "literal":
        bound = BudgetConstraints.at_payoff(game)
    else:
        raise ValueError(f"unknown budget mode {budgets!r}")
    return game, goals, BoostSpec.regret(b.epsilon), bound


def embed_strategic(game: StrategicGame, k: float | None = None) -> tuple[BooleanGame, float]:
    """Boolean game whose induced utilities are ``payoff - k``.

    Every strategy count must be a power of two.  Goals are the contradiction
    ``p & ~p`` so no profile is boosted; costs are ``k - payoff``.
    """
    from .formula import And, Atom, Not

    atoms, control = [], []
    for i, size in enumerate(game.shape):
        bits = size.bit_length() - 1
        if size < 2 or 2**bits != size:
            raise ValueError(f"player {i} has {size} strategies, not a power of two >= 2")
        owned = tuple(f"x{i}_{j}" for j in range(bits))
        atoms.extend(owned)
        control.append(owned)
    if k is None:
        k = max(0.0, float(np.ceil(game.payoff.max())))
    if np.any(k - game.payoff < 0):
        raise ValueError("k must be at least the largest payoff")
    goals = tuple(And(Atom(c[0]), Not(Atom(c[0]))) for c in control)
    sizes = game.shape
    cost = np.zeros((2 ** len(atoms), game.n_players))
    skeleton = BooleanGame(tuple(atoms), tuple(control), cost, tuple(FALSE for _ in control))
    for prof in itertools.product(*(range(s) for s in sizes)):
        cost[skeleton.valuation_index(skeleton.valuation_of(prof))] = k - game.payoff[prof]
    return BooleanGame(tuple(atoms), tuple(control), cost, goals), float(k)
