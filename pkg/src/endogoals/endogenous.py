"""The two-phase game: pre-play transfers on a grid, then simultaneous play.

All transfer spaces here are finite grids; every survival or non-survival
verdict is therefore a grid certificate.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .boolean import BooleanGame, to_goal_game, valuations
from .core import (
    TOL,
    BoostSpec,
    BudgetConstraints,
    GoalAssignment,
    Profile,
    StrategicGame,
    amin,
    per_player,
    penalized_payoff,
    punishment,
)
from .equilibria import LexValue, lex_cmp, mixed_ne_arrays, mixed_ne_batch, pure_ne_mask
from .transfers import TaxationMechanism, TransferFunction, net_of, player_net

log = logging.getLogger(__name__)

BUDGET_RULES = ("explicit", "payoff", "zero")
JOINT_CAP = 5 * 10**7


class GridTooLarge(ValueError):
    pass


class SynthesisFailure(RuntimeError):
    def __init__(self, message: str, alpha: TaxationMechanism, player: int | None):
        super().__init__(message)
        self.alpha = alpha
        self.player = player


# -- the endogenous game --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EndogenousGame:
    """A strategic game with goals, boosts and ceilings, open to transfers.

    ``budget_rule`` says how ceilings follow taxation: ``"payoff"`` keeps
    ``b = pi``, ``"zero"`` keeps ``b = 0`` and ``"explicit"`` leaves the given
    ceilings alone.
    """

    game: StrategicGame
    goals: GoalAssignment
    boosts: tuple
    budgets: BudgetConstraints
    boolean: BooleanGame | None = None
    budget_rule: str = "explicit"

    def __post_init__(self):
        self.goals.validate(self.game)
        object.__setattr__(self, "boosts", per_player(self.boosts, self.game.n_players))
        self.budgets.validate(self.game)
        if self.budget_rule not in BUDGET_RULES:
            raise ValueError(f"unknown budget rule {self.budget_rule!r}")
        mask = self.goals.mask(self.game.shape)
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_boolean(cls, b: BooleanGame, budgets: str = "effective") -> "EndogenousGame":
        game, goals, boost, bound = to_goal_game(b, budgets)
        rule = "zero" if budgets == "effective" else "payoff"
        return cls(game, goals, boost, bound, boolean=b, budget_rule=rule)

    @classmethod
    def with_payoff_budgets(cls, game, goals, spec) -> "EndogenousGame":
        return cls(game, goals, spec, BudgetConstraints.at_payoff(game), budget_rule="payoff")

    @property
    def n_players(self) -> int:
        return self.game.n_players

    @property
    def shape(self) -> tuple[int, ...]:
        return self.game.shape

    def utilities(self, net=None) -> np.ndarray:
        """Penalized utilities after net receipts ``net`` (batched or not)."""
        payoff = self.game.payoff if net is None else self.game.payoff + net
        return penalized_payoff(payoff, self.mask, self.boosts, self.budgets.bound)

    def base_utilities(self) -> np.ndarray:
        return self.utilities()

    def with_tax(self, alpha: TaxationMechanism) -> "EndogenousGame":
        if alpha.tax.shape != self.game.payoff.shape:
            raise ValueError("tax shape does not match the game")
        game = self.game.with_payoff(self.game.payoff - alpha.tax)
        if self.budget_rule == "payoff":
            bound = BudgetConstraints.at_payoff(game)
        else:
            bound = self.budgets
        boolean = None
        if self.boolean is not None:
            b = self.boolean
            cost = np.array(b.cost)
            for prof in game.profiles():
                cost[b.valuation_index(b.valuation_of(prof))] += alpha.tax[prof]
            boolean = b.with_cost(cost)
        return EndogenousGame(game, self.goals, self.boosts, bound, boolean, self.budget_rule)


# -- transfer grids -------------------------------------------------------------


@dataclass(frozen=True)
class TransferGrid:
    """Per-player offers with entries in ``{0, step, ..., bound}``.

    ``cells`` restricts the profiles at which payments may be non-zero and
    ``max_nonzero`` the number of non-zero entries per offer.
    """

    step: float
    bound: float
    cells: tuple | None = None
    max_nonzero: int | None = None
    cap: int = 10**7

    def __post_init__(self):
        if not (math.isfinite(self.step) and self.step > 0):
            raise ValueError("grid step must be positive")
        if not (math.isfinite(self.bound) and self.bound >= self.step):
            raise ValueError("grid bound must be at least the step")
        if self.cells is not None:
            object.__setattr__(self, "cells", tuple(tuple(int(s) for s in c) for c in self.cells))
        if self.max_nonzero is not None and self.max_nonzero < 0:
            raise ValueError("max_nonzero must be non-negative")

    @property
    def levels(self) -> np.ndarray:
        count = int(math.floor(self.bound / self.step + 1e-9))
        return self.step * np.arange(count + 1)

    def _cells(self, shape) -> list[Profile]:
        if self.cells is None:
            return list(itertools.product(*(range(k) for k in shape)))
        for c in self.cells:
            if len(c) != len(shape) or any(not 0 <= s < k for s, k in zip(c, shape)):
                raise ValueError(f"grid cell {c} is not a profile of the game")
        return list(self.cells)

    def slots(self, game: StrategicGame, player: int) -> list[tuple[Profile, int]]:
        n = game.n_players
        return [(c, j) for c in self._cells(game.shape) for j in range(n) if j != player]

    def size(self, game: StrategicGame) -> int:
        """Exact number of offers available to one player."""
        p = len(self.slots(game, 0)) if game.n_players > 1 else 0
        nz = len(self.levels) - 1
        top = p if self.max_nonzero is None else min(p, self.max_nonzero)
        return sum(math.comb(p, k) * nz**k for k in range(top + 1))

    def check(self, game: StrategicGame, players: int = 1) -> int:
        total = self.size(game) ** players
        if total > self.cap:
            raise GridTooLarge(f"grid holds {total} transfer candidates, above the cap {self.cap}")
        return total

    def codes(self, game: StrategicGame, player: int) -> np.ndarray:
        """Level indices ``(K, slots)``; row 0 is the zero offer."""
        p = len(self.slots(game, player))
        nz = len(self.levels) - 1
        if self.max_nonzero is None or self.max_nonzero >= p:
            if p == 0:
                return np.zeros((1, 0), dtype=int)
            return np.array(list(itertools.product(range(nz + 1), repeat=p)), dtype=int)
        rows = []
        for k in range(self.max_nonzero + 1):
            for where in itertools.combinations(range(p), k):
                for vals in itertools.product(range(1, nz + 1), repeat=k):
                    row = [0] * p
                    for w, v in zip(where, vals):
                        row[w] = v
                    rows.append(row)
        return np.array(rows, dtype=int).reshape(-1, p)

    def offers(self, game: StrategicGame, player: int) -> np.ndarray:
        """All offers of ``player`` as payment arrays ``(K, *sizes, n)``."""
        self.check(game)
        codes = self.codes(game, player)
        levels = self.levels
        out = np.zeros((len(codes),) + game.payoff.shape)
        for k, (cell, j) in enumerate(self.slots(game, player)):
            out[(slice(None),) + cell + (j,)] = levels[codes[:, k]]
        return out


# -- subgame analysis -----------------------------------------------------------


def worst_values(U: np.ndarray, n: int):
    """Each player's worst equilibrium utility in a batch of games.

    ``U`` has shape ``(B, *sizes, n)``.  Equilibria are the pure ones plus,
    for two players, the extreme mixed ones.  A game where none is found gets
    each player's pure min-max value and is flagged in the second output.
    """
    B = U.shape[0]
    mask = pure_ne_mask(U, n)
    flat_mask = mask.reshape(B, -1)
    flat = U.reshape(B, -1, n)
    W = amin(np.where(flat_mask[..., None], flat, np.inf), 1)
    found = flat_mask.any(axis=1)
    if n == 2:
        for b, eqs in enumerate(mixed_ne_batch(U)):
            for x, y in eqs:
                vals = np.einsum("i,ijk,j->k", x, U[b], y)
                W[b] = np.minimum(W[b], vals)
                found[b] = True
    approx = ~found
    if approx.any():
        for i in range(n):
            best = U[approx][..., i].max(axis=1 + i)
            W[approx, i] = best.reshape(int(approx.sum()), -1).min(axis=1)
    return W, approx


def _warn_approx(count: int, what: str) -> None:
    if count:
        log.warning("%d subgame(s) without a found equilibrium in %s; min-max value used", count, what)


@dataclass
class SoloResult:
    player: int
    value: float
    transfer: TransferFunction
    approximate: bool
    evaluated: int


def _best_deviation(E: EndogenousGame, player: int, grid: TransferGrid, base_net=None):
    offers = grid.offers(E.game, player)
    nets = player_net(offers, player)
    if base_net is not None:
        nets = nets + base_net
    U = E.utilities(nets)
    W, approx = worst_values(U, E.n_players)
    values = W[:, player]
    k = int(np.argmax(values))
    return float(values[k]), offers[k], bool(approx.any()), len(offers), int(approx.sum())


def solo_payoff_details(E: EndogenousGame, player: int, grid: TransferGrid) -> SoloResult:
    """Best worst-equilibrium utility ``player`` secures by a lone grid offer."""
    if not 0 <= player < E.n_players:
        raise ValueError(f"no player {player}")
    value, offer, approx, count, bad = _best_deviation(E, player, grid)
    _warn_approx(bad, f"solo payoff of player {player}")
    return SoloResult(player, value, TransferFunction.from_player(E.game, player, offer), approx, count)


def solo_payoff(E: EndogenousGame, player: int, grid: TransferGrid) -> float:
    """Grid under-approximation of the solo payoff."""
    return solo_payoff_details(E, player, grid).value


# -- survival -------------------------------------------------------------------


@dataclass
class TwoPhaseSolution:
    """A transfer, a profile and the grid verdict on their survival."""

    transfer: TransferFunction
    profile: Profile
    status: str
    certificate: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.status == "surviving-certified"


def _profile(E: EndogenousGame, sigma) -> Profile:
    sigma = tuple(int(s) for s in sigma)
    if len(sigma) != E.n_players or any(not 0 <= s < k for s, k in zip(sigma, E.shape)):
        raise ValueError(f"{sigma} is not a profile of the game")
    return sigma


def goal_players(E: EndogenousGame, sigma: Profile) -> list[int]:
    return [i for i in range(E.n_players) if E.mask[sigma + (i,)]]


def check_survival_sufficient(E: EndogenousGame, sigma, grid: TransferGrid) -> TwoPhaseSolution:
    """Certify survival of a pure equilibrium when everybody gets their solo payoff.

    On the equilibrium path nobody transfers (or, for boolean games, goal
    players commit to the shareable payments); a lone deviator is punished
    with their worst equilibrium of the resulting subgame.
    """
    sigma = _profile(E, sigma)
    U = E.base_utilities()
    if not pure_ne_mask(U, E.n_players)[sigma]:
        raise ValueError(f"{sigma} is not a pure equilibrium of the instantiated game")
    solos = [solo_payoff_details(E, i, grid) for i in range(E.n_players)]
    on_path = U[sigma]
    meets = [bool(on_path[i] >= s.value - TOL) for i, s in enumerate(solos)]
    cert = {
        "utilities": [float(x) for x in on_path],
        "solo": [s.value for s in solos],
        "approximate": any(s.approximate for s in solos),
        "punishments": {s.player: s.transfer for s in solos},
    }
    transfer = TransferFunction.zero(E.game)
    ok = all(meets)
    if E.boolean is not None:
        b = E.boolean
        v = b.valuation_of(sigma)
        assignment = is_shareable(b, v)
        cert["shareable"] = assignment
        ok = ok and assignment is not None
        if assignment is not None:
            transfer = shareable_transfer(E, assignment)
    if ok:
        kappa, _ = punishment(E.game.payoff + transfer.net(), E.budgets.bound, E.n_players)
        cert["kappa"] = float(kappa)
    status = "surviving-certified" if ok else "undecided"
    return TwoPhaseSolution(transfer, sigma, status, cert)


def shareable_transfer(E: EndogenousGame, assignment: dict) -> TransferFunction:
    """Each goal player pays every other player's cost at their assigned outcome."""
    b = E.boolean
    pay = np.zeros((E.n_players,) + E.game.payoff.shape)
    for i, v in assignment.items():
        prof = b.profile_of(v)
        row = b.cost[b.valuation_index(v)]
        for k in range(E.n_players):
            if k != i:
                pay[(i,) + prof + (k,)] = row[k]
    return TransferFunction(pay)


def _differs_in(b: BooleanGame, v, w) -> int:
    pv, pw = b.profile_of(v), b.profile_of(w)
    return sum(1 for x, y in zip(pv, pw) if x != y)


def is_shareable(b: BooleanGame, v) -> dict | None:
    """Assignment of goal players to distinct costliest far outcomes, or ``None``."""
    v = tuple(bool(x) for x in v)
    winners = [i for i in range(b.n_players) if b.satisfies(v, i)]
    total = b.cost.sum(axis=1)
    top = total.max()
    candidates = [
        w for w in valuations(b)
        if _differs_in(b, v, w) >= 2 and total[b.valuation_index(w)] >= top - TOL
    ]
    if len(candidates) < len(winners):
        return None
    return {i: w for i, w in zip(winners, candidates)}


def is_potentially_shareable(b: BooleanGame, v) -> bool:
    v = tuple(bool(x) for x in v)
    winners = sum(1 for i in range(b.n_players) if b.satisfies(v, i))
    far = sum(1 for w in valuations(b) if _differs_in(b, v, w) >= 2)
    return far >= winners


# -- non-survival ---------------------------------------------------------------


def _escalate(E: EndogenousGame, sigma: Profile, grid: TransferGrid, nets, ks: np.ndarray):
    """How many candidates (rows of ``ks``) survive top-up deviations.

    The deviator keeps their candidate offer and adds any grid offer to it,
    which outbids commitments that saturate the grid bound.
    """
    n = E.n_players
    total = sum(nets[j][ks[:, j]] for j in range(n))
    V = E.utilities(total)[(slice(None),) + sigma]
    live = np.ones(len(ks), dtype=bool)
    bad = 0
    for i in range(n):
        if not live.any():
            break
        rows = np.flatnonzero(live)
        base = total[rows]
        best = np.full(len(rows), -np.inf)
        for d in nets[i][1:]:
            W, approx = worst_values(E.utilities(base + d), n)
            bad += int(approx.sum())
            best = np.maximum(best, W[:, i])
        live[rows] = V[rows, i] >= best - TOL
    return int(live.sum()), bad


def find_nonsurvival_certificate(
    E: EndogenousGame,
    sigma,
    grid: TransferGrid,
    joint_cap: int | None = None,
    escalate: bool = True,
):
    """Show that no grid transfer profile supports ``sigma`` in a subgame-perfect way.

    Every joint grid transfer ``tau`` under which ``sigma`` is an equilibrium
    is a candidate on-path pair.  It is defeated when some player ``i`` has a
    grid offer whose worst-equilibrium utility, against ``tau_{-i}``, beats
    ``i``'s utility at ``(tau, sigma)``.  Candidates that resist every grid
    deviation are retried against top-ups of the deviator's own offer by any
    grid offer, standing in for the unbounded transfers of the continuous game.  Returns ``None`` if
    some candidate is still undefeated, otherwise a certificate.
    """
    sigma = _profile(E, sigma)
    n = E.n_players
    grid.check(E.game)
    cap = JOINT_CAP if joint_cap is None else joint_cap
    K = grid.size(E.game)
    if K**n > cap:
        raise GridTooLarge(f"joint grid holds {K**n} candidates, above the cap {cap}")
    nets = [player_net(grid.offers(E.game, i), i) for i in range(n)]
    rest = (K,) * (n - 1)
    shape_tail = E.game.payoff.shape
    others = np.zeros(rest + shape_tail)
    for j in range(1, n):
        view = [1] * (n - 1) + list(shape_tail)
        view[j - 1] = K
        others = others + nets[j].reshape(view)
    others = others.reshape((-1,) + shape_tail)

    S0 = np.full(rest, -np.inf)
    kept_k0, kept_rest, kept_v0 = [], [], []
    solutions = 0
    approx_total = 0
    for k0 in range(K):
        U = E.utilities(nets[0][k0] + others)
        W, approx = worst_values(U, n)
        approx_total += int(approx.sum())
        is_ne = pure_ne_mask(U, n)[(slice(None),) + sigma]
        V = U[(slice(None),) + sigma]
        solutions += int(is_ne.sum())
        W = W.reshape(rest + (n,))
        V = V.reshape(rest + (n,))
        ok = is_ne.reshape(rest)
        for i in range(1, n):
            Si = np.expand_dims(W[..., i].max(axis=i - 1), i - 1)
            ok = ok & (V[..., i] >= Si - TOL)
        S0 = np.maximum(S0, W[..., 0])
        idx = np.flatnonzero(ok.reshape(-1))
        if idx.size:
            kept_k0.append(np.full(idx.size, k0))
            kept_rest.append(idx)
            kept_v0.append(V[..., 0].reshape(-1)[idx])
    if kept_rest:
        k0s = np.concatenate(kept_k0)
        rest_idx = np.concatenate(kept_rest)
        v0 = np.concatenate(kept_v0)
        live = v0 >= S0.reshape(-1)[rest_idx] - TOL
        ks = np.column_stack([k0s[live]] + list(np.unravel_index(rest_idx[live], rest)))
        if len(ks) and escalate:
            live_count, extra = _escalate(E, sigma, grid, nets, ks)
            approx_total += extra
        else:
            live_count = len(ks)
        if live_count:
            _warn_approx(approx_total, "the non-survival scan")
            return None
    _warn_approx(approx_total, "the non-survival scan")
    cert = {
        "candidates": K**n,
        "solutions": solutions,
        "approximate": approx_total > 0,
        "headline": _headline(E, sigma, grid),
    }
    return TwoPhaseSolution(TransferFunction.zero(E.game), sigma, "non-surviving-certified", cert)


def _headline(E: EndogenousGame, sigma: Profile, grid: TransferGrid):
    """The most profitable lone deviation from the zero transfer, if any."""
    U = E.base_utilities()
    best = None
    for i in range(E.n_players):
        value, offer, approx, _, _ = _best_deviation(E, i, grid)
        gain = value - U[sigma + (i,)]
        if gain > TOL and (best is None or gain > best["gain"] + TOL):
            best = {
                "player": i,
                "transfer": TransferFunction.from_player(E.game, i, offer),
                "guaranteed": value,
                "on_path": float(U[sigma + (i,)]),
                "gain": float(gain),
                "approximate": approx,
            }
    return best


# -- lexicographic offers -------------------------------------------------------


def lex_guarantee(E: EndogenousGame, net: np.ndarray, player: int, mixed=None) -> LexValue:
    """Worst equilibrium, in goal-then-money order, for ``player`` after ``net``.

    Money is the updated payoff minus the budget penalty.  ``mixed`` may
    carry precomputed two-player mixed equilibria of the penalized game.
    """
    payoff = E.game.payoff + net
    U = penalized_payoff(payoff, E.mask, E.boosts, E.budgets.bound)
    kappa, count = punishment(payoff, E.budgets.bound, E.n_players)
    money = payoff[..., player] - float(kappa) * int(count)
    goal = E.mask[..., player].astype(float)
    values = []
    for prof in np.argwhere(pure_ne_mask(U, E.n_players)):
        p = tuple(prof)
        values.append(LexValue(float(goal[p]), float(money[p])))
    if E.n_players == 2:
        for x, y in mixed_ne_arrays(U) if mixed is None else mixed:
            values.append(LexValue(float(x @ goal @ y), float(x @ money @ y)))
    if not values:
        raise ValueError("no equilibrium found in the subgame")
    worst = values[0]
    for v in values[1:]:
        if lex_cmp(v, worst) < 0:
            worst = v
    return worst


def lex_at(E: EndogenousGame, net: np.ndarray, player: int, sigma: Profile) -> LexValue:
    """Goal indicator and penalized money of ``player`` at ``sigma`` after ``net``."""
    payoff = E.game.payoff + net
    kappa, count = punishment(payoff, E.budgets.bound, E.n_players)
    money = payoff[sigma + (player,)] - float(kappa) * int(count)
    return LexValue(float(E.mask[sigma + (player,)]), float(money))


@dataclass
class Offer:
    transfer: TransferFunction
    value: LexValue


def improving_offers(
    E: EndogenousGame, player: int, reference: TransferFunction, grid: TransferGrid, at=None
) -> list[Offer]:
    """Grid offers of ``player`` strictly better for them than their part of ``reference``.

    Other players keep their parts of ``reference``.  Offers are compared by
    their lexicographic worst case against the reference's worst case, or
    against the reference played at profile ``at`` when given.  Results
    come best first, grid order breaking ties.
    """
    if at is None:
        ref_value = lex_guarantee(E, reference.net(), player)
    else:
        ref_value = lex_at(E, reference.net(), player, _profile(E, at))
    others = np.array(reference.pay)
    others[player] = 0.0
    base = net_of(others)
    offers = grid.offers(E.game, player)
    nets = [base + player_net(offer, player) for offer in offers]
    mixed = [None] * len(nets)
    if E.n_players == 2 and nets:
        U = np.stack([penalized_payoff(E.game.payoff + nt, E.mask, E.boosts, E.budgets.bound) for nt in nets])
        mixed = mixed_ne_batch(U)
    found = []
    for offer, nt, eqs in zip(offers, nets, mixed):
        v = lex_guarantee(E, nt, player, eqs)
        if lex_cmp(v, ref_value) > 0:
            found.append(Offer(reference.replace(player, offer), v))
    ordered = []
    for o in found:
        pos = len(ordered)
        while pos > 0 and lex_cmp(o.value, ordered[pos - 1].value) > 0:
            pos -= 1
        ordered.insert(pos, o)
    return ordered


# -- taxation synthesis -----------------------------------------------------------


@dataclass
class SynthesisResult:
    alpha: TaxationMechanism
    iterations: int
    game: EndogenousGame
    certificate: TwoPhaseSolution
    trace: list = field(default_factory=list)


def synthesis_guard(E: EndogenousGame, sigma: Profile) -> list[int]:
    """Players violating the input condition: no goal at ``sigma`` yet one within reach."""
    bad = []
    for i in range(E.n_players):
        if E.mask[sigma + (i,)]:
            continue
        line = list(sigma)
        line[i] = slice(None)
        if E.mask[tuple(line) + (i,)].any():
            bad.append(i)
    return bad


def synth_tax(E: EndogenousGame, sigma, grid: TransferGrid, iteration_cap: int = 1000) -> SynthesisResult:
    """Raise taxes off ``sigma`` until every player's utility there meets their solo payoff.

    Each pass recomputes all solo payoffs on the taxed game and adds one unit
    of tax, at every other profile, for each player still short.
    """
    sigma = _profile(E, sigma)
    bad = synthesis_guard(E, sigma)
    if bad:
        raise ValueError(f"players {bad} can reach a goal by deviating from {sigma}")
    if E.boolean is not None and not is_potentially_shareable(E.boolean, E.boolean.valuation_of(sigma)):
        raise ValueError(f"{sigma} is not potentially shareable")
    alpha = np.zeros(E.game.payoff.shape)
    off = np.ones(E.shape, dtype=bool)
    off[sigma] = False
    trace = []
    iterations = 0
    while True:
        taxed = E.with_tax(TaxationMechanism(alpha))
        u = taxed.base_utilities()[sigma]
        solos = np.array([solo_payoff(taxed, i, grid) for i in range(E.n_players)])
        short = np.flatnonzero(u < solos - TOL)
        trace.append({"iteration": iterations, "utilities": u.tolist(), "solo": solos.tolist(),
                      "short": short.tolist()})
        if short.size == 0:
            break
        if iterations >= iteration_cap:
            raise SynthesisFailure(
                f"iteration cap {iteration_cap} reached", TaxationMechanism(alpha), int(short[0])
            )
        for i in short:
            alpha[..., i] += off
        iterations += 1
    final = TaxationMechanism(alpha)
    try:
        cert = check_survival_sufficient(taxed, sigma, grid)
    except ValueError as exc:
        raise SynthesisFailure(str(exc), final, None) from None
    if not cert.certified:
        blocking = next((i for i in range(E.n_players) if u[i] < solos[i] - TOL), None)
        raise SynthesisFailure("taxed game is not certified", final, blocking)
    return SynthesisResult(final, iterations, taxed, cert, trace)
