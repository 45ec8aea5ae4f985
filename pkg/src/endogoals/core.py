"""Strategic games, goal annotations and induced utility games.

Payoff tensors are stored as numpy arrays of shape ``(*sizes, n)``: one axis
per player indexing that player's strategies, plus a trailing axis holding
the payoff vector.  Most internal helpers accept an extra leading batch axis
so that whole families of transformed games can be evaluated at once.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

TOL = 1e-9
SHORT_AXIS = 16


def _chain(ufunc, a: np.ndarray, axis: int, keepdims: bool) -> np.ndarray:
    axis = axis % a.ndim
    length = a.shape[axis]
    if length == 0 or length > SHORT_AXIS:
        return ufunc.reduce(a, axis=axis, keepdims=keepdims)
    # Elementwise chaining beats a strided reduction over a short axis.
    lead = (slice(None),) * axis
    out = a[lead + (0,)]
    for k in range(1, length):
        out = ufunc(out, a[lead + (k,)])
    return np.expand_dims(out, axis) if keepdims else out


def amax(a: np.ndarray, axis: int, keepdims: bool = False) -> np.ndarray:
    """``a.max(axis)``, fast on large batches with a short reduced axis."""
    return _chain(np.maximum, a, axis, keepdims)


def amin(a: np.ndarray, axis: int, keepdims: bool = False) -> np.ndarray:
    """``a.min(axis)``, fast on large batches with a short reduced axis."""
    return _chain(np.minimum, a, axis, keepdims)

Profile = tuple[int, ...]


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StrategicGame:
    """A finite normal-form game with dense payoff tensor."""

    strategies: tuple[tuple[str, ...], ...]
    payoff: np.ndarray

    def __post_init__(self):
        strategies = tuple(tuple(str(s) for s in labels) for labels in self.strategies)
        object.__setattr__(self, "strategies", strategies)
        if not strategies:
            raise ValueError("a game needs at least one player")
        for i, labels in enumerate(strategies):
            if not labels:
                raise ValueError(f"player {i} has no strategies")
            if len(set(labels)) != len(labels):
                raise ValueError(f"player {i} has duplicate strategy labels")
        payoff = _frozen(self.payoff)
        expected = tuple(len(s) for s in strategies) + (len(strategies),)
        if payoff.shape != expected:
            raise ValueError(f"payoff shape {payoff.shape} does not match {expected}")
        if not np.all(np.isfinite(payoff)):
            raise ValueError("payoffs must be finite")
        object.__setattr__(self, "payoff", payoff)

    @classmethod
    def from_function(cls, strategies, fn) -> "StrategicGame":
        sizes = tuple(len(s) for s in strategies)
        payoff = np.zeros(sizes + (len(sizes),))
        for prof in itertools.product(*(range(k) for k in sizes)):
            payoff[prof] = fn(prof)
        return cls(strategies, payoff)

    @property
    def n_players(self) -> int:
        return len(self.strategies)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.payoff.shape[:-1]

    def profiles(self) -> Iterator[Profile]:
        return itertools.product(*(range(k) for k in self.shape))

    def profile_index(self, labels: Sequence[str]) -> Profile:
        if len(labels) != self.n_players:
            raise ValueError(f"profile {tuple(labels)} has wrong length")
        try:
            return tuple(self.strategies[i].index(lab) for i, lab in enumerate(labels))
        except ValueError:
            raise ValueError(f"unknown strategy in profile {tuple(labels)}") from None

    def profile_labels(self, profile: Profile) -> tuple[str, ...]:
        return tuple(self.strategies[i][s] for i, s in enumerate(profile))

    def with_payoff(self, payoff) -> "StrategicGame":
        return StrategicGame(self.strategies, payoff)

    def __eq__(self, other):
        if not isinstance(other, StrategicGame):
            return NotImplemented
        return self.strategies == other.strategies and np.array_equal(
            self.payoff, other.payoff
        )

    __hash__ = None

    def __repr__(self):
        return f"StrategicGame(strategies={self.strategies!r}, payoff=<{self.shape}>)"


@dataclass(frozen=True)
class GoalAssignment:
    """Per-player sets of goal profiles."""

    goals: tuple[frozenset, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "goals", tuple(frozenset(tuple(p) for p in g) for g in self.goals)
        )

    @classmethod
    def empty(cls, n: int) -> "GoalAssignment":
        return cls(tuple(frozenset() for _ in range(n)))

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "GoalAssignment":
        n = mask.shape[-1]
        return cls(tuple(frozenset(map(tuple, np.argwhere(mask[..., i]))) for i in range(n)))

    def validate(self, game: StrategicGame) -> None:
        if len(self.goals) != game.n_players:
            raise ValueError("goal assignment has the wrong number of players")
        for i, g in enumerate(self.goals):
            for prof in g:
                if len(prof) != game.n_players or any(
                    not 0 <= s < k for s, k in zip(prof, game.shape)
                ):
                    raise ValueError(f"goal {prof} of player {i} is not a valid profile")

    def mask(self, shape: tuple[int, ...]) -> np.ndarray:
        out = np.zeros(tuple(shape) + (len(self.goals),), dtype=bool)
        for i, g in enumerate(self.goals):
            for prof in g:
                out[prof + (i,)] = True
        return out

    def restrict(self, keep: Sequence[Sequence[int]]) -> "GoalAssignment":
        """Goals of the subgame keeping strategies ``keep[i]`` (re-indexed)."""
        position = [{s: k for k, s in enumerate(ks)} for ks in keep]
        goals = []
        for g in self.goals:
            goals.append(
                frozenset(
                    tuple(position[j][s] for j, s in enumerate(p))
                    for p in g
                    if all(s in position[j] for j, s in enumerate(p))
                )
            )
        return GoalAssignment(tuple(goals))


@dataclass(frozen=True)
class BoostSpec:
    """A boost-factor family and its parameter.

    ``offset`` lifts a player's worst goal payoff to ``delta`` above the best
    non-goal payoff, keeping distances among goal payoffs.  ``regret`` adds
    ``epsilon`` plus the worst cost the player faces anywhere in the game.
    """

    family: str
    value: float

    def __post_init__(self):
        if self.family not in ("offset", "regret"):
            raise ValueError(f"unknown boost family {self.family!r}")
        if not (math.isfinite(self.value) and self.value > 0):
            raise ValueError("boost parameter must be a positive real")

    @classmethod
    def offset(cls, delta: float) -> "BoostSpec":
        return cls("offset", float(delta))

    @classmethod
    def regret(cls, epsilon: float) -> "BoostSpec":
        return cls("regret", float(epsilon))

    @property
    def delta(self) -> float:
        if self.family != "offset":
            raise AttributeError("delta is only defined for the offset family")
        return self.value

    @property
    def epsilon(self) -> float:
        if self.family != "regret":
            raise AttributeError("epsilon is only defined for the regret family")
        return self.value


def per_player(spec, n: int) -> tuple[BoostSpec, ...]:
    if isinstance(spec, BoostSpec):
        return (spec,) * n
    specs = tuple(spec)
    if len(specs) != n:
        raise ValueError(f"expected {n} boost specs, got {len(specs)}")
    return specs


@dataclass(frozen=True, eq=False)
class MixedProfile:
    """One probability vector per player."""

    probs: tuple[np.ndarray, ...]

    def __post_init__(self):
        probs = tuple(_frozen(p) for p in self.probs)
        for i, p in enumerate(probs):
            if p.ndim != 1 or np.any(p < -TOL) or abs(p.sum() - 1.0) > TOL:
                raise ValueError(f"invalid probability vector for player {i}: {p}")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def pure(cls, shape: Sequence[int], profile: Profile) -> "MixedProfile":
        vecs = []
        for k, s in zip(shape, profile):
            v = np.zeros(k)
            v[s] = 1.0
            vecs.append(v)
        return cls(tuple(vecs))

    @classmethod
    def uniform(cls, shape: Sequence[int]) -> "MixedProfile":
        return cls(tuple(np.full(k, 1.0 / k) for k in shape))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.probs)

    def joint(self) -> np.ndarray:
        out = np.ones(())
        for p in self.probs:
            out = np.multiply.outer(out, p)
        return out

    def support(self, player: int) -> tuple[int, ...]:
        return tuple(int(s) for s in np.flatnonzero(self.probs[player] > TOL))

    def is_pure(self) -> bool:
        return all(len(self.support(i)) == 1 for i in range(len(self.probs)))

    def replace(self, player: int, vector) -> "MixedProfile":
        probs = list(self.probs)
        probs[player] = np.asarray(vector, dtype=float)
        return MixedProfile(tuple(probs))

    def key(self, digits: int = 9) -> tuple:
        return tuple(tuple(round(float(x), digits) + 0.0 for x in p) for p in self.probs)

    def __eq__(self, other):
        if not isinstance(other, MixedProfile):
            return NotImplemented
        return self.shape == other.shape and all(
            np.allclose(a, b, atol=1e-9) for a, b in zip(self.probs, other.probs)
        )

    __hash__ = None

    def __repr__(self):
        return "MixedProfile(" + ", ".join(str(list(map(float, p))) for p in self.probs) + ")"


# -- boost factors -----------------------------------------------------------


def boost_shift(payoff: np.ndarray, mask: np.ndarray, boosts: Sequence[BoostSpec]) -> np.ndarray:
    """Per-player additive lift for goal payoffs.

    Both families are translations of the payoff axis, so the boosted payoff
    of ``x`` is ``x + shift``.  ``payoff`` may carry leading batch axes; the
    result has shape ``(*batch, n)``.
    """
    n = payoff.shape[-1]
    nprof = mask.ndim - 1
    batch = payoff.shape[: payoff.ndim - nprof - 1]
    flat = payoff.reshape(batch + (-1, n))
    goal = mask.reshape(-1, n)
    shift = np.zeros(batch + (n,))
    for i, spec in enumerate(boosts):
        g = goal[:, i]
        if not g.any():
            continue
        col = flat[..., i]
        if spec.family == "offset":
            m_goal = amin(col[..., g], -1)
            m_bar = amax(col[..., ~g], -1) if (~g).any() else 0.0
            shift[..., i] = m_bar - m_goal + spec.value
        else:
            shift[..., i] = spec.value - amin(col, -1)
    return shift


def boost_value(game: StrategicGame, goals: GoalAssignment, spec, player: int, x: float) -> float:
    """Boosted value of payoff ``x`` for ``player`` in ``game``."""
    if not math.isfinite(x):
        raise ValueError("boost_value needs a finite payoff")
    goals.validate(game)
    if not goals.goals[player]:
        raise ValueError(f"player {player} has no goal profiles")
    boosts = per_player(spec, game.n_players)
    shift = boost_shift(game.payoff, goals.mask(game.shape), boosts)
    return float(x + shift[player])


def induced_payoff(payoff: np.ndarray, mask: np.ndarray, boosts) -> np.ndarray:
    """Utility tensor(s) for payoff tensor(s) with goal mask ``mask``."""
    shift = boost_shift(payoff, mask, boosts)
    nprof = mask.ndim - 1
    shift = shift.reshape(shift.shape[:-1] + (1,) * nprof + shift.shape[-1:])
    return payoff + np.where(mask, shift, 0.0)


def instantiate(game: StrategicGame, goals: GoalAssignment, spec) -> StrategicGame:
    """The induced strategic game whose payoffs are the goal-aware utilities."""
    goals.validate(game)
    boosts = per_player(spec, game.n_players)
    return game.with_payoff(induced_payoff(game.payoff, goals.mask(game.shape), boosts))


# -- budgets -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BudgetConstraints:
    """Per-player, per-profile payoff ceilings ``b_i(sigma)``."""

    bound: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bound", _frozen(self.bound))

    @classmethod
    def at_payoff(cls, game: StrategicGame) -> "BudgetConstraints":
        return cls(game.payoff)

    @classmethod
    def constant(cls, game: StrategicGame, value: float = 0.0) -> "BudgetConstraints":
        return cls(np.full(game.payoff.shape, float(value)))

    def validate(self, game: StrategicGame) -> None:
        if self.bound.shape != game.payoff.shape:
            raise ValueError("budget shape does not match the game")
        if np.any(self.bound < game.payoff - TOL):
            raise ValueError("budgets must be at least the payoff they are declared on")


def punishment(payoff: np.ndarray, bound: np.ndarray, nprof: int):
    """Punishment factor and number of maximal violators.

    Returns ``(kappa, count)`` arrays over the leading batch axes.  ``kappa`` is
    the largest excess of any player over their ceiling (zero if none).
    """
    excess = payoff - bound
    n = payoff.shape[-1]
    batch = payoff.shape[: payoff.ndim - nprof - 1]
    per_player_max = amax(excess.reshape(batch + (-1, n)), -2)
    kappa = np.maximum(amax(per_player_max, -1), 0.0)
    count = np.where(
        kappa > TOL, (per_player_max >= kappa[..., None] - TOL).sum(axis=-1), 0
    )
    return kappa, count


def penalized_payoff(payoff, mask, boosts, bound) -> np.ndarray:
    """Batched penalized utilities: induced utilities minus ``|D| * kappa``."""
    nprof = mask.ndim - 1
    kappa, count = punishment(payoff, bound, nprof)
    corr = (kappa * count).reshape(kappa.shape + (1,) * (nprof + 1))
    return induced_payoff(payoff, mask, boosts) - corr


def penalized_utility(
    updated: StrategicGame,
    base: StrategicGame,
    goals: GoalAssignment,
    spec,
    budgets: BudgetConstraints,
):
    """Utilities of ``updated`` under ceilings declared on ``base``.

    Returns ``(game, kappa, violators)``.
    """
    if updated.payoff.shape != base.payoff.shape or budgets.bound.shape != base.payoff.shape:
        raise ValueError("updated game, base game and budgets must share a shape")
    goals.validate(updated)
    boosts = per_player(spec, updated.n_players)
    nprof = updated.n_players
    excess = (updated.payoff - budgets.bound).reshape(-1, nprof).max(axis=0)
    kappa, _ = punishment(updated.payoff, budgets.bound, nprof)
    kappa = float(kappa)
    violators = (
        frozenset(int(i) for i in np.flatnonzero(excess >= kappa - TOL)) if kappa > TOL else frozenset()
    )
    utilities = induced_payoff(updated.payoff, goals.mask(updated.shape), boosts)
    return updated.with_payoff(utilities - len(violators) * kappa), kappa, violators


# -- expectations and transforms ---------------------------------------------


def _check_mixed(game: StrategicGame, delta: MixedProfile) -> None:
    if delta.shape != game.shape:
        raise ValueError(f"mixed profile shape {delta.shape} does not match game {game.shape}")


def expected_utility(game: StrategicGame, delta: MixedProfile, player: int) -> float:
    _check_mixed(game, delta)
    return float(np.sum(delta.joint() * game.payoff[..., player]))


def expected_payoffs(game: StrategicGame, delta: MixedProfile) -> np.ndarray:
    _check_mixed(game, delta)
    w = delta.joint()
    return np.tensordot(w, game.payoff, axes=w.ndim)


def affine_transform(game: StrategicGame, scale, shift) -> StrategicGame:
    scale = np.broadcast_to(np.asarray(scale, dtype=float), (game.n_players,))
    shift = np.broadcast_to(np.asarray(shift, dtype=float), (game.n_players,))
    if np.any(scale <= 0):
        raise ValueError("affine scale factors must be positive")
    return game.with_payoff(game.payoff * scale + shift)
