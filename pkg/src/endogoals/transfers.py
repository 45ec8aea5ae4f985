"""Side-payment transfer functions, taxation mechanisms and their effect on games."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BudgetConstraints,
    GoalAssignment,
    StrategicGame,
    _frozen,
    per_player,
    punishment,
)


@dataclass(frozen=True, eq=False)
class TransferFunction:
    """``pay[i, *profile, j]``: what ``i`` hands to ``j`` if ``profile`` is played."""

    pay: np.ndarray

    def __post_init__(self):
        pay = _frozen(self.pay)
        n = pay.shape[0]
        if pay.ndim != n + 2 or pay.shape[-1] != n:
            raise ValueError(f"transfer array of shape {pay.shape} is malformed")
        if not np.all(np.isfinite(pay)) or np.any(pay < 0):
            raise ValueError("transfers must be finite and non-negative")
        for i in range(n):
            if np.any(pay[i, ..., i] != 0):
                raise ValueError(f"player {i} cannot pay themselves")
        object.__setattr__(self, "pay", pay)

    @classmethod
    def zero(cls, game: StrategicGame) -> "TransferFunction":
        n = game.n_players
        return cls(np.zeros((n,) + game.shape + (n,)))

    @classmethod
    def from_player(cls, game: StrategicGame, player: int, pay) -> "TransferFunction":
        """Transfer in which only ``player`` pays, ``pay`` of shape ``(*sizes, n)``."""
        full = np.zeros((game.n_players,) + game.payoff.shape)
        full[player] = pay
        return cls(full)

    @property
    def n_players(self) -> int:
        return self.pay.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.pay.shape[1:-1]

    def net(self) -> np.ndarray:
        """Net receipts of every player at every profile, shape ``(*sizes, n)``."""
        return net_of(self.pay)

    def player_part(self, player: int) -> np.ndarray:
        return self.pay[player]

    def replace(self, player: int, pay) -> "TransferFunction":
        full = np.array(self.pay)
        full[player] = pay
        return TransferFunction(full)

    def __add__(self, other: "TransferFunction") -> "TransferFunction":
        return TransferFunction(self.pay + other.pay)

    def __eq__(self, other):
        if not isinstance(other, TransferFunction):
            return NotImplemented
        return np.array_equal(self.pay, other.pay)

    __hash__ = None


def net_of(pay: np.ndarray) -> np.ndarray:
    """Receipts minus payments for a full transfer array ``(n, *sizes, n)``."""
    return pay.sum(axis=0) - np.moveaxis(pay.sum(axis=-1), 0, -1)


def player_net(pay_i: np.ndarray, player: int) -> np.ndarray:
    """Net effect of a single player's payments ``(..., *sizes, n)``."""
    out = np.array(pay_i, dtype=float)
    out[..., player] = -pay_i.sum(axis=-1)
    return out


@dataclass(frozen=True, eq=False)
class TaxationMechanism:
    """``tax[*profile, i]``: sanction imposed on ``i`` at ``profile``."""

    tax: np.ndarray

    def __post_init__(self):
        tax = _frozen(self.tax)
        if not np.all(np.isfinite(tax)) or np.any(tax < 0):
            raise ValueError("taxes must be finite and non-negative")
        object.__setattr__(self, "tax", tax)

    @classmethod
    def zero(cls, game: StrategicGame) -> "TaxationMechanism":
        return cls(np.zeros(game.payoff.shape))

    def __eq__(self, other):
        if not isinstance(other, TaxationMechanism):
            return NotImplemented
        return np.array_equal(self.tax, other.tax)

    __hash__ = None


def _check(game: StrategicGame, shape: tuple[int, ...], what: str) -> None:
    if tuple(shape) != game.shape:
        raise ValueError(f"{what} shape {tuple(shape)} does not match game {game.shape}")


def apply_transfers(game: StrategicGame, t: TransferFunction) -> StrategicGame:
    _check(game, t.shape, "transfer")
    if t.n_players != game.n_players:
        raise ValueError("transfer player count does not match the game")
    return game.with_payoff(game.payoff + t.net())


def apply_tax(game: StrategicGame, a: TaxationMechanism) -> StrategicGame:
    if a.tax.shape != game.payoff.shape:
        raise ValueError(f"tax shape {a.tax.shape} does not match game {game.payoff.shape}")
    return game.with_payoff(game.payoff - a.tax)


def normalize(
    base: StrategicGame,
    t: TransferFunction,
    budgets: BudgetConstraints,
    goals: GoalAssignment | None = None,
    spec=None,
) -> StrategicGame:
    """Fold ``t`` and its budget penalty into the payoffs of ``base``.

    The returned game, played without transfers under the same ceilings,
    yields the same offset-boosted utilities as ``base`` played with ``t``.
    ``goals`` and ``spec`` are accepted for signature symmetry only: the
    construction itself does not depend on them.
    """
    if goals is not None:
        goals.validate(base)
    if spec is not None:
        per_player(spec, base.n_players)
    updated = apply_transfers(base, t)
    if budgets.bound.shape != base.payoff.shape:
        raise ValueError("budget shape does not match the game")
    kappa, count = punishment(updated.payoff, budgets.bound, base.n_players)
    return updated.with_payoff(updated.payoff - float(kappa) * int(count))


def tax_from_transfers(game: StrategicGame, t: TransferFunction) -> TaxationMechanism:
    """Taxes reproducing the effect of ``t`` up to a per-player constant.

    ``apply_tax(game, result)`` equals ``apply_transfers(game, t)`` shifted down
    by ``max_sigma(net receipts)`` for each player, which leaves best
    responses, and hence pure equilibria, unchanged.
    """
    _check(game, t.shape, "transfer")
    net = t.net()
    k = net.reshape(-1, game.n_players).max(axis=0)
    return TaxationMechanism(np.maximum(k - net, 0.0))
