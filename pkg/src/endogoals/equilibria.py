"""Pure and mixed Nash equilibria, lexicographic preferences and dominance."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import TOL, GoalAssignment, MixedProfile, Profile, StrategicGame, amax, expected_payoffs

VERIFY_TOL = 1e-7


# -- pure equilibria -----------------------------------------------------------


def pure_ne_mask(utilities: np.ndarray, n: int) -> np.ndarray:
    """Boolean mask of pure equilibria for (batched) utility tensors.

    ``utilities`` has shape ``(*batch, *sizes, n)``; the result drops the last axis.
    """
    lead = utilities.ndim - n - 1
    mask = np.ones(utilities.shape[:-1], dtype=bool)
    for i in range(n):
        u = utilities[..., i]
        best = amax(u, lead + i, keepdims=True)
        mask &= u >= best - TOL
    return mask


def pure_ne(game: StrategicGame) -> list[Profile]:
    """All pure Nash equilibria, sorted."""
    mask = pure_ne_mask(game.payoff, game.n_players)
    return [tuple(int(s) for s in p) for p in np.argwhere(mask)]


def is_pure_ne(game: StrategicGame, profile: Profile) -> bool:
    return bool(pure_ne_mask(game.payoff, game.n_players)[tuple(profile)])


# -- mixed equilibria, two players -------------------------------------------


@lru_cache(maxsize=64)
def _tight_sets(total: int, d: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(total), d)), dtype=int).reshape(-1, d)


def _polytope_vertices(M: np.ndarray):
    """Basic solutions of ``{z >= 0, M z <= 1}`` for a batch of matrices.

    ``M`` has shape ``(B, rows, d)``.  Returns the candidate points ``(B, T, d)``,
    a validity mask ``(B, T)`` (nonsingular, feasible, nonzero) and tight
    constraint masks ``(B, T, d + rows)``: column ``k < d`` marks ``z_k = 0``,
    column ``d + r`` marks row ``r`` of ``M`` tight.
    """
    B, rows, d = M.shape
    C = np.concatenate([np.broadcast_to(-np.eye(d), (B, d, d)), M], axis=1)
    rhs = np.concatenate([np.zeros(d), np.ones(rows)])
    tight = _tight_sets(d + rows, d)
    subs = C[:, tight]
    regular = np.abs(np.linalg.det(subs)) >= 1e-12
    subs = np.where(regular[..., None, None], subs, np.eye(d))
    Z = np.linalg.solve(subs, np.broadcast_to(rhs[tight][..., None], subs.shape[:-1] + (1,)))[..., 0]
    slack = rhs - np.einsum("btd,bkd->btk", Z, C)
    valid = regular & np.all(slack >= -1e-9, axis=2) & (Z.sum(axis=2) > 1e-12)
    return np.clip(Z, 0.0, None), valid, np.abs(slack) <= 1e-9


def mixed_ne_batch(payoffs: np.ndarray, chunk: int = 256) -> list[tuple]:
    """Extreme equilibria of each ``(m, n, 2)`` game in a ``(B, m, n, 2)`` batch.

    Enumerates completely labelled vertex pairs of the two best-response
    polytopes.  Returns, per game, a sorted tuple of ``(x, y)`` pairs.
    """
    payoffs = np.asarray(payoffs, dtype=float)
    B, m, n, _ = payoffs.shape
    out: list[tuple] = []
    for start in range(0, B, chunk):
        P = payoffs[start:start + chunk]
        A = P[..., 0] - P[..., 0].min(axis=(1, 2), keepdims=True) + 1.0
        Bm = P[..., 1] - P[..., 1].min(axis=(1, 2), keepdims=True) + 1.0
        # Label k < m: row strategy k unused or a best response; label m + j:
        # the same for column strategy j.
        X, vx, lx = _polytope_vertices(np.swapaxes(Bm, 1, 2))
        Y, vy, ly = _polytope_vertices(A)
        ly = np.concatenate([ly[..., n:], ly[..., :n]], axis=2)
        full = (lx[:, :, None, :] | ly[:, None, :, :]).all(axis=-1)
        full &= vx[:, :, None] & vy[:, None, :]
        b, a, c = np.nonzero(full)
        xs = X[b, a] / X[b, a].sum(axis=1, keepdims=True)
        ys = Y[b, c] / Y[b, c].sum(axis=1, keepdims=True)
        keys = np.column_stack([b, np.round(np.hstack([xs, ys]), 9) + 0.0])
        _, first = np.unique(keys, axis=0, return_index=True)
        per_game: list[list] = [[] for _ in range(len(P))]
        for k in first:
            per_game[b[k]].append((xs[k], ys[k]))
        out.extend(tuple(eqs) for eqs in per_game)
    return out


@lru_cache(maxsize=65536)
def _mixed_ne_cached(key: bytes, m: int, n: int) -> tuple:
    return mixed_ne_batch(np.frombuffer(key).reshape(1, m, n, 2))[0]


def mixed_ne_arrays(payoff: np.ndarray) -> tuple:
    """Extreme equilibria ``((x, y), ...)`` of a ``(m, n, 2)`` payoff array.

    Best responses ignore constants added to the row player's payoffs within
    a column (and the column player's within a row), so the cache key is
    taken after removing them.
    """
    payoff = np.array(payoff, dtype=float)
    m, n, _ = payoff.shape
    payoff[..., 0] -= payoff[..., 0].max(axis=0, keepdims=True)
    payoff[..., 1] -= payoff[..., 1].max(axis=1, keepdims=True)
    payoff = np.round(payoff, 12) + 0.0
    return _mixed_ne_cached(payoff.tobytes(), m, n)


def mixed_ne_2p(game: StrategicGame) -> list[MixedProfile]:
    """Extreme Nash equilibria of a two-player game.

    Enumerates completely labelled vertex pairs of the two best-response
    polytopes.  In degenerate games the equilibrium set is a union of convex
    pieces; their extreme points are what is returned, so any bilinear
    quantity (expected payoffs) attains its minimum over all equilibria at one
    of the returned profiles.
    """
    if game.n_players != 2:
        raise ValueError("mixed_ne_2p needs exactly two players")
    return [MixedProfile((x, y)) for x, y in mixed_ne_arrays(game.payoff)]


def is_nash(game: StrategicGame, delta: MixedProfile, tol: float = VERIFY_TOL) -> bool:
    """Best-response test: nobody gains more than ``tol`` by a pure deviation."""
    values = expected_payoffs(game, delta)
    for i in range(game.n_players):
        for s in range(game.shape[i]):
            alt = delta.replace(i, np.eye(game.shape[i])[s])
            if expected_payoffs(game, alt)[i] > values[i] + tol:
                return False
    return True


def all_equilibria(game: StrategicGame) -> list[MixedProfile]:
    """Pure equilibria plus, for two players, the extreme mixed ones."""
    out = {}
    for prof in pure_ne(game):
        d = MixedProfile.pure(game.shape, prof)
        out[d.key()] = d
    if game.n_players == 2:
        for d in mixed_ne_2p(game):
            out.setdefault(d.key(), d)
    return [out[k] for k in sorted(out)]


# -- lexicographic preferences -------------------------------------------------


@dataclass(frozen=True)
class LexValue:
    goal_prob: float
    exp_payoff: float

    def __post_init__(self):
        if not -TOL <= self.goal_prob <= 1 + TOL:
            raise ValueError(f"goal probability {self.goal_prob} outside [0, 1]")


def lex_cmp(a: LexValue, b: LexValue, tol: float = TOL) -> int:
    """-1, 0 or 1 as ``a`` is worse than, tied with or better than ``b``."""
    if a.goal_prob < b.goal_prob - tol:
        return -1
    if a.goal_prob > b.goal_prob + tol:
        return 1
    if a.exp_payoff < b.exp_payoff - tol:
        return -1
    if a.exp_payoff > b.exp_payoff + tol:
        return 1
    return 0


def lex_value(game: StrategicGame, goals: GoalAssignment, delta: MixedProfile, player: int) -> LexValue:
    w = delta.joint()
    if w.shape != game.shape:
        raise ValueError("mixed profile does not match the game")
    g = goals.mask(game.shape)[..., player]
    return LexValue(float(np.sum(w * g)), float(np.sum(w * game.payoff[..., player])))


def lex_compare(game, goals, d1: MixedProfile, d2: MixedProfile, player: int) -> int:
    """Compare goal probability first, expected (unboosted) payoff second."""
    return lex_cmp(lex_value(game, goals, d1, player), lex_value(game, goals, d2, player))


def simplex_grid(size: int, k: int) -> np.ndarray:
    """All probability vectors over ``size`` strategies with entries in multiples of ``1/k``."""
    rows = []

    def rec(prefix, left, slots):
        if slots == 1:
            rows.append(prefix + [left])
            return
        for c in range(left + 1):
            rec(prefix + [c], left - c, slots - 1)

    rec([], k, size)
    return np.array(rows, dtype=float) / k


def _contract(tensor: np.ndarray, mats) -> np.ndarray:
    out = tensor
    for j, mat in enumerate(mats):
        out = np.moveaxis(np.tensordot(mat, out, axes=([1], [j])), 0, j)
    return out


def _improvable(G: np.ndarray, E: np.ndarray, axis: int, tol: float = TOL) -> np.ndarray:
    """True where some alternative along ``axis`` is lexicographically better."""
    G = np.moveaxis(G, axis, -1)
    E = np.moveaxis(E, axis, -1)
    Go, Ga = G[..., :, None], G[..., None, :]
    Eo, Ea = E[..., :, None], E[..., None, :]
    better = (Ga > Go + tol) | ((np.abs(Ga - Go) <= tol) & (Ea > Eo + tol))
    return np.moveaxis(better.any(axis=-1), -1, axis)


def lex_ne_mask(game: StrategicGame, goals: GoalAssignment, grids) -> np.ndarray:
    """Mask over the product of ``grids`` of profiles with no lex-improving deviation.

    Deviations range over each player's own grid.
    """
    mask = goals.mask(game.shape)
    ok = np.ones(tuple(len(g) for g in grids), dtype=bool)
    for i in range(game.n_players):
        G = _contract(mask[..., i].astype(float), grids)
        E = _contract(game.payoff[..., i], grids)
        ok &= ~_improvable(G, E, i)
    return ok


def lex_ne_search(game: StrategicGame, goals: GoalAssignment, resolution: int):
    """Grid profiles (step ``1/resolution``) that are lexicographic equilibria.

    Returns ``None`` when the grid holds no such profile.  This certifies the
    grid only, not the continuum.
    """
    if resolution < 1:
        raise ValueError("resolution must be a positive integer")
    goals.validate(game)
    grids = [simplex_grid(s, resolution) for s in game.shape]
    ok = lex_ne_mask(game, goals, grids)
    found = [
        MixedProfile(tuple(grids[i][k] for i, k in enumerate(idx))) for idx in np.argwhere(ok)
    ]
    return found or None


def pure_lex_ne(game: StrategicGame, goals: GoalAssignment) -> list[Profile]:
    grids = [np.eye(s) for s in game.shape]
    return [tuple(int(s) for s in p) for p in np.argwhere(lex_ne_mask(game, goals, grids))]


# -- dominance -----------------------------------------------------------------


@dataclass
class Elimination:
    game: StrategicGame
    goals: GoalAssignment
    kept: tuple[tuple[int, ...], ...]
    trace: list = field(default_factory=list)


def _subgame(game: StrategicGame, goals: GoalAssignment, keep):
    idx = np.ix_(*[list(k) for k in keep])
    strategies = tuple(
        tuple(game.strategies[i][s] for s in ks) for i, ks in enumerate(keep)
    )
    return StrategicGame(strategies, game.payoff[idx]), goals.restrict(keep)


def _find_dominated(game, goals, mode, dominators):
    n = game.n_players
    mask = goals.mask(game.shape)
    if dominators == "pure":
        opp = [np.eye(s) for s in game.shape]
    else:
        opp = [simplex_grid(s, dominators) for s in game.shape]
    for i in range(n):
        size = game.shape[i]
        if size < 2:
            continue
        mats = list(opp)
        mats[i] = np.eye(size)
        G = np.moveaxis(_contract(mask[..., i].astype(float), mats), i, 0).reshape(size, -1)
        E = np.moveaxis(_contract(game.payoff[..., i], mats), i, 0).reshape(size, -1)
        cands = np.eye(size) if dominators == "pure" else simplex_grid(size, dominators)
        Gd, Ed = cands @ G, cands @ E
        for s in range(size):
            for d in range(len(cands)):
                if cands[d, s] >= 1 - TOL:
                    continue
                up = Gd[d] > G[s] + TOL
                tie = np.abs(Gd[d] - G[s]) <= TOL
                better = up | (tie & (Ed[d] > E[s] + TOL))
                equal = tie & (np.abs(Ed[d] - E[s]) <= TOL)
                if mode == "strict":
                    hit = better.all()
                else:
                    hit = (better | equal).all() and better.any()
                if hit:
                    return i, s, cands[d]
    return None


def dominance_eliminate(game: StrategicGame, goals: GoalAssignment, mode: str = "strict", dominators="pure") -> Elimination:
    """Iterated elimination of lexicographically dominated strategies.

    ``dominators`` is ``"pure"`` or an integer grid resolution ``k`` (mixed
    dominators and opponent profiles in steps of ``1/k``).  One strategy is
    removed per round, scanning players and then strategies in declared
    order, so traces are deterministic.
    """
    if mode not in ("strict", "weak"):
        raise ValueError("mode must be 'strict' or 'weak'")
    if dominators != "pure" and not (isinstance(dominators, int) and dominators >= 1):
        raise ValueError("dominators must be 'pure' or a positive integer resolution")
    goals.validate(game)
    keep = [list(range(s)) for s in game.shape]
    trace = []
    while True:
        sub, subgoals = _subgame(game, goals, keep)
        hit = _find_dominated(sub, subgoals, mode, dominators)
        if hit is None:
            return Elimination(sub, subgoals, tuple(tuple(k) for k in keep), trace)
        i, s, dom = hit
        original = keep[i][s]
        dominator = {sub.strategies[i][k]: float(p) for k, p in enumerate(dom) if p > TOL}
        trace.append((i, game.strategies[i][original], dominator))
        del keep[i][s]
