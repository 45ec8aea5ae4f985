import numpy as np
import pytest

from endogoals import (
    BoostSpec,
    GoalAssignment,
    StrategicGame,
    SynthesisFailure,
    TaxationMechanism,
    TransferFunction,
    TransferGrid,
    check_survival_sufficient,
    find_nonsurvival_certificate,
    improving_offers,
    is_potentially_shareable,
    is_shareable,
    solo_payoff,
    synth_tax,
)
from endogoals.endogenous import (
    EndogenousGame,
    GridTooLarge,
    lex_at,
    lex_guarantee,
    shareable_transfer,
    synthesis_guard,
    worst_values,
)
from endogoals.equilibria import lex_cmp

import instances as inst
from oracles import worst_ne_2x2


def test_grid_levels_and_size():
    g = inst.bribe3().game
    grid = TransferGrid(1, 3)
    assert grid.levels.tolist() == [0, 1, 2, 3]
    # Two profiles, two receivers each: 4 slots with 4 levels.
    assert grid.size(g) == 4**4 == len(grid.offers(g, 0))
    limited = TransferGrid(1, 3, max_nonzero=1)
    assert limited.size(g) == 1 + 4 * 3 == len(limited.offers(g, 0))
    cells = TransferGrid(1, 3, cells=[(0, 0, 1)])
    assert cells.size(g) == 16
    offers = cells.offers(g, 2)
    assert not offers[:, 0, 0, 0].any()
    assert offers[:, 0, 0, 1, 2].sum() == 0


def test_grid_zero_offer_first_and_cap():
    g = inst.bribe3().game
    assert not TransferGrid(1, 2).offers(g, 1)[0].any()
    with pytest.raises(GridTooLarge):
        TransferGrid(1, 3, cap=100).offers(g, 0)
    with pytest.raises(ValueError):
        TransferGrid(0, 1)
    with pytest.raises(ValueError):
        TransferGrid(2, 1)
    with pytest.raises(ValueError):
        TransferGrid(1, 1, cells=[(5, 0, 0)]).offers(g, 0)


def test_worst_values_match_2x2_oracle():
    rng = np.random.default_rng(21)
    U = rng.integers(-3, 4, size=(500, 2, 2, 2)).astype(float)
    W, approx = worst_values(U, 2)
    assert not approx.any()
    for b in range(len(U)):
        want, _ = worst_ne_2x2(U[b, ..., 0], U[b, ..., 1])
        assert W[b] == pytest.approx(want, abs=1e-9)


def test_worst_values_minmax_fallback():
    # Three-player game without a pure equilibrium: cyclic best responses.
    U = np.zeros((2, 2, 2, 3))
    for p in np.ndindex(2, 2, 2):
        a, b, c = p
        U[p] = [a == b, b != c, c == a]
    W, approx = worst_values(U[None], 3)
    assert approx.all()
    assert W[0].tolist() == [1.0, 1.0, 1.0]


def test_bribe3_solo_payoffs():
    E = inst.bribe3()
    grid = TransferGrid(1, 3)
    # A pays C 1 at (a, b, c1): C strictly prefers c1, A keeps goal utility 3 - 1.
    assert solo_payoff(E, 0, grid) == 2.0
    assert solo_payoff(E, 1, grid) == 0.0
    assert solo_payoff(E, 2, grid) == 0.0
    with pytest.raises(ValueError):
        solo_payoff(E, 3, grid)


def test_survival_requires_equilibrium():
    g = StrategicGame((("x", "y"),), np.array([[0.0], [1.0]]))
    E = EndogenousGame.with_payoff_budgets(g, GoalAssignment.empty(1), BoostSpec.offset(1))
    with pytest.raises(ValueError):
        check_survival_sufficient(E, (0,), TransferGrid(1, 1))
    assert check_survival_sufficient(E, (1,), TransferGrid(1, 1)).certified


def test_shareability():
    b = inst.common_goal()
    v = (True,) * 4
    share = is_shareable(b, v)
    assert share is not None and set(share) == {0, 1}
    prof = b.profile_of(v)
    for w in share.values():
        assert sum(x != y for x, y in zip(b.profile_of(w), prof)) >= 2
    assert len({tuple(w) for w in share.values()}) == 2
    assert is_potentially_shareable(b, v)
    # This game has only one profile differing in both choices from (0, 0).
    assert not is_potentially_shareable(inst.bool_pair(), (False, False))
    assert is_shareable(inst.bool_pair(), (False, False)) is None


def test_shareable_transfer_pays_costs_at_assigned_outcome():
    # Three goal players but a single costliest outcome (all-false).
    assert is_shareable(inst.three_atoms(), (True, True, True)) is None
    E = EndogenousGame.from_boolean(inst.common_goal())
    t = shareable_transfer(E, {0: (False,) * 4})
    assert not t.pay.any()


def test_improving_offers_sorted_best_first():
    E = EndogenousGame.from_boolean(inst.switches())
    pay = np.zeros((2,) + E.game.payoff.shape)
    pay[1, 1, 1, 0] = 3.0
    t = TransferFunction(pay)
    offers = improving_offers(E, 1, t, TransferGrid(1, 2), at=(1, 1))
    assert offers
    ref = lex_at(E, t.net(), 1, (1, 1))
    for a, b in zip(offers, offers[1:]):
        assert lex_cmp(a.value, b.value) >= 0
    for o in offers:
        assert lex_cmp(o.value, ref) > 0
        assert lex_cmp(lex_guarantee(E, o.transfer.net(), 1), o.value) == 0


def test_synthesis_guard_and_potential_shareability():
    E = EndogenousGame.from_boolean(inst.bool_pair())
    # Both goals hold at (0, 0); at (1, 1) no single flip reaches a goal.
    assert synthesis_guard(E, (0, 0)) == []
    assert synthesis_guard(E, (1, 1)) == []
    # At (1, 0) Row reaches ~sR & ~sC by switching sR off.
    assert synthesis_guard(E, (1, 0)) == [0]
    with pytest.raises(ValueError):
        synth_tax(E, (1, 0), TransferGrid(1, 1))
    with pytest.raises(ValueError):
        synth_tax(E, (0, 0), TransferGrid(1, 1))


def test_synthesis_hits_cap_when_offset_player_lacks_goal():
    E = inst.bribe3()
    with pytest.raises(SynthesisFailure) as exc:
        synth_tax(E, (0, 0, 1), TransferGrid(1, 1), iteration_cap=5)
    assert exc.value.player == 0
    assert isinstance(exc.value.alpha, TaxationMechanism)
    assert exc.value.alpha.tax[0, 0, 0, 0] == 5.0


def test_with_tax_follows_budget_rule():
    E = inst.bribe3()
    alpha = np.zeros(E.game.payoff.shape)
    alpha[0, 0, 0, 1] = 2.0
    taxed = E.with_tax(TaxationMechanism(alpha))
    assert np.array_equal(taxed.budgets.bound, taxed.game.payoff)
    B = EndogenousGame.from_boolean(inst.bool_pair())
    a = np.zeros(B.game.payoff.shape)
    a[1, 1, 0] = 1.0
    tb = B.with_tax(TaxationMechanism(a))
    assert not tb.budgets.bound.any()
    assert tb.boolean.cost[3, 0] == 4.0


def test_nonsurvival_joint_cap():
    E = inst.bribe3()
    with pytest.raises(GridTooLarge):
        find_nonsurvival_certificate(E, (0, 0, 1), TransferGrid(1, 3), joint_cap=1000)
