"""Endogenous games with goals: utilities, transfers, taxes and equilibrium survival."""
from __future__ import annotations

from .boolean import BooleanGame, embed_strategic, mu, to_goal_game, valuations
from .core import (
    TOL,
    BoostSpec,
    BudgetConstraints,
    GoalAssignment,
    MixedProfile,
    StrategicGame,
    affine_transform,
    boost_value,
    expected_utility,
    instantiate,
    penalized_utility,
)
from .endogenous import (
    EndogenousGame,
    GridTooLarge,
    SynthesisFailure,
    TransferGrid,
    TwoPhaseSolution,
    check_survival_sufficient,
    find_nonsurvival_certificate,
    improving_offers,
    is_potentially_shareable,
    is_shareable,
    solo_payoff,
    synth_tax,
)
from .equilibria import (
    LexValue,
    dominance_eliminate,
    lex_compare,
    lex_ne_search,
    mixed_ne_2p,
    pure_lex_ne,
    pure_ne,
)
from .formula import FormulaSyntaxError, evaluate, parse
from .transfers import (
    TaxationMechanism,
    TransferFunction,
    apply_tax,
    apply_transfers,
    normalize,
    tax_from_transfers,
)

__version__ = "0.1.0"
