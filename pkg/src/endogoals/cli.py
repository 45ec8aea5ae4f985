"""Command-line front end.

Reports are ``key: value`` lines, a blank line, then a table.  Exit status is
0 on success, 1 when an analysis comes out negative and 2 on bad input.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import endogenous as endo
from .core import GoalAssignment, StrategicGame
from .equilibria import dominance_eliminate, lex_ne_search, mixed_ne_2p, pure_ne
from .gamefile import (
    GameDescription,
    GameFileError,
    boolean_description,
    fmt,
    parse_game_file,
    parse_payment_file,
    print_game_file,
    strategic_description,
)
from .transfers import apply_tax, apply_transfers

OK, NEGATIVE, BAD_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load(path: str) -> GameDescription:
    return parse_game_file(_read(path))


def _emit(out, text: str, path: str | None = None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)


def _report(out, fields: list, rows: list | None = None, header: list | None = None) -> None:
    for key, value in fields:
        out.write(f"{key}: {value}\n")
    if rows is not None:
        out.write("\n")
        table = ([header] if header else []) + [[str(c) for c in r] for r in rows]
        if table:
            widths = [max(len(r[k]) for r in table) for k in range(len(table[0]))]
            for r in table:
                out.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")


def _vec(xs) -> str:
    return " ".join(fmt(round(float(x), 9)) for x in xs)


def _utilities(desc: GameDescription) -> StrategicGame:
    E = desc.endogenous()
    return E.game.with_payoff(E.base_utilities())


def _grid(args) -> endo.TransferGrid:
    return endo.TransferGrid(
        args.step,
        args.bound,
        cells=None if not args.cell else tuple(args._desc.profile(c) for c in args.cell),
        max_nonzero=args.max_nonzero,
        cap=args.grid_cap,
    )


def _player_arg(desc: GameDescription, i: int) -> int:
    if not 0 <= i < desc.game.n_players:
        raise InputError(f"no player {i}")
    return i


def _transfer_rows(desc: GameDescription, t) -> list:
    rows = []
    pay = t.pay
    for i in range(pay.shape[0]):
        for prof in desc.game.profiles():
            for j in range(pay.shape[-1]):
                x = pay[(i,) + prof + (j,)]
                if x != 0:
                    rows.append([i, desc.format_profile(prof), j, fmt(x)])
    return rows


# -- commands -----------------------------------------------------------------------


def cmd_translate(args, out) -> int:
    desc = _load(args.file)
    if desc.boolean is None:
        raise InputError("translate needs a boolean game")
    if args.with_goals:
        text = print_game_file(strategic_description(desc.game, desc.goals, desc.boosts, desc.budgets))
    else:
        text = print_game_file(strategic_description(_utilities(desc)))
    _emit(out, text, args.output)
    return OK


def cmd_ne(args, out) -> int:
    desc = _load(args.file)
    U = _utilities(desc)
    found = pure_ne(U)
    rows = [[desc.format_profile(p), _vec(U.payoff[p])] for p in found]
    _report(out, [("equilibria", len(found))], rows, ["profile", "utilities"])
    return OK if found else NEGATIVE


def cmd_mixedne(args, out) -> int:
    desc = _load(args.file)
    U = _utilities(desc)
    if U.n_players != 2:
        raise InputError("mixedne needs a two-player game")
    found = mixed_ne_2p(U)
    rows = []
    for d in found:
        values = np.tensordot(d.joint(), U.payoff, axes=2)
        rows.append([_vec(d.probs[0]), _vec(d.probs[1]), _vec(values)])
    _report(out, [("equilibria", len(found))], rows, ["row", "column", "utilities"])
    return OK if found else NEGATIVE


def cmd_lexne(args, out) -> int:
    desc = _load(args.file)
    found = lex_ne_search(desc.game, desc.goals, args.grid)
    fields = [("grid", args.grid), ("equilibria", 0 if found is None else len(found))]
    rows = [[" | ".join(_vec(p) for p in d.probs)] for d in found or []]
    _report(out, fields, rows, ["profile"])
    return OK if found else NEGATIVE


def cmd_dominance(args, out) -> int:
    desc = _load(args.file)
    mode = "weak" if args.weak else "strict"
    dominators = "pure" if args.grid is None else args.grid
    res = dominance_eliminate(desc.game, desc.goals, mode, dominators)
    fields = [("mode", mode), ("dominators", dominators), ("removed", len(res.trace))]
    for i, labels in enumerate(res.game.strategies):
        fields.append((f"player {i}", ",".join(labels)))
    rows = [
        [k + 1, i, label, " ".join(f"{s}:{fmt(round(p, 9))}" for s, p in dom.items())]
        for k, (i, label, dom) in enumerate(res.trace)
    ]
    _report(out, fields, rows, ["step", "player", "strategy", "dominator"])
    return OK


def cmd_apply(args, out) -> int:
    desc = _load(args.file)
    t, a = desc.transfers, desc.taxes
    if args.transfers or args.tax:
        t = parse_payment_file(desc, _read(args.transfers))[0] if args.transfers else None
        a = parse_payment_file(desc, _read(args.tax))[1] if args.tax else None
    if t is None and a is None:
        raise InputError("nothing to apply: give --transfers or --tax, or embed payment lines")
    game = desc.game
    if t is not None:
        game = apply_transfers(game, t)
    if a is not None:
        game = apply_tax(game, a)
    budgets = desc.budgets if desc.explicit_budgets or desc.boolean is not None else None
    text = print_game_file(strategic_description(game, desc.goals, desc.boosts, budgets))
    _emit(out, text, args.output)
    return OK


def _load_endo(args):
    desc = _load(args.file)
    args._desc = desc
    return desc, desc.endogenous()


def cmd_endo_solo(args, out) -> int:
    desc, E = _load_endo(args)
    i = _player_arg(desc, args.player)
    res = endo.solo_payoff_details(E, i, _grid(args))
    fields = [
        ("player", i),
        ("solo payoff", fmt(res.value)),
        ("offers", res.evaluated),
        ("approximate", str(res.approximate).lower()),
    ]
    _report(out, fields, _transfer_rows(desc, res.transfer), ["giver", "profile", "receiver", "amount"])
    return OK


def cmd_endo_survive(args, out) -> int:
    desc, E = _load_endo(args)
    sigma = desc.profile(args.profile)
    res = endo.check_survival_sufficient(E, sigma, _grid(args))
    cert = res.certificate
    fields = [
        ("profile", desc.format_profile(sigma)),
        ("status", res.status),
        ("utilities", _vec(cert["utilities"])),
        ("solo payoffs", _vec(cert["solo"])),
        ("approximate", str(cert["approximate"]).lower()),
    ]
    if "shareable" in cert:
        share = cert["shareable"]
        fields.append(("shareable", "no" if share is None else "yes"))
    rows = _transfer_rows(desc, res.transfer) if res.certified else []
    _report(out, fields, rows, ["giver", "profile", "receiver", "amount"])
    return OK if res.certified else NEGATIVE


def cmd_endo_nonsurvival(args, out) -> int:
    desc, E = _load_endo(args)
    sigma = desc.profile(args.profile)
    res = endo.find_nonsurvival_certificate(E, sigma, _grid(args), joint_cap=args.joint_cap)
    if res is None:
        _report(out, [("profile", desc.format_profile(sigma)), ("status", "undecided")])
        return NEGATIVE
    cert = res.certificate
    fields = [
        ("profile", desc.format_profile(sigma)),
        ("status", res.status),
        ("candidates", cert["candidates"]),
        ("supporting transfers", cert["solutions"]),
        ("approximate", str(cert["approximate"]).lower()),
    ]
    rows = []
    head = cert["headline"]
    if head is not None:
        fields += [
            ("deviator", head["player"]),
            ("guaranteed", fmt(round(head["guaranteed"], 9))),
            ("on path", fmt(round(head["on_path"], 9))),
        ]
        rows = _transfer_rows(desc, head["transfer"])
    _report(out, fields, rows, ["giver", "profile", "receiver", "amount"])
    return OK


def cmd_tax_synth(args, out) -> int:
    desc, E = _load_endo(args)
    sigma = desc.profile(args.profile)
    try:
        res = endo.synth_tax(E, sigma, _grid(args), args.cap)
    except endo.SynthesisFailure as exc:
        _report(out, [("profile", desc.format_profile(sigma)), ("status", "failed"),
                      ("reason", str(exc)), ("blocking player", exc.player)])
        return NEGATIVE
    alpha = res.alpha.tax
    rows = []
    for i in range(E.n_players):
        for prof in desc.game.profiles():
            if alpha[prof + (i,)] != 0:
                rows.append([i, desc.format_profile(prof), fmt(alpha[prof + (i,)])])
    fields = [
        ("profile", desc.format_profile(sigma)),
        ("status", "certified"),
        ("iterations", res.iterations),
        ("total tax", fmt(alpha.sum())),
    ]
    if args.output:
        taxed = res.game
        if taxed.boolean is not None:
            new = boolean_description(taxed.boolean, desc.budget_mode)
        else:
            budgets = taxed.budgets if desc.explicit_budgets else None
            new = strategic_description(taxed.game, taxed.goals, taxed.boosts, budgets)
        _emit(out, print_game_file(new), args.output)
        fields.append(("written", args.output))
    _report(out, fields, rows, ["player", "profile", "tax"])
    return OK


def cmd_check_shareable(args, out) -> int:
    desc = _load(args.file)
    if desc.boolean is None:
        raise InputError("shareability is defined for boolean games")
    b = desc.boolean
    v = b.valuation_of(desc.profile(args.outcome))
    share = endo.is_shareable(b, v)
    fields = [
        ("outcome", args.outcome),
        ("shareable", "no" if share is None else "yes"),
        ("potentially shareable", "yes" if endo.is_potentially_shareable(b, v) else "no"),
    ]
    rows = []
    for i, w in sorted((share or {}).items()):
        rows.append([i, ",".join(f"{a}={int(x)}" for a, x in zip(b.atoms, w))])
    _report(out, fields, rows, ["player", "assigned outcome"])
    return OK if share is not None else NEGATIVE


def cmd_generate(args, out) -> int:
    rng = np.random.default_rng(args.seed)
    n = args.players
    sizes = [int(rng.integers(1, args.strategies + 1)) for _ in range(n)]
    sizes[0] = max(sizes[0], 2)
    labels = tuple(tuple(f"s{i}{k}" for k in range(s)) for i, s in enumerate(sizes))
    payoff = rng.integers(-5, 6, size=tuple(sizes) + (n,)).astype(float)
    game = StrategicGame(labels, payoff)
    goals = GoalAssignment.from_mask(rng.random(tuple(sizes) + (n,)) < 0.3)
    _emit(out, print_game_file(strategic_description(game, goals)), args.output)
    return OK


# -- parser -------------------------------------------------------------------------


def _grid_flags(p) -> None:
    p.add_argument("--step", type=float, default=1.0, help="transfer grid step g")
    p.add_argument("--bound", type=float, default=3.0, help="largest single payment M")
    p.add_argument("--cell", action="append", help="profile where payments may be made (repeatable)")
    p.add_argument("--max-nonzero", type=int, default=None, help="non-zero entries per offer")
    p.add_argument("--grid-cap", type=int, default=10**7, help="refuse grids with more offers than this")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="endogoals", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("translate", help="boolean game to strategic game file")
    p.add_argument("file")
    p.add_argument("--with-goals", action="store_true", help="keep payoffs, goals and boost instead of utilities")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("ne", help="pure equilibria of the induced game")
    p.add_argument("file")
    p.set_defaults(func=cmd_ne)

    p = sub.add_parser("mixedne", help="mixed equilibria (two players)")
    p.add_argument("file")
    p.set_defaults(func=cmd_mixedne)

    p = sub.add_parser("lexne", help="lexicographic equilibria on a simplex grid")
    p.add_argument("file")
    p.add_argument("--grid", type=int, required=True)
    p.set_defaults(func=cmd_lexne)

    p = sub.add_parser("dominance", help="iterated elimination of dominated strategies")
    p.add_argument("file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--strict", action="store_true")
    g.add_argument("--weak", action="store_true")
    p.add_argument("--grid", type=int, default=None, help="mixed dominators at this resolution")
    p.set_defaults(func=cmd_dominance)

    p = sub.add_parser("apply", help="apply transfers and/or taxes")
    p.add_argument("file")
    p.add_argument("--transfers")
    p.add_argument("--tax")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("endo", help="two-phase analyses")
    esub = p.add_subparsers(dest="action", required=True)
    q = esub.add_parser("solo")
    q.add_argument("file")
    q.add_argument("--player", type=int, required=True)
    _grid_flags(q)
    q.set_defaults(func=cmd_endo_solo)
    q = esub.add_parser("survive")
    q.add_argument("file")
    q.add_argument("--profile", required=True)
    _grid_flags(q)
    q.set_defaults(func=cmd_endo_survive)
    q = esub.add_parser("nonsurvival")
    q.add_argument("file")
    q.add_argument("--profile", required=True)
    q.add_argument("--joint-cap", type=int, default=None)
    _grid_flags(q)
    q.set_defaults(func=cmd_endo_nonsurvival)

    p = sub.add_parser("tax", help="taxation mechanisms")
    tsub = p.add_subparsers(dest="action", required=True)
    q = tsub.add_parser("synth")
    q.add_argument("file")
    q.add_argument("--profile", required=True)
    q.add_argument("--cap", type=int, default=1000, help="iteration cap")
    q.add_argument("-o", "--output", help="write the taxed game here")
    _grid_flags(q)
    q.set_defaults(func=cmd_tax_synth)

    p = sub.add_parser("check", help="outcome properties")
    csub = p.add_subparsers(dest="action", required=True)
    q = csub.add_parser("shareable")
    q.add_argument("file")
    q.add_argument("--outcome", required=True)
    q.set_defaults(func=cmd_check_shareable)

    p = sub.add_parser("generate", help="random small strategic game")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--players", type=int, default=2)
    p.add_argument("--strategies", type=int, default=3)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)
    return ap


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return BAD_INPUT if exc.code else OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args, out)
    except (InputError, GameFileError, endo.GridTooLarge, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
