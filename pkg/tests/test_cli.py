import io
import subprocess
import sys

import numpy as np
import pytest

from endogoals.cli import BAD_INPUT, NEGATIVE, OK, main
from endogoals.gamefile import parse_game_file

import instances as inst


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


def game(name):
    return inst.GAMES / name


def test_translate_bool_pair():
    code, text = run("translate", game("bool_pair.game"))
    assert code == OK
    d = parse_game_file(text)
    assert np.array_equal(d.game.payoff, inst.BOOL_PAIR_TRANSLATED)
    assert not any(d.goals.goals)


def test_translate_with_goals_keeps_goal_structure(tmp_path):
    dest = tmp_path / "bool_pair.strategic"
    code, text = run("translate", game("bool_pair.game"), "--with-goals", "-o", dest)
    assert code == OK and text == ""
    d = parse_game_file(dest.read_text())
    assert np.array_equal(d.game.payoff, -inst.bool_pair().cost_tensor())
    assert d.goals.goals[1] == {(0, 0), (0, 1)}


def test_ne_and_mixedne():
    code, text = run("ne", game("dilemma.game"))
    assert code == OK and "D,R" in text
    code, text = run("mixedne", game("dilemma.game"))
    assert code == OK and "equilibria: 1" in text
    code, _ = run("mixedne", game("bribe3.game"))
    assert code == BAD_INPUT


def test_lexne_no_lexne_has_none():
    code, text = run("lexne", game("no_lexne.game"), "--grid", 6)
    assert code == NEGATIVE and "equilibria: 0" in text


def test_dominance_trace():
    code, text = run("dominance", game("dilemma.game"), "--strict")
    assert code == OK
    rows = [line.split() for line in text.splitlines()[-2:]]
    assert rows == [["1", "0", "U", "D:1"], ["2", "1", "L", "R:1"]]


def test_apply_transfers():
    code, text = run("apply", game("switches.game"), "--transfers", game("switches_offer.pay"))
    assert code == OK
    d = parse_game_file(text)
    assert d.game.payoff[1, 1].tolist() == [-2.0, -5.0]
    assert not d.budgets.bound.any()


def test_apply_needs_something():
    code, _ = run("apply", game("dilemma.game"))
    assert code == BAD_INPUT


def test_apply_uses_embedded_payments(tmp_path):
    src = tmp_path / "with_offer.game"
    src.write_text(game("switches.game").read_text() + "transfer 1 sa=1,sb=1 -> 0 : 3\n")
    code, text = run("apply", src)
    assert code == OK
    assert parse_game_file(text).game.payoff[1, 1].tolist() == [-2.0, -5.0]


def test_apply_is_additive(tmp_path):
    once = tmp_path / "once.pay"
    once.write_text("transfer 0 U,L -> 1 : 3\ntransfer 1 D,R -> 0 : 2\n")
    first, second = tmp_path / "a.pay", tmp_path / "b.pay"
    first.write_text("transfer 0 U,L -> 1 : 1\ntransfer 1 D,R -> 0 : 2\n")
    second.write_text("transfer 0 U,L -> 1 : 2\n")
    mid = tmp_path / "mid.game"
    assert run("apply", game("dilemma.game"), "--transfers", first, "-o", mid)[0] == OK
    _, twice = run("apply", mid, "--transfers", second)
    _, combined = run("apply", game("dilemma.game"), "--transfers", once)
    assert twice == combined


def test_ne_on_constant_game_lists_all_profiles(tmp_path):
    src = tmp_path / "flat.game"
    src.write_text(
        "game strategic\nplayers 2\nstrategy 0 x\nstrategy 0 y\nstrategy 1 l\nstrategy 1 r\n"
        "payoff x,l 1 1\npayoff x,r 1 1\npayoff y,l 1 1\npayoff y,r 1 1\n"
    )
    code, text = run("ne", src)
    assert code == OK and "equilibria: 4" in text


def test_tax_synth_three_player_pipeline(tmp_path):
    taxed = tmp_path / "taxed.game"
    code, _ = run("tax", "synth", game("bribe3.game"), "--profile", "a,b,c1", "-o", taxed)
    assert code == OK
    code, text = run("endo", "survive", taxed, "--profile", "a,b,c1")
    assert code == OK and "surviving-certified" in text


def test_endo_commands():
    code, text = run("endo", "solo", game("bribe3.game"), "--player", 0, "--bound", 1)
    assert code == OK and "solo payoff: 2" in text
    code, text = run("endo", "survive", game("bribe3.game"), "--profile", "a,b,c1", "--bound", 1)
    assert code == OK and "surviving-certified" in text
    code, text = run("endo", "nonsurvival", game("bribe3.game"), "--profile", "a,b,c2", "--bound", 1)
    assert code == OK and "non-surviving-certified" in text and "guaranteed: 2" in text
    code, text = run("endo", "nonsurvival", game("bribe3.game"), "--profile", "a,b,c1", "--bound", 1)
    assert code == NEGATIVE and "undecided" in text


def test_grid_flags_validated():
    code, _ = run("endo", "solo", game("bribe3.game"), "--player", 0, "--step", 0)
    assert code == BAD_INPUT
    code, _ = run("endo", "solo", game("bribe3.game"), "--player", 0, "--grid-cap", 5)
    assert code == BAD_INPUT
    code, _ = run("endo", "solo", game("bribe3.game"), "--player", 7)
    assert code == BAD_INPUT


def test_tax_synth_then_survive(tmp_path):
    src = tmp_path / "base.game"
    src.write_text(
        "game strategic\nplayers 2\nstrategy 0 x\nstrategy 0 y\nstrategy 1 l\nstrategy 1 r\n"
        "payoff x,l 1 1\npayoff x,r 0 3\npayoff y,l 3 0\npayoff y,r 2 2\n"
    )
    taxed = tmp_path / "taxed.game"
    code, text = run("tax", "synth", src, "--profile", "y,r", "--bound", 1, "-o", taxed)
    assert code == OK and "status: certified" in text
    code, text = run("endo", "survive", taxed, "--profile", "y,r", "--bound", 1)
    assert code == OK and "surviving-certified" in text


def test_tax_synth_cap():
    code, text = run("tax", "synth", game("bribe3.game"), "--profile", "a,b,c2", "--cap", 3, "--bound", 1)
    assert code == NEGATIVE and "blocking player: 0" in text


def test_check_shareable():
    code, text = run("check", "shareable", game("common_goal.game"), "--outcome", "p1=1,p2=1,q1=1,q2=1")
    assert code == OK and "shareable: yes" in text
    code, text = run("check", "shareable", game("bool_pair.game"), "--outcome", "sR=0,sC=0")
    assert code == NEGATIVE and "potentially shareable: no" in text
    code, _ = run("check", "shareable", game("dilemma.game"), "--outcome", "U,L")
    assert code == BAD_INPUT


def test_generate_is_deterministic_and_parses():
    a = run("generate", "--seed", 5, "--players", 3)[1]
    b = run("generate", "--seed", 5, "--players", 3)[1]
    assert a == b
    assert parse_game_file(a).game.n_players == 3
    assert run("generate", "--seed", 6, "--players", 3)[1] != a


@pytest.mark.parametrize(
    "argv",
    [
        ("ne", "missing.game"),
        ("ne", game("switches_offer.pay")),
        ("endo", "survive", game("dilemma.game"), "--profile", "Q,R"),
        ("endo", "survive", game("dilemma.game"), "--profile", "U,L"),
        ("lexne", game("no_lexne.game")),
        ("nonsense",),
    ],
)
def test_bad_input_exit_code(argv, capsys):
    code, _ = run(*argv)
    assert code == BAD_INPUT
    assert capsys.readouterr().err


def test_outputs_are_deterministic():
    for argv in [("ne", game("cost_dilemma.game")), ("endo", "nonsurvival", game("bribe3.game"), "--profile", "a,b,c2", "--bound", 1)]:
        assert run(*argv) == run(*argv)


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "endogoals", "translate", str(game("bool_pair.game"))],
        capture_output=True, text=True, check=False,
    )
    assert res.returncode == OK
    assert "payoff sR=0,sC=1 -5 6" in res.stdout
