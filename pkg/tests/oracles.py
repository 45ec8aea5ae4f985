"""Independent brute-force oracles.

These deliberately avoid the package's numpy machinery: payoffs are plain
dicts from profile tuples to lists, and every quantity is recomputed with
explicit loops.
"""
from __future__ import annotations

import itertools
from fractions import Fraction


def profiles(sizes):
    return list(itertools.product(*(range(k) for k in sizes)))


def table(payoff_array):
    """Payoff tensor ``(*sizes, n)`` as ``{profile: [floats]}``."""
    sizes = payoff_array.shape[:-1]
    return {p: [float(x) for x in payoff_array[p]] for p in profiles(sizes)}, tuple(sizes)


def boost_oracle(pay, goals, player, family, param):
    """Boosted utility of ``player`` at every profile, by the definitions."""
    col = {p: v[player] for p, v in pay.items()}
    goal = [p for p in pay if p in goals]
    rest = [p for p in pay if p not in goals]
    out = dict(col)
    if not goal:
        return out
    if family == "offset":
        m_bar = max(col[p] for p in rest) if rest else 0.0
        m_g = min(col[p] for p in goal)
        for p in goal:
            out[p] = m_bar + param + (col[p] - m_g)
    else:
        worst_cost = max(-col[p] for p in pay)
        for p in goal:
            out[p] = col[p] + param + worst_cost
    return out


def utility_oracle(pay, goal_sets, family, param):
    n = len(goal_sets)
    per = [boost_oracle(pay, goal_sets[i], i, family, param) for i in range(n)]
    return {p: [per[i][p] for i in range(n)] for p in pay}


def punishment_oracle(pay, bound):
    n = len(next(iter(pay.values())))
    excess = [max(pay[p][i] - bound[p][i] for p in pay) for i in range(n)]
    kappa = max(0.0, max(excess))
    violators = [i for i in range(n) if kappa > 1e-9 and excess[i] >= kappa - 1e-9]
    return kappa, violators


def pure_ne_oracle(util, sizes):
    """Profiles where no player has a strictly better unilateral deviation."""
    out = []
    for p in profiles(sizes):
        stable = True
        for i, k in enumerate(sizes):
            for s in range(k):
                q = p[:i] + (s,) + p[i + 1:]
                if util[q][i] > util[p][i] + 1e-9:
                    stable = False
        if stable:
            out.append(p)
    return out


def worst_ne_2x2(A, B):
    """Worst equilibrium payoff of each player in a 2x2 bimatrix game.

    Row plays ``U`` with probability ``p``, column plays ``L`` with ``q``.
    Best-response correspondences only switch at the indifference points, so
    the extreme equilibria have ``p`` in ``{0, 1, p*}`` and ``q`` in
    ``{0, 1, q*}``; every candidate is checked directly.
    """
    A = [[Fraction(x) for x in r] for r in A]
    B = [[Fraction(x) for x in r] for r in B]
    ps, qs = {Fraction(0), Fraction(1)}, {Fraction(0), Fraction(1)}
    # column indifferent: p*B[0][0] + (1-p)*B[1][0] == p*B[0][1] + (1-p)*B[1][1]
    den = (B[0][0] - B[1][0]) - (B[0][1] - B[1][1])
    if den != 0:
        p = (B[1][1] - B[1][0]) / den
        if 0 <= p <= 1:
            ps.add(p)
    den = (A[0][0] - A[0][1]) - (A[1][0] - A[1][1])
    if den != 0:
        q = (A[1][1] - A[0][1]) / den
        if 0 <= q <= 1:
            qs.add(q)
    worst = [None, None]
    found = []
    for p in ps:
        for q in qs:
            ru = q * A[0][0] + (1 - q) * A[0][1]
            rd = q * A[1][0] + (1 - q) * A[1][1]
            cl = p * B[0][0] + (1 - p) * B[1][0]
            cr = p * B[0][1] + (1 - p) * B[1][1]
            row_ok = (p == 1 and ru >= rd) or (p == 0 and rd >= ru) or (ru == rd)
            col_ok = (q == 1 and cl >= cr) or (q == 0 and cr >= cl) or (cl == cr)
            if not (row_ok and col_ok):
                continue
            found.append((p, q))
            va = p * ru + (1 - p) * rd
            vb = q * cl + (1 - q) * cr
            worst[0] = va if worst[0] is None else min(worst[0], va)
            worst[1] = vb if worst[1] is None else min(worst[1], vb)
    return [float(w) for w in worst], found


def lex_ne_2x2_oracle(pay, goal_sets, k):
    """Grid lexicographic equilibria of a 2x2 game as ``(a, b)`` numerators.

    Row plays its first strategy with probability ``a/k``, column with ``b/k``.
    Comparison is exact over fractions.
    """
    def value(i, a, b):
        pa = [Fraction(a, k), 1 - Fraction(a, k)]
        pb = [Fraction(b, k), 1 - Fraction(b, k)]
        g = m = Fraction(0)
        for r in range(2):
            for c in range(2):
                w = pa[r] * pb[c]
                g += w * (1 if (r, c) in goal_sets[i] else 0)
                m += w * Fraction(pay[(r, c)][i])
        return (g, m)

    out = []
    for a in range(k + 1):
        for b in range(k + 1):
            if all(value(0, x, b) <= value(0, a, b) for x in range(k + 1)) and all(
                value(1, a, y) <= value(1, a, b) for y in range(k + 1)
            ):
                out.append((a, b))
    return out


class _Gen:
    """Random formula text in both the package syntax and Python syntax."""

    def __init__(self, rng, atoms):
        self.rng = rng
        self.atoms = atoms

    def __call__(self, depth):
        r = self.rng.random()
        if depth == 0 or r < 0.25:
            if self.rng.random() < 0.1:
                c = self.rng.random() < 0.5
                return ("true" if c else "false"), ("True" if c else "False")
            a = self.atoms[self.rng.integers(len(self.atoms))]
            return a, f"v[{a!r}]"
        kind = self.rng.integers(4)
        if kind == 0:
            t, p = self(depth - 1)
            return f"~{t}", f"(not {p})"
        (lt, lp), (rt, rp) = self(depth - 1), self(depth - 1)
        if kind == 1:
            return f"({lt} & {rt})", f"({lp} and {rp})"
        if kind == 2:
            return f"({lt} | {rt})", f"({lp} or {rp})"
        return f"({lt} -> {rt})", f"((not {lp}) or {rp})"


def random_formula(rng, atoms, depth=4):
    """``(text, python_expression)`` pair describing the same formula."""
    return _Gen(rng, atoms)(depth)


def truth_table(py_expr, atoms):
    rows = []
    for bits in itertools.product((False, True), repeat=len(atoms)):
        v = dict(zip(atoms, bits))
        rows.append(bool(eval(py_expr, {"v": v})))
    return rows
