"""Straight-line evaluation of the best-response map of the two-firm entry game.

Independent of the C++ code: builds the value system state by state with plain
Python lists and Cramer-free Gaussian elimination, then prints Psi(alpha, p)
for design 1 at the uniform belief p = 0.5. The printed digits are pasted into
tests/test_game_model.cpp.
"""

import math

EULER = 0.5772156649015329
RN, EC, RS, FC, BETA = 2.8, 0.8, 0.7, (0.6, 0.4), 0.95
P = [0.5] * 8  # [P1(1|1..4), P2(1|1..4)]


def solve(a, b):
    n = len(b)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for c in range(n):
        piv = max(range(c, n), key=lambda r: abs(m[r][c]))
        m[c], m[piv] = m[piv], m[c]
        for r in range(n):
            if r != c:
                f = m[r][c] / m[c][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return [m[i][n] / m[i][i] for i in range(n)]


def profit(me, enter, rival_enter, state):
    if not enter:
        return 0.0
    prev_a1, prev_a2 = divmod(state, 2)
    was_in = prev_a1 if me == 0 else prev_a2
    return RS - RN * math.log(1 + rival_enter) - FC[me] - EC * (1 - was_in)


def prob(player, action, state):
    p1 = P[4 * player + state]
    return p1 if action else 1 - p1


def joint_next(me, mine, theirs):
    a1, a2 = (mine, theirs) if me == 0 else (theirs, mine)
    return 2 * a1 + a2


out = []
for me in (0, 1):
    rival = 1 - me
    a = [[1.0 if r == c else 0.0 for c in range(4)] for r in range(4)]
    b = [0.0] * 4
    for s in range(4):
        for mine in (0, 1):
            pm = prob(me, mine, s)
            b[s] += pm * (EULER - math.log(pm))
            for theirs in (0, 1):
                w = pm * prob(rival, theirs, s)
                b[s] += w * profit(me, mine, theirs, s)
                a[s][joint_next(me, mine, theirs)] -= BETA * w
    v = solve(a, b)
    for s in range(4):
        u = [0.0, 0.0]
        for mine in (0, 1):
            for theirs in (0, 1):
                u[mine] += prob(rival, theirs, s) * (
                    profit(me, mine, theirs, s) + BETA * v[joint_next(me, mine, theirs)])
        out.append(1 / (1 + math.exp(-(u[1] - u[0]))))

print(", ".join(f"{x:.15f}" for x in out))
