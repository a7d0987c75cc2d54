"""Straight-line reference implementations used as test oracles.

Plain Python loops over floats, deliberately sharing no code with the
package (no kernels, no tape, no numpy vector maths beyond containers).
"""

import itertools
import math


def gain(r):
    return 2.0**r - 1.0


def disc(j):
    return 1.0 / math.log2(j + 1)


def ranked_order(s):
    # descending score, ties by index
    return sorted(range(len(s)), key=lambda i: (-s[i], i))


def ndcg(s, y, k=None):
    n = len(s)
    k = n if k is None else min(k, n)
    ideal = sorted(y, reverse=True)
    best = sum(gain(ideal[j]) * disc(j + 1) for j in range(k))
    if best == 0:
        return 1.0
    order = ranked_order(s)
    return sum(gain(y[order[j]]) * disc(j + 1) for j in range(k)) / best


def max_dcg(y, k=None):
    n = len(y)
    k = n if k is None else min(k, n)
    ideal = sorted(y, reverse=True)
    return sum(gain(ideal[j]) * disc(j + 1) for j in range(k))


def relaxed_sort(s, tau):
    n = len(s)
    spread = [sum(abs(s[j] - s[m]) for m in range(n)) for j in range(n)]
    rows = []
    for i in range(1, n + 1):
        logits = [((n + 1 - 2 * i) * s[j] - spread[j]) / tau for j in range(n)]
        top = max(logits)
        e = [math.exp(v - top) for v in logits]
        z = sum(e)
        rows.append([v / z for v in e])
    return rows


def sinkhorn(m, max_iter=30, tol=1e-6):
    m = [row[:] for row in m]
    n = len(m)

    def err():
        r = max(abs(sum(row) - 1.0) for row in m)
        c = max(abs(sum(m[i][j] for i in range(n)) - 1.0) for j in range(n))
        return max(r, c)

    it = 0
    while err() >= tol and it < max_iter:
        for i in range(n):
            z = sum(m[i])
            m[i] = [v / z for v in m[i]]
        for j in range(n):
            z = sum(m[i][j] for i in range(n))
            for i in range(n):
                m[i][j] /= z
        it += 1
    return m, it


def transpose(m):
    return [list(col) for col in zip(*m)]


def matvec(m, v):
    return [sum(a * b for a, b in zip(row, v)) for row in m]


def neural_ndcg(s, y, tau, k=None, scale=True):
    n = len(s)
    kk = n if k is None else min(k, n)
    p = relaxed_sort(s, tau)
    if scale:
        p, _ = sinkhorn(p)
    q = matvec(p, [gain(v) for v in y])
    dcg = sum(q[j] * disc(j + 1) for j in range(kk))
    return -dcg / max_dcg(y, k)


def neural_ndcg_t(s, y, tau, k=None):
    n = len(s)
    kk = n if k is None else min(k, n)
    p, _ = sinkhorn(transpose(relaxed_sort(s, tau)))
    d = [disc(j + 1) if j < kk else 0.0 for j in range(n)]
    wd = matvec(p, d)
    return -sum(gain(y[i]) * wd[i] for i in range(n)) / max_dcg(y, k)


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def approx_ndcg(s, y, alpha=1.0):
    n = len(s)
    total = 0.0
    for i in range(n):
        pos = 1.0 + sum(sigmoid(-alpha * (s[i] - s[j])) for j in range(n) if j != i)
        total += gain(y[i]) / math.log2(1.0 + pos)
    return -total / max_dcg(y)


def listnet(s, y):
    zy = sum(math.exp(v) for v in y)
    zs = sum(math.exp(v) for v in s)
    return -sum(math.exp(y[i]) / zy * math.log(math.exp(s[i]) / zs) for i in range(len(s)))


def listmle_bruteforce(s, y):
    """-log of the explicit Plackett-Luce product for the label ordering."""
    order = sorted(range(len(y)), key=lambda i: (-y[i], i))
    prob = 1.0
    for pos, i in enumerate(order):
        rest = order[pos:]
        prob *= math.exp(s[i]) / sum(math.exp(s[j]) for j in rest)
    return -math.log(prob)


def ranknet(s, y):
    terms = [
        math.log(1.0 + math.exp(-(s[i] - s[j])))
        for i in range(len(s))
        for j in range(len(s))
        if y[i] > y[j]
    ]
    return sum(terms) / len(terms)


def rmse(s, y, levels=4):
    return math.sqrt(sum((levels * sigmoid(a) - b) ** 2 for a, b in zip(s, y)) / len(s))


def swap_delta(s, y, k=None):
    """|NDCG@k(swapped) - NDCG@k(current)| by swapping positions and recomputing."""
    n = len(s)
    kk = n if k is None else min(k, n)
    best = max_dcg(y, k)
    order = ranked_order(s)

    def dcg(o):
        return sum(gain(y[o[j]]) * disc(j + 1) for j in range(kk))

    base = dcg(order) / best
    pos = {doc: r for r, doc in enumerate(order)}
    out = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            o = order[:]
            o[pos[i]], o[pos[j]] = o[pos[j]], o[pos[i]]
            out[i][j] = abs(dcg(o) / best - base)
    return out


def plackett_luce_expected_sorted(s, y):
    """E[P_pi y] over permutations pi ~ Plackett-Luce with log-strengths s."""
    n = len(s)
    w = [math.exp(v) for v in s]
    expect = [0.0] * n
    for perm in itertools.permutations(range(n)):
        prob = 1.0
        remaining = sum(w)
        for i in perm:
            prob *= w[i] / remaining
            remaining -= w[i]
        for rank, i in enumerate(perm):
            expect[rank] += prob * y[i]
    return expect
