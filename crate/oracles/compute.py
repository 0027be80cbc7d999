"""Independent reference values frozen into the Rust integration tests.

Run with `python3 oracles/compute.py`. Needs mpmath, numpy and scipy.
"""

import itertools
import math

import mpmath as mp
import numpy as np
from scipy.linalg import expm

mp.mp.dps = 40


def two_point_ratio(alpha, p, s):
    """p-logSob ratio for f = (1, e^s) on {0, 1} with mass alpha at 0, simple generator."""
    alpha, s = mp.mpf(alpha), mp.mpf(s)
    w = (alpha, 1 - alpha)

    def ent(g):
        m = w[0] * g[0] + w[1] * g[1]
        return w[0] * g[0] * mp.log(g[0]) + w[1] * g[1] * mp.log(g[1]) - m * mp.log(m)

    def form(f, g):
        return alpha * (1 - alpha) * (f[1] - f[0]) * (g[1] - g[0])

    f = (mp.mpf(1), mp.exp(s))
    if p == 0:
        u = (mp.mpf(0), s)
        mean = w[1] * s
        var = w[0] * (0 - mean) ** 2 + w[1] * (s - mean) ** 2
        return var / (-form(f, (1 / f[0], 1 / f[1])) / 2)
    if p == 1:
        return ent(f) / (form(f, (mp.mpf(0), s)) / 4)
    p = mp.mpf(p)
    return ent((f[0] ** p, f[1] ** p)) / (p * p / (4 * (p - 1)) * form(f, (f[0] ** (p - 1), f[1] ** (p - 1))))


def two_point_constant(alpha, p):
    grid = [mp.mpf(-40) + mp.mpf(80) * i / 8000 for i in range(8001)]
    grid = [s for s in grid if abs(s) > 1e-6]
    vals = [two_point_ratio(alpha, p, s) for s in grid]
    i = max(range(len(vals)), key=lambda j: vals[j])
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if lo < 0 < hi:
        return mp.mpf(2) if alpha == 0.5 else None
    best = mp.findroot(lambda s: mp.diff(lambda x: two_point_ratio(alpha, p, x), s), (lo + hi) / 2)
    return two_point_ratio(alpha, p, best), best


def heat_example():
    mu = np.array([0.2, 0.3, 0.5])
    w = {(0, 1): 0.15, (0, 2): 0.05, (1, 2): 0.4}
    L = np.zeros((3, 3))
    for (x, y), c in w.items():
        L[x, y] = -c / mu[x]
        L[y, x] = -c / mu[y]
    for x in range(3):
        L[x, x] = -L[x].sum()
    P = expm(-0.7 * L)
    joint = sum(mu[x] * (P[x, 1] + P[x, 2]) for x in [0])
    sym = np.diag(np.sqrt(mu)) @ L @ np.diag(1 / np.sqrt(mu))
    ev = np.sort(np.linalg.eigvalsh((sym + sym.T) / 2))
    return P, joint, ev


def perm_gap(n, moves, rate):
    states = list(itertools.permutations(range(n)))
    index = {s: i for i, s in enumerate(states)}
    L = np.zeros((len(states), len(states)))
    for s in states:
        for (i, j) in moves:
            t = list(s)
            t[i], t[j] = t[j], t[i]
            L[index[s], index[tuple(t)]] -= rate
    for x in range(len(states)):
        L[x, x] = -L[x].sum()
    return np.sort(np.linalg.eigvalsh(L))[1]


def bl_gap(n, r):
    states = [c for c in itertools.combinations(range(n), r)]
    index = {s: i for i, s in enumerate(states)}
    L = np.zeros((len(states), len(states)))
    rate = 1.0 / (r * (n - r))
    for s in states:
        for a in s:
            for b in range(n):
                if b in s:
                    continue
                t = tuple(sorted((set(s) - {a}) | {b}))
                L[index[s], index[t]] -= rate
    for x in range(len(states)):
        L[x, x] = -L[x].sum()
    return np.sort(np.linalg.eigvalsh(L))[1]


def queue_gap(lam, trunc):
    n = trunc + 1
    logw = [k * math.log(lam) - math.lgamma(k + 1) for k in range(n)]
    L = np.zeros((n, n))
    for k in range(n):
        if k < trunc:
            L[k, k + 1] = -lam
        if k > 0:
            L[k, k - 1] = -k
        L[k, k] = -L[k].sum()
    d = np.exp(0.5 * (np.array(logw) - max(logw)))
    S = np.diag(d) @ L @ np.diag(1 / d)
    return np.sort(np.linalg.eigvalsh((S + S.T) / 2))[1]


def plurality(x):
    counts = {}
    for v in x:
        counts[v] = counts.get(v, 0) + 1
    top = max(counts.values())
    return next(v for v in x if counts[v] == top)


def nicd_brute(m, n, k, rho, protocols):
    """Agreement by enumerating x and every player's string with exact rational weights."""
    pts = list(itertools.product(range(m), repeat=n))
    rho = mp.mpf(rho)

    def trans(a, b):
        return (rho if a == b else 0) + (1 - rho) / m

    total = mp.mpf(0)
    for x in pts:
        per_face = [mp.mpf(1)] * m
        for i in range(k):
            dist = [mp.mpf(0)] * m
            for y in pts:
                w = mp.mpf(1)
                for a, b in zip(x, y):
                    w *= trans(a, b)
                dist[protocols[i](y)] += w
            per_face = [a * b for a, b in zip(per_face, dist)]
        total += sum(per_face)
    return total / len(pts)


def majority_px_uniform(n):
    rankings = ["abc", "acb", "bac", "bca", "cab", "cba"]
    bad = 0
    for prof in itertools.product(rankings, repeat=n):
        def pref(u, v):
            return 1 if sum(1 if r.index(u) < r.index(v) else -1 for r in prof) > 0 else -1
        o = (pref("a", "b"), pref("b", "c"), pref("c", "a"))
        bad += o[0] == o[1] == o[2]
    return mp.mpf(bad) / 6 ** n


def delta(eps, alpha, c):
    eps, alpha, c = mp.mpf(eps), mp.mpf(alpha), mp.mpf(c)
    mag = c * alpha ** -7 * 2 ** (alpha ** -2) * mp.log(1 / eps) ** 2 / eps ** (2 + 1 / (2 * alpha ** 2))
    return -mag


if __name__ == "__main__":
    for alpha in (0.5, 0.1, 0.3):
        for p in (-1, 0, 0.5, 1, 2, 3):
            print("two-point", alpha, p, two_point_constant(alpha, p))
    P, joint, ev = heat_example()
    print("heat P(0.7)", repr(P[0, 2]), repr(P[2, 1]), "joint", repr(joint), "eigs", ev)
    print("rt gap n=4", perm_gap(4, list(itertools.combinations(range(4), 2)), 1 / 6))
    print("ttr gap n=4", perm_gap(4, [(0, j) for j in range(1, 4)], 1 / 3))
    print("bl gap n=5 r=2", bl_gap(5, 2))
    for tr in (20, 40, 100):
        print("queue gap lam=2", tr, queue_gap(2.0, tr))
    dict0 = lambda y: y[0]
    print("nicd dictators m2 n1 k2", nicd_brute(2, 1, 2, 0.5, [dict0, dict0]))
    print("nicd plurality m2 n3 k2 rho.5", nicd_brute(2, 3, 2, 0.5, [plurality] * 2))
    print("nicd mixed m3 n2 k3 rho.3", nicd_brute(3, 2, 3, 0.3, [plurality, dict0, lambda y: y[1]]))
    print("px majority n=3", majority_px_uniform(3))
    print("log delta(0.1, 0.5, 1)", delta(0.1, 0.5, 1))
    print("theta(-1)", mp.mpf(19) / 27)
