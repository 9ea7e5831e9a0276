"""Reference computations written independently of the library internals.

These use only the public single-step primitives of the network model
(``enabled``/``apply``/``propensity``) and plain dictionaries, never the
state-space explorer or the solvers.
"""

import itertools
import math
from fractions import Fraction
from functools import lru_cache

from crncalc.crn import apply, enabled, propensity


def normalize(weights: dict) -> dict:
    total = sum(weights.values())
    return {k: Fraction(v, total) for k, v in weights.items()}


def brute_combine(a: dict, b: dict, op) -> dict:
    out: dict = {}
    for (x, p), (y, q) in itertools.product(a.items(), b.items()):
        z = op(x, y)
        out[z] = out.get(z, 0) + p * q
    return out


def final_distribution(crs) -> dict:
    """Distribution of the absorbing state reached from the initial state.

    Assumes an acyclic, absorbing chain (true for compiled NRO networks).
    """

    @lru_cache(maxsize=None)
    def go(x):
        moves = [(r, propensity(crs, r, x)) for r in enabled(crs, x)]
        moves = [(r, a) for r, a in moves if apply(crs, r, x) != x]
        if not moves:
            return ((x, Fraction(1)),)
        total = sum(a for _, a in moves)
        acc: dict = {}
        for r, a in moves:
            for y, p in go(apply(crs, r, x)):
                acc[y] = acc.get(y, 0) + a / total * p
        return tuple(acc.items())

    return dict(go(crs.initial_state()))


def marginal_of(dist: dict, crs, name: str) -> dict:
    i = crs.species.index(name)
    out: dict = {}
    for x, p in dist.items():
        out[x[i]] = out.get(x[i], 0) + p
    return out


def reachable(crs) -> list:
    seen = {crs.initial_state()}
    todo = [crs.initial_state()]
    while todo:
        x = todo.pop()
        for r in enabled(crs, x):
            y = apply(crs, r, x)
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return sorted(seen)


def dense_stationary(crs) -> dict:
    """Stationary law of an irreducible chain: Gauss-Jordan on pi Q = 0, sum pi = 1."""
    states = reachable(crs)
    idx = {x: i for i, x in enumerate(states)}
    n = len(states)
    Q = [[Fraction(0)] * n for _ in range(n)]
    for x in states:
        for r in enabled(crs, x):
            y = apply(crs, r, x)
            if y != x:
                a = propensity(crs, r, x)
                Q[idx[x]][idx[y]] += a
                Q[idx[x]][idx[x]] -= a
    # rows of the system are columns of Q; the last equation is replaced by normalization
    A = [[Q[j][i] for j in range(n)] + [Fraction(0)] for i in range(n)]
    A[-1] = [Fraction(1)] * n + [Fraction(1)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if A[r][col] != 0)
        A[col], A[pivot] = A[pivot], A[col]
        lead = A[col][col]
        A[col] = [v / lead for v in A[col]]
        for r in range(n):
            if r != col and A[r][col]:
                f = A[r][col]
                A[r] = [u - f * v for u, v in zip(A[r], A[col])]
    return {states[i]: A[i][n] for i in range(n)}


def binomial_pmf(n: int, p: Fraction) -> dict:
    return {k: math.comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(n + 1)}


def poisson_pmf(mean: float, mass: float = 1e-9) -> dict:
    """Poisson probabilities up to the point where the remaining tail is below ``mass``."""
    out = {}
    k, acc = 0, 0.0
    while True:
        p = math.exp(-mean + k * math.log(mean) - math.lgamma(k + 1))
        out[k] = p
        acc += p
        if k > mean and 1.0 - acc < mass:
            return out
        k += 1


def l1(a: dict, b: dict) -> float:
    return sum(abs(a.get(k, 0) - b.get(k, 0)) for k in set(a) | set(b))
