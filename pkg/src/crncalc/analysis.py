"""Long-run behaviour of a reaction system's Markov chain.

The reachable state space is enumerated breadth-first, split into
strongly connected components, and solved structurally: probability
mass flows from the initial state through the transient components
(embedded jump chain, exact rationals) into the bottom components, each
of which contributes its own stationary distribution.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import spsolve

from .crn import Crs, State
from .errors import OutputNotFound, StateCapExceeded
from .pmf import Pmf, l1_distance, ratio_closeness

__all__ = [
    "StateSpace",
    "SteadyReport",
    "Comparison",
    "explore",
    "bsccs",
    "steady_state",
    "output_marginals",
    "joint_marginal",
    "compare",
    "solve",
    "independent_parts",
    "output_distribution",
    "OutputDistribution",
    "EXACT_ABSORPTION",
    "EXACT_STATIONARY",
    "FLOAT_STATIONARY",
    "FLOAT_ABSORPTION",
]

EXACT_ABSORPTION = "exact-rational-absorption"
EXACT_STATIONARY = "exact-rational-stationary"
FLOAT_STATIONARY = "float-stationary"
FLOAT_ABSORPTION = "float-absorption"

DEFAULT_CAP = 10**6
EXACT_BSCC_LIMIT = 2000
# automatic mode gives up on rationals once a denominator grows past this
EXACT_BIT_BUDGET = 4096


class _ExactTooLarge(Exception):
    pass


@dataclass
class StateSpace:
    """Reachable states in BFS order with aggregated outgoing rates.

    ``successors[i]`` lists ``(j, rate)`` pairs, one per distinct target
    state, in increasing target order.  Index 0 is the initial state.
    """

    crs: Crs
    states: list[State]
    successors: list[list[tuple[int, Fraction]]]
    cap: int
    index: dict[State, int] = field(repr=False, default_factory=dict)

    initial_index = 0

    def __len__(self):
        return len(self.states)

    @property
    def transitions(self) -> list[tuple[int, int, Fraction]]:
        return [(i, j, r) for i, succ in enumerate(self.successors) for j, r in succ]


def explore(crs: Crs, cap: int = DEFAULT_CAP) -> StateSpace:
    """Breadth-first closure of the initial state.

    Successors of each state are visited in lexicographic order, which
    fixes the state numbering.  Self-loops (reactions with zero net
    change) are dropped; they do not affect the chain.
    """
    if cap < 1:
        raise ValueError("state cap must be at least 1")
    compiled = crs.compiled()
    start = crs.initial_state()
    index = {start: 0}
    states = [start]
    successors: list[list[tuple[int, Fraction]]] = []
    queue = deque([start])
    while queue:
        x = queue.popleft()
        out: dict[State, Fraction] = {}
        for k, a in enumerate(compiled.propensities(x)):
            if a and compiled.deltas[k]:
                y = compiled.fire(x, k)
                out[y] = out.get(y, 0) + a
        succ = []
        for y in sorted(out):
            j = index.get(y)
            if j is None:
                if len(states) >= cap:
                    raise StateCapExceeded(cap)
                j = index[y] = len(states)
                states.append(y)
                queue.append(y)
            succ.append((j, out[y]))
        succ.sort()
        successors.append(succ)
    return StateSpace(crs, states, successors, cap, index)


def _sccs(successors: Sequence[Sequence[tuple[int, object]]]) -> list[list[int]]:
    """Tarjan's algorithm, iterative; components come out in reverse topological order."""
    n = len(successors)
    order = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0
    for root in range(n):
        if order[root] != -1:
            continue
        work = [(root, 0)]
        order[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, pos = work[-1]
            succ = successors[v]
            if pos < len(succ):
                work[-1] = (v, pos + 1)
                w = succ[pos][0]
                if order[w] == -1:
                    order[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], order[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == order[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(sorted(comp))
    return components


def _is_bottom(comp: list[int], successors) -> bool:
    members = set(comp)
    return all(j in members for i in comp for j, _ in successors[i])


def bsccs(sp: StateSpace) -> list[list[int]]:
    """Bottom strongly connected components, ordered by smallest state index."""
    found = [c for c in _sccs(sp.successors) if _is_bottom(c, sp.successors)]
    return sorted(found)


@dataclass
class SteadyReport:
    """Limit distribution of a reaction system started from its initial state.

    ``absorption[k]`` is the probability of ending in ``bsccs[k]``;
    ``stationary[k]`` is the distribution within it.  Probabilities are
    Fractions for the exact methods and floats otherwise.
    """

    space: StateSpace
    distribution: dict[State, object]
    bsccs: list[list[int]]
    absorption: list[object]
    stationary: list[dict[int, object]]
    method: str
    residual: float = 0.0

    @property
    def exact(self) -> bool:
        return self.method in (EXACT_ABSORPTION, EXACT_STATIONARY)


# --- linear algebra helpers --------------------------------------------------


def _exact_solve(rows: dict[int, dict[int, Fraction]], rhs: dict[int, Fraction]) -> dict[int, Fraction]:
    """Solve a square sparse system by Gaussian elimination over the rationals."""
    rows = {i: dict(r) for i, r in rows.items()}
    rhs = dict(rhs)
    order = sorted(rows)
    for k in order:
        pivot_row = rows[k]
        pivot = pivot_row[k]
        for i in order:
            if i == k or i not in rows:
                continue
            factor = rows[i].get(k)
            if not factor:
                continue
            factor = factor / pivot
            row_i = rows[i]
            for j, v in pivot_row.items():
                nv = row_i.get(j, 0) - factor * v
                if nv:
                    row_i[j] = nv
                else:
                    row_i.pop(j, None)
            rhs[i] = rhs.get(i, 0) - factor * rhs.get(k, 0)
    return {k: rhs.get(k, 0) / rows[k][k] for k in order}


def _gth(members: list[int], successors) -> dict[int, Fraction]:
    """Stationary distribution of an irreducible block by GTH state reduction.

    Only additions, multiplications and divisions of nonnegative numbers
    occur, so the exact rational result needs no pivoting.
    """
    local = {s: k for k, s in enumerate(members)}
    n = len(members)
    rows: list[dict[int, Fraction]] = [dict() for _ in range(n)]
    cols: list[set[int]] = [set() for _ in range(n)]
    for s in members:
        i = local[s]
        for t, rate in successors[s]:
            j = local[t]
            if j != i:
                rows[i][j] = rows[i].get(j, 0) + rate
                cols[j].add(i)
    totals = [Fraction(0)] * n
    for m in range(n - 1, 0, -1):
        row_m = rows[m]
        total = sum(v for j, v in row_m.items() if j < m)
        totals[m] = total
        for i in cols[m]:
            if i >= m:
                continue
            share = rows[i][m] / total
            row_i = rows[i]
            for j, v in row_m.items():
                if j < m and j != i:
                    row_i[j] = row_i.get(j, 0) + share * v
                    cols[j].add(i)
    pi = [Fraction(0)] * n
    pi[0] = Fraction(1)
    incoming: list[list[tuple[int, Fraction]]] = [[] for _ in range(n)]
    for i in range(n):
        for j, v in rows[i].items():
            if j > i:
                incoming[j].append((i, v))
    for m in range(1, n):
        pi[m] = sum((pi[i] * v for i, v in incoming[m]), Fraction(0)) / totals[m]
    norm = sum(pi)
    return {s: pi[local[s]] / norm for s in members}


def _float_stationary(members: list[int], successors) -> tuple[dict[int, float], float]:
    local = {s: k for k, s in enumerate(members)}
    n = len(members)
    r, c, v = [], [], []
    diag = np.zeros(n)
    for s in members:
        i = local[s]
        for t, rate in successors[s]:
            j = local[t]
            if j != i:
                r.append(i)
                c.append(j)
                v.append(float(rate))
                diag[i] += float(rate)
    r.extend(range(n))
    c.extend(range(n))
    v.extend(-diag)
    Q = csr_matrix((v, (r, c)), shape=(n, n))
    A = Q.T.tolil()
    A[n - 1, :] = np.ones(n)
    b = np.zeros(n)
    b[n - 1] = 1.0
    pi = spsolve(A.tocsr(), b)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.abs(Q.T @ pi).max()) if n else 0.0
    return {s: float(pi[local[s]]) for s in members}, residual


def _transient_exit(comp, incoming, successors, exact: bool) -> dict[int, object]:
    """Mass leaving a transient component, given the mass entering each of its states."""
    members = set(comp)
    totals = {s: sum(r for _, r in successors[s]) for s in comp}
    if exact:
        # expected visits v solve v = incoming + v P restricted to the component
        rows: dict[int, dict[int, Fraction]] = {s: {s: Fraction(1)} for s in comp}
        for s in comp:
            for t, rate in successors[s]:
                if t in members:
                    rows[t][s] = rows[t].get(s, 0) - Fraction(rate) / totals[s]
        visits = _exact_solve(rows, {s: Fraction(incoming.get(s, 0)) for s in comp})
    else:
        local = {s: k for k, s in enumerate(comp)}
        n = len(comp)
        r, c, v = list(range(n)), list(range(n)), [1.0] * n
        for s in comp:
            for t, rate in successors[s]:
                if t in members:
                    r.append(local[t])
                    c.append(local[s])
                    v.append(-float(rate) / float(totals[s]))
        A = csr_matrix((v, (r, c)), shape=(n, n))
        b = np.array([float(incoming.get(s, 0.0)) for s in comp])
        sol = np.atleast_1d(spsolve(A, b))
        visits = {s: float(sol[local[s]]) for s in comp}
    out: dict[int, object] = {}
    for s in comp:
        if not visits[s]:
            continue
        for t, rate in successors[s]:
            if t not in members:
                share = visits[s] * (Fraction(rate) / totals[s] if exact else float(rate) / float(totals[s]))
                out[t] = out.get(t, 0) + share
    return out


def steady_state(sp: StateSpace, method: str = "auto", exact_limit: int = EXACT_BSCC_LIMIT) -> SteadyReport:
    """Limit distribution of the chain started from ``sp``'s initial state.

    ``method`` is ``"auto"``, ``"exact"`` or ``"float"``.  Automatic
    selection tries rationals first and switches to floats when the
    denominators outgrow a fixed bit budget, which happens with widely
    separated rates.  Bottom components larger than ``exact_limit``
    states are always solved in floats, with the residual reported.
    """
    if method not in ("auto", "exact", "float"):
        raise ValueError(f"unknown method {method!r}")
    if method == "float":
        return _steady(sp, False, exact_limit, None)
    budget = EXACT_BIT_BUDGET if method == "auto" else None
    try:
        return _steady(sp, True, exact_limit, budget)
    except _ExactTooLarge:
        return _steady(sp, False, exact_limit, None)


def _steady(sp: StateSpace, exact: bool, exact_limit: int, budget: int | None) -> SteadyReport:
    successors = sp.successors
    comps = _sccs(successors)[::-1]  # topological order
    zero = Fraction(0) if exact else 0.0
    mass: dict[int, object] = {0: Fraction(1) if exact else 1.0}
    bottoms: list[list[int]] = []
    arrived: list[object] = []
    for comp in comps:
        if _is_bottom(comp, successors):
            bottoms.append(comp)
            arrived.append(sum((mass.get(s, zero) for s in comp), zero))
            continue
        if not any(s in mass for s in comp):
            continue
        if len(comp) == 1:
            s = comp[0]
            m = mass.pop(s)
            if budget is not None and m.denominator.bit_length() > budget:
                raise _ExactTooLarge
            total = sum(r for _, r in successors[s])
            for t, rate in successors[s]:
                share = m * (Fraction(rate) / total) if exact else m * (float(rate) / float(total))
                mass[t] = mass.get(t, zero) + share
        else:
            incoming = {s: mass.pop(s) for s in comp if s in mass}
            for t, share in _transient_exit(comp, incoming, successors, exact).items():
                mass[t] = mass.get(t, zero) + share
    order = sorted(range(len(bottoms)), key=lambda k: bottoms[k])
    bottoms = [bottoms[k] for k in order]
    arrived = [arrived[k] for k in order]

    stationary = []
    residual = 0.0
    used_float_block = False
    for comp in bottoms:
        if len(comp) == 1:
            stationary.append({comp[0]: Fraction(1) if exact else 1.0})
        elif exact and len(comp) <= exact_limit:
            stationary.append(_gth(comp, successors))
        else:
            pi, res = _float_stationary(comp, successors)
            stationary.append(pi)
            residual = max(residual, res)
            used_float_block = True

    distribution: dict[State, object] = {}
    for weight, pi in zip(arrived, stationary):
        if not weight:
            continue
        for s, p in pi.items():
            if used_float_block:
                value = float(weight) * float(p)
            else:
                value = weight * p
            if value:
                distribution[sp.states[s]] = distribution.get(sp.states[s], 0) + value
    if not exact:
        method_name = FLOAT_ABSORPTION if all(len(c) == 1 for c in bottoms) else FLOAT_STATIONARY
    elif used_float_block:
        method_name = FLOAT_STATIONARY
    elif all(len(c) == 1 for c in bottoms):
        method_name = EXACT_ABSORPTION
    else:
        method_name = EXACT_STATIONARY
    if not exact and not used_float_block:
        total = sum(distribution.values())
        residual = abs(1.0 - total)
    return SteadyReport(sp, distribution, bottoms, arrived, stationary, method_name, residual)


def solve(crs: Crs, cap: int = DEFAULT_CAP, method: str = "auto") -> SteadyReport:
    """Explore and solve in one step."""
    return steady_state(explore(crs, cap), method)


def _project(report: SteadyReport, positions: list[int], scalar: bool):
    table: dict = {}
    for x, p in report.distribution.items():
        key = x[positions[0]] if scalar else tuple(x[i] for i in positions)
        table[key] = table.get(key, 0) + p
    if report.exact:
        return Pmf(table)
    return dict(sorted(table.items()))


def output_marginals(crs: Crs, report: SteadyReport, species: Sequence[str] | None = None) -> dict[str, object]:
    """Marginal of each output species: a Pmf when exact, a ``{value: float}`` dict otherwise."""
    names = list(crs.outputs if species is None else species)
    result = {}
    for name in names:
        if name not in crs.species:
            raise OutputNotFound(name)
        result[name] = _project(report, [crs.index(name)], scalar=True)
    return result


def joint_marginal(crs: Crs, report: SteadyReport, species: Sequence[str] | None = None):
    """Joint law of several species as a multi-dimensional pmf."""
    names = list(crs.outputs if species is None else species)
    for name in names:
        if name not in crs.species:
            raise OutputNotFound(name)
    return _project(report, [crs.index(n) for n in names], scalar=False)


@dataclass(frozen=True)
class Comparison:
    l1: object
    ratio: object


def _float_table(f) -> dict:
    if isinstance(f, Pmf):
        return {k[0] if f.dim == 1 else k: float(v) for k, v in f.items()}
    return {k: float(v) for k, v in f.items()}


def compare(reference, other) -> Comparison:
    """L1 distance and pointwise ratio closeness of two distributions.

    Exact when both sides are Pmfs; otherwise both are computed in floats.
    """
    if isinstance(reference, Pmf) and isinstance(other, Pmf):
        return Comparison(l1_distance(reference, other), ratio_closeness(reference, other))
    a, b = _float_table(reference), _float_table(other)
    keys = set(a) | set(b)
    l1 = math.fsum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)
    ratios = []
    for k in keys:
        x, y = a.get(k, 0.0), b.get(k, 0.0)
        if x == 0 and y == 0:
            continue
        ratios.append(0.0 if x == 0 or y == 0 else min(x / y, y / x))
    return Comparison(l1, min(ratios) if ratios else 1.0)


# --- factorization into independent subsystems -------------------------------


def independent_parts(crs: Crs) -> list[Crs]:
    """Split ``crs`` into subsystems whose Markov chains evolve independently.

    A species that no reaction consumes only accumulates; reactions that
    merely produce it do not interact through it.  Reactions are grouped
    by the species they share other than these passive ones.  Each part
    keeps its own species plus the passive species it produces, the
    latter starting at 0 (their initial counts are an offset added back
    by :func:`output_distribution`).
    """
    consumed = {n for r in crs.reactions for n, _ in r.source}
    parent = list(range(len(crs.reactions)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[str, int] = {}
    for k, r in enumerate(crs.reactions):
        for name in r.species() & consumed:
            if name in owner:
                parent[find(k)] = find(owner[name])
            else:
                owner[name] = k
    groups: dict[int, list[int]] = {}
    for k in range(len(crs.reactions)):
        groups.setdefault(find(k), []).append(k)
    parts = []
    for members in sorted(groups.values()):
        reactions = [crs.reactions[k] for k in members]
        names = set().union(*(r.species() for r in reactions))
        species = tuple(n for n in crs.species if n in names)
        initial = {n: crs.initial[n] for n in species if n in consumed}
        parts.append(Crs(species, tuple(reactions), initial, tuple(n for n in crs.outputs if n in names),
                         crs.kinetics))
    return parts


@dataclass
class OutputDistribution:
    """Joint limit law of selected species, assembled from independent parts."""

    species: tuple[str, ...]
    table: dict[tuple[int, ...], object]
    reports: list[SteadyReport]
    exact: bool

    @property
    def states(self) -> int:
        return sum(len(r.space) for r in self.reports)

    @property
    def methods(self) -> list[str]:
        return [r.method for r in self.reports]

    @property
    def residual(self) -> float:
        return max((r.residual for r in self.reports), default=0.0)

    def marginal(self, name: str):
        k = self.species.index(name)
        table: dict[int, object] = {}
        for key, p in self.table.items():
            table[key[k]] = table.get(key[k], 0) + p
        return Pmf(table) if self.exact else dict(sorted(table.items()))

    def joint(self):
        return Pmf(self.table) if self.exact else dict(sorted(self.table.items()))


def output_distribution(crs: Crs, species: Sequence[str] | None = None, cap: int = DEFAULT_CAP,
                        method: str = "auto") -> OutputDistribution:
    """Limit law of ``species`` (default: the outputs), solving independent parts separately.

    Independent chains have the product of their limit laws as joint
    limit, and passive species add up their parts' contributions, so
    this agrees with solving the whole network while exploring far fewer
    states.  ``cap`` applies to each part.
    """
    names = tuple(crs.outputs if species is None else species)
    for name in names:
        if name not in crs.species:
            raise OutputNotFound(name)
    consumed = {n for r in crs.reactions for n, _ in r.source}
    parts = independent_parts(crs)
    reports = [steady_state(explore(part, cap), method) for part in parts]
    if not parts:
        # nothing ever fires: the single state is the answer
        reports = [steady_state(explore(crs, cap), method)]
    exact = all(r.exact for r in reports)
    one = Fraction(1) if exact else 1.0
    offset = tuple(0 if n in consumed else crs.initial[n] for n in names)
    table: dict[tuple[int, ...], object] = {offset: one}
    for part, report in zip(parts, reports):
        positions = [(k, part.index(n)) for k, n in enumerate(names) if n in part.species]
        if not positions:
            continue
        contrib: dict[tuple[int, ...], object] = {}
        for x, p in report.distribution.items():
            delta = [0] * len(names)
            for k, i in positions:
                delta[k] = x[i]
            key = tuple(delta)
            contrib[key] = contrib.get(key, 0) + (p if exact else float(p))
        merged: dict[tuple[int, ...], object] = {}
        for a, p in table.items():
            for b, q in contrib.items():
                key = tuple(u + v for u, v in zip(a, b))
                merged[key] = merged.get(key, 0) + p * q
        table = merged
    return OutputDistribution(names, table, reports, exact)
