"""Gillespie direct-method simulation.

Trial ``i`` of a run with seed ``s`` draws from its own Philox stream,
``Philox(SeedSequence(s mod 2**64, spawn_key=(i,)))``, so results do not
depend on how trials are scheduled across processes.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .crn import Crs
from .errors import OutputNotFound
from .rationals import as_fraction

__all__ = [
    "QUIESCENT",
    "TIME_CAP",
    "STEP_CAP",
    "TrajectoryStats",
    "OccupationStats",
    "ssa_run",
    "run_trial",
    "occupation_estimate",
    "trial_stream",
]

QUIESCENT = "quiescent"
TIME_CAP = "timeCap"
STEP_CAP = "stepCap"

_BLOCK = 1024


def trial_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for trial ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed % 2**64, spawn_key=(index,))))


class _Uniforms:
    """Uniform draws on (0, 1] handed out from pre-generated blocks."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.buf: list[float] = []
        self.pos = 0

    def __call__(self) -> float:
        if self.pos == len(self.buf):
            self.buf = (1.0 - self.rng.random(_BLOCK)).tolist()
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return u


class _Stepper:
    def __init__(self, crs: Crs):
        compiled = crs.compiled()
        self.reactants = compiled.reactants
        self.deltas = compiled.deltas
        self.rates = [float(r) for r in compiled.rates]

    def propensities(self, x: list[int]) -> list[float]:
        out = []
        for reactants, a in zip(self.reactants, self.rates):
            for i, c in reactants:
                n = x[i]
                if n < c:
                    a = 0.0
                    break
                a *= n
                for j in range(1, c):
                    a *= n - j
            out.append(a)
        return out

    @staticmethod
    def choose(props: list[float], total: float, u: float) -> int:
        target = u * total
        acc = 0.0
        last = 0
        for k, a in enumerate(props):
            if a:
                acc += a
                last = k
                if acc >= target:
                    return k
        return last


def run_trial(crs: Crs, seed: int, index: int, t_max: float = math.inf,
              step_cap: int = 10**7) -> tuple[tuple[int, ...], str, float, int]:
    """Simulate one trajectory; returns the final state, stop reason, time and step count."""
    stepper = _Stepper(crs)
    uniform = _Uniforms(trial_stream(seed, index))
    x = list(crs.initial_state())
    t = 0.0
    steps = 0
    while True:
        props = stepper.propensities(x)
        total = math.fsum(props)
        if total <= 0.0:
            return tuple(x), QUIESCENT, t, steps
        if steps >= step_cap:
            return tuple(x), STEP_CAP, t, steps
        dt = -math.log(uniform()) / total
        if t + dt > t_max:
            return tuple(x), TIME_CAP, t_max, steps
        t += dt
        k = stepper.choose(props, total, uniform())
        for i, d in stepper.deltas[k]:
            x[i] += d
        steps += 1


@dataclass
class TrajectoryStats:
    """Outcome of a batch of independent trials."""

    trials: int
    seed: int
    species: tuple[str, ...]
    histograms: dict[str, dict[int, int]]
    stop_reasons: dict[str, int]
    t_max: float
    step_cap: int
    steps: int = 0
    joint: dict[tuple[int, ...], int] = field(default_factory=dict)

    def empirical(self, name: str) -> dict[int, float]:
        return {v: c / self.trials for v, c in sorted(self.histograms[name].items())}


def _chunk(args):
    crs, seed, indices, t_max, step_cap, positions = args
    rows = []
    for i in indices:
        x, reason, _, steps = run_trial(crs, seed, i, t_max, step_cap)
        rows.append((tuple(x[p] for p in positions), reason, steps))
    return rows


def ssa_run(crs: Crs, trials: int, seed: int, t_max: float = math.inf, step_cap: int = 10**7,
            species: Sequence[str] | None = None, threads: int = 1) -> TrajectoryStats:
    """Run ``trials`` independent trajectories and histogram the final counts.

    Each trial stops when no reaction is enabled, when the next event
    would pass ``t_max``, or after ``step_cap`` events.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    names = tuple(crs.outputs if species is None else species)
    for name in names:
        if name not in crs.species:
            raise OutputNotFound(name)
    positions = [crs.index(n) for n in names]
    if threads > 1 and trials > 1:
        size = -(-trials // threads)
        jobs = [(crs, seed, range(lo, min(lo + size, trials)), t_max, step_cap, positions)
                for lo in range(0, trials, size)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = [row for chunk in pool.map(_chunk, jobs) for row in chunk]
    else:
        rows = _chunk((crs, seed, range(trials), t_max, step_cap, positions))
    histograms = {n: Counter() for n in names}
    joint: Counter = Counter()
    reasons: Counter = Counter()
    total_steps = 0
    for values, reason, steps in rows:
        for n, v in zip(names, values):
            histograms[n][v] += 1
        joint[values] += 1
        reasons[reason] += 1
        total_steps += steps
    return TrajectoryStats(
        trials=trials,
        seed=seed,
        species=names,
        histograms={n: dict(sorted(h.items())) for n, h in histograms.items()},
        stop_reasons={r: reasons[r] for r in (QUIESCENT, TIME_CAP, STEP_CAP) if reasons[r]},
        t_max=t_max,
        step_cap=step_cap,
        steps=total_steps,
        joint=dict(sorted(joint.items())),
    )


@dataclass
class OccupationStats:
    """Time-weighted distribution of one species along a single long trajectory."""

    species: str
    seed: int
    jumps: int
    burn_in: Fraction
    measured_time: float
    distribution: dict[int, float]


def occupation_estimate(crs: Crs, species: str, seed: int, jumps: int = 10**6,
                        burn_in=Fraction(1, 10)) -> OccupationStats:
    """Estimate the stationary law of ``species`` by time averaging.

    Meant for chains that never stop, such as birth-death networks.  The
    first ``burn_in`` fraction of the ``jumps`` events is discarded; the
    remaining holding times are accumulated per observed count.
    """
    burn_in = as_fraction(burn_in)
    if not 0 <= burn_in < 1:
        raise ValueError("burn-in fraction must lie in [0, 1)")
    if species not in crs.species:
        raise OutputNotFound(species)
    pos = crs.index(species)
    stepper = _Stepper(crs)
    uniform = _Uniforms(trial_stream(seed, 0))
    x = list(crs.initial_state())
    skip = int(jumps * burn_in)
    occupancy: dict[int, float] = {}
    measured = 0.0
    for step in range(jumps):
        props = stepper.propensities(x)
        total = math.fsum(props)
        if total <= 0.0:
            break
        dt = -math.log(uniform()) / total
        if step >= skip:
            occupancy[x[pos]] = occupancy.get(x[pos], 0.0) + dt
            measured += dt
        k = stepper.choose(props, total, uniform())
        for i, d in stepper.deltas[k]:
            x[i] += d
    if measured == 0.0:
        distribution = {x[pos]: 1.0}
    else:
        distribution = {v: w / measured for v, w in sorted(occupancy.items())}
    return OccupationStats(species, seed, jumps, burn_in, measured, distribution)
