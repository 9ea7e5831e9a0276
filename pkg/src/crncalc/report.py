"""Text, JSON and TSV renderings of analysis and simulation results.

Rationals are written as ``a/b`` strings; floats use 17 significant
digits so that they round-trip.

JSON schema for steady-state reports::

    {"kind": "steady", "exact": bool, "methods": [str], "states": int,
     "parts": int, "bsccs": int, "residual": float,
     "marginals": {species: {value: "a/b" | float}}}

and for simulations::

    {"kind": "simulation", "trials": int, "seed": int, "tmax": float|null,
     "step_cap": int, "steps": int, "stop_reasons": {reason: int},
     "histograms": {species: {value: int}}}
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

from .analysis import OutputDistribution
from .pmf import Pmf, format_pmf
from .rationals import format_rational
from .ssa import OccupationStats, TrajectoryStats

__all__ = [
    "format_float",
    "format_probability",
    "steady_text",
    "steady_json",
    "trajectory_text",
    "trajectory_json",
    "histogram_tsv",
    "occupation_text",
]


def format_float(x: float) -> str:
    return "inf" if x == math.inf else format(x, ".17g")


def format_probability(p) -> str:
    return format_rational(p) if isinstance(p, (int, Fraction)) else format_float(p)


def _marginal_lines(marginal) -> list[str]:
    if isinstance(marginal, Pmf):
        return format_pmf(marginal).splitlines()
    return [f"{v} : {format_float(p)}" for v, p in sorted(marginal.items(), reverse=True)]


def steady_text(result: OutputDistribution) -> str:
    lines = [
        f"exact: {'yes' if result.exact else 'no'}",
        f"methods: {', '.join(sorted(set(result.methods))) or 'none'}",
        f"states: {result.states}",
        f"parts: {len(result.reports)}",
        f"bsccs: {sum(len(r.bsccs) for r in result.reports)}",
        f"residual: {format_float(result.residual)}",
    ]
    for name in result.species:
        lines.append(f"marginal {name}")
        lines.extend(_marginal_lines(result.marginal(name)))
    return "\n".join(lines) + "\n"


def _marginal_json(marginal) -> dict[str, object]:
    items = marginal.scalar_items() if isinstance(marginal, Pmf) else sorted(marginal.items())
    return {str(v): format_rational(p) if isinstance(p, Fraction) else p for v, p in items}


def steady_json(result: OutputDistribution) -> str:
    doc = {
        "kind": "steady",
        "exact": result.exact,
        "methods": sorted(set(result.methods)),
        "states": result.states,
        "parts": len(result.reports),
        "bsccs": sum(len(r.bsccs) for r in result.reports),
        "residual": result.residual,
        "marginals": {n: _marginal_json(result.marginal(n)) for n in result.species},
    }
    return json.dumps(doc, indent=2) + "\n"


def trajectory_text(stats: TrajectoryStats) -> str:
    lines = [
        f"trials: {stats.trials}",
        f"seed: {stats.seed}",
        f"tmax: {format_float(stats.t_max)}",
        f"step_cap: {stats.step_cap}",
        f"steps: {stats.steps}",
    ]
    for reason, count in stats.stop_reasons.items():
        lines.append(f"stop {reason}: {count}")
    for name in stats.species:
        lines.append(f"histogram {name}")
        lines.extend(f"{v}\t{c}" for v, c in stats.histograms[name].items())
    return "\n".join(lines) + "\n"


def trajectory_json(stats: TrajectoryStats) -> str:
    doc = {
        "kind": "simulation",
        "trials": stats.trials,
        "seed": stats.seed,
        "tmax": None if stats.t_max == math.inf else stats.t_max,
        "step_cap": stats.step_cap,
        "steps": stats.steps,
        "stop_reasons": stats.stop_reasons,
        "histograms": {n: {str(v): c for v, c in h.items()} for n, h in stats.histograms.items()},
    }
    return json.dumps(doc, indent=2) + "\n"


def histogram_tsv(stats: TrajectoryStats, species: str | None = None) -> str:
    """``value<TAB>count`` lines for one species (default: the first output)."""
    name = species or stats.species[0]
    return "".join(f"{v}\t{c}\n" for v, c in stats.histograms[name].items())


def occupation_text(stats: OccupationStats) -> str:
    lines = [
        f"species: {stats.species}",
        f"seed: {stats.seed}",
        f"jumps: {stats.jumps}",
        f"burn_in: {format_rational(stats.burn_in)}",
        f"measured_time: {format_float(stats.measured_time)}",
    ]
    lines.extend(f"{v}\t{format_float(p)}" for v, p in stats.distribution.items())
    return "\n".join(lines) + "\n"
