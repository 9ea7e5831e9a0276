"""Reaction networks with mass-action kinetics.

A :class:`Crs` bundles species, reactions, an initial state and the set
of output species.  States are plain tuples of counts indexed in species
order, which keeps state-space exploration cheap.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, NamedTuple

from .errors import (
    FormulaSyntaxError,
    NonPositiveRate,
    NotEnabled,
    NotFresh,
    NotNormalized,
    UnknownSpecies,
)
from .pmf import Pmf
from .rationals import as_fraction, format_rational, parse_rational

__all__ = [
    "Reaction",
    "Crs",
    "State",
    "NroCheck",
    "propensity",
    "enabled",
    "apply",
    "is_nro",
    "rename",
    "prefix",
    "marginal",
    "parse_crn",
    "format_crn",
    "FALLING",
    "COMBINATORIAL",
]

State = tuple

# mass-action conventions: the falling factorial x!/(x-r)!, or the same
# divided by r! (the usual combinatorial count of reactant tuples)
FALLING = "falling"
COMBINATORIAL = "combinatorial"

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_'.]*\Z")


def _complex(spec) -> tuple[tuple[str, int], ...]:
    """Normalize a complex given as a mapping or pairs; merges repeats, drops zeros."""
    items = spec.items() if isinstance(spec, Mapping) else spec
    merged: dict[str, int] = {}
    for name, count in items:
        if isinstance(count, bool) or not isinstance(count, int) or count < 0:
            raise ValueError(f"stoichiometry of {name!r} must be a natural number")
        merged[name] = merged.get(name, 0) + count
    return tuple((n, c) for n, c in merged.items() if c)


@dataclass(frozen=True)
class Reaction:
    source: tuple[tuple[str, int], ...]
    product: tuple[tuple[str, int], ...]
    rate: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "source", _complex(self.source))
        object.__setattr__(self, "product", _complex(self.product))
        rate = as_fraction(self.rate)
        if rate <= 0:
            raise NonPositiveRate(f"reaction rate must be positive, got {rate}")
        object.__setattr__(self, "rate", rate)

    @classmethod
    def of(cls, source, product, rate=1) -> "Reaction":
        """Build from complexes written as ``{"A": 1, "B": 2}`` or ``"A + 2 B"``."""
        return cls(_coerce_complex(source), _coerce_complex(product), rate)

    def species(self) -> set[str]:
        return {n for n, _ in self.source} | {n for n, _ in self.product}

    def net_change(self) -> dict[str, int]:
        delta: dict[str, int] = {}
        for n, c in self.source:
            delta[n] = delta.get(n, 0) - c
        for n, c in self.product:
            delta[n] = delta.get(n, 0) + c
        return {n: d for n, d in delta.items() if d}

    def __str__(self):
        return f"{_format_complex(self.source)} -> {_format_complex(self.product)} @ {format_rational(self.rate)}"


def _coerce_complex(spec):
    if isinstance(spec, str):
        return _parse_complex(spec, None)
    return spec


@dataclass(frozen=True)
class Crs:
    """Reaction system: network, initial counts and output species.

    ``composable`` is cleared for the special-purpose networks that are
    not built to be wired into larger circuits.  ``meta`` carries
    free-form compile information and does not take part in equality.
    """

    species: tuple[str, ...]
    reactions: tuple[Reaction, ...] = ()
    initial: Mapping[str, int] = field(default_factory=dict)
    outputs: tuple[str, ...] = ()
    kinetics: str = FALLING
    composable: bool = True
    meta: Mapping[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        species = tuple(self.species)
        if len(set(species)) != len(species):
            raise ValueError("duplicate species names")
        for name in species:
            if not _NAME_RE.match(name):
                raise ValueError(f"invalid species name {name!r}")
        known = set(species)
        reactions = tuple(self.reactions)
        for r in reactions:
            missing = r.species() - known
            if missing:
                raise UnknownSpecies(sorted(missing)[0])
        initial = {}
        for name, count in dict(self.initial).items():
            if name not in known:
                raise UnknownSpecies(name)
            if isinstance(count, bool) or not isinstance(count, int) or count < 0:
                raise ValueError(f"initial count of {name!r} must be a natural number")
            initial[name] = count
        outputs = tuple(self.outputs)
        for name in outputs:
            if name not in known:
                raise UnknownSpecies(name)
        if self.kinetics not in (FALLING, COMBINATORIAL):
            raise ValueError(f"unknown kinetics convention {self.kinetics!r}")
        object.__setattr__(self, "species", species)
        object.__setattr__(self, "reactions", reactions)
        object.__setattr__(self, "initial", {n: initial.get(n, 0) for n in species})
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "meta", dict(self.meta))

    def __hash__(self):
        return hash((self.species, self.reactions, tuple(self.initial.items()), self.outputs))

    def index(self, name: str) -> int:
        try:
            return self.species.index(name)
        except ValueError:
            raise UnknownSpecies(name) from None

    def initial_state(self) -> State:
        return tuple(self.initial[n] for n in self.species)

    def state(self, counts: Mapping[str, int] | None = None, **kw) -> State:
        """State from a partial mapping of counts (missing species are 0)."""
        counts = dict(counts or {}, **kw)
        for name in counts:
            self.index(name)
        return tuple(counts.get(n, 0) for n in self.species)

    def counts(self, x: State) -> dict[str, int]:
        return dict(zip(self.species, x))

    def compiled(self) -> "CompiledReactions":
        cached = self.__dict__.get("_compiled")
        if cached is None:
            cached = CompiledReactions(self)
            object.__setattr__(self, "_compiled", cached)
        return cached


class CompiledReactions:
    """Index-based view of a network's reactions for fast stepping.

    The combinatorial convention only rescales each rate by ``1/prod r!``,
    so it is folded into ``rates`` here.  Integral rates are kept as ints.
    """

    def __init__(self, crs: Crs):
        idx = {n: i for i, n in enumerate(crs.species)}
        self.reactants = []
        self.deltas = []
        self.rates = []
        for r in crs.reactions:
            self.reactants.append(tuple((idx[n], c) for n, c in r.source))
            self.deltas.append(tuple((idx[n], d) for n, d in r.net_change().items()))
            rate = r.rate
            if crs.kinetics == COMBINATORIAL:
                for _, c in r.source:
                    rate /= math.factorial(c)
            self.rates.append(rate.numerator if rate.denominator == 1 else rate)

    def propensities(self, x: State, rates=None) -> list:
        rates = self.rates if rates is None else rates
        out = []
        for reactants, a in zip(self.reactants, rates):
            for i, c in reactants:
                n = x[i]
                if n < c:
                    a = 0
                    break
                a *= n
                for j in range(1, c):
                    a *= n - j
            out.append(a)
        return out

    def fire(self, x: State, k: int) -> State:
        y = list(x)
        for i, d in self.deltas[k]:
            y[i] += d
        return tuple(y)


def propensity(crs: Crs, reaction: Reaction, x: State) -> Fraction:
    """Mass-action propensity of ``reaction`` in state ``x``.

    Under the default convention this is ``k * prod x_i!/(x_i - r_i)!``;
    it is zero whenever some reactant count is below its stoichiometry.
    """
    counts = crs.counts(x)
    a = reaction.rate
    for name, c in reaction.source:
        n = counts[name]
        if n < c:
            return Fraction(0)
        for j in range(c):
            a *= n - j
        if crs.kinetics == COMBINATORIAL:
            for k in range(2, c + 1):
                a /= k
    return a


def enabled(crs: Crs, x: State) -> list[Reaction]:
    return [r for r in crs.reactions if propensity(crs, r, x) > 0]


def apply(crs: Crs, reaction: Reaction, x: State) -> State:
    if propensity(crs, reaction, x) <= 0:
        raise NotEnabled(f"reaction {reaction} cannot fire in state {crs.counts(x)}")
    y = list(x)
    for name, d in reaction.net_change().items():
        y[crs.index(name)] += d
    return tuple(y)


class NroCheck(NamedTuple):
    """Outcome of :func:`is_nro`; truthy iff the network is NRO."""

    ok: bool
    species: str | None = None
    reaction: Reaction | None = None

    def __bool__(self):
        return self.ok


def is_nro(crs: Crs) -> NroCheck:
    """Check that no output species is consumed as a reactant anywhere."""
    outputs = set(crs.outputs)
    for r in crs.reactions:
        for name, _ in r.source:
            if name in outputs:
                return NroCheck(False, name, r)
    return NroCheck(True)


def _rename_complex(cplx, mapping):
    return tuple((mapping.get(n, n), c) for n, c in cplx)


def _relabel(crs: Crs, mapping: Mapping[str, str]) -> Crs:
    return replace(
        crs,
        species=tuple(mapping.get(n, n) for n in crs.species),
        reactions=tuple(
            Reaction(_rename_complex(r.source, mapping), _rename_complex(r.product, mapping), r.rate)
            for r in crs.reactions
        ),
        initial={mapping.get(n, n): c for n, c in crs.initial.items()},
        outputs=tuple(mapping.get(n, n) for n in crs.outputs),
    )


def rename(crs: Crs, fresh: str, old: str) -> Crs:
    """Replace species ``old`` by the new name ``fresh`` everywhere."""
    if old not in crs.species:
        raise UnknownSpecies(old)
    if fresh in crs.species:
        raise NotFresh(f"species {fresh!r} already exists")
    return _relabel(crs, {old: fresh})


def prefix(crs: Crs, tag: str) -> Crs:
    """Prefix every species name with ``tag``; injective for a fixed tag."""
    return _relabel(crs, {n: tag + n for n in crs.species})


def marginal(dist: Mapping[State, Fraction], position: int) -> Pmf:
    """Distribution of the count at ``position`` under a state distribution."""
    total = sum(dist.values(), Fraction(0))
    if total != 1:
        raise NotNormalized(f"state distribution sums to {total}")
    table: dict[int, Fraction] = {}
    for x, p in dist.items():
        table[x[position]] = table.get(x[position], Fraction(0)) + p
    return Pmf(table)


# --- text format -----------------------------------------------------------

_TERM_RE = re.compile(r"^(\d+)?\s*([A-Za-z_][A-Za-z0-9_'.]*)$")


def _parse_complex(text: str, lineno) -> tuple[tuple[str, int], ...]:
    text = text.strip()
    if text in ("0", "∅", ""):
        return ()
    terms = []
    for part in text.split("+"):
        m = _TERM_RE.match(part.strip())
        if not m:
            raise FormulaSyntaxError(f"malformed complex term {part.strip()!r}", lineno, 1)
        terms.append((m.group(2), int(m.group(1) or 1)))
    return tuple(terms)


def _format_complex(cplx) -> str:
    if not cplx:
        return "0"
    return " + ".join(n if c == 1 else f"{c} {n}" for n, c in cplx)


def parse_crn(text: str) -> Crs:
    """Parse the line-oriented network format.

    Directives are ``species``, ``init``, ``rxn``, ``output`` and
    ``kinetics``; ``#`` starts a comment, and comment lines of the form
    ``#@ key: value`` are collected into ``Crs.meta``.
    """
    species: list[str] = []
    initial: dict[str, int] = {}
    reactions: list[Reaction] = []
    outputs: list[str] = []
    meta: dict[str, str] = {}
    kinetics = FALLING
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("#@"):
            key, _, value = stripped[2:].partition(":")
            meta[key.strip()] = value.strip()
            continue
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        if keyword == "species":
            for name in rest.split(","):
                name = name.strip()
                if not _NAME_RE.match(name):
                    raise FormulaSyntaxError(f"invalid species name {name!r}", lineno, 1)
                if name in species:
                    raise FormulaSyntaxError(f"species {name!r} declared twice", lineno, 1)
                species.append(name)
        elif keyword == "init":
            name, eq, count = rest.partition("=")
            if not eq or not count.strip().isdigit():
                raise FormulaSyntaxError("expected 'init NAME = COUNT'", lineno, 1)
            initial[name.strip()] = int(count)
        elif keyword == "rxn":
            body, at, rate_text = rest.partition("@")
            if "->" not in body:
                raise FormulaSyntaxError("reaction needs '->'", lineno, 1)
            lhs, rhs = body.split("->", 1)
            try:
                rate = parse_rational(rate_text.strip()) if at else Fraction(1)
            except ValueError as exc:
                raise FormulaSyntaxError(str(exc), lineno, 1) from None
            reactions.append(Reaction(_parse_complex(lhs, lineno), _parse_complex(rhs, lineno), rate))
        elif keyword == "output":
            outputs.extend(n.strip() for n in rest.split(",") if n.strip())
        elif keyword == "kinetics":
            kinetics = rest
        else:
            raise FormulaSyntaxError(f"unknown directive {keyword!r}", lineno, 1)
    composable = meta.get("composable", "true") != "false"
    try:
        return Crs(tuple(species), tuple(reactions), initial, tuple(outputs), kinetics, composable, meta)
    except UnknownSpecies as exc:
        raise FormulaSyntaxError(f"undeclared species {exc.args[0]!r}") from None


def format_crn(crs: Crs) -> str:
    lines = [f"species {', '.join(crs.species)}"]
    if crs.kinetics != FALLING:
        lines.append(f"kinetics {crs.kinetics}")
    for name in crs.species:
        if crs.initial[name]:
            lines.append(f"init {name} = {crs.initial[name]}")
    for r in crs.reactions:
        lines.append(f"rxn {r}")
    if crs.outputs:
        lines.append(f"output {', '.join(crs.outputs)}")
    meta = dict(crs.meta)
    if not crs.composable:
        meta["composable"] = "false"
    for key, value in meta.items():
        lines.append(f"#@ {key}: {value}")
    return "\n".join(lines) + "\n"
