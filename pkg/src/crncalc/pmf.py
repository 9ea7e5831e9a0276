"""Exact probability mass functions over tuples of naturals.

Every probability is a :class:`fractions.Fraction` and the arithmetic
never touches floating point (only :func:`poisson_tail` rounds
high-precision values to rationals).  One-dimensional pmfs accept plain
integers as values and store them as 1-tuples internally.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Tuple

from mpmath import exp, factorial, mp, mpf

from .errors import (
    DimensionMismatch,
    DivisorZero,
    EpsilonOutOfRange,
    InvalidPmf,
    ProbabilityOutOfRange,
)
from .rationals import as_fraction, format_rational, parse_rational

__all__ = [
    "Pmf",
    "TruncationResult",
    "point_mass",
    "pmf_sum",
    "pmf_min",
    "pmf_mul_nat",
    "pmf_div_nat",
    "pmf_scale_rat",
    "pmf_convex",
    "l1_distance",
    "ratio_closeness",
    "ratio_closeness_literal",
    "truncate",
    "geometric_tail",
    "poisson_tail",
    "parse_pmf",
    "format_pmf",
]

Point = Tuple[int, ...]


def _as_point(value, dim=None) -> Point:
    point = (value,) if isinstance(value, int) else tuple(value)
    for c in point:
        if isinstance(c, bool) or not isinstance(c, int) or c < 0:
            raise InvalidPmf(f"support point {value!r} is not a tuple of naturals")
    if dim is not None and len(point) != dim:
        raise InvalidPmf(f"support point {value!r} does not have dimension {dim}")
    return point


class Pmf:
    """Immutable finite-support pmf with exact rational probabilities.

    >>> Pmf({3: Fraction(1, 6), 0: Fraction(5, 6)})[3]
    Fraction(1, 6)

    Zero-probability entries are dropped on construction, so two pmfs
    compare equal exactly when they describe the same distribution.
    """

    __slots__ = ("_dim", "_entries", "_hash")

    def __init__(self, entries: Mapping, dim: int | None = None):
        items = entries.items() if isinstance(entries, Mapping) else entries
        table: dict[Point, Fraction] = {}
        for value, prob in items:
            point = _as_point(value, dim)
            if dim is None:
                dim = len(point)
            if point in table:
                raise InvalidPmf(f"duplicate support point {point!r}")
            p = as_fraction(prob)
            if p < 0:
                raise InvalidPmf(f"negative probability {p} at {point!r}")
            if p:
                table[point] = p
        if dim is None or dim < 1:
            raise InvalidPmf("a pmf needs at least one support point")
        total = sum(table.values(), Fraction(0))
        if total != 1:
            raise InvalidPmf(f"probabilities sum to {total}, not 1")
        self._dim = dim
        self._entries = dict(sorted(table.items()))
        self._hash = None

    @property
    def dim(self) -> int:
        return self._dim

    def __getitem__(self, value) -> Fraction:
        return self._entries.get(_as_point(value), Fraction(0))

    def __iter__(self) -> Iterator[Point]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return self._entries.items()

    def support(self) -> list[Point]:
        return list(self._entries)

    def values(self) -> list[int]:
        """Support of a one-dimensional pmf as plain integers, ascending."""
        self._require_dim1()
        return [p[0] for p in self._entries]

    def scalar_items(self) -> list[tuple[int, Fraction]]:
        self._require_dim1()
        return [(p[0], q) for p, q in self._entries.items()]

    def _require_dim1(self):
        if self._dim != 1:
            raise DimensionMismatch(f"operation needs a 1-dimensional pmf, got dim {self._dim}")

    def __eq__(self, other):
        if not isinstance(other, Pmf):
            return NotImplemented
        return self._dim == other._dim and self._entries == other._entries

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._dim, tuple(self._entries.items())))
        return self._hash

    def __repr__(self):
        if self._dim == 1:
            body = ", ".join(f"{p[0]}: {format_rational(q)}" for p, q in self._entries.items())
        else:
            body = ", ".join(f"{p}: {format_rational(q)}" for p, q in self._entries.items())
        return f"Pmf({{{body}}})"


def point_mass(value) -> Pmf:
    return Pmf({_as_point(value): Fraction(1)})


def _from_table(table: Mapping[Point, Fraction], dim: int) -> Pmf:
    return Pmf(table, dim=dim)


def _check_dim1(*pmfs: Pmf):
    for f in pmfs:
        if f.dim != 1:
            raise DimensionMismatch(f"operation is defined on 1-dimensional pmfs, got dim {f.dim}")


def _check_same_dim(a: Pmf, b: Pmf):
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions differ: {a.dim} vs {b.dim}")


def _pairwise(a: Pmf, b: Pmf, combine) -> Pmf:
    _check_dim1(a, b)
    table: dict[Point, Fraction] = defaultdict(Fraction)
    for (ya,), pa in a.items():
        for (yb,), pb in b.items():
            table[(combine(ya, yb),)] += pa * pb
    return _from_table(table, 1)


def pmf_sum(a: Pmf, b: Pmf) -> Pmf:
    """Distribution of the sum of independent draws (convolution)."""
    return _pairwise(a, b, lambda x, y: x + y)


def pmf_min(a: Pmf, b: Pmf) -> Pmf:
    return _pairwise(a, b, min)


def pmf_mul_nat(a: Pmf, k1: int) -> Pmf:
    """Move the mass at ``y`` to ``k1 * y``; ``k1 = 0`` collapses to ``{0: 1}``."""
    _check_dim1(a)
    if k1 < 0:
        raise ValueError("multiplier must be a natural number")
    if k1 == 0:
        return point_mass(0)
    return _from_table({(y * k1,): p for (y,), p in a.items()}, 1)


def pmf_div_nat(a: Pmf, k2: int) -> Pmf:
    _check_dim1(a)
    if k2 == 0:
        raise DivisorZero("cannot divide a pmf by zero")
    if k2 < 0:
        raise ValueError("divisor must be a positive natural number")
    table: dict[Point, Fraction] = defaultdict(Fraction)
    for (y,), p in a.items():
        table[(y // k2,)] += p
    return _from_table(table, 1)


def pmf_scale_rat(a: Pmf, k) -> Pmf:
    """Scale by a nonnegative rational ``k1/k2``: multiply, then floor-divide."""
    k = as_fraction(k)
    if k < 0:
        raise ValueError("scale factor must be nonnegative")
    return pmf_div_nat(pmf_mul_nat(a, k.numerator), k.denominator)


def pmf_convex(a: Pmf, b: Pmf, p) -> Pmf:
    """Mixture ``p*a + (1-p)*b``."""
    _check_same_dim(a, b)
    p = as_fraction(p)
    if not 0 <= p <= 1:
        raise ProbabilityOutOfRange(f"mixture weight {p} is outside [0, 1]")
    table: dict[Point, Fraction] = defaultdict(Fraction)
    for y, q in a.items():
        table[y] += p * q
    for y, q in b.items():
        table[y] += (1 - p) * q
    return _from_table(table, a.dim)


def l1_distance(a: Pmf, b: Pmf) -> Fraction:
    _check_same_dim(a, b)
    points = set(a) | set(b)
    return sum((abs(a[y] - b[y]) for y in points), Fraction(0))


def _pointwise_ratios(a: Pmf, b: Pmf) -> list[Fraction]:
    _check_same_dim(a, b)
    ratios = []
    for y in set(a) | set(b):
        pa, pb = a[y], b[y]
        # at least one side is positive on the union of supports
        if pa == 0 or pb == 0:
            ratios.append(Fraction(0))
        else:
            ratios.append(min(pa / pb, pb / pa))
    return ratios


def ratio_closeness(a: Pmf, b: Pmf) -> Fraction:
    """Worst pointwise ratio ``min(a/b, b/a)`` over the union of supports.

    Equals 1 exactly when ``a == b`` and 0 when some point carries mass
    in only one of the two pmfs.
    """
    return min(_pointwise_ratios(a, b))


def ratio_closeness_literal(a: Pmf, b: Pmf) -> Fraction:
    """Best pointwise ratio (max over points instead of min).

    Kept for comparison with the max-over-points reading of the
    multiplicative error measure; a single agreeing point makes it 1.
    """
    return max(_pointwise_ratios(a, b))


@dataclass(frozen=True)
class TruncationResult:
    """Finite prefix of a distribution together with the mass it drops.

    ``pmf`` is the kept part and is deliberately *not* renormalized, so it
    sums to ``1 - mass_lost``.  Use :meth:`renormalized` or
    :meth:`with_residual` to obtain a proper :class:`Pmf`.
    """

    pmf: Mapping[int, Fraction]
    mass_lost: Fraction
    kept_support: tuple[int, ...]

    def renormalized(self) -> Pmf:
        scale = 1 - self.mass_lost
        return Pmf({y: p / scale for y, p in self.pmf.items()})

    def with_residual(self, value: int = 0) -> Pmf:
        """Pmf with the lost mass parked on ``value``."""
        table = dict(self.pmf)
        table[value] = table.get(value, Fraction(0)) + self.mass_lost
        return Pmf(table)


def truncate(source, epsilon) -> TruncationResult:
    """Keep the shortest prefix of ``source`` whose dropped tail is below ``epsilon``.

    ``source`` is either a finite :class:`Pmf` (returned whole) or an
    iterable of ``(value, probability)`` pairs describing a distribution
    of total mass 1, such as :func:`geometric_tail`.
    """
    epsilon = as_fraction(epsilon)
    if not 0 < epsilon < 1:
        raise EpsilonOutOfRange(f"epsilon must lie strictly between 0 and 1, got {epsilon}")
    if isinstance(source, Pmf):
        items = dict(source.scalar_items())
        return TruncationResult(items, Fraction(0), tuple(items))
    kept: dict[int, Fraction] = {}
    remaining = Fraction(1)
    for value, prob in source:
        prob = as_fraction(prob)
        if value in kept:
            raise InvalidPmf(f"value {value} repeated in tail sequence")
        if prob:
            kept[value] = prob
        remaining -= prob
        if remaining < epsilon:
            break
    else:
        if remaining >= epsilon:
            raise InvalidPmf(f"sequence ended with mass {remaining} still unaccounted for")
    return TruncationResult(kept, max(remaining, Fraction(0)), tuple(kept))


def geometric_tail(p) -> Iterator[tuple[int, Fraction]]:
    """``P(Y = y) = p (1-p)^y`` for ``y = 0, 1, ...``, exactly."""
    p = as_fraction(p)
    if not 0 < p <= 1:
        raise ProbabilityOutOfRange(f"geometric parameter {p} outside (0, 1]")
    q = Fraction(1)
    for y in itertools.count():
        yield y, p * q
        q *= 1 - p


def poisson_tail(mean, digits: int = 40) -> Iterator[tuple[int, Fraction]]:
    """Poisson probabilities rounded to ``digits`` decimal places.

    The true values are irrational; the rounding error per term is far
    below any truncation threshold one would pass to :func:`truncate`.
    """
    mean = as_fraction(mean)
    with mp.workdps(digits + 10):
        lam = mpf(mean.numerator) / mean.denominator
        base = exp(-lam)
        scale = 10**digits
        for y in itertools.count():
            val = base * lam**y / factorial(y)
            yield y, Fraction(int(mp.nint(val * scale)), scale)


def parse_pmf(text: str) -> Pmf:
    """Parse ``value[,value...] : num/den`` lines (``#`` starts a comment)."""
    table: dict[Point, Fraction] = {}
    dim = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise InvalidPmf(f"line {lineno}: expected 'value : probability'")
        lhs, rhs = line.split(":", 1)
        try:
            point = tuple(int(v) for v in lhs.split(","))
            prob = parse_rational(rhs.strip())
        except ValueError as exc:
            raise InvalidPmf(f"line {lineno}: {exc}") from None
        if dim is None:
            dim = len(point)
        elif len(point) != dim:
            raise InvalidPmf(f"line {lineno}: expected {dim} components, got {len(point)}")
        if point in table:
            raise InvalidPmf(f"line {lineno}: duplicate value {lhs.strip()}")
        table[point] = prob
    if dim is None:
        raise InvalidPmf("empty pmf file")
    return Pmf(table, dim=dim)


def format_pmf(f: Pmf) -> str:
    """One ``value : num/den`` line per support point, largest value first."""
    lines = []
    for point, prob in sorted(f.items(), reverse=True):
        lhs = ",".join(str(c) for c in point)
        lines.append(f"{lhs} : {prob.numerator}/{prob.denominator}")
    return "\n".join(lines) + "\n"
