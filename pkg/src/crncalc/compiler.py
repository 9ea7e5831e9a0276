"""Compilation of distributions and formulas into reaction systems.

Every network returned here except the three special-purpose ones is
non-reacting-output (NRO): output species are never consumed, so their
final counts are well defined and the networks compose.

Naming: ``L_z`` is the leader (count 1) whose single reaction picks a
branch, ``L_out`` is the output.  Composite operators prefix the species
of their left and right operands with ``l.`` and ``r.`` (``i.`` for unary
operators), which keeps operand names disjoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import calculus as C
from .crn import Crs, Reaction, is_nro, prefix, rename
from .errors import (
    DivisorZero,
    EmptySupport,
    NonPositiveRate,
    NonRepresentableCount,
    NotNro,
    OutputNotFound,
    ProbabilityOutOfRange,
    UnboundVariable,
)
from .pmf import Pmf, truncate
from .rationals import as_fraction, format_rational, lcm_of_denominators

__all__ = [
    "CompileOptions",
    "OUT",
    "compile_direct",
    "compile_direct_ratefree",
    "compile_joint",
    "compile_truncated",
    "special_poisson",
    "special_binomial",
    "special_uniform",
    "op_sum",
    "op_min",
    "op_mul",
    "op_div",
    "op_con",
    "op_cone",
    "translate",
]

OUT = "L_out"
LEADER = "L_z"


@dataclass(frozen=True)
class CompileOptions:
    """Knobs shared by the compilation entry points.

    ``rho`` is the ratio between the fast weight-computing reactions and
    the slow branch race in :func:`op_cone`.  ``cone_scale`` overrides the
    total molecule count used to represent a weight (it must be a
    multiple of the minimal one).
    """

    rate_free: bool = False
    rho: Fraction = Fraction(10**6)
    state_cap_hint: int = 10**6
    cone_scale: int | None = None

    def __post_init__(self):
        rho = as_fraction(self.rho)
        if rho < 1:
            raise ValueError(f"rate separation must be at least 1, got {rho}")
        object.__setattr__(self, "rho", rho)


DEFAULT = CompileOptions()


def _rx(source, product, rate=1) -> Reaction:
    return Reaction(tuple(source.items()) if isinstance(source, dict) else source,
                    tuple(product.items()) if isinstance(product, dict) else product, rate)


def _meta(**items) -> dict[str, str]:
    return {k: v if isinstance(v, str) else format_rational(v) if isinstance(v, Fraction) else str(v)
            for k, v in items.items()}


# --- direct constructions --------------------------------------------------


def _scalar_support(f: Pmf) -> list[tuple[int, Fraction]]:
    if f.dim != 1:
        raise ValueError("direct compilation needs a one-dimensional pmf; use compile_joint")
    items = f.scalar_items()
    if not items:
        raise EmptySupport("cannot compile an empty pmf")
    return items


def _direct(items, rates_as_counts: bool, sink: Fraction = Fraction(0)) -> Crs:
    branches = list(items)
    if sink:
        branches.append((None, sink))
    species = [LEADER]
    initial = {LEADER: 1}
    reactions = []
    scale = lcm_of_denominators(p for _, p in branches) if rates_as_counts else 1
    for i, (value, prob) in enumerate(branches, start=1):
        selector = f"L{i}_{i}" if value is not None else "L_sink"
        if rates_as_counts:
            aux = f"L_c{i}"
            species.append(aux)
            initial[aux] = int(prob * scale)
            reactions.append(_rx({LEADER: 1, aux: 1}, {selector: 1}))
        else:
            reactions.append(_rx({LEADER: 1}, {selector: 1}, prob))
        species.append(selector)
        if value is not None:
            holder = f"L{i}"
            species.append(holder)
            initial[holder] = value
            reactions.append(_rx({holder: 1, selector: 1}, {selector: 1, OUT: 1}))
    species.append(OUT)
    meta = _meta(leaders=LEADER)
    if rates_as_counts:
        meta["scale"] = str(scale)
    return Crs(tuple(species), tuple(reactions), initial, (OUT,), meta=meta)


def compile_direct(f: Pmf, options: CompileOptions = DEFAULT) -> Crs:
    """Leader-race network whose output ends distributed exactly as ``f``.

    For support point ``z_i`` the leader turns into selector ``Li_i`` at
    rate ``f(z_i)``; the selector then catalytically moves the ``z_i``
    molecules of ``Li`` into ``L_out``.
    """
    if options.rate_free:
        return compile_direct_ratefree(f)
    return _direct(_scalar_support(f), rates_as_counts=False)


def compile_direct_ratefree(f: Pmf) -> Crs:
    """Variant with all rates 1: branch weights become auxiliary counts ``L_ci``."""
    return _direct(_scalar_support(f), rates_as_counts=True)


def compile_joint(f: Pmf) -> Crs:
    """Network whose outputs ``L_out1..L_outm`` end jointly distributed as ``f``."""
    items = list(f.items())
    if not items:
        raise EmptySupport("cannot compile an empty pmf")
    outputs = [f"{OUT}{d}" for d in range(1, f.dim + 1)]
    species = [LEADER]
    initial = {LEADER: 1}
    reactions = []
    for i, (point, prob) in enumerate(items, start=1):
        selector = f"L_s{i}"
        species.append(selector)
        reactions.append(_rx({LEADER: 1}, {selector: 1}, prob))
        for d, (count, out) in enumerate(zip(point, outputs), start=1):
            holder = f"L{i}_{d}"
            species.append(holder)
            initial[holder] = count
            reactions.append(_rx({holder: 1, selector: 1}, {selector: 1, out: 1}))
    species.extend(outputs)
    return Crs(tuple(species), tuple(reactions), initial, tuple(outputs), meta=_meta(leaders=LEADER))


def compile_truncated(source, epsilon, options: CompileOptions = DEFAULT) -> tuple[Crs, Fraction]:
    """Compile the shortest prefix of ``source`` whose dropped tail is below ``epsilon``.

    The dropped mass is routed to an extra branch that ends in the
    non-output species ``L_sink``, so the output stays at 0 on that branch.
    Returns the network and the dropped mass.
    """
    kept = truncate(source, epsilon)
    if not kept.pmf:
        raise EmptySupport("no support point survives truncation")
    items = sorted(kept.pmf.items())
    crs = _direct(items, rates_as_counts=options.rate_free, sink=kept.mass_lost)
    meta = dict(crs.meta, mass_lost=format_rational(kept.mass_lost), epsilon=format_rational(as_fraction(epsilon)))
    return Crs(crs.species, crs.reactions, crs.initial, crs.outputs, meta=meta), kept.mass_lost


# --- special-purpose networks ----------------------------------------------


def _positive(*rates) -> list[Fraction]:
    out = []
    for r in rates:
        r = as_fraction(r)
        if r <= 0:
            raise NonPositiveRate(f"rate must be positive, got {r}")
        out.append(r)
    return out


def _split(K: int, split) -> tuple[int, int]:
    if K < 0:
        raise ValueError("molecule total must be a natural number")
    a, b = (K, 0) if split is None else split
    if a < 0 or b < 0 or a + b != K:
        raise ValueError(f"initial split {split} does not add up to {K}")
    return a, b


def special_poisson(k1, k2) -> Crs:
    """Birth-death network ``0 -> L`` (rate k1), ``L -> 0`` (rate k2); stationary law Poisson(k1/k2)."""
    k1, k2 = _positive(k1, k2)
    return Crs(
        ("L",),
        (_rx({}, {"L": 1}, k1), _rx({"L": 1}, {}, k2)),
        {},
        ("L",),
        composable=False,
        meta=_meta(kind="poisson"),
    )


def special_binomial(K: int, k1, k2, split=None) -> Crs:
    """Isomerization ``L1 <-> L2`` with ``K`` molecules; ``L1`` ends Binomial(K, k2/(k1+k2))."""
    k1, k2 = _positive(k1, k2)
    a, b = _split(K, split)
    return Crs(
        ("L1", "L2"),
        (_rx({"L1": 1}, {"L2": 1}, k1), _rx({"L2": 1}, {"L1": 1}, k2)),
        {"L1": a, "L2": b},
        ("L1", "L2"),
        composable=False,
        meta=_meta(kind="binomial", K=K),
    )


def special_uniform(K: int, k=1, split=None) -> Crs:
    """Isomerization plus direct competition; ``L1`` ends uniform on ``0..K``."""
    (k,) = _positive(k)
    a, b = _split(K, split)
    reactions = (
        _rx({"L1": 1}, {"L2": 1}, k),
        _rx({"L2": 1}, {"L1": 1}, k),
        _rx({"L1": 1, "L2": 1}, {"L1": 2}, k),
        _rx({"L1": 1, "L2": 1}, {"L2": 2}, k),
    )
    return Crs(("L1", "L2"), reactions, {"L1": a, "L2": b}, ("L1", "L2"), composable=False,
               meta=_meta(kind="uniform", K=K))


# --- operators on NRO systems ------------------------------------------------


def _check_operand(crs: Crs, output: str):
    if not crs.composable:
        raise NotNro("special-purpose networks cannot be composed")
    check = is_nro(crs)
    if not check:
        raise NotNro(f"output {check.species!r} is consumed by {check.reaction}")
    if output not in crs.outputs:
        raise OutputNotFound(output)


def _combine(parts: list[tuple[str, Crs]], extra_species, reactions, initial=None, meta=None) -> Crs:
    species: list[str] = []
    all_reactions: list[Reaction] = []
    init: dict[str, int] = {}
    leaders: list[str] = []
    for tag, crs in parts:
        tagged = prefix(crs, tag)
        species.extend(tagged.species)
        all_reactions.extend(tagged.reactions)
        init.update(tagged.initial)
        leaders.extend(tag + n for n in crs.meta.get("leaders", "").split(",") if n)
    species.extend(extra_species)
    all_reactions.extend(reactions)
    init.update(initial or {})
    meta = dict(meta or {})
    own = meta.pop("leaders", "")
    meta["leaders"] = ",".join([l for l in (own,) if l] + leaders)
    if not meta["leaders"]:
        del meta["leaders"]
    return Crs(tuple(species), tuple(all_reactions), init, (OUT,), meta=meta)


def _binary(c1: Crs, o1: str, c2: Crs, o2: str):
    _check_operand(c1, o1)
    _check_operand(c2, o2)
    return "l." + o1, "r." + o2


def op_sum(c1: Crs, o1: str, c2: Crs, o2: str) -> Crs:
    """Output counts the molecules of both operand outputs."""
    a, b = _binary(c1, o1, c2, o2)
    reactions = [_rx({a: 1}, {OUT: 1}), _rx({b: 1}, {OUT: 1})]
    return _combine([("l.", c1), ("r.", c2)], [OUT], reactions)


def op_min(c1: Crs, o1: str, c2: Crs, o2: str) -> Crs:
    """Output molecules are produced pairwise, one per molecule of each operand."""
    a, b = _binary(c1, o1, c2, o2)
    return _combine([("l.", c1), ("r.", c2)], [OUT], [_rx({a: 1, b: 1}, {OUT: 1})])


def op_mul(c: Crs, o: str, k1: int) -> Crs:
    """Each operand output molecule becomes ``k1`` output molecules."""
    if k1 < 0:
        raise ValueError("multiplier must be a natural number")
    _check_operand(c, o)
    product = {OUT: k1} if k1 else {}
    return _combine([("i.", c)], [OUT], [_rx({"i." + o: 1}, product)])


def op_div(c: Crs, o: str, k2: int) -> Crs:
    """Every ``k2`` operand output molecules become one output molecule."""
    if k2 < 1:
        raise DivisorZero("divisor must be a positive natural number")
    _check_operand(c, o)
    return _combine([("i.", c)], [OUT], [_rx({"i." + o: k2}, {OUT: 1})])


def _choice_tail(a: str, b: str, r1: str, r2: str) -> list[Reaction]:
    return [_rx({a: 1, r1: 1}, {r1: 1, OUT: 1}), _rx({b: 1, r2: 1}, {r2: 1, OUT: 1})]


def op_con(c1: Crs, o1: str, c2: Crs, o2: str, p, options: CompileOptions = DEFAULT) -> Crs:
    """Output follows operand 1 with probability ``p`` and operand 2 otherwise.

    The leader races into catalyst ``L_r1`` (rate ``p``) or ``L_r2`` (rate
    ``1 - p``); the winning catalyst then copies its operand's output.
    With ``rate_free`` the race is decided by auxiliary counts instead.
    """
    p = as_fraction(p)
    if not 0 <= p <= 1:
        raise ProbabilityOutOfRange(f"choice weight {p} outside [0, 1]")
    a, b = _binary(c1, o1, c2, o2)
    extra = [LEADER, "L_r1", "L_r2"]
    initial = {LEADER: 1}
    reactions = []
    if options.rate_free:
        scale = p.denominator
        for name, weight, target in (("L_w1", p, "L_r1"), ("L_w2", 1 - p, "L_r2")):
            extra.append(name)
            initial[name] = int(weight * scale)
            reactions.append(_rx({LEADER: 1, name: 1}, {target: 1}))
    else:
        if p:
            reactions.append(_rx({LEADER: 1}, {"L_r1": 1}, p))
        if p != 1:
            reactions.append(_rx({LEADER: 1}, {"L_r2": 1}, 1 - p))
    reactions.extend(_choice_tail(a, b, "L_r1", "L_r2"))
    extra.append(OUT)
    return _combine([("l.", c1), ("r.", c2)], extra, reactions, initial,
                    _meta(leaders=LEADER, weight=p))


def _safe_var(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in name)


def op_cone(c1: Crs, o1: str, c2: Crs, o2: str, weight: C.DExpr, env, options: CompileOptions = DEFAULT) -> Crs:
    """Choice whose weight depends on environment variables.

    With ``W`` the lcm of the weight coefficients' denominators and ``V``
    that of the environment values' denominators, the total ``S = W*V``
    represents probability 1.  Initially ``L_r1 = L_rt = S*p0``,
    ``L_r2 = S`` and ``L_ci = V*E(c_i)``.  Fast reactions (rate ``rho``)
    turn each ``L_ci`` into ``W*p_i`` copies of ``L_r1 + L_rt`` and cancel
    ``L_r2`` against ``L_rt``, leaving ``S*D`` and ``S*(1-D)``.  The slow
    race ``L_z + L_r1 -> L_11`` vs ``L_z + L_r2 -> L_22`` then picks a
    branch; the error from racing too early shrinks like ``1/rho``.
    """
    if not weight.terms:
        return op_con(c1, o1, c2, o2, weight.constant, options)
    values = {}
    for _, name in weight.terms:
        if name not in env:
            raise UnboundVariable(name)
        values[name] = as_fraction(env[name])
    a, b = _binary(c1, o1, c2, o2)
    kw = lcm_of_denominators([weight.constant] + [c for c, _ in weight.terms])
    kv = lcm_of_denominators(values.values())
    total = kw * kv
    if options.cone_scale is not None:
        total = options.cone_scale
        if total % kw:
            raise NonRepresentableCount(f"scale {total} is not a multiple of {kw}")
        kv = total // kw
    counts = {}
    for _, name in weight.terms:
        count = kv * values[name]
        if count.denominator != 1:
            raise NonRepresentableCount(f"{kv}*E({name}) = {count} is not a natural number")
        counts[name] = int(count)
    rho = options.rho
    extra = [LEADER, "L_r1", "L_r2", "L_rt", "L_11", "L_22"]
    start = int(total * weight.constant)
    initial = {LEADER: 1, "L_r1": start, "L_rt": start, "L_r2": total}
    reactions = [
        _rx({LEADER: 1, "L_r1": 1}, {"L_11": 1}),
        _rx({LEADER: 1, "L_r2": 1}, {"L_22": 1}),
    ]
    reactions.extend(_choice_tail(a, b, "L_11", "L_22"))
    for coef, name in weight.terms:
        species = f"L_c_{_safe_var(name)}"
        extra.append(species)
        initial[species] = counts[name]
        copies = int(kw * coef)
        product = {"L_r1": copies, "L_rt": copies} if copies else {}
        reactions.append(_rx({species: 1}, product, rho))
    reactions.append(_rx({"L_r2": 1, "L_rt": 1}, {}, rho))
    extra.append(OUT)
    return _combine([("l.", c1), ("r.", c2)], extra, reactions, initial,
                    _meta(leaders=LEADER, rho=rho, K=total, weight=str(weight)))


# --- translation of formulas -------------------------------------------------


def _base(count: int) -> Crs:
    return Crs((OUT,), (), {OUT: count}, (OUT,))


def translate(f: C.Formula, env=None, options: CompileOptions = DEFAULT) -> Crs:
    """NRO network whose output ``L_out`` realizes the formula ``f`` under ``env``.

    Sub-networks are built recursively; before being combined their
    output ``L_out`` is renamed to ``L_o1``/``L_o2`` (``L_o`` for unary
    operators).  Scaling by ``k1/k2`` multiplies by ``k1`` and then
    divides by ``k2``.
    """
    env = {} if env is None else env
    if isinstance(f, C.One):
        return _base(1)
    if isinstance(f, C.Zero):
        return _base(0)
    if isinstance(f, C.Scale):
        inner = rename(translate(f.body, env, options), "L_o", OUT)
        multiplied = rename(op_mul(inner, "L_o", f.factor.numerator), "L_o", OUT)
        return op_div(multiplied, "L_o", f.factor.denominator)
    left = rename(translate(f.left, env, options), "L_o1", OUT)
    right = rename(translate(f.right, env, options), "L_o2", OUT)
    if isinstance(f, C.Sum):
        return op_sum(left, "L_o1", right, "L_o2")
    if isinstance(f, C.Min):
        return op_min(left, "L_o1", right, "L_o2")
    if isinstance(f, C.Choice):
        if f.weight.terms:
            return op_cone(left, "L_o1", right, "L_o2", f.weight, env, options)
        return op_con(left, "L_o1", right, "L_o2", f.weight.constant, options)
    raise TypeError(f"not a formula: {f!r}")


def has_environment_choice(f: C.Formula) -> bool:
    """True when some choice weight mentions a variable, so compilation is approximate."""
    if isinstance(f, (C.One, C.Zero)):
        return False
    if isinstance(f, C.Scale):
        return has_environment_choice(f.body)
    if isinstance(f, C.Choice) and f.weight.terms:
        return True
    return has_environment_choice(f.left) or has_environment_choice(f.right)
