"""Check that a compiled network realizes the distribution it was built for."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import analysis
from .calculus import Formula, evaluate
from .compiler import DEFAULT, CompileOptions, translate
from .crn import Crs
from .pmf import Pmf
from .rationals import as_fraction


@dataclass(frozen=True)
class Verdict:
    reference: Pmf
    observed: object
    l1: object
    ratio: object
    tolerance: Fraction
    states: int
    exact: bool

    @property
    def passed(self) -> bool:
        if isinstance(self.l1, Fraction):
            return self.l1 <= self.tolerance
        return self.l1 <= float(self.tolerance)


def check_network(crs: Crs, reference: Pmf, tol=0, cap: int = analysis.DEFAULT_CAP, method: str = "auto") -> Verdict:
    """Solve ``crs`` and compare its output law with ``reference``.

    A one-dimensional reference is compared with the first output's
    marginal, a multi-dimensional one with the joint law of all outputs.
    """
    if reference.dim > 1:
        result = analysis.output_distribution(crs, None, cap, method)
        observed = result.joint()
    else:
        result = analysis.output_distribution(crs, crs.outputs[:1], cap, method)
        observed = result.marginal(crs.outputs[0])
    cmp = analysis.compare(reference, observed)
    return Verdict(reference, observed, cmp.l1, cmp.ratio, as_fraction(tol), result.states, result.exact)


def verify_formula(f: Formula, env=None, tol=0, options: CompileOptions = DEFAULT,
                   cap: int = analysis.DEFAULT_CAP) -> Verdict:
    """Translate ``f``, solve the network and compare against the exact semantics."""
    reference = evaluate(f, env or {})
    return check_network(translate(f, env, options), reference, tol, cap)
