"""Exact distribution calculus compiled to chemical reaction networks."""

from .analysis import compare, explore, output_distribution, output_marginals, steady_state
from .calculus import Environment, encode_pmf, evaluate, format_formula, parse_formula
from .compiler import CompileOptions, compile_direct, compile_joint, compile_truncated, translate
from .crn import Crs, Reaction, format_crn, parse_crn
from .pmf import Pmf, format_pmf, parse_pmf

__version__ = "0.1.0"

__all__ = [
    "CompileOptions",
    "Crs",
    "Environment",
    "Pmf",
    "Reaction",
    "compare",
    "compile_direct",
    "compile_joint",
    "compile_truncated",
    "encode_pmf",
    "evaluate",
    "explore",
    "format_crn",
    "format_formula",
    "format_pmf",
    "output_distribution",
    "output_marginals",
    "parse_crn",
    "parse_formula",
    "parse_pmf",
    "steady_state",
    "translate",
]
