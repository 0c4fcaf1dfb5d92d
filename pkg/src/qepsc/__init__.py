"""qepsc: accuracy-parameter cost/error analysis for quantum programs.

Compiles a small quantum DSL into symbolic closed forms for total T-count
and total approximation error over the declared accuracy parameters, checks
them against a concrete counting oracle, and optimizes the parameter
assignment by simulated annealing.
"""

from . import anneal, errors, extract, ir, oracle, stdlib, summarize
from . import expr
from .parser import parse, parse_cexpr

__all__ = [
    "anneal",
    "errors",
    "expr",
    "extract",
    "ir",
    "oracle",
    "parse",
    "parse_cexpr",
    "stdlib",
    "summarize",
]

__version__ = "0.1.0"
