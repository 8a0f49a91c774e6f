"""Exact and heuristic computation of small Ramsey-type numbers.

Variants: ER (ordered canonical), CR (unordered canonical: orderable G or
rainbow H), OR (ordered two-color) and R (classical two-color).
"""

from .graphs import NONEDGE, ColoredCompleteGraph, GraphPattern, Symmetry
from .problems import ProblemSpec, Variant, parse_problem

__all__ = ["NONEDGE", "ColoredCompleteGraph", "GraphPattern", "Symmetry", "ProblemSpec", "Variant", "parse_problem"]
