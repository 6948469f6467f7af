from .algebra import Poly, Verdict, algebraic_equivalence, canonical_form, to_poly
from .expr import Expr, parse_expr, render
from .score import SymbolicScore, sc_symbolic
from .ted import sort_commutative, tree_edit_distance, tree_similarity

__all__ = [
    "Expr",
    "Poly",
    "SymbolicScore",
    "Verdict",
    "algebraic_equivalence",
    "canonical_form",
    "parse_expr",
    "render",
    "sc_symbolic",
    "sort_commutative",
    "to_poly",
    "tree_edit_distance",
    "tree_similarity",
]
