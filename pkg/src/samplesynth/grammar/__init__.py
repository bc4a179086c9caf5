"""Generative prior over program text: sampling, scoring, regeneration."""

from .engine import (
    GenCtx,
    index_nodes,
    regenerate_subtree,
    sample_expr,
    sample_program,
    score_expr,
    score_program,
)
from .state import (
    ARITY_PMF,
    DEFAULT_COMMON_CONSTANTS,
    PRODUCTIONS,
    CrpStore,
    GrammarState,
    ProductionProbs,
    UnsupportedProgram,
    make_grammar_state,
    uniform_production_probs,
)

__all__ = [
    "ARITY_PMF",
    "CrpStore",
    "DEFAULT_COMMON_CONSTANTS",
    "GenCtx",
    "GrammarState",
    "PRODUCTIONS",
    "ProductionProbs",
    "UnsupportedProgram",
    "index_nodes",
    "make_grammar_state",
    "regenerate_subtree",
    "sample_expr",
    "sample_program",
    "score_expr",
    "score_program",
    "uniform_production_probs",
]
