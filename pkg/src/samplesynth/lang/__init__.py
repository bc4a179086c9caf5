"""The sampler mini-language: typed ASTs, parsing, printing, and evaluation."""

from .ast import (
    BOOL,
    REAL,
    Const,
    Expr,
    If,
    Lambda,
    Let,
    PrimCall,
    CompoundCall,
    Recur,
    TypeTag,
    Value,
    Var,
    children,
    node_count,
    replace_at,
    subtree_at,
    value_type,
)
from .errors import (
    BudgetExceeded,
    EvalError,
    LangError,
    NumericError,
    ParseError,
    TypeCheckError,
)
from .evaluator import Env, EvalBudget, SampleSet, compile_program, evaluate, run_sampler
from .parser import parse, parse_program, to_text
from .primitives import ALIASES, PRIMITIVES, Primitive, primitive_names
from .typecheck import check_program

__all__ = [
    "ALIASES",
    "BOOL",
    "BudgetExceeded",
    "CompoundCall",
    "Const",
    "Env",
    "EvalBudget",
    "EvalError",
    "Expr",
    "If",
    "Lambda",
    "LangError",
    "Let",
    "NumericError",
    "PRIMITIVES",
    "ParseError",
    "PrimCall",
    "Primitive",
    "REAL",
    "Recur",
    "SampleSet",
    "TypeCheckError",
    "TypeTag",
    "Value",
    "Var",
    "check_program",
    "children",
    "compile_program",
    "evaluate",
    "node_count",
    "parse",
    "parse_program",
    "primitive_names",
    "replace_at",
    "run_sampler",
    "subtree_at",
    "to_text",
    "value_type",
]
