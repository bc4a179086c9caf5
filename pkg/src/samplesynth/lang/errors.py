"""Errors raised by the mini-language parser, type checker, and evaluator."""

from ..errors import SynthError


class LangError(SynthError):
    """Base class for mini-language errors."""


class ParseError(LangError):
    """Malformed program text: unbalanced parens, unknown head symbol, bad literal."""


class TypeCheckError(LangError):
    """Structurally valid text that does not type-check."""


class EvalError(LangError):
    """Base class for runtime evaluation failures. Catchable; callers treat it
    as "penalize this program maximally"."""

    invocation: int | None = None


class BudgetExceeded(EvalError):
    """Evaluation ran out of node-visit steps or recursion depth."""


class NumericError(EvalError):
    """A primitive produced a non-finite value."""
