"""Primitive procedures of the mini-language.

All numeric primitives are total on finite inputs: the ``safe-`` variants clamp
arguments that would produce NaN or infinities (log of a nonpositive number is
0, square root of a negative is 0, division by zero is 0, a degenerate uniform
interval collapses to its endpoint). Anything that still escapes to a
non-finite float raises :class:`NumericError` at the offending primitive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import NumericError

REAL = "real"
BOOL = "bool"


@dataclass(frozen=True)
class Primitive:
    name: str
    arg_types: tuple[str, ...]
    ret: str
    stochastic: bool
    fn: Callable
    extended: bool = False  # only available when the extended stochastic set is enabled


def _finite(x: float) -> float:
    if math.isfinite(x):
        return x
    raise NumericError("primitive produced a non-finite value")


def p_add(a, b):
    return _finite(a + b)


def p_sub(a, b):
    return _finite(a - b)


def p_mul(a, b):
    return _finite(a * b)


def p_safe_div(a, b):
    if b == 0.0:
        return 0.0
    return _finite(a / b)


def p_exp(a):
    try:
        return math.exp(a)
    except OverflowError:
        raise NumericError("exp overflow") from None


def p_safe_log(a):
    if a <= 0.0:
        return 0.0
    return math.log(a)


def p_safe_sqrt(a):
    if a < 0.0:
        return 0.0
    return math.sqrt(a)


def p_cos(a):
    return math.cos(a)


def p_sin(a):
    return math.sin(a)


def p_inc(a):
    return _finite(a + 1.0)


def p_dec(a):
    return _finite(a - 1.0)


def p_lt(a, b):
    return a < b


def p_safe_uc(rng, a, b):
    if a > b:
        a, b = b, a
    if a == b:
        return a
    return _finite(rng.uniform(a, b))  # the interval width itself can overflow


_TINY = 1e-9


def p_safe_beta(rng, a, b):
    try:
        return rng.betavariate(max(a, _TINY), max(b, _TINY))
    except OverflowError:
        raise NumericError("beta draw overflow") from None


def p_safe_normal(rng, mean, std):
    std = abs(std)
    if std == 0.0:
        return mean
    return _finite(rng.normalvariate(mean, std))


def p_safe_gamma(rng, shape, scale):
    try:
        return _finite(rng.gammavariate(max(shape, _TINY), max(scale, _TINY)))
    except OverflowError:
        raise NumericError("gamma draw overflow") from None


PRIMITIVES: dict[str, Primitive] = {
    p.name: p
    for p in [
        Primitive("+", (REAL, REAL), REAL, False, p_add),
        Primitive("-", (REAL, REAL), REAL, False, p_sub),
        Primitive("*", (REAL, REAL), REAL, False, p_mul),
        Primitive("safe-div", (REAL, REAL), REAL, False, p_safe_div),
        Primitive("exp", (REAL,), REAL, False, p_exp),
        Primitive("safe-log", (REAL,), REAL, False, p_safe_log),
        Primitive("safe-sqrt", (REAL,), REAL, False, p_safe_sqrt),
        Primitive("cos", (REAL,), REAL, False, p_cos),
        Primitive("sin", (REAL,), REAL, False, p_sin),
        Primitive("inc", (REAL,), REAL, False, p_inc),
        Primitive("dec", (REAL,), REAL, False, p_dec),
        Primitive("<", (REAL, REAL), BOOL, False, p_lt),
        Primitive("safe-uc", (REAL, REAL), REAL, True, p_safe_uc),
        Primitive("safe-beta", (REAL, REAL), REAL, True, p_safe_beta, extended=True),
        Primitive("safe-normal", (REAL, REAL), REAL, True, p_safe_normal, extended=True),
        Primitive("safe-gamma", (REAL, REAL), REAL, True, p_safe_gamma, extended=True),
    ]
}

# Concrete-syntax aliases accepted by the parser. Human-written sampler code
# uses the unguarded names; they always mean the safe variants here.
ALIASES = {
    "uniform-continuous": "safe-uc",
    "log": "safe-log",
    "sqrt": "safe-sqrt",
    "beta": "safe-beta",
    "normal": "safe-normal",
    "gamma": "safe-gamma",
}


def primitive_names(extended: bool = False) -> list[str]:
    """Names available in a grammar, optionally with the extended stochastic set."""
    return [n for n, p in PRIMITIVES.items() if extended or not p.extended]
