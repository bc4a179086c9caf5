"""Budgeted evaluation of sampler programs.

Programs are compiled once into plain Python functions (one ``def`` per
lambda) and then called many times; this is what makes Metropolis-Hastings
runs with hundreds of evaluations per proposal affordable. Compilation
preserves the semantics of a naive tree walk:

* every expression node costs one step of the ``max_steps`` budget, charged
  in batches at function and branch entries (the raise may therefore trail
  the exact exhaustion point by at most one straight-line block);
* each compound call or ``recur`` increases the recursion depth, checked on
  entry against ``max_recursion``;
* argument evaluation is left to right.

``BudgetExceeded`` and ``NumericError`` escape to the caller, which treats
them as "this program is maximally penalized".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

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
    Var,
)
from .errors import BudgetExceeded, EvalError, NumericError, TypeCheckError
from .primitives import PRIMITIVES


@dataclass(frozen=True)
class EvalBudget:
    max_steps: int = 10_000
    max_recursion: int = 50

    def __post_init__(self):
        if self.max_steps < 1 or self.max_recursion < 1:
            raise ValueError("budget limits must be positive")


class Env:
    """Lexically scoped bindings with a shared fresh-name counter."""

    __slots__ = ("bindings", "parent", "_counter")

    def __init__(self, bindings=None, parent: "Env | None" = None):
        self.bindings = dict(bindings or {})
        self.parent = parent
        self._counter = parent._counter if parent is not None else [0]

    def lookup(self, name: str):
        env = self
        while env is not None:
            if name in env.bindings:
                return env.bindings[name]
            env = env.parent
        raise KeyError(name)

    def extended(self, name: str, value) -> "Env":
        return Env({name: value}, parent=self)

    def flatten(self) -> dict:
        chain = []
        env = self
        while env is not None:
            chain.append(env.bindings)
            env = env.parent
        merged: dict = {}
        for bindings in reversed(chain):
            merged.update(bindings)
        return merged

    def gensym(self, prefix: str = "sym") -> str:
        taken = set(self.flatten())
        while True:
            name = f"{prefix}{self._counter[0]}"
            self._counter[0] += 1
            if name not in taken:
                return name


@dataclass(frozen=True)
class SampleSet:
    """A batch of values from repeated evaluation of one program.

    ``param_vector`` records the arguments the program was applied to (empty
    for parameterless programs).
    """

    values: np.ndarray
    param_vector: tuple = ()

    def __len__(self):
        return len(self.values)


# ---------------------------------------------------------------------------
# code generation


def _raise_steps():
    raise BudgetExceeded("node-visit budget exhausted")


def _raise_recursion():
    raise BudgetExceeded("recursion depth budget exhausted")


_PRIM_GLOBALS = {}
_PRIM_NAME = {}
for _i, (_op, _p) in enumerate(sorted(PRIMITIVES.items())):
    _g = f"_g{_i}"
    _PRIM_GLOBAL = _g
    _PRIM_GLOBALS[_g] = _p.fn
    _PRIM_NAME[_op] = _g

_BASE_GLOBALS = dict(_PRIM_GLOBALS)
_BASE_GLOBALS["_be_steps"] = _raise_steps
_BASE_GLOBALS["_be_rec"] = _raise_recursion


def _unconditional_cost(e: Expr) -> int:
    if isinstance(e, (Var, Const)):
        return 1
    if isinstance(e, (PrimCall, CompoundCall, Recur)):
        args = e.args
        return 1 + sum(_unconditional_cost(a) for a in args)
    if isinstance(e, Let):
        return 1 + _unconditional_cost(e.value) + _unconditional_cost(e.body)
    if isinstance(e, If):
        return 1 + _unconditional_cost(e.cond)
    raise TypeError(f"cannot evaluate {type(e).__name__} here")


def _has_stmt(e: Expr) -> bool:
    if isinstance(e, (Let, If)):
        return True
    if isinstance(e, (PrimCall, CompoundCall, Recur)):
        return any(_has_stmt(a) for a in e.args)
    return False


class _Codegen:
    def __init__(self, max_recursion: int):
        self.max_recursion = max_recursion
        self.lines: list[str] = []
        self.fn_names: dict[int, str] = {}
        self.n_fns = 0
        self.n_tmp = 0

    def fn_for(self, lam: Lambda) -> str:
        name = self.fn_names.get(id(lam))
        if name is not None:
            return name
        name = f"_f{self.n_fns}"
        self.n_fns += 1
        self.fn_names[id(lam)] = name
        self.emit_function(name, lam)
        return name

    def emit_function(self, name: str, lam: Lambda) -> None:
        locals_map = {p: f"_p{i}" for i, (p, _) in enumerate(lam.params)}
        params = ", ".join(locals_map[p] for p, _ in lam.params)
        sig = f"def {name}(_c, _d, _rng{', ' + params if params else ''}):"
        body_lines: list[str] = []
        entry_cost = 1 + _unconditional_cost(lam.body)
        body_lines.append(f"    if _d > {self.max_recursion}: _be_rec()")
        body_lines.append(f"    _c[0] -= {entry_cost}")
        body_lines.append("    if _c[0] < 0: _be_steps()")
        expr = self.emit(lam.body, locals_map, name, body_lines, 1)
        body_lines.append(f"    return {expr}")
        self.lines.append(sig)
        self.lines.extend(body_lines)
        self.lines.append("")

    def tmp(self) -> str:
        self.n_tmp += 1
        return f"_t{self.n_tmp}"

    def emit(self, e: Expr, names: dict, fn: str, out: list[str], depth: int) -> str:
        ind = "    " * depth
        if isinstance(e, Var):
            return names[e.name]
        if isinstance(e, Const):
            if isinstance(e.value, bool):
                return "True" if e.value else "False"
            return repr(e.value)
        if isinstance(e, (PrimCall, CompoundCall, Recur)):
            parts = []
            materialize = sum(_has_stmt(a) for a in e.args) > 0 and len(e.args) > 1
            for a in e.args:
                s = self.emit(a, names, fn, out, depth)
                if materialize:
                    t = self.tmp()
                    out.append(f"{ind}{t} = {s}")
                    s = t
                parts.append(s)
            if isinstance(e, PrimCall):
                prim = PRIMITIVES[e.op]
                head = _PRIM_NAME[e.op]
                if prim.stochastic:
                    parts.insert(0, "_rng")
                return f"{head}({', '.join(parts)})"
            callee = fn if isinstance(e, Recur) else self.fn_for(e.proc)
            return f"{callee}(_c, _d + 1, _rng{', ' + ', '.join(parts) if parts else ''})"
        if isinstance(e, Let):
            value = self.emit(e.value, names, fn, out, depth)
            local = self.tmp()
            out.append(f"{ind}{local} = {value}")
            return self.emit(e.body, {**names, e.name: local}, fn, out, depth)
        if isinstance(e, If):
            cond = self.emit(e.cond, names, fn, out, depth)
            t = self.tmp()
            out.append(f"{ind}if {cond}:")
            for branch, key in ((e.then, "if"), (e.orelse, "else")):
                if key == "else":
                    out.append(f"{ind}else:")
                bind = "    " * (depth + 1)
                out.append(f"{bind}_c[0] -= {_unconditional_cost(branch)}")
                out.append(f"{bind}if _c[0] < 0: _be_steps()")
                expr = self.emit(branch, names, fn, out, depth + 1)
                out.append(f"{bind}{t} = {expr}")
            return t
        raise TypeError(f"cannot compile {type(e).__name__}")


@lru_cache(maxsize=512)
def _compiled(lam: Lambda, max_recursion: int):
    gen = _Codegen(max_recursion)
    entry = gen.fn_for(lam)
    source = "\n".join(gen.lines)
    namespace = dict(_BASE_GLOBALS)
    exec(compile(source, "<samplesynth>", "exec"), namespace)  # noqa: S102
    return namespace[entry]


def compile_program(lam: Lambda, budget: EvalBudget):
    """Compile ``lam`` and return ``call(rng, *args)`` applying it under ``budget``."""
    fn = _compiled(lam, budget.max_recursion)
    max_steps = budget.max_steps

    def call(rng, *args):
        return fn([max_steps], 0, rng, *args)

    return call


# ---------------------------------------------------------------------------
# public evaluation entry points


def _free_names(e: Expr, bound: frozenset) -> set:
    if isinstance(e, Var):
        return set() if e.name in bound else {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, PrimCall) or isinstance(e, Recur):
        out: set = set()
        for a in e.args:
            out |= _free_names(a, bound)
        return out
    if isinstance(e, CompoundCall):
        out = set()
        for a in e.args:
            out |= _free_names(a, bound)
        return out | _free_names(e.proc.body, frozenset(n for n, _ in e.proc.params))
    if isinstance(e, Let):
        return _free_names(e.value, bound) | _free_names(e.body, bound | {e.name})
    if isinstance(e, If):
        return _free_names(e.cond, bound) | _free_names(e.then, bound) | _free_names(e.orelse, bound)
    if isinstance(e, Lambda):
        return _free_names(e.body, frozenset(n for n, _ in e.params))
    raise TypeError(f"not an expression: {e!r}")


def _has_free_recur(e: Expr) -> bool:
    if isinstance(e, Recur):
        return True
    if isinstance(e, (Lambda,)):
        return False  # recur inside binds to this lambda
    if isinstance(e, CompoundCall):
        return any(_has_free_recur(a) for a in e.args)
    if isinstance(e, PrimCall):
        return any(_has_free_recur(a) for a in e.args)
    if isinstance(e, Let):
        return _has_free_recur(e.value) or _has_free_recur(e.body)
    if isinstance(e, If):
        return _has_free_recur(e.cond) or _has_free_recur(e.then) or _has_free_recur(e.orelse)
    return False


def evaluate(expr: Expr, env: Env | dict | None, rng, budget: EvalBudget = EvalBudget()):
    """Evaluate one expression under ``env``. Deterministic given the rng state."""
    if isinstance(expr, Lambda):
        raise TypeCheckError("evaluate expects an expression, not a lambda; apply it via run_sampler")
    if _has_free_recur(expr):
        raise TypeCheckError("recur outside of a lambda body cannot be evaluated")
    bindings = env.flatten() if isinstance(env, Env) else dict(env or {})
    free = _free_names(expr, frozenset())
    missing = free - set(bindings)
    if missing:
        raise TypeCheckError(f"unbound variables: {sorted(missing)}")
    names = sorted(free)
    params = tuple((n, BOOL if isinstance(bindings[n], bool) else REAL) for n in names)
    wrapper = Lambda(params, expr.type, expr)
    fn = _compiled(wrapper, budget.max_recursion)
    return fn([budget.max_steps], 0, rng, *(bindings[n] for n in names))


def run_sampler(program: Lambda, args, count: int, rng, budget: EvalBudget = EvalBudget()) -> SampleSet:
    """Apply ``program`` to ``args`` ``count`` independent times.

    Fails fast: the first :class:`EvalError` is re-raised with the failing
    invocation index attached.
    """
    if not isinstance(program, Lambda):
        raise TypeCheckError("run_sampler expects a lambda program")
    if program.ret != REAL:
        raise TypeCheckError("sampler programs must return a real")
    if len(args) != len(program.params):
        raise TypeCheckError(f"program arity {len(program.params)} but {len(args)} arguments")
    if any(t != REAL for _, t in program.params):
        raise TypeCheckError("sampler program parameters must all be real")
    if count < 1:
        raise ValueError("count must be >= 1")
    fn = _compiled(program, budget.max_recursion)
    max_steps = budget.max_steps
    values = np.empty(count, dtype=np.float64)
    call_args = tuple(float(a) for a in args)
    try:
        for j in range(count):
            values[j] = fn([max_steps], 0, rng, *call_args)
    except EvalError as exc:
        exc.invocation = j
        exc.args = (f"{exc.args[0] if exc.args else exc!r} (invocation {j})",)
        raise
    return SampleSet(values=values, param_vector=call_args)
