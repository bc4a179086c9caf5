"""Structural validity checks for expression trees built in code.

The parser produces well-typed trees by construction; this validator covers
trees assembled programmatically (grammar sampling, subtree surgery, tests).
"""

from __future__ import annotations

from .ast import BOOL, REAL, Const, Expr, If, Lambda, Let, PrimCall, CompoundCall, Recur, Var
from .errors import TypeCheckError
from .primitives import PRIMITIVES


def check_program(program: Lambda) -> None:
    """Raise :class:`TypeCheckError` if ``program`` is not a well-typed lambda."""
    if not isinstance(program, Lambda):
        raise TypeCheckError("program must be a lambda")
    _check_lambda(program)


def _check_lambda(lam: Lambda) -> None:
    names = [n for n, _ in lam.params]
    if len(set(names)) != len(names):
        raise TypeCheckError("duplicate parameter names")
    env = dict(lam.params)
    _check(lam.body, lam.ret, env, lam)


def _check(e: Expr, expected: str, env: dict, lam: Lambda) -> None:
    if e.type != expected:
        raise TypeCheckError(f"expected {expected}, found {e.type} at {type(e).__name__}")
    if isinstance(e, Var):
        if env.get(e.name) != e.type:
            raise TypeCheckError(f"variable {e.name!r} unbound or wrongly typed")
    elif isinstance(e, Const):
        pass
    elif isinstance(e, PrimCall):
        prim = PRIMITIVES.get(e.op)
        if prim is None:
            raise TypeCheckError(f"unknown primitive {e.op!r}")
        if len(e.args) != len(prim.arg_types):
            raise TypeCheckError(f"{e.op} arity mismatch")
        for a, t in zip(e.args, prim.arg_types):
            _check(a, t, env, lam)
    elif isinstance(e, CompoundCall):
        if len(e.args) != len(e.proc.params):
            raise TypeCheckError("compound call arity mismatch")
        for a, (_, t) in zip(e.args, e.proc.params):
            _check(a, t, env, lam)
        _check_lambda(e.proc)
    elif isinstance(e, Let):
        _check(e.value, REAL, env, lam)
        _check(e.body, expected, {**env, e.name: REAL}, lam)
    elif isinstance(e, If):
        _check(e.cond, BOOL, env, lam)
        _check(e.then, expected, env, lam)
        _check(e.orelse, expected, env, lam)
    elif isinstance(e, Recur):
        if e.type != lam.ret:
            raise TypeCheckError("recur type does not match enclosing lambda return type")
        if len(e.args) != len(lam.params):
            raise TypeCheckError("recur arity mismatch")
        for a, (_, t) in zip(e.args, lam.params):
            _check(a, t, env, lam)
    elif isinstance(e, Lambda):
        raise TypeCheckError("lambda may not appear as a plain expression")
    else:
        raise TypeCheckError(f"unknown node {type(e).__name__}")
