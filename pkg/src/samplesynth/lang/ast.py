"""Typed abstract syntax trees for sampler programs.

Expressions are immutable (frozen dataclasses), so they hash and compare
structurally, can be shared freely across threads, and can serve as keys in
the grammar's reuse stores. A program is a :class:`Lambda`; lambdas otherwise
appear only in the operator position of a :class:`CompoundCall`.

There are two value types, ``real`` and ``bool``. A lambda node's ``type`` is
its return type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .primitives import BOOL, PRIMITIVES, REAL

TypeTag = str  # REAL or BOOL
Value = Union[float, bool]


def value_type(v: Value) -> TypeTag:
    return BOOL if isinstance(v, bool) else REAL


@dataclass(frozen=True)
class Var:
    name: str
    type: TypeTag


@dataclass(frozen=True)
class Const:
    value: Value

    def __post_init__(self):
        if not isinstance(self.value, bool) and not math.isfinite(self.value):
            raise ValueError("constants must be finite")

    @property
    def type(self) -> TypeTag:
        return value_type(self.value)


@dataclass(frozen=True)
class PrimCall:
    op: str
    args: tuple

    @property
    def type(self) -> TypeTag:
        return PRIMITIVES[self.op].ret


@dataclass(frozen=True)
class Lambda:
    params: tuple  # of (name, TypeTag)
    ret: TypeTag
    body: "Expr"

    @property
    def type(self) -> TypeTag:
        return self.ret


@dataclass(frozen=True)
class CompoundCall:
    proc: Lambda
    args: tuple

    @property
    def type(self) -> TypeTag:
        return self.proc.ret


@dataclass(frozen=True)
class Let:
    name: str  # bound value is always real-typed
    value: "Expr"
    body: "Expr"

    @property
    def type(self) -> TypeTag:
        return self.body.type


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"

    @property
    def type(self) -> TypeTag:
        return self.then.type


@dataclass(frozen=True)
class Recur:
    args: tuple
    type: TypeTag  # return type of the enclosing lambda


Expr = Union[Var, Const, PrimCall, Lambda, CompoundCall, Let, If, Recur]


def children(e: Expr) -> tuple:
    """Child expressions in canonical (generation) order.

    For a compound call the procedure body precedes the arguments, matching
    the order in which the grammar generates them.
    """
    if isinstance(e, (Var, Const)):
        return ()
    if isinstance(e, PrimCall):
        return e.args
    if isinstance(e, Lambda):
        return (e.body,)
    if isinstance(e, CompoundCall):
        return (e.proc.body,) + e.args
    if isinstance(e, Let):
        return (e.value, e.body)
    if isinstance(e, If):
        return (e.cond, e.then, e.orelse)
    if isinstance(e, Recur):
        return e.args
    raise TypeError(f"not an expression: {e!r}")


def replace_child(e: Expr, slot: int, new: Expr) -> Expr:
    """Rebuild ``e`` with the ``slot``-th child (in :func:`children` order) replaced."""
    if isinstance(e, PrimCall):
        args = list(e.args)
        args[slot] = new
        return PrimCall(e.op, tuple(args))
    if isinstance(e, Lambda):
        return Lambda(e.params, e.ret, new)
    if isinstance(e, CompoundCall):
        if slot == 0:
            return CompoundCall(Lambda(e.proc.params, e.proc.ret, new), e.args)
        args = list(e.args)
        args[slot - 1] = new
        return CompoundCall(e.proc, tuple(args))
    if isinstance(e, Let):
        return Let(e.name, new if slot == 0 else e.value, new if slot == 1 else e.body)
    if isinstance(e, If):
        parts = [e.cond, e.then, e.orelse]
        parts[slot] = new
        return If(*parts)
    if isinstance(e, Recur):
        args = list(e.args)
        args[slot] = new
        return Recur(tuple(args), e.type)
    raise TypeError(f"cannot replace a child of {e!r}")


def replace_at(root: Expr, path: tuple[int, ...], new: Expr) -> Expr:
    if not path:
        return new
    slot = path[0]
    child = children(root)[slot]
    return replace_child(root, slot, replace_at(child, path[1:], new))


def subtree_at(root: Expr, path: tuple[int, ...]) -> Expr:
    for slot in path:
        root = children(root)[slot]
    return root


def node_count(e: Expr) -> int:
    """Number of expression nodes, counting compound-procedure bodies."""
    return 1 + sum(node_count(c) for c in children(e))
