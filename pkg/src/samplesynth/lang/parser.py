"""Concrete syntax: s-expression reader, type inference, and canonical printer.

Syntax accepted::

    (lambda (par) body)                  ; parameter types inferred
    (lambda ((k real) (q bool)) body)    ; or annotated
    (let (x expr) body)                  ; x is bound to a real
    (if cond then else)
    (recur a b)                          ; call the nearest enclosing lambda
    ((lambda (v) body) arg)              ; inline compound-procedure call
    (+ 1.0 x), (safe-uc 0.0 1.0), ...    ; primitive calls
    true, false, 3.14, -2e-3             ; literals

Type inference is plain unification over the two-type universe; a type left
unconstrained defaults to ``real``. The canonical printer annotates every
lambda parameter and uses a single-space layout, so printed text equality
coincides with structural equality of the trees.
"""

from __future__ import annotations

import re

from .ast import BOOL, REAL, Const, Expr, If, Lambda, Let, PrimCall, CompoundCall, Recur, Var
from .errors import ParseError, TypeCheckError
from .primitives import ALIASES, PRIMITIVES

_TOKEN = re.compile(r"""\s*(?:(\()|(\))|([^\s()]+))""")
_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")

_RESERVED = {"lambda", "let", "if", "recur", "true", "false"}


def _tokenize(text: str) -> list[str]:
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        pos = m.end()
        tokens.append(m.group(m.lastindex))
    if text[pos:].strip():
        raise ParseError(f"unreadable input at offset {pos}")
    return tokens


def _read(tokens: list[str], i: int):
    if i >= len(tokens):
        raise ParseError("unexpected end of input (unbalanced parentheses?)")
    tok = tokens[i]
    if tok == "(":
        items = []
        i += 1
        while True:
            if i >= len(tokens):
                raise ParseError("unbalanced parentheses: missing ')'")
            if tokens[i] == ")":
                return items, i + 1
            item, i = _read(tokens, i)
            items.append(item)
    if tok == ")":
        raise ParseError("unbalanced parentheses: unexpected ')'")
    return tok, i + 1


# ---------------------------------------------------------------------------
# type cells (union-find)


class _Cell:
    __slots__ = ("tag", "parent")

    def __init__(self, tag=None):
        self.tag = tag
        self.parent = None

    def find(self) -> "_Cell":
        c = self
        while c.parent is not None:
            c = c.parent
        if c is not self:
            self.parent = c
        return c


def _unify(a: _Cell, b: _Cell):
    ra, rb = a.find(), b.find()
    if ra is rb:
        return
    if ra.tag is not None and rb.tag is not None:
        if ra.tag != rb.tag:
            raise TypeCheckError(f"type mismatch: {ra.tag} vs {rb.tag}")
        rb.parent = ra
    elif ra.tag is not None:
        rb.parent = ra
    else:
        ra.parent = rb


def _unify_tag(c: _Cell, tag: str):
    r = c.find()
    if r.tag is None:
        r.tag = tag
    elif r.tag != tag:
        raise TypeCheckError(f"type mismatch: expected {tag}, found {r.tag}")


def _resolved(c: _Cell) -> str:
    tag = c.find().tag
    return REAL if tag is None else tag


# ---------------------------------------------------------------------------
# untyped build, then freeze


class _U:
    """Untyped node: a (kind, payload, cell) record built during parsing."""

    __slots__ = ("kind", "payload", "cell")

    def __init__(self, kind, payload, cell):
        self.kind = kind
        self.payload = payload
        self.cell = cell


class _LambdaCtx:
    __slots__ = ("param_cells", "ret_cell")

    def __init__(self, param_cells, ret_cell):
        self.param_cells = param_cells
        self.ret_cell = ret_cell


def _build(sx, scope: dict, lam: _LambdaCtx | None, allow_lambda: bool) -> _U:
    if isinstance(sx, str):
        if _NUMBER.match(sx):
            return _U("const", float(sx), _Cell(REAL))
        if sx == "true":
            return _U("const", True, _Cell(BOOL))
        if sx == "false":
            return _U("const", False, _Cell(BOOL))
        if sx in _RESERVED:
            raise ParseError(f"reserved word used as expression: {sx!r}")
        if sx not in scope:
            raise TypeCheckError(f"unbound variable: {sx!r}")
        return _U("var", sx, scope[sx])
    if not sx:
        raise ParseError("empty application ()")

    head = sx[0]
    if head == "lambda":
        if not allow_lambda:
            raise ParseError("lambda is only allowed at top level or in call position")
        return _build_lambda(sx)
    if head == "let":
        if len(sx) != 3 or not isinstance(sx[1], list) or len(sx[1]) != 2:
            raise ParseError("let expects (let (name expr) body)")
        name = sx[1][0]
        if not isinstance(name, str) or _NUMBER.match(name) or name in _RESERVED:
            raise ParseError(f"bad let binding name: {name!r}")
        value = _build(sx[1][1], scope, lam, False)
        _unify_tag(value.cell, REAL)
        inner = dict(scope)
        inner[name] = value.cell
        body = _build(sx[2], inner, lam, False)
        return _U("let", (name, value, body), body.cell)
    if head == "if":
        if len(sx) != 4:
            raise ParseError("if expects (if cond then else)")
        cond = _build(sx[1], scope, lam, False)
        _unify_tag(cond.cell, BOOL)
        then = _build(sx[2], scope, lam, False)
        orelse = _build(sx[3], scope, lam, False)
        _unify(then.cell, orelse.cell)
        return _U("if", (cond, then, orelse), then.cell)
    if head == "recur":
        if lam is None:
            raise TypeCheckError("recur outside of a lambda body")
        args = [_build(a, scope, lam, False) for a in sx[1:]]
        if len(args) != len(lam.param_cells):
            raise TypeCheckError(
                f"recur arity {len(args)} does not match enclosing lambda arity {len(lam.param_cells)}"
            )
        for a, pc in zip(args, lam.param_cells):
            _unify(a.cell, pc)
        return _U("recur", args, lam.ret_cell)
    if isinstance(head, list):
        if not head or head[0] != "lambda":
            raise ParseError("only a lambda may appear in compound call position")
        proc = _build_lambda(head)
        args = [_build(a, scope, lam, False) for a in sx[1:]]
        _, param_cells, _, ret_cell = proc.payload
        if len(args) != len(param_cells):
            raise TypeCheckError(
                f"compound call arity {len(args)} does not match lambda arity {len(param_cells)}"
            )
        for a, pc in zip(args, param_cells):
            _unify(a.cell, pc)
        return _U("call", (proc, args), ret_cell)
    if head in ALIASES:
        head = ALIASES[head]
    if head in PRIMITIVES:
        prim = PRIMITIVES[head]
        args = [_build(a, scope, lam, False) for a in sx[1:]]
        if len(args) != len(prim.arg_types):
            raise TypeCheckError(f"{head} expects {len(prim.arg_types)} arguments, got {len(args)}")
        for a, t in zip(args, prim.arg_types):
            _unify_tag(a.cell, t)
        return _U("prim", (head, args), _Cell(prim.ret))
    raise ParseError(f"unknown head symbol: {head!r}")


def _build_lambda(sx) -> _U:
    if len(sx) != 3 or not isinstance(sx[1], list):
        raise ParseError("lambda expects (lambda (params...) body)")
    names, cells = [], []
    for p in sx[1]:
        if isinstance(p, str):
            name, cell = p, _Cell()
        elif isinstance(p, list) and len(p) == 2 and isinstance(p[0], str) and p[1] in (REAL, BOOL):
            name, cell = p[0], _Cell(p[1])
        else:
            raise ParseError(f"bad lambda parameter: {p!r}")
        if _NUMBER.match(name) or name in _RESERVED:
            raise ParseError(f"bad lambda parameter name: {name!r}")
        if name in names:
            raise ParseError(f"duplicate lambda parameter: {name!r}")
        names.append(name)
        cells.append(cell)
    ret_cell = _Cell()
    ctx = _LambdaCtx(cells, ret_cell)
    # a lambda body sees only its own parameters
    body = _build(sx[2], dict(zip(names, cells)), ctx, False)
    _unify(body.cell, ret_cell)
    return _U("lambda", (names, cells, body, ret_cell), ret_cell)


def _freeze(u: _U) -> Expr:
    if u.kind == "const":
        return Const(u.payload)
    if u.kind == "var":
        return Var(u.payload, _resolved(u.cell))
    if u.kind == "prim":
        op, args = u.payload
        return PrimCall(op, tuple(_freeze(a) for a in args))
    if u.kind == "let":
        name, value, body = u.payload
        return Let(name, _freeze(value), _freeze(body))
    if u.kind == "if":
        cond, then, orelse = u.payload
        return If(_freeze(cond), _freeze(then), _freeze(orelse))
    if u.kind == "recur":
        return Recur(tuple(_freeze(a) for a in u.payload), _resolved(u.cell))
    if u.kind == "lambda":
        names, cells, body, ret_cell = u.payload
        params = tuple((n, _resolved(c)) for n, c in zip(names, cells))
        return Lambda(params, _resolved(ret_cell), _freeze(body))
    if u.kind == "call":
        proc, args = u.payload
        return CompoundCall(_freeze(proc), tuple(_freeze(a) for a in args))
    raise AssertionError(u.kind)


def parse(text: str) -> Expr:
    """Parse a single s-expression into a well-typed expression tree."""
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty input")
    sx, end = _read(tokens, 0)
    if end != len(tokens):
        raise ParseError("trailing input after the first s-expression")
    return _freeze(_build(sx, {}, None, True))


def parse_program(text: str) -> Lambda:
    """Parse program text that must denote a lambda."""
    expr = parse(text)
    if not isinstance(expr, Lambda):
        raise TypeCheckError("program text must be a lambda")
    return expr


# ---------------------------------------------------------------------------
# printing


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v)


def to_text(e: Expr) -> str:
    """Canonical single-space rendering; lambda parameters always annotated."""
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        return _fmt_value(e.value)
    if isinstance(e, PrimCall):
        return "(" + " ".join([e.op] + [to_text(a) for a in e.args]) + ")"
    if isinstance(e, Lambda):
        params = " ".join(f"({n} {t})" for n, t in e.params)
        return f"(lambda ({params}) {to_text(e.body)})"
    if isinstance(e, CompoundCall):
        return "(" + " ".join([to_text(e.proc)] + [to_text(a) for a in e.args]) + ")"
    if isinstance(e, Let):
        return f"(let ({e.name} {to_text(e.value)}) {to_text(e.body)})"
    if isinstance(e, If):
        return f"(if {to_text(e.cond)} {to_text(e.then)} {to_text(e.orelse)})"
    if isinstance(e, Recur):
        return "(" + " ".join(["recur"] + [to_text(a) for a in e.args]) + ")"
    raise TypeError(f"not an expression: {e!r}")
