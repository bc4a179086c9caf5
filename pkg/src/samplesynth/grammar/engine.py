"""Sampling, scoring, and local regeneration of programs under the grammar.

One traversal definition is shared by all three operations so that anything
the sampler can emit scores finite, and the regeneration proposal densities
are exactly the densities the sampler draws from:

* productions expand in preorder; a compound call generates its procedure
  body before its arguments;
* at each site the production categorical is renormalized over the eligible
  productions (a leaf site admits only variables and constants, and falls
  back to constants alone when no variable of the needed type is in scope);
* constants and compound procedures go through the per-type reuse stores;
  the first occurrence of a procedure expands its body inline, later
  occurrences pay the store's predictive probability;
* binder names carry no probability (scores are invariant under renaming);
  sampled programs use canonical names.

Scores are joint log probabilities of the whole generative trajectory and
are exchangeable in the reuse draws, so any traversal order yields the same
total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..lang import (
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
    replace_at,
)
from ..lang.primitives import PRIMITIVES
from .state import (
    ARITY_PMF,
    NEG_INF,
    PRODUCTIONS,
    GrammarState,
    UnsupportedProgram,
    _log,
    _logaddexp,
)

_PARAM_TYPES = (REAL, BOOL)


@dataclass(frozen=True)
class GenCtx:
    """Local context of one expression site."""

    type: str
    env: tuple  # ((name, type), ...) outermost first; later entries shadow
    budget: int  # remaining expansion depth, >= 1
    recur_params: tuple | None  # parameter types of the enclosing compound, if any
    recur_ret: str | None = None

    def visible(self) -> dict:
        return dict(self.env)

    def candidates(self) -> list:
        vis = self.visible()
        return [n for n, t in vis.items() if t == self.type]


def _eligible(state: GrammarState, ctx: GenCtx) -> list:
    enabled = state.probs.rules[ctx.type]
    out = []
    for name in PRODUCTIONS:
        if name not in enabled:
            continue
        if name == "variable":
            if ctx.candidates():
                out.append(name)
        elif name == "constant":
            out.append(name)
        elif name == "primitive":
            if ctx.budget >= 2 and state.probs.primitives.get(ctx.type):
                out.append(name)
        elif name in ("compound", "let", "if"):
            if ctx.budget >= 2:
                out.append(name)
        elif name == "recur":
            if (
                ctx.recur_params is not None
                and ctx.recur_ret == ctx.type
                and (ctx.budget >= 2 or len(ctx.recur_params) == 0)
            ):
                out.append(name)
    return out


def _production_of(e: Expr) -> str:
    if isinstance(e, Var):
        return "variable"
    if isinstance(e, Const):
        return "constant"
    if isinstance(e, PrimCall):
        return "primitive"
    if isinstance(e, CompoundCall):
        return "compound"
    if isinstance(e, Let):
        return "let"
    if isinstance(e, If):
        return "if"
    if isinstance(e, Recur):
        return "recur"
    raise UnsupportedProgram(f"{type(e).__name__} is not a grammar production")


def _choose(rng, items: list, weights: list):
    total = sum(weights)
    u = rng.random() * total
    acc = 0.0
    for item, w in zip(items, weights):
        acc += w
        if u < acc:
            return item
    return items[-1]


def _gensym(ctx: GenCtx) -> str:
    taken = {n for n, _ in ctx.env}
    i = 0
    while f"sym{i}" in taken:
        i += 1
    return f"sym{i}"


_DEPTH_CACHE: dict = {}


def expr_depth(e: Expr) -> int:
    """Textual expression depth, counting compound bodies at their call site."""
    if isinstance(e, (Var, Const)):
        return 1
    key = id(e)
    cached = _DEPTH_CACHE.get(key)
    if cached is not None and cached[0] is e:
        return cached[1]
    if isinstance(e, CompoundCall):
        d = 1 + max(expr_depth(e.proc.body), max((expr_depth(a) for a in e.args), default=0))
    else:
        from ..lang.ast import children

        d = 1 + max(expr_depth(c) for c in children(e))
    if len(_DEPTH_CACHE) > 65536:
        _DEPTH_CACHE.clear()
    _DEPTH_CACHE[key] = (e, d)
    return d


def _eligible_proc_total(store, limit: int) -> int:
    """Total count of stored procedures whose bodies fit within ``limit`` levels."""
    return sum(c for v, c in store.counts.items() if expr_depth(v.body) <= limit)


def _child_ctx(ctx: GenCtx, type: str, env=None, recur=None, keep_recur=True) -> GenCtx:
    return GenCtx(
        type=type,
        env=ctx.env if env is None else env,
        budget=ctx.budget - 1,
        recur_params=(ctx.recur_params if keep_recur else None) if recur is None else recur[0],
        recur_ret=(ctx.recur_ret if keep_recur else None) if recur is None else recur[1],
    )


# ---------------------------------------------------------------------------
# sampling


def sample_expr(state: GrammarState, ctx: GenCtx, rng, trace: list | None = None) -> Expr:
    elig = _eligible(state, ctx)
    probs = state.probs.rules[ctx.type]
    prod = _choose(rng, elig, [probs[p] for p in elig])
    if trace is not None:
        trace.append(("rule", ctx.type, prod))

    if prod == "variable":
        cands = ctx.candidates()
        name = cands[rng.randrange(len(cands))]
        return Var(name, ctx.type)
    if prod == "constant":
        value = state.const_stores[ctx.type].draw(rng, lambda: state.const_base_sample(ctx.type, rng))
        if trace is not None:
            trace.append(("const", ctx.type, value))
        return Const(value)
    if prod == "primitive":
        dist = state.probs.primitives[ctx.type]
        ops = list(dist)
        op = _choose(rng, ops, [dist[o] for o in ops])
        if trace is not None:
            trace.append(("prim", ctx.type, op))
        args = tuple(
            sample_expr(state, _child_ctx(ctx, t), rng, trace) for t in PRIMITIVES[op].arg_types
        )
        return PrimCall(op, args)
    if prod == "compound":
        # reuse draws are restricted to procedures whose bodies still fit the
        # local depth budget, so program text never exceeds the depth cap
        store = state.proc_stores[ctx.type]
        limit = ctx.budget - 1
        eligible = [(v, c) for v, c in store.counts.items() if expr_depth(v.body) <= limit]
        reusable = sum(c for _, c in eligible)
        u = rng.random() * (store.concentration + reusable)
        if u >= reusable:
            proc = _sample_fresh_proc(state, ctx, rng, trace)
        else:
            acc = 0.0
            proc = eligible[-1][0]
            for v, c in eligible:
                acc += c
                if u < acc:
                    proc = v
                    break
        store.observe(proc)
        args = tuple(sample_expr(state, _child_ctx(ctx, t), rng, trace) for _, t in proc.params)
        return CompoundCall(proc, args)
    if prod == "let":
        name = _gensym(ctx)
        value = sample_expr(state, _child_ctx(ctx, REAL), rng, trace)
        body_ctx = _child_ctx(ctx, ctx.type, env=ctx.env + ((name, REAL),))
        body = sample_expr(state, body_ctx, rng, trace)
        return Let(name, value, body)
    if prod == "if":
        cond = sample_expr(state, _child_ctx(ctx, BOOL), rng, trace)
        then = sample_expr(state, _child_ctx(ctx, ctx.type), rng, trace)
        orelse = sample_expr(state, _child_ctx(ctx, ctx.type), rng, trace)
        return If(cond, then, orelse)
    # recur
    args = tuple(sample_expr(state, _child_ctx(ctx, t), rng, trace) for t in ctx.recur_params)
    return Recur(args, ctx.type)


def _sample_fresh_proc(state: GrammarState, ctx: GenCtx, rng, trace) -> Lambda:
    arities = sorted(ARITY_PMF)
    arity = _choose(rng, arities, [ARITY_PMF[a] for a in arities])
    param_types = tuple(_PARAM_TYPES[rng.randrange(2)] for _ in range(arity))
    params = tuple((f"var{i}", t) for i, t in enumerate(param_types))
    body_ctx = GenCtx(
        type=ctx.type,
        env=params,
        budget=ctx.budget - 1,
        recur_params=param_types,
        recur_ret=ctx.type,
    )
    body = sample_expr(state, body_ctx, rng, trace)
    return Lambda(params, ctx.type, body)


def sample_program(param_types, return_type, state: GrammarState, rng, trace: list | None = None) -> Lambda:
    """Draw a whole program with the requested signature.

    Records its reuse draws in the state's stores; pass a copy to keep the
    original pristine.
    """
    params = tuple((f"par{i}", t) for i, t in enumerate(param_types))
    ctx = GenCtx(
        type=return_type,
        env=params,
        budget=state.max_depth,
        recur_params=None,  # no recursion at the program's top level
        recur_ret=None,
    )
    body = sample_expr(state, ctx, rng, trace)
    return Lambda(params, return_type, body)


# ---------------------------------------------------------------------------
# scoring


def score_expr(state: GrammarState, ctx: GenCtx, e: Expr, hole: tuple | None = None) -> float:
    """Log probability of generating ``e`` at this site; mutates the state's
    stores with the reuse draws encountered. ``hole`` skips one subtree (used
    to build the context of a regeneration site)."""
    if hole == ():
        return 0.0
    if ctx.budget < 1:
        return NEG_INF
    prod = _production_of(e)
    elig = _eligible(state, ctx)
    if prod not in elig:
        return NEG_INF
    probs = state.probs.rules[ctx.type]
    lp = math.log(probs[prod]) - math.log(sum(probs[p] for p in elig))

    def child_hole(slot: int):
        if hole is not None and hole and hole[0] == slot:
            return hole[1:]
        return None

    if isinstance(e, Var):
        cands = ctx.candidates()
        if e.name not in cands:
            return NEG_INF
        return lp - math.log(len(cands))
    if isinstance(e, Const):
        store = state.const_stores[ctx.type]
        lp += store.log_predictive(e.value, state.const_base_logp(ctx.type, e.value))
        store.observe(e.value)
        return lp
    if isinstance(e, PrimCall):
        dist = state.probs.primitives[ctx.type]
        if e.op not in PRIMITIVES:
            raise UnsupportedProgram(f"unknown primitive {e.op!r}")
        if e.op not in dist:
            raise UnsupportedProgram(f"primitive {e.op!r} is not part of this grammar")
        lp += math.log(dist[e.op])
        for i, (a, t) in enumerate(zip(e.args, PRIMITIVES[e.op].arg_types)):
            lp += score_expr(state, _child_ctx(ctx, t), a, child_hole(i))
            if lp == NEG_INF:
                return NEG_INF
        return lp
    if isinstance(e, CompoundCall):
        store = state.proc_stores[ctx.type]
        body_hole = child_hole(0)
        if body_hole is not None:
            # the regeneration hole is inside this procedure's body: walk the
            # rest of the body for context, but the incomplete procedure value
            # contributes no reuse event and is not recorded in the store
            lp += _score_proc_base(state, ctx, e.proc, body_hole)
        else:
            limit = ctx.budget - 1
            if expr_depth(e.proc.body) > limit:
                return NEG_INF  # cannot be generated here, by fresh draw or reuse
            denom = math.log(store.concentration + _eligible_proc_total(store, limit))
            n_v = store.counts.get(e.proc, 0)
            if n_v == 0:
                # first occurrence: expand the body inline
                lp += _log(store.concentration) - denom
                lp += _score_proc_base(state, ctx, e.proc, None)
            else:
                # repeat occurrence: predictive probability; the base density is
                # evaluated hypothetically, without store side effects
                base_lp = _score_proc_base_snapshot(state, ctx, e.proc, None)
                fresh = _log(store.concentration) + base_lp
                lp += _logaddexp(math.log(n_v), fresh) - denom
            if lp == NEG_INF:
                return NEG_INF
            store.observe(e.proc)
        if lp == NEG_INF:
            return NEG_INF
        for i, (a, (_, t)) in enumerate(zip(e.args, e.proc.params)):
            lp += score_expr(state, _child_ctx(ctx, t), a, child_hole(i + 1))
            if lp == NEG_INF:
                return NEG_INF
        return lp
    if isinstance(e, Let):
        lp += score_expr(state, _child_ctx(ctx, REAL), e.value, child_hole(0))
        if lp == NEG_INF:
            return NEG_INF
        body_ctx = _child_ctx(ctx, ctx.type, env=ctx.env + ((e.name, REAL),))
        return lp + score_expr(state, body_ctx, e.body, child_hole(1))
    if isinstance(e, If):
        lp += score_expr(state, _child_ctx(ctx, BOOL), e.cond, child_hole(0))
        if lp == NEG_INF:
            return NEG_INF
        lp += score_expr(state, _child_ctx(ctx, ctx.type), e.then, child_hole(1))
        if lp == NEG_INF:
            return NEG_INF
        return lp + score_expr(state, _child_ctx(ctx, ctx.type), e.orelse, child_hole(2))
    # recur
    if len(e.args) != len(ctx.recur_params):
        return NEG_INF
    for i, (a, t) in enumerate(zip(e.args, ctx.recur_params)):
        lp += score_expr(state, _child_ctx(ctx, t), a, child_hole(i))
        if lp == NEG_INF:
            return NEG_INF
    return lp


def _score_proc_base(state: GrammarState, ctx: GenCtx, proc: Lambda, hole) -> float:
    """Log density of the procedure base generating ``proc`` at this site."""
    arity = len(proc.params)
    if arity not in ARITY_PMF:
        return NEG_INF
    lp = math.log(ARITY_PMF[arity]) + arity * math.log(0.5)
    body_ctx = GenCtx(
        type=proc.ret,
        env=proc.params,
        budget=ctx.budget - 1,
        recur_params=tuple(t for _, t in proc.params),
        recur_ret=proc.ret,
    )
    return lp + score_expr(state, body_ctx, proc.body, hole)


def _score_proc_base_snapshot(state: GrammarState, ctx: GenCtx, proc: Lambda, hole) -> float:
    scratch = state.copy()
    return _score_proc_base(scratch, ctx, proc, hole)


def _top_ctx(program: Lambda, state: GrammarState) -> GenCtx:
    return GenCtx(
        type=program.ret,
        env=program.params,
        budget=state.max_depth,
        recur_params=None,
        recur_ret=None,
    )


def score_program(program: Lambda, state: GrammarState) -> float:
    """Exact log prior of the program text; -inf outside the grammar's support."""
    if not isinstance(program, Lambda):
        raise UnsupportedProgram("programs are lambdas")
    scratch = state.copy()
    return score_expr(scratch, _top_ctx(program, state), program.body)


# ---------------------------------------------------------------------------
# node indexing and subtree regeneration


def index_nodes(program: Lambda, state: GrammarState) -> list:
    """All regenerable sites in preorder: (path, expr, ctx) triples.

    Paths are child-slot sequences relative to the program body; compound
    procedure bodies are included (slot 0 of their call), the root lambda is
    not a site. Sites whose local depth budget is exhausted are excluded:
    they only occur inside the body of a procedure reused at a site deeper
    than where it was first created, and nothing can be generated there.
    """
    out = []

    def walk(e: Expr, ctx: GenCtx, path: tuple):
        if ctx.budget >= 1:
            out.append((path, e, ctx))
        if isinstance(e, PrimCall):
            for i, (a, t) in enumerate(zip(e.args, PRIMITIVES[e.op].arg_types)):
                walk(a, _child_ctx(ctx, t), path + (i,))
        elif isinstance(e, CompoundCall):
            body_ctx = GenCtx(
                type=e.proc.ret,
                env=e.proc.params,
                budget=ctx.budget - 1,
                recur_params=tuple(t for _, t in e.proc.params),
                recur_ret=e.proc.ret,
            )
            walk(e.proc.body, body_ctx, path + (0,))
            for i, (a, (_, t)) in enumerate(zip(e.args, e.proc.params)):
                walk(a, _child_ctx(ctx, t), path + (i + 1,))
        elif isinstance(e, Let):
            walk(e.value, _child_ctx(ctx, REAL), path + (0,))
            body_ctx = _child_ctx(ctx, ctx.type, env=ctx.env + ((e.name, REAL),))
            walk(e.body, body_ctx, path + (1,))
        elif isinstance(e, If):
            walk(e.cond, _child_ctx(ctx, BOOL), path + (0,))
            walk(e.then, _child_ctx(ctx, ctx.type), path + (1,))
            walk(e.orelse, _child_ctx(ctx, ctx.type), path + (2,))
        elif isinstance(e, Recur):
            for i, (a, t) in enumerate(zip(e.args, ctx.recur_params)):
                walk(a, _child_ctx(ctx, t), path + (i,))

    walk(program.body, _top_ctx(program, state), ())
    return out


def regenerate_subtree(program: Lambda, node_index: int, state: GrammarState, rng):
    """Replace the subtree at the given preorder site with a fresh draw.

    Returns ``(new_program, log_q_forward, log_q_reverse)`` where both
    densities condition on the same context: the rest of the program with a
    hole at the site.
    """
    nodes = index_nodes(program, state)
    if not 0 <= node_index < len(nodes):
        raise IndexError(f"node index {node_index} out of range (program has {len(nodes)} sites)")
    path, old, ctx = nodes[node_index]

    context = state.copy()
    score_expr(context, _top_ctx(program, state), program.body, hole=path)

    sampler_state = context.copy()
    new = sample_expr(sampler_state, ctx, rng)
    log_q_fwd = score_expr(context.copy(), ctx, new)
    log_q_rev = score_expr(context.copy(), ctx, old)

    new_program = Lambda(program.params, program.ret, replace_at(program.body, path, new))
    return new_program, log_q_fwd, log_q_rev
