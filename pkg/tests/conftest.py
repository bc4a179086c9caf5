"""Shared test helpers: restricted grammar states and an independent
enumeration oracle for the generative process."""

import math

from samplesynth.grammar import ARITY_PMF, GrammarState, make_grammar_state, uniform_production_probs
from samplesynth.lang import BOOL, REAL
from samplesynth.lang.primitives import PRIMITIVES


def restricted_state(max_depth=2, productions=None, prims=None, atoms=((0.0, 0.5), (1.0, 0.5))):
    """Atom-only grammar restriction with optional production/primitive subsets."""
    probs = uniform_production_probs(enabled=productions)
    if prims is not None:
        probs.primitives = prims
    probs.const_mixture = {"normal": 0.0, "uniform": 0.0, "atoms": 1.0}
    return make_grammar_state(probs=probs, max_depth=max_depth, common_constants=atoms)


def enumerate_programs(state: GrammarState):
    """Enumerate (text, probability) for every ()->real program of the given
    restricted grammar by simulating the generative rules directly. This is
    deliberately independent of the engine: it re-derives eligibility,
    urn predictives, and generation order from their definitions.
    """
    rules = state.probs.rules
    prims = state.probs.primitives
    atoms = dict(state.common_constants)
    alpha = state.const_stores[REAL].concentration

    def eligible(t, env, budget, recur_ok):
        out = []
        for name in rules[t]:
            if name == "variable" and any(vt == t for _, vt in env):
                out.append(name)
            elif name == "constant":
                out.append(name)
            elif name == "primitive" and budget >= 2 and prims.get(t):
                out.append(name)
            elif name in ("compound", "let", "if") and budget >= 2:
                out.append(name)
            elif name == "recur" and recur_ok and budget >= 2:
                out.append(name)
        return out

    def const_choices(t, urn):
        n = sum(urn.values())
        support = {True: 0.5, False: 0.5} if t == BOOL else atoms
        for v, h in support.items():
            pred = (urn.get(v, 0) + alpha * h) / (alpha + n)
            urn2 = dict(urn)
            urn2[v] = urn2.get(v, 0) + 1
            text = ("true" if v else "false") if t == BOOL else repr(v)
            yield text, pred, urn2

    def seq(parts, urns):
        if not parts:
            yield [], 1.0, urns
            return
        head, *rest = parts
        for text, p, urns2 in head(urns):
            for texts, p2, urns3 in seq(rest, urns2):
                yield [text] + texts, p * p2, urns3

    def expand(t, env, budget, recur_ok, urns):
        elig = eligible(t, env, budget, recur_ok)
        total = sum(rules[t][e] for e in elig)
        for prod in elig:
            p_prod = rules[t][prod] / total
            if prod == "variable":
                cands = [n for n, vt in dict(env).items() if vt == t]
                for name in cands:
                    yield name, p_prod / len(cands), urns
            elif prod == "constant":
                real_urn, bool_urn = urns
                if t == REAL:
                    for text, p, urn2 in const_choices(t, real_urn):
                        yield text, p_prod * p, (urn2, bool_urn)
                else:
                    for text, p, urn2 in const_choices(t, bool_urn):
                        yield text, p_prod * p, (real_urn, urn2)
            elif prod == "primitive":
                for op, p_op in prims[t].items():
                    arg_types = PRIMITIVES[op].arg_types
                    parts = [
                        (lambda u, at=at: expand(at, env, budget - 1, recur_ok, u))
                        for at in arg_types
                    ]
                    for texts, p, urns2 in seq(parts, urns):
                        yield f"({op} {' '.join(texts)})", p_prod * p_op * p, urns2
            elif prod == "let":
                taken = {n for n, _ in env}
                i = 0
                while f"sym{i}" in taken:
                    i += 1
                name = f"sym{i}"
                for vtext, p1, urns2 in expand(REAL, env, budget - 1, recur_ok, urns):
                    for btext, p2, urns3 in expand(
                        t, env + ((name, REAL),), budget - 1, recur_ok, urns2
                    ):
                        yield f"(let ({name} {vtext}) {btext})", p_prod * p1 * p2, urns3
            elif prod == "if":
                parts = [
                    lambda u: expand(BOOL, env, budget - 1, recur_ok, u),
                    lambda u: expand(t, env, budget - 1, recur_ok, u),
                    lambda u: expand(t, env, budget - 1, recur_ok, u),
                ]
                for texts, p, urns2 in seq(parts, urns):
                    yield f"(if {texts[0]} {texts[1]} {texts[2]})", p_prod * p, urns2
            elif prod == "compound":
                # depth 2 keeps the procedure store empty: every draw is fresh
                for arity, p_a in ARITY_PMF.items():
                    for mask in range(2**arity):
                        types = tuple(REAL if (mask >> i) & 1 == 0 else BOOL for i in range(arity))
                        params = tuple((f"var{i}", pt) for i, pt in enumerate(types))
                        header = " ".join(f"({n} {pt})" for n, pt in params)
                        for btext, p_b, urns2 in expand(t, params, budget - 1, False, urns):
                            parts = [
                                (lambda u, at=at: expand(at, env, budget - 1, recur_ok, u))
                                for _, at in params
                            ]
                            for texts, p_args, urns3 in seq(parts, urns2):
                                text = f"((lambda ({header}) {btext}) {' '.join(texts)})"
                                yield text, p_prod * p_a * (0.5**arity) * p_b * p_args, urns3

    return [
        (f"(lambda () {text})", p)
        for text, p, _ in expand(REAL, (), state.max_depth, False, ({}, {}))
    ]
