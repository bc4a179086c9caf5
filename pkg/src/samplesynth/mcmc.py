"""Metropolis-Hastings over program text.

The chain targets prior(T) * penalty(T) with single-site subtree-regeneration
proposals. Pseudo-data is simulated for proposals only; the current state
keeps the batches it was accepted with, so rejected moves never re-simulate
(the standard likelihood-free MH convention). Chains are fully reproducible
from their seed and share nothing.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Callable

from .errors import ConfigError
from .grammar import GrammarState, index_nodes, regenerate_subtree, sample_program, score_program
from .lang import EvalBudget, Lambda, parse_program, to_text
from .penalty import NEG_INF, PenaltySpec, accumulate_penalty

INIT_RETRY_CAP = 1000


@dataclass(frozen=True)
class ChainConfig:
    iterations: int
    seed: int
    grammar: GrammarState
    penalty: PenaltySpec | None
    param_types: tuple
    return_type: str
    temperature: float = 1.0
    budget: EvalBudget = field(default_factory=EvalBudget)

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.temperature <= 0.0:
            raise ConfigError("temperature must be positive")


@dataclass(frozen=True)
class MhState:
    program: Lambda
    log_prior: float
    log_penalty: float
    cached_samples: tuple  # pseudo-data batches backing log_penalty
    iteration: int


@dataclass(frozen=True)
class StepInfo:
    accepted: bool
    proposal: MhState


@dataclass(frozen=True)
class ChainResult:
    best_program: Lambda
    best_log_penalty: float
    best_log_prior: float
    best_iteration: int
    acceptance_rate: float
    penalty_trace: tuple
    seed: int

    @property
    def best_text(self) -> str:
        return to_text(self.best_program)


def _default_penalty_fn(config: ChainConfig) -> Callable:
    if config.penalty is None:
        raise ConfigError("chain config has no penalty spec and no penalty function was given")

    def fn(program: Lambda, rng) -> tuple[float, tuple]:
        lp, batches = accumulate_penalty(program, config.penalty, rng, config.budget)
        return lp, tuple(batches)

    return fn


def init_chain(config: ChainConfig, rng=None, penalty_fn: Callable | None = None) -> MhState:
    """Sample starting programs from the prior until one earns a finite
    penalty (up to a retry cap); the best initializer found is returned even
    if every attempt failed."""
    rng = rng if rng is not None else random.Random(config.seed)
    penalty_fn = penalty_fn or _default_penalty_fn(config)
    best = None
    for _ in range(INIT_RETRY_CAP):
        program = sample_program(
            list(config.param_types), config.return_type, config.grammar.copy(), rng
        )
        log_penalty, cached = penalty_fn(program, rng)
        log_prior = score_program(program, config.grammar)
        candidate = MhState(program, log_prior, log_penalty, tuple(cached), 0)
        if best is None or (log_penalty, log_prior) > (best.log_penalty, best.log_prior):
            best = candidate
        if log_penalty > NEG_INF:
            break
    return best


def mh_step(state: MhState, config: ChainConfig, rng, penalty_fn: Callable | None = None):
    """One proposal/accept step. Returns ``(new_state, StepInfo)``."""
    penalty_fn = penalty_fn or _default_penalty_fn(config)
    grammar = config.grammar
    nodes = index_nodes(state.program, grammar)
    n_cur = len(nodes)
    node_index = rng.randrange(n_cur)
    proposal_program, log_q_fwd, log_q_rev = regenerate_subtree(
        state.program, node_index, grammar, rng
    )
    prop_prior = score_program(proposal_program, grammar)
    prop_penalty, prop_cached = penalty_fn(proposal_program, rng)
    proposal = MhState(
        proposal_program, prop_prior, prop_penalty, tuple(prop_cached), state.iteration + 1
    )
    n_prop = len(index_nodes(proposal_program, grammar))

    if prop_penalty == NEG_INF and state.log_penalty == NEG_INF:
        d_penalty = 0.0
    elif prop_penalty == NEG_INF:
        d_penalty = NEG_INF
    elif state.log_penalty == NEG_INF:
        d_penalty = math.inf
    else:
        d_penalty = prop_penalty - state.log_penalty

    if d_penalty == NEG_INF or log_q_rev == NEG_INF or log_q_fwd == NEG_INF:
        accepted = False
    elif d_penalty == math.inf:
        accepted = True
    else:
        d_prior = prop_prior - state.log_prior
        log_ratio = (
            (d_prior + d_penalty) / config.temperature
            + log_q_rev
            - log_q_fwd
            + math.log(n_cur)
            - math.log(n_prop)
        )
        accepted = log_ratio >= 0.0 or math.log(rng.random()) < log_ratio

    if accepted:
        new_state = proposal
    else:
        new_state = MhState(
            state.program,
            state.log_prior,
            state.log_penalty,
            state.cached_samples,
            state.iteration + 1,
        )
    return new_state, StepInfo(accepted=accepted, proposal=proposal)


def _better(a: tuple, b: tuple) -> bool:
    """Lexicographic best-state order: higher penalty, then higher prior, then
    earlier iteration."""
    return (a[0], a[1], -a[2]) > (b[0], b[1], -b[2])


def run_chain(
    config: ChainConfig,
    penalty_fn: Callable | None = None,
    resume: dict | None = None,
    checkpoint_path=None,
    checkpoint_every: int = 0,
) -> ChainResult:
    """Run the full chain; deterministic given the config.

    The best program is tracked over the initial state and every evaluated
    proposal (accepted or not), restricted to finite penalties. With
    ``checkpoint_path`` the chain periodically persists a resumable snapshot
    (a resumed state keeps its penalty but drops the cached pseudo-data).
    """
    penalty_fn = penalty_fn or _default_penalty_fn(config)
    rng = random.Random(config.seed)
    if resume is not None:
        state, best, accepted_count, trace = _restore(resume, config, rng)
    else:
        state = init_chain(config, rng, penalty_fn)
        best = (state.log_penalty, state.log_prior, 0, state.program)
        accepted_count = 0
        trace = []
    start = state.iteration
    for _ in range(start, config.iterations):
        state, info = mh_step(state, config, rng, penalty_fn)
        accepted_count += info.accepted
        prop = info.proposal
        if prop.log_penalty > NEG_INF and _better(
            (prop.log_penalty, prop.log_prior, prop.iteration), best[:3]
        ):
            best = (prop.log_penalty, prop.log_prior, prop.iteration, prop.program)
        trace.append(state.log_penalty)
        if checkpoint_path and checkpoint_every and state.iteration % checkpoint_every == 0:
            save_checkpoint(checkpoint_path, chain_checkpoint(state, best, accepted_count, trace, rng))
    if checkpoint_path:
        save_checkpoint(checkpoint_path, chain_checkpoint(state, best, accepted_count, trace, rng))
    return ChainResult(
        best_program=best[3],
        best_log_penalty=best[0],
        best_log_prior=best[1],
        best_iteration=best[2],
        acceptance_rate=accepted_count / max(1, len(trace)),
        penalty_trace=tuple(trace),
        seed=config.seed,
    )


# ---------------------------------------------------------------------------
# checkpoints


def chain_checkpoint(state: MhState, best: tuple, accepted_count: int, trace: list, rng) -> dict:
    return {
        "format_version": 1,
        "iteration": state.iteration,
        "current_program": to_text(state.program),
        "current_log_prior": state.log_prior,
        "current_log_penalty": state.log_penalty,
        "best_program": to_text(best[3]),
        "best_log_penalty": best[0],
        "best_log_prior": best[1],
        "best_iteration": best[2],
        "accepted_count": accepted_count,
        "penalty_trace": list(trace),
        "rng_state": _rng_state_to_json(rng.getstate()),
    }


def save_checkpoint(path, checkpoint: dict) -> None:
    with open(path, "w") as fh:
        json.dump(checkpoint, fh)


def load_checkpoint(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _rng_state_to_json(state) -> list:
    version, internal, gauss = state
    return [version, list(internal), gauss]


def _rng_state_from_json(doc) -> tuple:
    version, internal, gauss = doc
    return (version, tuple(internal), gauss)


def _restore(checkpoint: dict, config: ChainConfig, rng) -> tuple:
    rng.setstate(_rng_state_from_json(checkpoint["rng_state"]))
    program = parse_program(checkpoint["current_program"])
    state = MhState(
        program=program,
        log_prior=checkpoint["current_log_prior"],
        log_penalty=checkpoint["current_log_penalty"],
        cached_samples=(),
        iteration=checkpoint["iteration"],
    )
    best = (
        checkpoint["best_log_penalty"],
        checkpoint["best_log_prior"],
        checkpoint["best_iteration"],
        parse_program(checkpoint["best_program"]),
    )
    return state, best, checkpoint["accepted_count"], list(checkpoint["penalty_trace"])
