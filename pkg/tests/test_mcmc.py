import math
import random
from collections import Counter

import pytest

from samplesynth.corpus import load_corpus, build_grammar_state
from samplesynth.grammar import make_grammar_state, uniform_production_probs, score_program
from samplesynth.lang import REAL, EvalBudget, Lambda, parse, parse_program, to_text
from samplesynth.mcmc import (
    ChainConfig,
    chain_checkpoint,
    init_chain,
    load_checkpoint,
    mh_step,
    run_chain,
    save_checkpoint,
)
from samplesynth.penalty import NEG_INF, PenaltySpec


def toy_chain_config(iterations=100, seed=0, penalties=None):
    probs = uniform_production_probs(
        enabled={"real": ("constant", "primitive"), "bool": ("constant",)}
    )
    probs.primitives = {"real": {"+": 1.0}, "bool": {}}
    probs.const_mixture = {"normal": 0.0, "uniform": 0.0, "atoms": 1.0}
    state = make_grammar_state(probs=probs, max_depth=2, common_constants=((0.0, 0.5), (1.0, 0.5)))
    return ChainConfig(
        iterations=iterations,
        seed=seed,
        grammar=state,
        penalty=None,
        param_types=(),
        return_type=REAL,
    )


TOY_TEXTS = ["0.0", "1.0", "(+ 0.0 0.0)", "(+ 0.0 1.0)", "(+ 1.0 0.0)", "(+ 1.0 1.0)"]
TOY_PENALTIES = {
    "0.0": 0.0,
    "1.0": 0.7,
    "(+ 0.0 0.0)": 1.2,
    "(+ 0.0 1.0)": 0.3,
    "(+ 1.0 0.0)": 0.3,
    "(+ 1.0 1.0)": 2.0,
}


def toy_penalty(program, rng):
    return TOY_PENALTIES[to_text(program.body)], ()


def test_init_chain_deterministic():
    cfg = toy_chain_config(seed=3)
    a = init_chain(cfg, penalty_fn=toy_penalty)
    b = init_chain(cfg, penalty_fn=toy_penalty)
    assert a.program == b.program
    assert a.log_penalty == b.log_penalty
    assert a.log_prior == b.log_prior


def test_init_chain_finds_finite_penalty_immediately_when_support_allows():
    cfg = toy_chain_config(seed=1)

    def constant_only_penalty(program, rng):
        from samplesynth.lang import Const

        return (0.0, ()) if isinstance(program.body, Const) else (NEG_INF, ())

    state = init_chain(cfg, penalty_fn=constant_only_penalty)
    assert state.log_penalty == 0.0


def test_init_chain_survives_all_failing_penalties():
    cfg = toy_chain_config(seed=2)
    state = init_chain(cfg, penalty_fn=lambda p, r: (NEG_INF, ()))
    assert state.log_penalty == NEG_INF
    assert state.log_prior > NEG_INF  # still a grammar-supported program


def test_step_rejects_neg_inf_proposal_from_finite_state():
    cfg = toy_chain_config(seed=5)
    rng = random.Random(9)
    state = init_chain(cfg, rng, penalty_fn=toy_penalty)

    def reject_changes(program, rng_):
        if to_text(program) == to_text(state.program):
            return 0.0, ()
        return NEG_INF, ()

    current = state
    for _ in range(30):
        new_state, info = mh_step(current, cfg, rng, penalty_fn=reject_changes)
        if to_text(info.proposal.program) != to_text(state.program):
            assert not info.accepted
        assert to_text(new_state.program) == to_text(state.program)
        current = new_state


def test_identical_text_proposal_is_accepted():
    cfg = toy_chain_config(seed=11)
    rng = random.Random(4)
    state = init_chain(cfg, rng, penalty_fn=toy_penalty)
    seen_identical = False
    current = state
    for _ in range(200):
        new_state, info = mh_step(current, cfg, rng, penalty_fn=toy_penalty)
        if to_text(info.proposal.program) == to_text(current.program):
            assert info.accepted
            seen_identical = True
        current = new_state
    assert seen_identical


def test_trace_length_and_iteration_bookkeeping():
    cfg = toy_chain_config(iterations=1, seed=6)
    result = run_chain(cfg, penalty_fn=toy_penalty)
    assert len(result.penalty_trace) == 1
    cfg = toy_chain_config(iterations=57, seed=6)
    result = run_chain(cfg, penalty_fn=toy_penalty)
    assert len(result.penalty_trace) == 57


def test_best_penalty_nondecreasing_in_iterations():
    short = run_chain(toy_chain_config(iterations=50, seed=7), penalty_fn=toy_penalty)
    long = run_chain(toy_chain_config(iterations=400, seed=7), penalty_fn=toy_penalty)
    assert long.best_log_penalty >= short.best_log_penalty


def test_run_chain_bitwise_deterministic():
    a = run_chain(toy_chain_config(iterations=300, seed=8), penalty_fn=toy_penalty)
    b = run_chain(toy_chain_config(iterations=300, seed=8), penalty_fn=toy_penalty)
    assert a.best_text == b.best_text
    assert a.penalty_trace == b.penalty_trace
    assert a.acceptance_rate == b.acceptance_rate


def test_chain_occupancy_matches_enumerated_target():
    # desk-scale version of the exact-target check (the acceptance suite runs
    # the full 200k-step version)
    cfg = toy_chain_config(iterations=40_000, seed=12)
    state = cfg.grammar
    scores = {t: score_program(Lambda((), REAL, parse(t)), state) for t in TOY_TEXTS}
    weights = {t: math.exp(scores[t] + TOY_PENALTIES[t]) for t in TOY_TEXTS}
    z = sum(weights.values())
    target = {t: w / z for t, w in weights.items()}

    rng = random.Random(cfg.seed)
    current = init_chain(cfg, rng, penalty_fn=toy_penalty)
    occupancy = Counter()
    for _ in range(cfg.iterations):
        current, _ = mh_step(current, cfg, rng, penalty_fn=toy_penalty)
        occupancy[to_text(current.program.body)] += 1
    tv = 0.5 * sum(abs(occupancy[t] / cfg.iterations - target[t]) for t in TOY_TEXTS)
    assert tv < 0.05


def test_chain_never_leaves_grammar_support():
    corpus = load_corpus()
    grammar = build_grammar_state(corpus, exclude="bernoulli", max_depth=8)
    spec = PenaltySpec(kind="gtest-bernoulli", param_settings=((0.5,),), samples_per_setting=50)
    cfg = ChainConfig(
        iterations=300,
        seed=13,
        grammar=grammar,
        penalty=spec,
        param_types=(REAL,),
        return_type=REAL,
        budget=EvalBudget(max_steps=500),
    )
    rng = random.Random(cfg.seed)
    state = init_chain(cfg, rng)
    for _ in range(cfg.iterations):
        state, _ = mh_step(state, cfg, rng)
        if state.log_penalty > NEG_INF:
            assert state.log_prior > NEG_INF
            assert state.log_prior == pytest.approx(
                score_program(state.program, grammar), abs=1e-9
            )


def test_checkpoint_resume_matches_uninterrupted_run(tmp_path):
    cfg = toy_chain_config(iterations=200, seed=14)
    full = run_chain(cfg, penalty_fn=toy_penalty)

    half_cfg = toy_chain_config(iterations=100, seed=14)
    path = tmp_path / "chain.json"
    run_chain(half_cfg, penalty_fn=toy_penalty, checkpoint_path=path)
    resumed = run_chain(cfg, penalty_fn=toy_penalty, resume=load_checkpoint(path))
    assert resumed.best_text == full.best_text
    assert resumed.penalty_trace == full.penalty_trace
    assert resumed.acceptance_rate == full.acceptance_rate


def test_checkpoint_contents(tmp_path):
    cfg = toy_chain_config(iterations=20, seed=15)
    path = tmp_path / "c.json"
    run_chain(cfg, penalty_fn=toy_penalty, checkpoint_path=path)
    doc = load_checkpoint(path)
    assert doc["iteration"] == 20
    assert parse_program(doc["current_program"])
    assert parse_program(doc["best_program"])
    assert isinstance(doc["rng_state"], list)
    assert len(doc["penalty_trace"]) == 20


def test_temperature_must_be_positive():
    from samplesynth.errors import ConfigError

    with pytest.raises(ConfigError):
        toy_chain_config(iterations=0)
    cfg = toy_chain_config()
    with pytest.raises(ConfigError):
        ChainConfig(
            iterations=1,
            seed=0,
            grammar=cfg.grammar,
            penalty=None,
            param_types=(),
            return_type=REAL,
            temperature=0.0,
        )
