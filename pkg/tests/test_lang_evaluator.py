import math
import random

import numpy as np
import pytest

from samplesynth.lang import (
    BudgetExceeded,
    Env,
    EvalBudget,
    NumericError,
    TypeCheckError,
    evaluate,
    parse,
    parse_program,
    run_sampler,
)

BERNOULLI = parse_program("(lambda (par) (if (< (uniform-continuous 0.0 1.0) par) 1.0 0.0))")
BOX_MULLER = parse_program(
    "(lambda (mean std) (+ mean (* std (* (cos (* 2.0 (* 3.14159"
    " (uniform-continuous 0.0 1.0)))) (sqrt (* -2.0 (log (uniform-continuous 0.0 1.0))))))))"
)


def test_arithmetic():
    assert evaluate(parse("(+ 1.0 2.0)"), {}, random.Random(0)) == 3.0
    assert evaluate(parse("(safe-div 4.0 2.0)"), {}, random.Random(0)) == 2.0


def test_safe_primitive_contracts():
    rng = random.Random(0)
    assert evaluate(parse("(safe-log -1.0)"), {}, rng) == 0.0
    assert evaluate(parse("(safe-log 0.0)"), {}, rng) == 0.0
    assert evaluate(parse("(safe-log 2.0)"), {}, rng) == math.log(2.0)
    assert evaluate(parse("(safe-sqrt -4.0)"), {}, rng) == 0.0
    assert evaluate(parse("(safe-sqrt 4.0)"), {}, rng) == 2.0
    assert evaluate(parse("(safe-div 3.0 0.0)"), {}, rng) == 0.0
    assert evaluate(parse("(safe-uc 5.0 5.0)"), {}, rng) == 5.0


def test_safe_uc_swaps_arguments():
    rng = random.Random(3)
    values = [evaluate(parse("(safe-uc 2.0 1.0)"), {}, rng) for _ in range(200)]
    assert all(1.0 <= v <= 2.0 for v in values)
    # symmetric in distribution: same seed, swapped argument order
    a = [evaluate(parse("(safe-uc 1.0 2.0)"), {}, random.Random(s)) for s in range(50)]
    b = [evaluate(parse("(safe-uc 2.0 1.0)"), {}, random.Random(s)) for s in range(50)]
    assert a == b


def test_environment_lookup_and_scoping():
    env = Env({"x": 2.0}).extended("y", 3.0)
    assert evaluate(parse("(lambda (x y) (* x y))").body, env, random.Random(0)) == 6.0
    with pytest.raises(TypeCheckError):
        evaluate(parse("(lambda (z) z)").body, {}, random.Random(0))


def test_gensym_avoids_live_names():
    env = Env({"sym0": 1.0})
    name = env.gensym()
    assert name != "sym0"
    assert name not in env.flatten()


def test_numeric_error_on_overflow():
    with pytest.raises(NumericError):
        evaluate(parse("(exp 1000.0)"), {}, random.Random(0))
    with pytest.raises(NumericError):
        evaluate(parse("(* 1e308 1e308)"), {}, random.Random(0))


def test_infinite_recursion_hits_budget():
    with pytest.raises(BudgetExceeded):
        run_sampler(parse_program("(lambda () (recur))"), [], 1, random.Random(0))


def test_step_budget_total():
    # a loop that counts down from its argument: legal, but step-bounded
    loop = parse_program("(lambda (n) ((lambda (k) (if (< k 1.0) k (recur (dec k)))) n))")
    tight = EvalBudget(max_steps=30, max_recursion=1000)
    with pytest.raises(BudgetExceeded) as err:
        run_sampler(loop, [1000.0], 3, random.Random(0), tight)
    assert err.value.invocation == 0
    # under a generous budget the same program terminates
    assert run_sampler(loop, [5.0], 1, random.Random(0)).values[0] == 0.0


def test_determinism_bit_identical():
    for seed in (0, 1, 12345):
        a = run_sampler(BOX_MULLER, [1.5, 2.0], 500, random.Random(seed))
        b = run_sampler(BOX_MULLER, [1.5, 2.0], 500, random.Random(seed))
        assert np.array_equal(a.values, b.values)


def test_type_preservation():
    rng = random.Random(4)
    assert isinstance(evaluate(parse("(< 1.0 2.0)"), {}, rng), bool)
    assert isinstance(evaluate(parse("(+ 1.0 2.0)"), {}, rng), float)


def test_run_sampler_always_one():
    ss = run_sampler(BERNOULLI, [1.0], 100, random.Random(0))
    assert np.all(ss.values == 1.0)


def test_run_sampler_bernoulli_mean():
    # binomial 99% interval at J=100000 is about +/-0.004; 0.01 is generous
    ss = run_sampler(BERNOULLI, [0.5], 100_000, random.Random(11))
    assert abs(ss.values.mean() - 0.5) < 0.01


def test_run_sampler_box_muller_moments():
    # CLT bounds at 1e5 draws: sd(mean)~0.003, sd(var)~0.0045
    ss = run_sampler(BOX_MULLER, [0.0, 1.0], 100_000, random.Random(13))
    assert abs(ss.values.mean()) < 0.02
    assert abs(ss.values.var() - 1.0) < 0.05


def test_run_sampler_validates_signature():
    with pytest.raises(TypeCheckError):
        run_sampler(BERNOULLI, [], 10, random.Random(0))
    with pytest.raises(TypeCheckError):
        run_sampler(parse_program("(lambda () (< 1.0 2.0))"), [], 10, random.Random(0))


def test_sample_set_records_length_and_params():
    ss = run_sampler(BERNOULLI, [0.25], 64, random.Random(5))
    assert len(ss) == 64
    assert ss.param_vector == (0.25,)
    assert np.all(np.isfinite(ss.values))
