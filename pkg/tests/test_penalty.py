import math
import random

import numpy as np
import pytest

from samplesynth.errors import ConfigError
from samplesynth.lang import EvalBudget, parse_program
from samplesynth.penalty import NEG_INF, PenaltySpec, accumulate_penalty

BERNOULLI = parse_program("(lambda (par) (if (< (uniform-continuous 0.0 1.0) par) 1.0 0.0))")
GTEST_SPEC = PenaltySpec(
    kind="gtest-bernoulli",
    param_settings=((0.3,), (0.5,), (0.7,)),
    samples_per_setting=1000,
)


def test_exact_sampler_rarely_scores_badly():
    # p-values are near-uniform under the null, so the summed log penalty
    # stays clear of ln(0.001^3) for nearly all seeds
    floor = math.log(0.001**3)
    good = 0
    for seed in range(100):
        lp, batches = accumulate_penalty(BERNOULLI, GTEST_SPEC, random.Random(seed))
        assert len(batches) == 3
        good += lp > floor
    assert good >= 95


def test_erroring_program_is_neg_inf():
    looping = parse_program("(lambda (par) ((lambda (x) (recur x)) par))")
    lp, batches = accumulate_penalty(looping, GTEST_SPEC, random.Random(0))
    assert lp == NEG_INF
    assert batches == []


def test_constant_program_under_moments_is_neg_inf():
    spec = PenaltySpec(kind="moments", param_settings=((),), samples_per_setting=100)
    lp, _ = accumulate_penalty(parse_program("(lambda () 0.0)"), spec, random.Random(0))
    assert lp == NEG_INF


def test_non_bernoulli_support_is_structural_failure():
    half = parse_program("(lambda (par) 0.5)")
    lp, _ = accumulate_penalty(half, GTEST_SPEC, random.Random(0))
    assert lp == NEG_INF


def test_moments_spec_scores_standard_normal_sampler():
    box_muller = parse_program(
        "(lambda () (* (cos (* 2.0 (* 3.14159 (safe-uc 0.0 1.0))))"
        " (safe-sqrt (* -2.0 (safe-log (safe-uc 0.0 1.0))))))"
    )
    spec = PenaltySpec(kind="moments", param_settings=((),), samples_per_setting=10_000)
    lp, _ = accumulate_penalty(box_muller, spec, random.Random(5))
    # at the optimum the density contributes 4 * -0.5*ln(2*pi*sigma^2) ~ 5.54
    assert lp > 0.0


def test_penalty_is_monotone_in_per_setting_terms():
    # improving one setting's p-value cannot lower the total: totals are sums
    # of per-setting logs, checked via two specs sharing two settings
    spec_small = PenaltySpec(kind="gtest-bernoulli", param_settings=((0.4,),), samples_per_setting=500)
    spec_full = PenaltySpec(
        kind="gtest-bernoulli", param_settings=((0.4,), (0.6,)), samples_per_setting=500
    )
    rng1, rng2 = random.Random(1), random.Random(1)
    lp_small, _ = accumulate_penalty(BERNOULLI, spec_small, rng1)
    lp_full, _ = accumulate_penalty(BERNOULLI, spec_full, rng2)
    assert lp_full <= lp_small + 0.0  # adding a term can only add log p <= 0


def test_ks_two_sample_spec():
    uniform = parse_program("(lambda () (safe-uc 0.0 1.0))")
    reference = tuple(np.random.default_rng(7).random(500))
    spec = PenaltySpec(
        kind="ks-two-sample", param_settings=((),), samples_per_setting=200, reference_values=reference
    )
    lp, _ = accumulate_penalty(uniform, spec, random.Random(2))
    assert lp > math.log(0.001)
    shifted = parse_program("(lambda () (+ 5.0 (safe-uc 0.0 1.0)))")
    lp_shifted, _ = accumulate_penalty(shifted, spec, random.Random(2))
    assert lp_shifted < lp - 100.0


def test_ks_one_sample_spec():
    spec = PenaltySpec(
        kind="ks-one-sample", param_settings=((5.0,),), samples_per_setting=500, reference_id="beta"
    )
    beta_prog = parse_program("(lambda (a) (exp (safe-div (safe-log (safe-uc 0.0 1.0)) a)))")
    lp, _ = accumulate_penalty(beta_prog, spec, random.Random(3))
    assert lp > math.log(0.001)


def test_gtest_pooled_spec():
    spec = PenaltySpec(
        kind="gtest-pooled", param_settings=((4.0,),), samples_per_setting=500, reference_id="poisson"
    )
    pois = parse_program(
        "(lambda (rate) (let (limit (exp (* -1.0 rate)))"
        " ((lambda (k p lim) (if (< p lim) (dec k)"
        " (recur (inc k) (* p (safe-uc 0.0 1.0)) lim))) 1.0 (safe-uc 0.0 1.0) limit)))"
    )
    lp, _ = accumulate_penalty(pois, spec, random.Random(4))
    assert lp > math.log(0.0001)
    # real-valued output fails structurally
    lp_bad, _ = accumulate_penalty(parse_program("(lambda (rate) 0.5)"), spec, random.Random(4))
    assert lp_bad == NEG_INF


def test_arity_mismatch_is_config_error():
    with pytest.raises(ConfigError):
        accumulate_penalty(parse_program("(lambda () 1.0)"), GTEST_SPEC, random.Random(0))


def test_spec_validation():
    with pytest.raises(ConfigError):
        PenaltySpec(kind="nope")
    with pytest.raises(ConfigError):
        PenaltySpec(kind="moments", sigma=0.0)
    with pytest.raises(ConfigError):
        PenaltySpec(kind="moments", moment_targets=(0.0,))
    with pytest.raises(ConfigError):
        PenaltySpec(kind="ks-one-sample")
    with pytest.raises(ConfigError):
        PenaltySpec(kind="gtest-bernoulli", samples_per_setting=1)
