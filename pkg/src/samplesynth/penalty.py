"""Composed synthesis penalty: the log-likelihood a candidate program earns
by generating pseudo-data that passes the configured statistical checks.

For each parameter setting the program generates a fresh batch of samples;
the batch is scored by the configured test (a moment match, a G-test, or a
KS test) and the per-setting log terms are summed. Evaluation failures and
structural test failures (wrong support, degenerate samples) yield the
sentinel ``-inf`` so the search always rejects the program; a p-value that
merely underflows is floored at 1e-300 before taking its log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .lang import EvalBudget, EvalError, Lambda, SampleSet, run_sampler
from .reference import make_reference
from .stats import (
    DegenerateSample,
    SampleTooSmall,
    g_test_p_value,
    g_test_pooled,
    ks_one_sample,
    ks_two_sample,
    moment_penalty,
    summary_moments,
)

NEG_INF = float("-inf")
_P_FLOOR = 1e-300

KINDS = ("moments", "gtest-bernoulli", "gtest-pooled", "ks-one-sample", "ks-two-sample")


@dataclass(frozen=True)
class PenaltySpec:
    """Declarative description of the synthesis likelihood.

    ``param_settings`` lists the parameter vectors the program is trained
    against (one empty vector for parameterless programs);
    ``samples_per_setting`` is the batch size generated per vector.
    """

    kind: str
    param_settings: tuple = ((),)
    samples_per_setting: int = 100
    moment_targets: tuple = (0.0, 1.0, 0.0, 0.0)
    sigma: float = 0.1
    reference_id: str = ""  # for the one-sample tests: cdf/pmf source
    reference_values: tuple = ()  # for ks-two-sample: the observed data

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown penalty kind {self.kind!r}")
        if len(self.param_settings) < 1:
            raise ConfigError("at least one parameter setting is required")
        if self.samples_per_setting < 2:
            raise ConfigError("samples_per_setting must be >= 2")
        if self.kind == "moments":
            if self.sigma <= 0.0:
                raise ConfigError("sigma must be positive")
            if len(self.moment_targets) != 4:
                raise ConfigError("moments penalty needs 4 targets")
        if self.kind in ("gtest-pooled", "ks-one-sample") and not self.reference_id:
            raise ConfigError(f"{self.kind} needs a reference distribution id")
        if self.kind == "ks-two-sample" and len(self.reference_values) < 5:
            raise ConfigError("ks-two-sample needs at least 5 reference values")

    @property
    def arity(self) -> int:
        return len(self.param_settings[0])


def _log_p(p: float) -> float:
    return math.log(max(p, _P_FLOOR))


def penalty_term(spec: PenaltySpec, theta, samples: SampleSet) -> float:
    """Log penalty of one generated batch under one parameter setting."""
    if spec.kind == "moments":
        try:
            stats = summary_moments(samples)
        except (DegenerateSample, SampleTooSmall):
            return NEG_INF
        return moment_penalty(stats, spec.moment_targets, spec.sigma)
    if spec.kind == "gtest-bernoulli":
        values = samples.values
        if not np.all((values == 0.0) | (values == 1.0)):
            return NEG_INF  # non-Bernoulli support is a structural failure
        return _log_p(g_test_p_value(samples, theta[0]))
    if spec.kind == "gtest-pooled":
        dist = make_reference(spec.reference_id, theta)
        p = g_test_pooled(samples, dist.pmf, dist.tail_mass)
        if p == 0.0:
            return NEG_INF  # non-integer support
        return _log_p(p)
    if spec.kind == "ks-one-sample":
        dist = make_reference(spec.reference_id, theta)
        try:
            _, p = ks_one_sample(samples, dist.cdf)
        except SampleTooSmall:
            return NEG_INF
        return _log_p(p)
    # ks-two-sample
    try:
        _, p = ks_two_sample(samples, np.asarray(spec.reference_values))
    except SampleTooSmall:
        return NEG_INF
    return _log_p(p)


def accumulate_penalty(
    program: Lambda,
    spec: PenaltySpec,
    rng,
    budget: EvalBudget = EvalBudget(),
) -> tuple[float, list]:
    """Total log penalty over all parameter settings, plus the generated
    pseudo-data batches (kept by the chain for its current state).

    Returns ``(-inf, [])`` on the first evaluation error or structural
    failure; later settings are not simulated.
    """
    if len(program.params) != spec.arity:
        raise ConfigError(
            f"program arity {len(program.params)} does not match penalty arity {spec.arity}"
        )
    total = 0.0
    batches = []
    for theta in spec.param_settings:
        try:
            samples = run_sampler(program, theta, spec.samples_per_setting, rng, budget)
        except EvalError:
            return NEG_INF, []
        term = penalty_term(spec, theta, samples)
        if term == NEG_INF:
            return NEG_INF, []
        total += term
        batches.append(samples)
    return total, batches
