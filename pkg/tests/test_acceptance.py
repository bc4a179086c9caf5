"""End-to-end acceptance suite.

One test per criterion; each prints a single PASS/FAIL line (run with ``-s``
to see them live). The search-based criteria run real multi-chain inference
at fixed seeds, stopping early once the required outcome is observed; chain
batches execute on two worker processes.
"""

import math
import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np
import pytest

from conftest import enumerate_programs, restricted_state
from samplesynth.corpus import build_grammar_state, load_corpus
from samplesynth.experiments import (
    ExperimentConfig,
    beta_binomial_posterior_mh,
    chain_seed,
    draw_theta_settings,
    penalty_for_target,
    run_learn_distribution,
)
from samplesynth.grammar import CrpStore, sample_program, score_program
from samplesynth.lang import REAL, EvalBudget, Lambda, parse, parse_program, run_sampler, to_text
from samplesynth.mcmc import ChainConfig, init_chain, mh_step, run_chain
from samplesynth.penalty import NEG_INF, PenaltySpec, accumulate_penalty
from samplesynth.reference import make_reference, reference_sample
from samplesynth.stats import (
    chi2_cdf,
    g_test_p_value,
    ks_two_sample,
    summary_moments,
)


def _verdict(number: int, name: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {number} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {number} ({name}): {detail}"


def _run_chain_batches(base: ChainConfig, seed: int, max_chains: int, success, batch: int = 2):
    """Run chains in order with derived seeds, early-stopping on success.

    Returns (successful ChainResult or None, index, chains run, detail of
    the last evaluation).
    """
    detail = ""
    for start in range(0, max_chains, batch):
        configs = [
            replace(base, seed=chain_seed(seed, i))
            for i in range(start, min(start + batch, max_chains))
        ]
        if len(configs) == 1:
            results = [run_chain(configs[0])]
        else:
            with ProcessPoolExecutor(max_workers=len(configs)) as pool:
                results = list(pool.map(run_chain, configs))
        for offset, result in enumerate(results):
            ok, detail = success(result)
            if ok:
                return result, start + offset, start + offset + 1, detail
    return None, -1, max_chains, detail


# ---------------------------------------------------------------------------
# 1. Bernoulli recovery


def test_criterion_1_bernoulli_recovery():
    seed = 104
    corpus = load_corpus()
    grammar = build_grammar_state(corpus, exclude="bernoulli")
    cfg = ExperimentConfig(task="learn", target="bernoulli", seed=seed, n_settings=5)
    train, held = draw_theta_settings("bernoulli", cfg)
    assert held == ((0.3,),)
    spec = penalty_for_target("bernoulli", train, cfg)
    assert spec.samples_per_setting == 100
    base = ChainConfig(
        iterations=50_000,
        seed=0,
        grammar=grammar,
        penalty=spec,
        param_types=(REAL,),
        return_type=REAL,
        budget=EvalBudget(max_steps=2000),
    )
    thetas = [t[0] for t in train] + [0.3]

    def success(result):
        rng = random.Random(987_001)
        ps = []
        for theta in thetas:
            try:
                samples = run_sampler(result.best_program, [theta], 1000, rng, EvalBudget())
                ps.append(g_test_p_value(samples, theta))
            except Exception:
                ps.append(0.0)
        detail = "fresh p at " + ", ".join(f"{t}:{p:.3f}" for t, p in zip(thetas, ps))
        return min(ps) >= 0.05, detail

    result, index, ran, detail = _run_chain_batches(base, seed, max_chains=20, success=success)
    _verdict(
        1,
        "bernoulli recovery",
        result is not None,
        f"chain {index} of {ran} run; train thetas {[t[0] for t in train]}; {detail}",
    )


# ---------------------------------------------------------------------------
# 2. standard-normal moments


def test_criterion_2_stdnormal_moments():
    seed = 2040
    corpus = load_corpus()
    grammar = build_grammar_state(corpus, exclude="stdnormal")
    spec = PenaltySpec(
        kind="moments",
        param_settings=((),),
        samples_per_setting=1000,
        moment_targets=(0.0, 1.0, 0.0, 0.0),
        sigma=0.1,
    )
    base = ChainConfig(
        iterations=50_000,
        seed=0,
        grammar=grammar,
        penalty=spec,
        param_types=(),
        return_type=REAL,
        budget=EvalBudget(max_steps=2000),
    )

    # fallback branch: median training penalty of 1000 prior-sampled programs
    prior_rng = random.Random(55_770)
    prior_penalties = []
    for _ in range(1000):
        program = sample_program([], REAL, grammar.copy(), prior_rng)
        lp, _ = accumulate_penalty(program, spec, prior_rng, base.budget)
        prior_penalties.append(lp)
    median_prior = sorted(prior_penalties)[len(prior_penalties) // 2]

    state = {"best": NEG_INF}

    def success(result):
        state["best"] = max(state["best"], result.best_log_penalty)
        try:
            samples = run_sampler(result.best_program, (), 10_000, random.Random(31_337), EvalBudget())
            m = summary_moments(samples)
        except Exception as exc:
            return False, f"moment evaluation failed: {exc}"
        bounds_ok = (
            abs(m.mean) <= 0.15
            and abs(m.variance - 1.0) <= 0.25
            and abs(m.skewness) <= 0.5
            and abs(m.excess_kurtosis) <= 1.0
        )
        detail = (
            f"J=10000 moments mean={m.mean:.3f} var={m.variance:.3f}"
            f" skew={m.skewness:.3f} exkurt={m.excess_kurtosis:.3f}"
        )
        return bounds_ok, detail

    result, index, ran, detail = _run_chain_batches(base, seed, max_chains=20, success=success)
    moment_branch = result is not None
    if median_prior == NEG_INF:
        nats_gain = math.inf if state["best"] > NEG_INF else 0.0
    else:
        nats_gain = state["best"] - median_prior
    fallback_branch = nats_gain >= 50.0
    _verdict(
        2,
        "standard-normal moments",
        moment_branch or fallback_branch,
        f"moment branch {moment_branch} ({detail}); fallback branch {fallback_branch}"
        f" (best {state['best']:.2f} vs prior median {median_prior}, gain {nats_gain})",
    )


# ---------------------------------------------------------------------------
# 3. posterior compilation


def test_criterion_3_compile_beta_binomial():
    seed = 310
    posterior = beta_binomial_posterior_mh(5000, seed=4242)
    exact = reference_sample("beta", (5.0,), 5000, seed=2424)
    d0, p0 = ks_two_sample(posterior, exact)
    posterior_ok = p0 >= 0.01

    corpus = load_corpus()
    grammar = build_grammar_state(corpus, extended_primitives=True)
    spec = PenaltySpec(
        kind="ks-two-sample",
        param_settings=((), ()),
        samples_per_setting=500,
        reference_values=tuple(posterior),
    )
    base = ChainConfig(
        iterations=20_000,
        seed=0,
        grammar=grammar,
        penalty=spec,
        param_types=(),
        return_type=REAL,
        budget=EvalBudget(max_steps=2000),
    )

    def success(result):
        try:
            samples = run_sampler(result.best_program, (), 1000, random.Random(778_899), EvalBudget())
        except Exception as exc:
            return False, f"evaluation failed: {exc}"
        fresh = reference_sample("beta", (5.0,), 5000, seed=9911)
        _, p = ks_two_sample(samples, fresh)
        mean = float(samples.values.mean())
        detail = f"best vs Beta(5,1): p={p:.4f} mean={mean:.4f} (target 0.8333)"
        return p >= 0.01 and abs(mean - 5.0 / 6.0) <= 0.05, detail

    result, index, ran, detail = _run_chain_batches(base, seed, max_chains=12, success=success)
    _verdict(
        3,
        "posterior compilation",
        posterior_ok and result is not None,
        f"posterior sampler vs analytic p={p0:.4f} (d={d0:.4f}); chain {index} of {ran}; {detail}",
    )


# ---------------------------------------------------------------------------
# 4. statistical oracle suite


def test_criterion_4_statistical_oracles():
    from scipy import integrate

    def chi2_pdf(t, k):
        return t ** (k / 2 - 1) * math.exp(-t / 2) / (2 ** (k / 2) * math.gamma(k / 2))

    worst = 0.0
    for k in range(1, 6):
        for x in np.arange(0.1, 20.05, 0.5):
            oracle, _ = integrate.quad(chi2_pdf, 0.0, float(x), args=(k,), limit=200)
            worst = max(worst, abs(chi2_cdf(float(x), k) - oracle))
    chi2_ok = worst < 1e-6

    g_oracle = 2.0 * (70 * math.log(70 / 50) + 30 * math.log(30 / 50))
    p_oracle = math.erfc(math.sqrt(g_oracle / 2.0))
    p_impl = g_test_p_value(np.array([1.0] * 70 + [0.0] * 30), 0.5)
    gtest_ok = abs(p_impl - p_oracle) < 1e-3 and abs(g_oracle - 16.4565757) < 1e-3

    rng = np.random.default_rng(4)
    pooled = rng.random(20)
    a, b = pooled[:10], pooled[10:]
    _, p_asym = ks_two_sample(a, b)
    p_exact = _exact_permutation_p(a, b)
    ks_ok = abs(p_asym - p_exact) < 0.05

    m = summary_moments(np.array([1.0, 2.0, 3.0]))
    moments_ok = (
        m.mean == 2.0
        and m.variance == pytest.approx(2.0 / 3.0, abs=1e-15)
        and m.skewness == pytest.approx(0.0, abs=1e-12)
        and m.excess_kurtosis == pytest.approx(-1.5, abs=1e-12)
    )

    _verdict(
        4,
        "statistical oracle suite",
        chi2_ok and gtest_ok and ks_ok and moments_ok,
        f"chi2 worst err {worst:.2e}; G={g_oracle:.4f} p={p_impl:.3e} (oracle {p_oracle:.3e});"
        f" KS asym {p_asym:.4f} vs exact {p_exact:.4f}; moments exact {moments_ok}",
    )


def _exact_permutation_p(a, b):
    import itertools

    pooled = np.concatenate([a, b])
    n, na = len(pooled), len(a)
    grid = np.sort(pooled)

    def d_of(idx):
        xa = np.sort(pooled[list(idx)])
        xb = np.sort(np.delete(pooled, list(idx)))
        ca = np.searchsorted(xa, grid, side="right") / len(xa)
        cb = np.searchsorted(xb, grid, side="right") / len(xb)
        return np.abs(ca - cb).max()

    observed = d_of(range(na))
    hits = total = 0
    for combo in itertools.combinations(range(n), na):
        total += 1
        hits += d_of(combo) >= observed - 1e-12
    return hits / total


# ---------------------------------------------------------------------------
# 5. grammar normalization and reuse-store frequencies


def test_criterion_5_grammar_normalization():
    state = restricted_state(max_depth=2, prims={"real": {"+": 1.0}, "bool": {}})
    programs = enumerate_programs(state)
    total = sum(math.exp(score_program(parse_program(text), state)) for text, _ in programs)
    normalization_ok = abs(total - 1.0) < 1e-9

    rng = random.Random(50_001)
    fresh = 0
    trials = 100_000
    for _ in range(trials):
        store = CrpStore(1.0, {7.0: 1})
        fresh += store.draw(rng, rng.random) != 7.0
    fresh_rate = fresh / trials
    crp_ok = abs(fresh_rate - 0.5) < 0.01

    _verdict(
        5,
        "grammar normalization",
        normalization_ok and crp_ok,
        f"sum over {len(programs)} programs = {total:.12f};"
        f" fresh-draw rate {fresh_rate:.4f} vs 1/2",
    )


# ---------------------------------------------------------------------------
# 6. MH correctness on an enumerable target


def test_criterion_6_mh_toy_occupancy():
    state = restricted_state(
        max_depth=2,
        productions={"real": ("constant", "primitive"), "bool": ("constant",)},
        prims={"real": {"+": 1.0}, "bool": {}},
    )
    texts = ["0.0", "1.0", "(+ 0.0 0.0)", "(+ 0.0 1.0)", "(+ 1.0 0.0)", "(+ 1.0 1.0)"]
    penalties = {
        "0.0": 0.0,
        "1.0": 0.7,
        "(+ 0.0 0.0)": 1.2,
        "(+ 0.0 1.0)": 0.3,
        "(+ 1.0 0.0)": 0.3,
        "(+ 1.0 1.0)": 2.0,
    }

    def penalty_fn(program, rng):
        return penalties[to_text(program.body)], ()

    weights = {
        t: math.exp(score_program(Lambda((), REAL, parse(t)), state) + penalties[t]) for t in texts
    }
    z = sum(weights.values())
    target = {t: w / z for t, w in weights.items()}

    cfg = ChainConfig(
        iterations=200_000, seed=5, grammar=state, penalty=None, param_types=(), return_type=REAL
    )
    rng = random.Random(cfg.seed)
    current = init_chain(cfg, rng, penalty_fn=penalty_fn)
    occupancy = Counter()
    for _ in range(cfg.iterations):
        current, _ = mh_step(current, cfg, rng, penalty_fn=penalty_fn)
        occupancy[to_text(current.program.body)] += 1
    tv = 0.5 * sum(abs(occupancy[t] / cfg.iterations - target[t]) for t in texts)
    _verdict(6, "MH toy-target occupancy", tv < 0.05, f"total variation {tv:.4f} after 200k steps")


# ---------------------------------------------------------------------------
# 7. report reproducibility


def test_criterion_7_report_reproducibility(tmp_path):
    cfg = ExperimentConfig(
        task="learn",
        target="bernoulli",
        seed=77,
        chains=2,
        iterations=250,
        out_dir=str(tmp_path / "first"),
        workers=1,
        hist_samples=500,
    )
    report = run_learn_distribution(cfg)
    echo = dict(report["config"])
    echo["out_dir"] = str(tmp_path / "second")
    report2 = run_learn_distribution(ExperimentConfig.from_dict(echo))
    same = report2["best"]["program"] == report["best"]["program"]
    _verdict(
        7,
        "report reproducibility",
        same,
        f"best program reproduced byte-identically: {report['best']['program'][:60]!r}...",
    )


# ---------------------------------------------------------------------------
# 8. corpus fidelity


def test_criterion_8_corpus_fidelity():
    corpus = {e.target_distribution: e.program for e in load_corpus()}
    rng = random.Random(88)
    j = 100_000
    checks = []

    bern = run_sampler(corpus["bernoulli"], [0.5], j, rng).values
    checks.append(("bernoulli mean", abs(bern.mean() - 0.5) < 0.01))

    normal = run_sampler(corpus["normal"], [0.0, 1.0], j, rng).values
    checks.append(("box-muller mean", abs(normal.mean()) < 0.02))
    checks.append(("box-muller var", abs(normal.var() - 1.0) < 0.05))

    pois = run_sampler(corpus["poisson"], [4.0], j, rng).values
    checks.append(("poisson mean", abs(pois.mean() - 4.0) < 0.04))
    checks.append(("poisson var", abs(pois.var() - 4.0) < 0.15))

    beta = run_sampler(corpus["beta"], [5.0], j, rng).values
    checks.append(("beta mean", abs(beta.mean() - 5.0 / 6.0) < 0.003))

    gamma = run_sampler(corpus["gamma"], [3.0], j, rng).values
    checks.append(("gamma mean", abs(gamma.mean() - 3.0) < 0.03))
    checks.append(("gamma var", abs(gamma.var() - 3.0) < 0.15))

    failed = [name for name, ok in checks if not ok]
    _verdict(
        8,
        "corpus fidelity",
        not failed,
        f"{len(checks)} moment checks at 1e5 draws" + (f"; failed: {failed}" if failed else ""),
    )
