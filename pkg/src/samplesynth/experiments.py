"""Experiment orchestration: distribution learning, data generalization,
posterior compilation, and prior showcases.

Every run is reproducible: parameter settings derive from the experiment
seed, chain seeds derive from the seed and the chain index, and chains merge
in index order regardless of how many workers executed them.
"""

from __future__ import annotations

import csv
import math
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .corpus import build_grammar_state, load_corpus
from .errors import ConfigError, DataError
from .grammar import sample_program, score_program
from .lang import REAL, EvalBudget, EvalError, Lambda, parse_program, run_sampler, to_text
from .mcmc import ChainConfig, ChainResult, run_chain
from .penalty import NEG_INF, PenaltySpec, accumulate_penalty
from .reference import TARGET_ARITY, THETA_RANGES, make_reference, reference_sample
from .reportio import emit_histogram, emit_trace, write_report
from .stats import g_test_p_value, g_test_pooled, ks_one_sample, ks_two_sample, summary_moments

TASKS = ("learn", "generalize", "compile", "showcase")


class CsvFormatError(DataError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    seed: int = 0
    out_dir: str = "synth-out"
    chains: int = 20
    iterations: int = 50_000
    temperature: float = 1.0
    # learn
    target: str = ""
    n_settings: int = 5
    samples_per_setting: int = 0  # 0 -> kind default (100; 10000 for moments)
    sigma: float = 0.1
    held_out: tuple = ()
    held_out_count: int = 1
    holdout_samples: int = 1000
    # generalize
    data_path: str = ""
    # compile
    model: str = "beta-binomial"
    posterior_draws: int = 5000
    # grammar
    pseudocount: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    max_depth: int = 12
    extended_primitives: bool = False
    corpus_dir: str = ""
    # evaluation budget during search
    max_steps: int = 2000
    max_recursion: int = 50
    # showcase / reporting
    count: int = 6
    bins: int = 40
    hist_samples: int = 10_000
    workers: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.chains < 1 or self.iterations < 1:
            raise ConfigError("chains and iterations must be >= 1")

    def budget(self) -> EvalBudget:
        return EvalBudget(max_steps=self.max_steps, max_recursion=self.max_recursion)

    def echo(self) -> dict:
        doc = asdict(self)
        doc["held_out"] = [list(t) for t in self.held_out]  # JSON-stable
        return doc

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentConfig":
        known = {f.name for f in ExperimentConfig.__dataclass_fields__.values()}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        doc = dict(doc)
        for key in ("held_out",):
            if key in doc:
                doc[key] = tuple(tuple(v) for v in doc[key])
        try:
            return ExperimentConfig(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def chain_seed(seed: int, index: int) -> int:
    return seed + 1_000_003 * (index + 1)


# ---------------------------------------------------------------------------
# penalty construction per learning target


def _default_j(target: str) -> int:
    return 10_000 if target == "stdnormal" else 100


def penalty_for_target(target: str, settings, cfg: ExperimentConfig) -> PenaltySpec:
    j = cfg.samples_per_setting or _default_j(target)
    if target == "bernoulli":
        return PenaltySpec(kind="gtest-bernoulli", param_settings=settings, samples_per_setting=j)
    if target == "poisson":
        return PenaltySpec(
            kind="gtest-pooled", param_settings=settings, samples_per_setting=j, reference_id=target
        )
    if target in ("gamma", "beta", "normal"):
        return PenaltySpec(
            kind="ks-one-sample", param_settings=settings, samples_per_setting=j, reference_id=target
        )
    if target == "stdnormal":
        return PenaltySpec(
            kind="moments",
            param_settings=settings,
            samples_per_setting=j,
            moment_targets=(0.0, 1.0, 0.0, 0.0),
            sigma=cfg.sigma,
        )
    raise ConfigError(f"no penalty defaults for target {target!r}")


def draw_theta_settings(target: str, cfg: ExperimentConfig):
    """Training and held-out parameter vectors, disjoint, derived from the seed."""
    ranges = THETA_RANGES[target]
    rng = random.Random(cfg.seed * 7_654_321 + 13)
    if not ranges:
        return ((),), ()
    def draw():
        return tuple(round(rng.uniform(lo, hi), 6) for lo, hi in ranges)

    train = []
    while len(train) < cfg.n_settings:
        t = draw()
        if all(_theta_distance(t, u) > 1e-6 for u in train):
            train.append(t)
    if cfg.held_out:
        held = [tuple(float(x) for x in t) for t in cfg.held_out]
    elif target == "bernoulli":
        held = [(0.3,)]
    else:
        held = []
        while len(held) < cfg.held_out_count:
            t = draw()
            if all(_theta_distance(t, u) > 1e-6 for u in train + held):
                held.append(t)
    train = [t for t in train if all(_theta_distance(t, u) > 1e-6 for u in held)]
    while len(train) < cfg.n_settings:
        t = draw()
        if all(_theta_distance(t, u) > 1e-6 for u in train + held):
            train.append(t)
    return tuple(train), tuple(held)


def _theta_distance(a, b) -> float:
    return max((abs(x - y) for x, y in zip(a, b)), default=math.inf)


# ---------------------------------------------------------------------------
# chain fan-out


def _chain_worker(config: ChainConfig) -> ChainResult:
    return run_chain(config)


def run_chains(base: ChainConfig, n_chains: int, seed: int, workers: int = 0) -> list:
    """Independent chains with derived seeds, merged in index order."""
    configs = [replace(base, seed=chain_seed(seed, i)) for i in range(n_chains)]
    if n_chains == 1 or workers == 1:
        return [run_chain(c) for c in configs]
    max_workers = workers or min(n_chains, os.cpu_count() or 1)
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(_chain_worker, configs))


def select_best(results: list) -> tuple[int, ChainResult]:
    best_i = 0
    for i, r in enumerate(results[1:], start=1):
        cur = results[best_i]
        if (r.best_log_penalty, r.best_log_prior) > (cur.best_log_penalty, cur.best_log_prior):
            best_i = i
    return best_i, results[best_i]


# ---------------------------------------------------------------------------
# final test evaluation of a candidate program


def evaluate_against_target(program: Lambda, target: str, theta, count: int, seed: int, cfg) -> dict:
    """Fresh statistical check of a program at one parameter setting."""
    rng = random.Random(seed)
    out = {"theta": list(theta), "samples": count}
    try:
        samples = run_sampler(program, theta, count, rng, EvalBudget())
    except EvalError as exc:
        out["error"] = str(exc)
        out["p_value"] = 0.0
        return out
    if target == "bernoulli":
        values = samples.values
        if not np.all((values == 0.0) | (values == 1.0)):
            out["p_value"] = 0.0
        else:
            out["p_value"] = g_test_p_value(samples, theta[0])
    elif target == "poisson":
        dist = make_reference(target, theta)
        out["p_value"] = g_test_pooled(samples, dist.pmf, dist.tail_mass)
    elif target in ("gamma", "beta", "normal"):
        dist = make_reference(target, theta)
        d, p = ks_one_sample(samples, dist.cdf)
        out["ks_d"] = d
        out["p_value"] = p
    elif target == "stdnormal":
        try:
            stats = summary_moments(samples)
            out["moments"] = {
                "mean": stats.mean,
                "variance": stats.variance,
                "skewness": stats.skewness,
                "excess_kurtosis": stats.excess_kurtosis,
            }
        except Exception as exc:
            out["error"] = str(exc)
    return out


# ---------------------------------------------------------------------------
# learn


def run_learn_distribution(cfg: ExperimentConfig) -> dict:
    if cfg.target not in TARGET_ARITY:
        raise ConfigError(f"unknown learning target {cfg.target!r}")
    t_start = time.time()
    corpus = load_corpus(cfg.corpus_dir or None)
    grammar = build_grammar_state(
        corpus,
        exclude=cfg.target,
        pseudocount=cfg.pseudocount,
        alpha=cfg.alpha,
        beta=cfg.beta,
        max_depth=cfg.max_depth,
        extended_primitives=cfg.extended_primitives,
    )
    train, held = draw_theta_settings(cfg.target, cfg)
    spec = penalty_for_target(cfg.target, train, cfg)
    base = ChainConfig(
        iterations=cfg.iterations,
        seed=0,
        grammar=grammar,
        penalty=spec,
        param_types=(REAL,) * TARGET_ARITY[cfg.target],
        return_type=REAL,
        temperature=cfg.temperature,
        budget=cfg.budget(),
    )
    results = run_chains(base, cfg.chains, cfg.seed, cfg.workers)
    best_chain, best = select_best(results)

    out_dir = Path(cfg.out_dir)
    chains_doc = []
    for i, r in enumerate(results):
        trace_path = emit_trace(r.penalty_trace, out_dir / f"chain_{i:02d}_trace.csv")
        chains_doc.append(
            {
                "index": i,
                "seed": r.seed,
                "best_log_penalty": r.best_log_penalty,
                "best_iteration": r.best_iteration,
                "acceptance_rate": r.acceptance_rate,
                "trace_csv": trace_path,
            }
        )

    train_results = [
        evaluate_against_target(
            best.best_program, cfg.target, theta, cfg.holdout_samples, cfg.seed * 31 + 101 + i, cfg
        )
        for i, theta in enumerate(train)
    ]
    held_results = [
        evaluate_against_target(
            best.best_program, cfg.target, theta, cfg.holdout_samples, cfg.seed * 37 + 707 + i, cfg
        )
        for i, theta in enumerate(held)
    ]
    if cfg.target == "stdnormal":
        held_results.append(
            evaluate_against_target(
                best.best_program, cfg.target, (), 10_000, cfg.seed * 41 + 909, cfg
            )
        )

    histograms = _emit_comparison_histograms(best.best_program, cfg, held or [()])

    report = {
        "format_version": 1,
        "task": "learn",
        "target": cfg.target,
        "seed": cfg.seed,
        "config": cfg.echo(),
        "train_settings": [list(t) for t in train],
        "held_out_settings": [list(t) for t in held],
        "best": {
            "program": best.best_text,
            "log_penalty": best.best_log_penalty,
            "log_prior": best.best_log_prior,
            "chain_index": best_chain,
            "iteration": best.best_iteration,
        },
        "chains": chains_doc,
        "train_results": train_results,
        "held_out_results": held_results,
        "histograms": histograms,
        "elapsed_seconds": time.time() - t_start,
    }
    report["report_path"] = write_report(report, out_dir)
    return report


def _emit_comparison_histograms(program: Lambda, cfg: ExperimentConfig, settings) -> list:
    out = []
    out_dir = Path(cfg.out_dir)
    for i, theta in enumerate(settings):
        entry = {"theta": list(theta)}
        try:
            samples = run_sampler(
                program, theta, cfg.hist_samples, random.Random(cfg.seed * 53 + 11 + i), EvalBudget()
            )
            entry["program_csv"] = emit_histogram(
                samples, cfg.bins, out_dir / f"hist_program_{i:02d}.csv"
            )
        except EvalError as exc:
            entry["program_error"] = str(exc)
        if cfg.task == "learn" and cfg.target:
            ref = reference_sample(cfg.target, theta, cfg.hist_samples, cfg.seed * 59 + 23 + i)
            entry["reference_csv"] = emit_histogram(
                ref, cfg.bins, out_dir / f"hist_reference_{i:02d}.csv"
            )
        out.append(entry)
    return out


# ---------------------------------------------------------------------------
# generalize


def read_univariate_csv(path) -> np.ndarray:
    """Strict one-column numeric CSV; anything else is a CsvFormatError."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    values = []
    with open(path, newline="") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != 1:
                raise CsvFormatError(f"{path}:{row_no}: expected one column, got {len(row)}")
            try:
                values.append(float(row[0]))
            except ValueError:
                raise CsvFormatError(f"{path}:{row_no}: non-numeric cell {row[0]!r}") from None
            if not math.isfinite(values[-1]):
                raise CsvFormatError(f"{path}:{row_no}: non-finite value")
    if len(values) < 20:
        raise CsvFormatError(f"{path}: need at least 20 rows, got {len(values)}")
    return np.asarray(values, dtype=np.float64)


def run_generalize_data(cfg: ExperimentConfig, data: np.ndarray | None = None) -> dict:
    t_start = time.time()
    if data is None:
        data = read_univariate_csv(cfg.data_path)
    indices = list(range(len(data)))
    random.Random(cfg.seed * 11 + 5).shuffle(indices)
    half = len(indices) // 2
    train = data[indices[:half]]
    held = data[indices[half:]]

    corpus = load_corpus(cfg.corpus_dir or None)
    grammar = build_grammar_state(
        corpus,
        pseudocount=cfg.pseudocount,
        alpha=cfg.alpha,
        beta=cfg.beta,
        max_depth=cfg.max_depth,
        extended_primitives=cfg.extended_primitives,
    )
    spec = PenaltySpec(
        kind="ks-two-sample",
        param_settings=((),),
        samples_per_setting=cfg.samples_per_setting or 100,
        reference_values=tuple(train),
    )
    base = ChainConfig(
        iterations=cfg.iterations,
        seed=0,
        grammar=grammar,
        penalty=spec,
        param_types=(),
        return_type=REAL,
        temperature=cfg.temperature,
        budget=cfg.budget(),
    )
    results = run_chains(base, cfg.chains, cfg.seed, cfg.workers)
    best_chain, best = select_best(results)

    out_dir = Path(cfg.out_dir)
    chains_doc = []
    for i, r in enumerate(results):
        chains_doc.append(
            {
                "index": i,
                "seed": r.seed,
                "best_log_penalty": r.best_log_penalty,
                "best_iteration": r.best_iteration,
                "acceptance_rate": r.acceptance_rate,
                "trace_csv": emit_trace(r.penalty_trace, out_dir / f"chain_{i:02d}_trace.csv"),
            }
        )

    held_doc = {"samples": int(held.size)}
    try:
        program_samples = run_sampler(
            best.best_program, (), max(cfg.holdout_samples, 100), random.Random(cfg.seed * 61 + 3),
            EvalBudget(),
        )
        d, p = ks_two_sample(program_samples, held)
        held_doc.update({"ks_d": d, "p_value": p})
    except EvalError as exc:
        held_doc.update({"error": str(exc), "p_value": 0.0})

    histograms = _emit_comparison_histograms(best.best_program, cfg, [()])
    histograms[0]["data_csv"] = emit_histogram(data, cfg.bins, out_dir / "hist_data.csv")

    report = {
        "format_version": 1,
        "task": "generalize",
        "seed": cfg.seed,
        "config": cfg.echo(),
        "data_rows": int(data.size),
        "best": {
            "program": best.best_text,
            "log_penalty": best.best_log_penalty,
            "log_prior": best.best_log_prior,
            "chain_index": best_chain,
            "iteration": best.best_iteration,
        },
        "chains": chains_doc,
        "held_out_results": held_doc,
        "histograms": histograms,
        "elapsed_seconds": time.time() - t_start,
    }
    report["report_path"] = write_report(report, out_dir)
    return report


# ---------------------------------------------------------------------------
# compile


def beta_binomial_posterior_mh(draws: int, seed: int, thin: int = 10, burn_in: int = 500) -> np.ndarray:
    """Sample the uncollapsed conjugate model's posterior over the coin weight
    given four successes (uniform prior), i.e. density proportional to
    theta^4 on (0, 1), with an independence-proposal MH chain."""
    rng = random.Random(seed)
    theta = 0.5
    out = np.empty(draws, dtype=np.float64)
    total = burn_in + draws * thin
    k = 0
    for i in range(total):
        prop = rng.random()
        if prop > 0.0 and math.log(rng.random()) < 4.0 * (math.log(prop) - math.log(theta)):
            theta = prop
        if i >= burn_in and (i - burn_in) % thin == 0:
            out[k] = theta
            k += 1
    return out[:k]


def run_compile_posterior(cfg: ExperimentConfig) -> dict:
    if cfg.model != "beta-binomial":
        raise ConfigError(f"unknown compilation model {cfg.model!r}; expected 'beta-binomial'")
    t_start = time.time()
    posterior = beta_binomial_posterior_mh(cfg.posterior_draws, cfg.seed * 97 + 7)
    exact = reference_sample("beta", (5.0,), cfg.posterior_draws, cfg.seed * 89 + 19)
    d_check, p_check = ks_two_sample(posterior, exact)

    corpus = load_corpus(cfg.corpus_dir or None)
    grammar = build_grammar_state(
        corpus,
        pseudocount=cfg.pseudocount,
        alpha=cfg.alpha,
        beta=cfg.beta,
        max_depth=cfg.max_depth,
        extended_primitives=True,
    )
    # two independent batches against the full posterior sample sharpen the
    # likelihood enough to separate near-exact programs from lucky ones
    spec = PenaltySpec(
        kind="ks-two-sample",
        param_settings=((), ()),
        samples_per_setting=cfg.samples_per_setting or 500,
        reference_values=tuple(posterior),
    )
    base = ChainConfig(
        iterations=cfg.iterations,
        seed=0,
        grammar=grammar,
        penalty=spec,
        param_types=(),
        return_type=REAL,
        temperature=cfg.temperature,
        budget=cfg.budget(),
    )
    results = run_chains(base, cfg.chains, cfg.seed, cfg.workers)
    best_chain, best = select_best(results)

    out_dir = Path(cfg.out_dir)
    final = {"posterior_vs_exact": {"ks_d": d_check, "p_value": p_check}}
    try:
        program_samples = run_sampler(
            best.best_program, (), cfg.holdout_samples, random.Random(cfg.seed * 71 + 29), EvalBudget()
        )
        fresh_exact = reference_sample("beta", (5.0,), cfg.posterior_draws, cfg.seed * 83 + 31)
        d_best, p_best = ks_two_sample(program_samples, fresh_exact)
        final["best_vs_exact"] = {
            "ks_d": d_best,
            "p_value": p_best,
            "mean": float(program_samples.values.mean()),
            "target_mean": 5.0 / 6.0,
        }
        emit_histogram(program_samples, cfg.bins, out_dir / "hist_program_00.csv")
        emit_histogram(fresh_exact, cfg.bins, out_dir / "hist_reference_00.csv")
    except EvalError as exc:
        final["best_vs_exact"] = {"error": str(exc), "p_value": 0.0}

    chains_doc = [
        {
            "index": i,
            "seed": r.seed,
            "best_log_penalty": r.best_log_penalty,
            "best_iteration": r.best_iteration,
            "acceptance_rate": r.acceptance_rate,
            "trace_csv": emit_trace(r.penalty_trace, out_dir / f"chain_{i:02d}_trace.csv"),
        }
        for i, r in enumerate(results)
    ]
    report = {
        "format_version": 1,
        "task": "compile",
        "model": cfg.model,
        "seed": cfg.seed,
        "config": cfg.echo(),
        "best": {
            "program": best.best_text,
            "log_penalty": best.best_log_penalty,
            "log_prior": best.best_log_prior,
            "chain_index": best_chain,
            "iteration": best.best_iteration,
        },
        "chains": chains_doc,
        "results": final,
        "elapsed_seconds": time.time() - t_start,
    }
    report["report_path"] = write_report(report, out_dir)
    return report


# ---------------------------------------------------------------------------
# showcase


def sample_prior_showcase(cfg: ExperimentConfig) -> dict:
    """Sample programs from the prior, evaluate the survivors, and write one
    histogram CSV per surviving program."""
    t_start = time.time()
    corpus = load_corpus(cfg.corpus_dir or None)
    grammar = build_grammar_state(
        corpus,
        pseudocount=cfg.pseudocount,
        alpha=cfg.alpha,
        beta=cfg.beta,
        max_depth=cfg.max_depth,
        extended_primitives=cfg.extended_primitives,
    )
    rng = random.Random(cfg.seed)
    out_dir = Path(cfg.out_dir)
    kept = []
    skipped = 0
    budget = cfg.budget()
    for i in range(cfg.count):
        program = sample_program([], REAL, grammar.copy(), rng)
        try:
            samples = run_sampler(program, (), cfg.hist_samples, rng, budget)
        except EvalError:
            skipped += 1
            continue
        path = emit_histogram(samples, cfg.bins, out_dir / f"showcase_{i:03d}.csv")
        kept.append({"index": i, "program": to_text(program), "histogram_csv": path})
    report = {
        "format_version": 1,
        "task": "showcase",
        "seed": cfg.seed,
        "config": cfg.echo(),
        "requested": cfg.count,
        "kept": kept,
        "skip_rate": skipped / cfg.count if cfg.count else 0.0,
        "elapsed_seconds": time.time() - t_start,
    }
    report["report_path"] = write_report(report, out_dir, name="showcase.json")
    return report


def run_experiment(cfg: ExperimentConfig) -> dict:
    if cfg.task == "learn":
        return run_learn_distribution(cfg)
    if cfg.task == "generalize":
        return run_generalize_data(cfg)
    if cfg.task == "compile":
        return run_compile_posterior(cfg)
    return sample_prior_showcase(cfg)
