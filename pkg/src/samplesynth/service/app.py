"""FastAPI service wrapping the synthesis library.

Endpoints cover the mini-language (parse/evaluate), the grammar prior
(sample/score), the statistical tests, and the experiment runners. Errors
map to HTTP 400 with a ``kind`` of ``config``, ``data``, or ``evaluation``
so thin clients can translate them to exit codes.
"""

from __future__ import annotations

import random

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..corpus import build_grammar_state, load_corpus
from ..errors import ConfigError, DataError
from ..experiments import ExperimentConfig, run_experiment
from ..grammar import sample_program, score_program
from ..lang import (
    BOOL,
    REAL,
    EvalBudget,
    EvalError,
    Lambda,
    LangError,
    evaluate,
    node_count,
    parse,
    parse_program,
    run_sampler,
    to_text,
)
from ..stats import StatsError, chi2_cdf, g_test_p_value, ks_two_sample, summary_moments
from . import schemas


def _grammar_from(options: schemas.GrammarOptions):
    corpus = load_corpus(options.corpus_dir)
    return build_grammar_state(
        corpus,
        exclude=options.exclude,
        pseudocount=options.pseudocount,
        alpha=options.alpha,
        beta=options.beta,
        max_depth=options.max_depth,
        extended_primitives=options.extended_primitives,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="samplesynth", version=__version__)

    @app.exception_handler(LangError)
    async def _lang_error(request: Request, exc: LangError):
        kind = "evaluation" if isinstance(exc, EvalError) else "config"
        return JSONResponse(status_code=400, content={"kind": kind, "message": str(exc)})

    @app.exception_handler(StatsError)
    async def _stats_error(request: Request, exc: StatsError):
        return JSONResponse(status_code=400, content={"kind": "config", "message": str(exc)})

    @app.exception_handler(ConfigError)
    async def _config_error(request: Request, exc: ConfigError):
        return JSONResponse(status_code=400, content={"kind": "config", "message": str(exc)})

    @app.exception_handler(DataError)
    async def _data_error(request: Request, exc: DataError):
        return JSONResponse(status_code=400, content={"kind": "data", "message": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/programs/parse", response_model=schemas.ParseResponse)
    def parse_text(req: schemas.ParseRequest):
        expr = parse(req.text)
        params = [t for _, t in expr.params] if isinstance(expr, Lambda) else []
        return schemas.ParseResponse(
            canonical_text=to_text(expr),
            return_type=expr.type,
            param_types=params,
            node_count=node_count(expr),
        )

    @app.post("/programs/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate_text(req: schemas.EvaluateRequest):
        expr = parse(req.text)
        budget = EvalBudget(max_steps=req.max_steps, max_recursion=req.max_recursion)
        rng = random.Random(req.seed)
        if isinstance(expr, Lambda):
            samples = run_sampler(expr, req.args, req.count, rng, budget)
            return schemas.EvaluateResponse(values=[float(v) for v in samples.values])
        values = [float(evaluate(expr, {}, rng, budget)) for _ in range(req.count)]
        return schemas.EvaluateResponse(values=values)

    @app.post("/grammar/sample", response_model=schemas.SampleProgramsResponse)
    def grammar_sample(req: schemas.SampleProgramsRequest):
        _check_types(req.param_types + [req.return_type])
        state = _grammar_from(req.grammar)
        rng = random.Random(req.seed)
        out = []
        for _ in range(max(1, req.count)):
            program = sample_program(req.param_types, req.return_type, state.copy(), rng)
            out.append(
                schemas.SampledProgram(text=to_text(program), log_prior=score_program(program, state))
            )
        return schemas.SampleProgramsResponse(programs=out)

    @app.post("/grammar/score", response_model=schemas.ScoreResponse)
    def grammar_score(req: schemas.ScoreRequest):
        state = _grammar_from(req.grammar)
        program = parse_program(req.text)
        return schemas.ScoreResponse(log_prior=score_program(program, state))

    @app.post("/stats/moments", response_model=schemas.MomentsResponse)
    def stats_moments(req: schemas.MomentsRequest):
        s = summary_moments(np.asarray(req.values))
        return schemas.MomentsResponse(
            mean=s.mean,
            variance=s.variance,
            skewness=s.skewness,
            excess_kurtosis=s.excess_kurtosis,
        )

    @app.post("/stats/gtest-bernoulli", response_model=schemas.PValueResponse)
    def stats_gtest(req: schemas.GTestRequest):
        return schemas.PValueResponse(p_value=g_test_p_value(np.asarray(req.values), req.theta))

    @app.post("/stats/ks-two-sample", response_model=schemas.KsResponse)
    def stats_ks2(req: schemas.KsTwoSampleRequest):
        d, p = ks_two_sample(np.asarray(req.a), np.asarray(req.b))
        return schemas.KsResponse(d=d, p_value=p)

    @app.post("/stats/chi2-cdf", response_model=schemas.Chi2CdfResponse)
    def stats_chi2(req: schemas.Chi2CdfRequest):
        return schemas.Chi2CdfResponse(cdf=chi2_cdf(req.x, req.k))

    @app.post("/experiments/run", response_model=schemas.ExperimentResponse)
    def experiments_run(req: schemas.ExperimentRequest):
        doc = req.model_dump()
        doc["held_out"] = tuple(tuple(t) for t in doc.get("held_out", []))
        cfg = ExperimentConfig.from_dict(doc)
        report = run_experiment(cfg)
        return schemas.ExperimentResponse(report=report, report_path=report["report_path"])

    return app


def _check_types(tags) -> None:
    for t in tags:
        if t not in (REAL, BOOL):
            raise ConfigError(f"unknown type tag {t!r}")


app = create_app()
