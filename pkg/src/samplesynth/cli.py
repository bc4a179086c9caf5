"""``synth``: a thin client for the synthesis service.

Every command builds a JSON request and sends it through the HTTP layer: to
a remote server when ``--server`` is given, otherwise to an in-process
instance of the service (same validation, no network). Exit codes: 0 on
success, 2 on configuration errors, 3 on data errors.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3


def _post(path: str, payload: dict, server: str | None) -> httpx.Response:
    if server:
        return httpx.post(server.rstrip("/") + path, json=payload, timeout=None)

    async def go():
        from .service.app import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://synth.internal", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _exit_code_for(response: httpx.Response) -> int:
    if response.status_code == 422:
        return EXIT_CONFIG
    try:
        kind = response.json().get("kind", "")
    except Exception:
        kind = ""
    return {"config": EXIT_CONFIG, "data": EXIT_DATA}.get(kind, EXIT_FAILURE)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        print(f"config file not found: {p}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        print(f"config file is not valid JSON: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG) from None
    if not isinstance(doc, dict):
        print("config file must hold a JSON object", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    return doc


def _experiment_payload(args, task: str) -> dict:
    payload = _load_config_file(getattr(args, "config", None))
    payload["task"] = task
    for key in (
        "seed",
        "out_dir",
        "chains",
        "iterations",
        "temperature",
        "target",
        "data_path",
        "model",
        "count",
        "hist_samples",
        "workers",
    ):
        value = getattr(args, key, None)
        if value is not None:
            payload[key] = value
    return payload


def _print_report_summary(report: dict) -> None:
    task = report.get("task", "?")
    print(f"task: {task}")
    best = report.get("best")
    if best:
        print(f"best program: {best['program']}")
        print(f"best log penalty: {best['log_penalty']:.4f} (chain {best['chain_index']})")
    if task == "learn":
        for section in ("train_results", "held_out_results"):
            rows = report.get(section) or []
            if rows:
                print(f"{section.replace('_', ' ')}:")
                for row in rows:
                    detail = (
                        f"p={row['p_value']:.4g}"
                        if "p_value" in row
                        else json.dumps(row.get("moments", row.get("error", "")))
                    )
                    print(f"  theta={row['theta']} {detail}")
    if task == "generalize":
        held = report.get("held_out_results", {})
        if "p_value" in held:
            print(f"held-out KS: d={held['ks_d']:.4f} p={held['p_value']:.4g}")
    if task == "compile":
        results = report.get("results", {})
        check = results.get("posterior_vs_exact", {})
        print(f"posterior sampler vs analytic: p={check.get('p_value', 0):.4g}")
        best_fit = results.get("best_vs_exact", {})
        if "p_value" in best_fit:
            print(
                f"best program vs analytic: p={best_fit['p_value']:.4g}"
                f" mean={best_fit.get('mean', float('nan')):.4f}"
            )
    if task == "showcase":
        print(f"kept {len(report.get('kept', []))} of {report.get('requested')} programs")
        print(f"skip rate: {report.get('skip_rate'):.3f}")
    if "report_path" in report:
        print(f"report: {report['report_path']}")


def _run_experiment_command(args, task: str) -> int:
    payload = _experiment_payload(args, task)
    try:
        response = _post("/experiments/run", payload, args.server)
    except httpx.HTTPError as exc:
        print(f"request failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if response.status_code != 200:
        body = response.json() if response.content else {}
        print(f"error: {body.get('message', response.text)}", file=sys.stderr)
        return _exit_code_for(response)
    _print_report_summary(response.json()["report"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON file with experiment settings")
        p.add_argument("--out", dest="out_dir", help="output directory")
        p.add_argument("--seed", type=int, help="experiment seed")
        p.add_argument("--chains", type=int, help="number of independent chains")
        p.add_argument("--iterations", type=int, help="iterations per chain")
        p.add_argument("--temperature", type=float, help="MH temperature (1.0 = plain)")
        p.add_argument("--workers", type=int, help="parallel chain workers (0 = auto)")
        p.add_argument("--server", help="base URL of a running synth service")

    p = sub.add_parser("learn", help="infer a sampler for a named distribution")
    p.add_argument("--target", required=True, help="bernoulli|poisson|gamma|beta|stdnormal|normal")
    add_common(p)

    p = sub.add_parser("generalize", help="infer a sampler for a univariate CSV")
    p.add_argument("--data", dest="data_path", required=True, help="CSV of reals, one per row")
    add_common(p)

    p = sub.add_parser("compile", help="compile a posterior into a sampler program")
    p.add_argument("--model", default="beta-binomial")
    add_common(p)

    p = sub.add_parser("showcase", help="sample prior programs and emit histograms")
    p.add_argument("--count", type=int, default=6, help="number of prior programs")
    p.add_argument("--samples", dest="hist_samples", type=int, help="evaluations per program")
    add_common(p)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK
    return _run_experiment_command(args, args.command)


if __name__ == "__main__":
    sys.exit(main())
