"""Command-line client for the cascadia service.

The CLI is a thin HTTP client: every subcommand calls the service API.  By
default it mounts the app in-process (no server needed); point it at a
running server with ``--url`` or ``CASCADIA_URL``.  Every flag can also be
set through an environment variable prefixed ``CASCADIA_`` (e.g.
``CASCADIA_RHO=0.3 cascadia solve ...``).

Exit codes: 0 ok, 2 validation failure, 3 compute-cap refusal, 1 otherwise.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

EXIT_VALIDATION = 2
EXIT_COMPUTE_CAP = 3


def _client(url: str | None) -> httpx.Client:
    if url:
        return httpx.Client(base_url=url, timeout=None)
    import warnings
    with warnings.catch_warnings():
        # starlette's bundled test client backs the in-process mode; its
        # deprecation chatter is not actionable for CLI users
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    from .service.app import create_app
    return TestClient(create_app())


def _fail_from_response(resp: httpx.Response):
    try:
        detail = resp.json().get("detail", {})
    except json.JSONDecodeError:
        detail = {}
    code = detail.get("code") if isinstance(detail, dict) else None
    if code == "validation_failure":
        for v in detail.get("violations", []):
            click.echo(f"violation: {v}", err=True)
        sys.exit(EXIT_VALIDATION)
    if code == "compute_cap":
        click.echo(f"refused: {detail.get('message', 'compute cap exceeded')} "
                   f"(estimated cost {detail.get('estimated_cost')})", err=True)
        sys.exit(EXIT_COMPUTE_CAP)
    click.echo(f"error {resp.status_code}: {resp.text}", err=True)
    sys.exit(1)


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        _fail_from_response(resp)
    return resp.json()


def _read_json(path: str) -> dict:
    return json.loads(Path(path).read_text())


def _write_json(path: str | None, doc: dict):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        click.echo(text, nl=False)


@click.group(context_settings={"auto_envvar_prefix": "CASCADIA"})
@click.option("--url", envvar="CASCADIA_URL", default=None,
              help="Base URL of a running cascadia server (default: in-process).")
@click.pass_context
def main(ctx, url):
    """Select and sequence quiz questions under the cascade browse model."""
    ctx.obj = _client(url)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Generator config JSON (n_questions, n_choices, budget, cell, seed).")
@click.option("--out", "out_path", default=None, help="Instance output path.")
@click.pass_obj
def generate(client, config_path, out_path):
    """Generate a benchmark instance."""
    cfg = _read_json(config_path)
    cell = cfg.pop("cell", {})
    payload = {**cfg, **cell}
    doc = _post(client, "/instances/generate", payload)
    _write_json(out_path, doc)


@main.command()
@click.option("--instance", "instance_path", required=True, type=click.Path(exists=True))
@click.option("--policy", default="alg2_general", show_default=True,
              help="Policy kind (alg1_no_pna..alg6_scrolling, random, max_ent, exact_optimal).")
@click.option("--rho", default=0.5, show_default=True, type=float)
@click.option("--rho-sweep", default=None,
              help="Comma-separated reachability floors to sweep (overrides --rho).")
@click.option("--depth", default=1, show_default=True, type=int,
              help="Partial-enumeration depth of the inner solver.")
@click.option("--kappa", default=None, type=float,
              help="No-skip answer-rate shift (alg5 only).")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--zero-pna", is_flag=True, help="Project skip probabilities to zero first.")
@click.option("--compute-cap", default=1e9, show_default=True, type=float)
@click.option("--out", "out_path", default=None, help="Sequence output path.")
@click.pass_obj
def solve(client, instance_path, policy, rho, rho_sweep, depth, kappa, seed,
          zero_pna, compute_cap, out_path):
    """Solve an instance and emit the chosen sequence."""
    payload = {
        "instance": _read_json(instance_path),
        "policy": {
            "kind": policy, "rho": rho, "depth": depth, "seed": seed,
            "kappa": kappa, "zero_pna": zero_pna, "compute_cap": compute_cap,
            "rho_sweep": [float(x) for x in rho_sweep.split(",")] if rho_sweep else None,
        },
    }
    doc = _post(client, "/solve", payload)
    _write_json(out_path, doc)


@main.command("eval")
@click.option("--instance", "instance_path", required=True, type=click.Path(exists=True))
@click.option("--sequence", "sequence_path", required=True, type=click.Path(exists=True),
              help="JSON file with a top-level list or a 'sequence' key.")
@click.option("--mc", "mc_samples", default=None, type=int,
              help="Estimate by Monte Carlo with this many samples instead of exactly.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--variant", default="auto", show_default=True,
              type=click.Choice(["auto", "basic", "no_pna", "slot_decay", "scrolling"]))
@click.option("--out", "out_path", default=None)
@click.pass_obj
def eval_cmd(client, instance_path, sequence_path, mc_samples, seed, variant, out_path):
    """Evaluate a sequence's expected utility."""
    seq_doc = _read_json(sequence_path)
    sequence = seq_doc if isinstance(seq_doc, list) else seq_doc["sequence"]
    payload = {
        "instance": _read_json(instance_path),
        "sequence": sequence,
        "variant": variant,
        "mc_samples": mc_samples,
        "seed": seed,
    }
    doc = _post(client, "/evaluate", payload)
    _write_json(out_path, doc)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Suite config JSON (see ExperimentConfig).")
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="Directory for results.csv and results.json.")
@click.pass_obj
def suite(client, config_path, out_dir):
    """Run an experiment suite and write result files."""
    doc = _post(client, "/suite", {"config": _read_json(config_path)})
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(doc["csv"])
    (out / "results.json").write_text(doc["json_doc"])
    click.echo(f"{doc['suite']}: {doc['n_rows']} rows -> {out / 'results.csv'}")


@main.command()
@click.option("--instance", "instance_path", required=True, type=click.Path(exists=True))
@click.pass_obj
def check(client, instance_path):
    """Validate an instance and probe its utility for monotone submodularity."""
    doc = _post(client, "/check", _read_json(instance_path))
    click.echo(json.dumps(doc, indent=2, sort_keys=True))
    if not doc["ok"]:
        sys.exit(EXIT_VALIDATION)


@main.command()
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True))
@click.option("--policy", default="alg2_general", show_default=True)
@click.option("--rho", default=0.5, show_default=True, type=float)
@click.option("--depth", default=1, show_default=True, type=int)
@click.option("--out", "out_path", default=None)
@click.pass_obj
def assort(client, catalog_path, policy, rho, depth, out_path):
    """Rank catalog products to maximize expected revenue."""
    payload = {
        "catalog": _read_json(catalog_path),
        "policy": {"kind": policy, "rho": rho, "depth": depth},
    }
    doc = _post(client, "/assortment/optimize", payload)
    _write_json(out_path, doc)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn
    uvicorn.run("cascadia.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
