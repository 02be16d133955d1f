"""Thin-client command line for the simulation service.

Every command talks to the HTTP interface: by default an in-process
instance of the FastAPI app (no server needed), or a remote server when
``--server``/``CHI2ATOM_SERVER`` is set. Artifacts returned by the service
are written under the output directory together with the run manifest.

Exit codes: 1 for configuration errors (the message names the offending
key), 2 for numerical failures inside an experiment.
"""

from __future__ import annotations

import json
import os
import pathlib
import sys

import click
import httpx

ENV_SERVER = "CHI2ATOM_SERVER"
ENV_OUT = "CHI2ATOM_OUT"
CONFIG_ERROR_EXIT = 1
NUMERICAL_ERROR_EXIT = 2


def _client(server: str | None) -> httpx.Client:
    server = server or os.environ.get(ENV_SERVER)
    if server:
        return httpx.Client(base_url=server, timeout=httpx.Timeout(None))
    # in-process fallback: drive the ASGI app directly through the same HTTP surface
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

        from .service.app import app

        return TestClient(app)


def _fail_config(message: str):
    click.echo(f"config error: {message}", err=True)
    sys.exit(CONFIG_ERROR_EXIT)


def _fail_numerical(message: str):
    click.echo(f"numerical failure: {message}", err=True)
    sys.exit(NUMERICAL_ERROR_EXIT)


def _handle_error(response: httpx.Response):
    try:
        detail = response.json().get("detail")
    except Exception:
        detail = response.text
    if response.status_code == 422:
        _fail_config(json.dumps(detail))
    if response.status_code == 400:
        _fail_config(detail.get("message", json.dumps(detail)) if isinstance(detail, dict) else str(detail))
    if response.status_code == 500 and isinstance(detail, dict) and detail.get("type") == "numerical":
        _fail_numerical(f"[{detail.get('experiment')}] {detail.get('message')} "
                        f"params={json.dumps(detail.get('params', {}))}")
    click.echo(f"service error {response.status_code}: {detail}", err=True)
    sys.exit(NUMERICAL_ERROR_EXIT)


@click.group()
def main():
    """chi(2) artificial-atom simulator."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSON experiment config ({\"experiment\": ..., \"params\": {...}}).")
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False),
              help=f"Output directory (default ${ENV_OUT} or ./chi2atom-out).")
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "json"]),
              help="Tabular artifact format.")
@click.option("--jobs", default=None, type=int, help="Worker count for sweep experiments.")
@click.option("--server", default=None, help=f"Service URL (default ${ENV_SERVER} or in-process).")
def run(config_path: str, out_dir: str | None, fmt: str, jobs: int | None, server: str | None):
    """Execute the experiment described by a config file."""
    try:
        payload = json.loads(pathlib.Path(config_path).read_text())
    except json.JSONDecodeError as exc:
        _fail_config(f"config is not valid JSON: {exc}")
    if not isinstance(payload, dict):
        _fail_config("config must be a JSON object")
    payload["format"] = fmt
    if jobs is not None:
        if payload.get("experiment") != "sweep":
            _fail_config("--jobs only applies to the sweep experiment")
        payload.setdefault("params", {})["jobs"] = jobs

    out = pathlib.Path(out_dir or os.environ.get(ENV_OUT, "chi2atom-out"))
    with _client(server) as client:
        response = client.post("/run", json=payload)
        if response.status_code != 200:
            _handle_error(response)
        body = response.json()

    out.mkdir(parents=True, exist_ok=True)
    for artifact in body["artifacts"]:
        (out / artifact["name"]).write_text(artifact["content"])
    (out / "manifest.json").write_text(json.dumps(body["manifest"], indent=2, sort_keys=True) + "\n")
    click.echo(f"wrote {len(body['artifacts'])} artifact(s) + manifest.json to {out}")
    for key, value in sorted(body["manifest"]["summary"].items()):
        click.echo(f"  {key}: {json.dumps(value)}")


@main.command()
@click.argument("name")
@click.option("--server", default=None, help="Service URL (default in-process).")
def preset(name: str, server: str | None):
    """Print a named preset config as JSON (pipe into a file for `run`)."""
    with _client(server) as client:
        response = client.get(f"/presets/{name}")
        if response.status_code == 404:
            _fail_config(response.json()["detail"])
        if response.status_code != 200:
            _handle_error(response)
        click.echo(json.dumps(response.json(), indent=2, sort_keys=True))


@main.command()
@click.option("--server", default=None, help="Service URL (default in-process).")
def presets(server: str | None):
    """List available preset names."""
    with _client(server) as client:
        response = client.get("/presets")
        if response.status_code != 200:
            _handle_error(response)
        for name in response.json()["presets"]:
            click.echo(name)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8420, show_default=True, type=int)
def serve(host: str, port: int):
    """Run the simulation service."""
    import uvicorn

    from .service.app import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
