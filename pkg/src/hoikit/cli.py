"""Thin command-line client for the service layer.

Every subcommand builds a CommandRequest and dispatches it either in-process
(default; deterministic, no server needed) or against a remote server given
--server. Exit codes: 0 success, 1 usage/config, 2 data, 3 runtime.
"""

from __future__ import annotations

import json
import sys
import urllib.error
import urllib.request

import click

from .errors import HoikitError
from .runner import COMMANDS


def _print_response(payload: dict) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


def _dispatch_local(command: str, config_path: str | None, overrides: tuple[str, ...]) -> int:
    from .service.app import dispatch, error_response
    from .service.schemas import CommandRequest

    try:
        response = dispatch(command, CommandRequest(config_path=config_path, overrides=list(overrides)))
    except HoikitError as exc:
        payload = error_response(exc)
        _print_response(payload.model_dump())
        return payload.exit_code
    _print_response(response.model_dump())
    return 0


def _dispatch_remote(
    command: str, server: str, config_path: str | None, overrides: tuple[str, ...]
) -> int:
    body = json.dumps({"config_path": config_path, "overrides": list(overrides)}).encode()
    url = f"{server.rstrip('/')}/commands/{command}"
    req = urllib.request.Request(url, data=body, headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as resp:
            payload = json.loads(resp.read().decode())
    except urllib.error.HTTPError as err:
        try:
            payload = json.loads(err.read().decode())
        except json.JSONDecodeError:
            payload = {"status": "error", "exit_code": 3, "message": str(err)}
        _print_response(payload)
        return int(payload.get("exit_code", 3))
    except urllib.error.URLError as err:
        click.echo(f"cannot reach server {server}: {err}", err=True)
        return 3
    _print_response(payload)
    return 0


@click.group()
def main() -> None:
    """Keypoint-based human-object interaction toolkit."""


def _make_command(name: str) -> None:
    @main.command(name=name)
    @click.option("--config", "config_path", type=click.Path(), default=None, help="key=value config file")
    @click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="config override")
    @click.option("--server", default=None, help="remote service URL (default: run in-process)")
    def cmd(config_path: str | None, overrides: tuple[str, ...], server: str | None) -> None:
        if server:
            code = _dispatch_remote(name, server, config_path, overrides)
        else:
            code = _dispatch_local(name, config_path, overrides)
        sys.exit(code)

    cmd.__doc__ = f"Run the {name} workflow."


for _name in COMMANDS:
    _make_command(_name)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8321, type=int)
def serve(host: str, port: int) -> None:
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("hoikit.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
