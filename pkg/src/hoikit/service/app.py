"""FastAPI service wrapping the command runner.

The CLI dispatches through the same validated request/response models via
``dispatch``; HTTP clients get one POST route per command plus /health.
Error categories map to status codes: config -> 400, data -> 422,
runtime -> 500.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import parse_config
from ..errors import HoikitError
from ..runner import COMMANDS, run_command
from .schemas import CommandRequest, CommandResponse, ErrorResponse, HealthResponse

_CATEGORY_NAMES = {1: "config", 2: "data", 3: "runtime"}
_CATEGORY_HTTP = {1: 400, 2: 422, 3: 500}


def dispatch(command: str, request: CommandRequest) -> CommandResponse:
    """Shared entry point for HTTP routes and the in-process CLI client.

    Raises HoikitError subclasses; callers map them to transport-level errors.
    """
    cfg = parse_config(request.config_path, request.overrides)
    result = run_command(command, cfg)
    return CommandResponse(
        command=result.command, outputs=result.outputs, messages=result.messages
    )


def error_response(exc: HoikitError) -> ErrorResponse:
    category = getattr(exc, "exit_category", 3)
    return ErrorResponse(
        category=_CATEGORY_NAMES.get(category, "runtime"),
        exit_code=category,
        message=str(exc),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="hoikit", version=__version__)

    @app.exception_handler(HoikitError)
    async def _hoikit_error(request, exc: HoikitError):  # noqa: ARG001
        payload = error_response(exc)
        status = _CATEGORY_HTTP.get(payload.exit_code, 500)
        return JSONResponse(status_code=status, content=payload.model_dump())

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(version=__version__, commands=list(COMMANDS))

    def _register(command: str) -> None:
        @app.post(f"/commands/{command}", response_model=CommandResponse, name=command)
        def run(request: CommandRequest) -> CommandResponse:
            return dispatch(command, request)

    for command in COMMANDS:
        _register(command)
    return app


app = create_app()
