"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class CommandRequest(BaseModel):
    """One command invocation: an optional config file plus key=value overrides."""

    config_path: str | None = Field(default=None, description="plain-text key=value config file")
    overrides: list[str] = Field(default_factory=list, description="key=value override pairs")


class CommandResponse(BaseModel):
    status: str = "ok"
    command: str
    outputs: dict = Field(default_factory=dict)
    messages: list[str] = Field(default_factory=list)


class ErrorResponse(BaseModel):
    status: str = "error"
    category: str  # "config" | "data" | "runtime"
    exit_code: int
    message: str


class HealthResponse(BaseModel):
    status: str = "ok"
    name: str = "hoikit"
    version: str
    commands: list[str]
