from .app import app, create_app, dispatch
from .schemas import CommandRequest, CommandResponse, ErrorResponse, HealthResponse

__all__ = [
    "app",
    "create_app",
    "dispatch",
    "CommandRequest",
    "CommandResponse",
    "ErrorResponse",
    "HealthResponse",
]
