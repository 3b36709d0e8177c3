"""HTTP-facing session layer; import cost is deliberately separate from the core."""

from .app import ServiceConfig, create_app, load_service_config
from .engine import (
    ConflictError,
    SessionStore,
    UnknownSessionError,
    ValidationFailure,
)
from .renderers import RENDERER_IDS, Payload, RendererSpec, render

__all__ = [
    "ServiceConfig",
    "create_app",
    "load_service_config",
    "SessionStore",
    "UnknownSessionError",
    "ConflictError",
    "ValidationFailure",
    "RENDERER_IDS",
    "Payload",
    "RendererSpec",
    "render",
]
