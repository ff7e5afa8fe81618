"""HTTP service exposing the package over FastAPI."""

from .app import app, create_app

__all__ = ["app", "create_app"]
