"""FastAPI service wrapping one tracking engine."""

from .app import create_app

__all__ = ["create_app"]
