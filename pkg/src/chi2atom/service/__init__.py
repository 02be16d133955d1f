"""FastAPI service wrapping the simulator."""

from .app import app, create_app  # noqa: F401
