"""HTTP service wrapping the pipeline (FastAPI).

`uvicorn slimraft.service:app` builds the app lazily from the environment
config; merely importing this package never does.
"""

from .api import create_app

__all__ = ["app", "create_app"]


def __getattr__(name: str):
    if name == "app":
        return create_app()
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
