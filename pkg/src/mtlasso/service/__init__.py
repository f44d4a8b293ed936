"""HTTP service wrapping the estimation and inference pipelines."""

from .app import create_app

__all__ = ["create_app"]
