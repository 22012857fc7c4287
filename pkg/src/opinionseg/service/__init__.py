"""HTTP front end for the segmentation pipeline."""

from .app import app, create_app

__all__ = ["app", "create_app"]
