"""HTTP service exposing advice, history, and replay."""

from .app import ApiError, create_app, load_rules_config

__all__ = ["ApiError", "create_app", "load_rules_config"]
