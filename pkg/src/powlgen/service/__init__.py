"""HTTP studio service with on-disk session persistence."""

from .app import EXPORT_FORMATS, create_app, serve
from .storage import SessionStore

__all__ = ["EXPORT_FORMATS", "create_app", "serve", "SessionStore"]
