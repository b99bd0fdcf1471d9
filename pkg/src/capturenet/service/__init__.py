from .app import app, create_app
from .sessions import Session, SessionManager

__all__ = ["Session", "SessionManager", "app", "create_app"]
