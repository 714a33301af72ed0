"""Live tutor service: persistence, session engine, and HTTP app."""

from .app import create_app
from .engine import ARMS, ConflictError, EngineError, NotFoundError, RequestError, TutorEngine
from .storage import Store
from .vocab import VocabularyError, VocabularyItem, load_vocabulary, parse_vocabulary

__all__ = [
    "ARMS",
    "ConflictError",
    "EngineError",
    "NotFoundError",
    "RequestError",
    "Store",
    "TutorEngine",
    "VocabularyError",
    "VocabularyItem",
    "create_app",
    "load_vocabulary",
    "parse_vocabulary",
]
