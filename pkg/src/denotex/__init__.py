"""Extract question denotations from free-text answer hints."""

from .kb import Entity, KnowledgeBase, Triple, load_kb
from .linker import LinkedUtterance, LinkerConfig, Utterance, link_pair

__version__ = "0.1.0"

__all__ = [
    "Entity",
    "KnowledgeBase",
    "LinkedUtterance",
    "LinkerConfig",
    "Triple",
    "Utterance",
    "link_pair",
    "load_kb",
]
