"""Adjudication, scoring and analysis of multi-labeler span annotations over conversations."""

from .corpus import (
    AnnotationSet, Conversation, CorpusError, LabeledSpan, Speaker, Task, TokenLabel, Turn,
    cross_validate, load_corpus,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationSet", "Conversation", "CorpusError", "LabeledSpan", "Speaker", "Task", "TokenLabel", "Turn",
    "cross_validate", "load_corpus",
]
