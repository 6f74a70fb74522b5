"""Structured ICOE extraction from randomized-controlled-trial abstracts."""

from .assembly import ICOERecord, ModelBundle, assemble, classify_polarity, train_models
from .corpus import AbstractRecord, AnnotatedDocument, AnnotatedSpan, load_annotations, load_corpus

__version__ = "0.1.0"

__all__ = [
    "AbstractRecord",
    "AnnotatedDocument",
    "AnnotatedSpan",
    "ICOERecord",
    "ModelBundle",
    "assemble",
    "classify_polarity",
    "load_annotations",
    "load_corpus",
    "train_models",
    "__version__",
]
