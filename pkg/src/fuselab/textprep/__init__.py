"""Social-text normalization, entity tuples, and term features."""

from .entities import EntityTuple, extract_entity_tuple, pos_tag
from .lexicons import ENV_VAR, Lexicons, default_lexicons, lexicon_dir, load_lexicons
from .normalize import (
    ELONGATED,
    HASHTAG_CLOSE,
    HASHTAG_OPEN,
    TAG_ELONGATED,
    TAG_EMOTICON,
    TAG_HASHTAG_CLOSE,
    TAG_HASHTAG_OPEN,
    TAG_PUNCT,
    TAG_USER_CLOSE,
    TAG_USER_OPEN,
    TAG_WORD,
    USER_CLOSE,
    USER_OPEN,
    NormalizedText,
    Token,
    normalize,
)
from .segment import segment
from .tfidf import TfidfFeaturizer, tfidf_features

__all__ = [
    "ELONGATED",
    "ENV_VAR",
    "EntityTuple",
    "HASHTAG_CLOSE",
    "HASHTAG_OPEN",
    "Lexicons",
    "NormalizedText",
    "TAG_ELONGATED",
    "TAG_EMOTICON",
    "TAG_HASHTAG_CLOSE",
    "TAG_HASHTAG_OPEN",
    "TAG_PUNCT",
    "TAG_USER_CLOSE",
    "TAG_USER_OPEN",
    "TAG_WORD",
    "TfidfFeaturizer",
    "Token",
    "USER_CLOSE",
    "USER_OPEN",
    "default_lexicons",
    "extract_entity_tuple",
    "lexicon_dir",
    "load_lexicons",
    "normalize",
    "pos_tag",
    "segment",
    "tfidf_features",
]
