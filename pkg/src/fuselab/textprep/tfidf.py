"""Term-frequency features for text-only baselines.

Weight of a term in a document: tf(term, doc) * (ln((1 + N)/(1 + df)) + 1),
with raw counts for tf and the +1 smoothing on the idf so terms present
in every document still contribute.
"""

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Union

from ..exceptions import ConfigError

Doc = Union[str, Sequence[str]]


def _tokens(doc: Doc) -> List[str]:
    if isinstance(doc, str):
        return doc.split()
    return list(doc)


class TfidfFeaturizer:
    """Vocabulary and document frequencies fitted on a corpus."""

    def __init__(self, corpus: Sequence[Doc]):
        if not corpus:
            raise ConfigError("tfidf: corpus is empty")
        self.n_docs = len(corpus)
        df: Dict[str, int] = {}
        for doc in corpus:
            for term in set(_tokens(doc)):
                df[term] = df.get(term, 0) + 1
        if not df:
            raise ConfigError("tfidf: corpus has an empty vocabulary")
        self.vocabulary = sorted(df)
        self.index = {term: i for i, term in enumerate(self.vocabulary)}
        self.idf = {
            term: math.log((1 + self.n_docs) / (1 + df[term])) + 1.0 for term in df
        }

    def vector(self, doc: Doc) -> Dict[int, float]:
        """Sparse {vocabulary index: weight} for one document; terms
        outside the corpus vocabulary are ignored."""
        counts: Dict[str, int] = {}
        for term in _tokens(doc):
            if term in self.index:
                counts[term] = counts.get(term, 0) + 1
        return {self.index[t]: c * self.idf[t] for t, c in counts.items()}


def tfidf_features(corpus: Sequence[Doc], doc: Doc) -> Dict[int, float]:
    """One-shot sparse feature vector of doc against the corpus vocabulary."""
    return TfidfFeaturizer(corpus).vector(doc)
