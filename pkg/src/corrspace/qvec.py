"""Intrinsic evaluation of embeddings against linguistic feature vectors.

Two scores over row-aligned matrices X (distributional, columns x_i) and S
(linguistic, columns s_j):

* the alignment score: each embedding dimension may align to at most one
  linguistic dimension; the score is the maximum total Pearson correlation
  over such alignments, which decomposes per dimension into
  max(0, max_j r(x_i, s_j)). Dimensions whose best correlation is not
  positive stay unaligned and contribute nothing.
* the CCA score: the first canonical correlation between X and S.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .corpus import EmbeddingTable
from .errors import DimensionError, VocabularyError


@dataclass
class QvecInstance:
    x: np.ndarray  # (n, D) distributional vectors
    s: np.ndarray  # (n, P) linguistic vectors
    vocab: list[str]
    coverage: float = 1.0  # fraction of the embedding vocabulary that aligned

    def __post_init__(self):
        if self.x.shape[0] != self.s.shape[0] or self.x.shape[0] != len(self.vocab):
            raise DimensionError(
                f"rows of x {self.x.shape}, s {self.s.shape} and vocab "
                f"({len(self.vocab)}) must agree"
            )
        if self.x.shape[0] < 2:
            raise DimensionError("need at least 2 aligned words")


@dataclass
class QvecResult:
    score: float
    alignment: list  # per embedding dimension: linguistic column or None
    degenerate_x: int  # constant embedding columns (correlation forced to 0)
    degenerate_s: int


def align_vocab(emb: EmbeddingTable, ling: EmbeddingTable) -> QvecInstance:
    """Intersect the two vocabularies, keeping the embedding table's order."""
    rows_x = []
    rows_s = []
    vocab = []
    for word, row in zip(emb.vocab.words, emb.matrix):
        j = ling.vocab.index.get(word)
        if j is not None:
            rows_x.append(row)
            rows_s.append(ling.matrix[j])
            vocab.append(word)
    if not vocab:
        raise VocabularyError(
            f"no shared words between {emb.vocab.language} embeddings and the linguistic table"
        )
    coverage = len(vocab) / len(emb.vocab)
    return QvecInstance(np.array(rows_x), np.array(rows_s), vocab, coverage=coverage)


def correlation_matrix(inst: QvecInstance):
    """Pearson correlations r[i, j] between embedding and linguistic columns.

    Returns (r, degenerate_x, degenerate_s); constant columns produce zero
    correlations and are counted, never NaN.
    """
    d, p = inst.x.shape[1], inst.s.shape[1]
    r = np.zeros((d, p))
    deg_x = np.zeros(d, dtype=bool)
    deg_s = np.zeros(p, dtype=bool)
    for i in range(d):
        for j in range(p):
            r[i, j], degenerate = numerics.pearson_flagged(inst.x[:, i], inst.s[:, j])
            if degenerate:
                if np.var(inst.x[:, i]) < numerics.VAR_FLOOR:
                    deg_x[i] = True
                if np.var(inst.s[:, j]) < numerics.VAR_FLOOR:
                    deg_s[j] = True
    return r, int(deg_x.sum()), int(deg_s.sum())


def qvec_score(inst: QvecInstance) -> QvecResult:
    """Maximum total correlation under the one-alignment-per-dimension rule.

    Ties in a dimension's best correlation break toward the smallest
    linguistic column index.
    """
    r, deg_x, deg_s = correlation_matrix(inst)
    score = 0.0
    alignment = []
    for i in range(r.shape[0]):
        j = int(np.argmax(r[i]))  # first maximum wins ties
        if r[i, j] > 0.0:
            score += r[i, j]
            alignment.append(j)
        else:
            alignment.append(None)
    return QvecResult(score=float(score), alignment=alignment,
                      degenerate_x=deg_x, degenerate_s=deg_s)


def qvec_cca_score(inst: QvecInstance) -> float:
    """First canonical correlation between the aligned matrices."""
    return numerics.cca_first_correlation(inst.x, inst.s)


def multilingual_instance(tables, lings, tags=None) -> QvecInstance:
    """Stack per-language aligned instances row-wise.

    `tables` and `lings` pair up positionally; vocabularies get a language
    tag prefix so identical spellings in different languages cannot collide.
    All linguistic tables must share the feature dimension, all embedding
    tables the embedding dimension.
    """
    if len(tables) != len(lings) or not tables:
        raise DimensionError("need one linguistic table per embedding table")
    if tags is None:
        tags = [t.vocab.language for t in tables]
    instances = [align_vocab(t, l) for t, l in zip(tables, lings)]
    dims_p = {inst.s.shape[1] for inst in instances}
    if len(dims_p) > 1:
        raise DimensionError(f"linguistic feature dimensions differ across languages: {sorted(dims_p)}")
    dims_d = {inst.x.shape[1] for inst in instances}
    if len(dims_d) > 1:
        raise DimensionError(f"embedding dimensions differ across languages: {sorted(dims_d)}")
    vocab = [f"{tag}:{w}" for tag, inst in zip(tags, instances) for w in inst.vocab]
    total_words = sum(len(t.vocab) for t in tables)
    coverage = sum(len(inst.vocab) for inst in instances) / total_words
    return QvecInstance(
        np.concatenate([inst.x for inst in instances]),
        np.concatenate([inst.s for inst in instances]),
        vocab,
        coverage=coverage,
    )
