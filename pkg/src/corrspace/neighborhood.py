"""Neighbor clusters in the original monolingual space and their losses.

Each dictionary word is augmented with the centroid of its top-N nearest
vocabulary words (cosine similarity, the word itself excluded, ties broken by
ascending vocabulary index). Centroids come from the input embeddings and
stay fixed; only the mixing weights U and bias b_star are trained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .corpus import EmbeddingTable
from .errors import DimensionError


@dataclass
class NeighborParams:
    """U (d x h) and reconstruction bias b_star (d,)."""

    u: np.ndarray
    b_star: np.ndarray


@dataclass
class NeighborClusterSet:
    n_neighbors: int
    neighbor_indices: np.ndarray  # (n_words, <=N) into the full vocabulary
    centroids: np.ndarray  # (n_words, d), row k pairs with dictionary row k
    short: bool = False  # vocabulary had fewer than N other words


def init_neighbor(dim_in: int, dim_common: int, rng: np.random.Generator) -> NeighborParams:
    bound = np.sqrt(6.0 / (dim_in + dim_common))
    u = rng.uniform(-bound, bound, size=(dim_in, dim_common))
    return NeighborParams(u=u, b_star=np.zeros(dim_in))


def build_neighbor_clusters(table: EmbeddingTable, indices, n_neighbors: int) -> NeighborClusterSet:
    """Top-N neighbor lists and centroids for the given vocabulary indices."""
    if n_neighbors < 1:
        raise DimensionError(f"n_neighbors must be >= 1, got {n_neighbors}")
    indices = np.asarray(indices, dtype=np.intp)
    vocab_size = table.matrix.shape[0]
    short = vocab_size - 1 < n_neighbors
    take = min(n_neighbors, vocab_size - 1)
    if take < 1:
        raise DimensionError("vocabulary too small for neighbor search")

    norms = np.linalg.norm(table.matrix, axis=1)
    normed = table.matrix / np.maximum(norms, numerics.NORM_FLOOR)[:, None]
    sims = normed[indices] @ normed.T  # (n_words, |V|)
    sims[np.arange(indices.size), indices] = -np.inf  # never its own neighbor

    neighbor_indices = np.empty((indices.size, take), dtype=np.intp)
    order_tiebreak = np.arange(vocab_size)
    for k in range(indices.size):
        # lexsort: primary key last, so sort by -sim then vocabulary index
        order = np.lexsort((order_tiebreak, -sims[k]))
        neighbor_indices[k] = order[:take]
    centroids = table.matrix[neighbor_indices].mean(axis=1)
    return NeighborClusterSet(n_neighbors, neighbor_indices, centroids, short=short)


def project_augmented(m, c, p, q: NeighborParams):
    """sigmoid(m @ W + c @ U + b); replaces the basic projection when enabled."""
    if m.shape[0] != c.shape[0]:
        raise DimensionError(f"m has {m.shape[0]} rows but c has {c.shape[0]}")
    if c.shape[1] != q.u.shape[0]:
        raise DimensionError(f"c has {c.shape[1]} columns but U expects {q.u.shape[0]}")
    return numerics.sigmoid(numerics.affine(m, p.w, p.b) + c @ q.u)


def augmented_backward(d_h, h, m, c, p, q: NeighborParams):
    """Gradients (d_w, d_u, d_b) of the augmented projection."""
    d_pre = numerics.sigmoid_backward(d_h, h)
    return m.T @ d_pre, c.T @ d_pre, d_pre.sum(axis=0)


def reconstruct_neighbors(h, q: NeighborParams):
    """sigmoid(h @ U^T + b_star); serves both C' (own h) and C* (other h)."""
    if h.shape[1] != q.u.shape[1]:
        raise DimensionError(f"h has {h.shape[1]} columns, expected {q.u.shape[1]}")
    return numerics.sigmoid(h @ q.u.T + q.b_star)


def _recon_term_backward(d_rec, rec, h_src, q, grads, d_h_src):
    d_pre = numerics.sigmoid_backward(d_rec, rec)
    grads["u"] += d_pre.T @ h_src
    grads["b_star"] += d_pre.sum(axis=0)
    d_h_src += d_pre @ q.u


def neighbor_terms_with_grads(c_i, h_i, c_j, h_j, q_i: NeighborParams, q_j: NeighborParams):
    """The four neighborhood reconstruction terms.

    Returns (loss, grads_i, grads_j, d_h_i, d_h_j); grads hold 'u' and
    'b_star'. Centroids are fixed inputs and receive no gradient.
    """
    grads_i = {"u": np.zeros_like(q_i.u), "b_star": np.zeros_like(q_i.b_star)}
    grads_j = {"u": np.zeros_like(q_j.u), "b_star": np.zeros_like(q_j.b_star)}
    d_h_i = np.zeros_like(h_i)
    d_h_j = np.zeros_like(h_j)

    loss = 0.0
    for c, q, grads, h_own, d_h_own, h_other, d_h_other in (
        (c_i, q_i, grads_i, h_i, d_h_i, h_j, d_h_j),
        (c_j, q_j, grads_j, h_j, d_h_j, h_i, d_h_i),
    ):
        rec_mono = reconstruct_neighbors(h_own, q)
        term, d_rec, _ = numerics.cosine_row_loss_backward(rec_mono, c)
        loss += term
        _recon_term_backward(d_rec, rec_mono, h_own, q, grads, d_h_own)

        rec_cross = reconstruct_neighbors(h_other, q)
        term, d_rec, _ = numerics.cosine_row_loss_backward(rec_cross, c)
        loss += term
        _recon_term_backward(d_rec, rec_cross, h_other, q, grads, d_h_other)
    return loss, grads_i, grads_j, d_h_i, d_h_j


def loss_neighbors(c_i, c_j, h_i, h_j, q_i: NeighborParams, q_j: NeighborParams) -> float:
    """O_N for one pair given already-projected h matrices."""
    return neighbor_terms_with_grads(c_i, h_i, c_j, h_j, q_i, q_j)[0]
