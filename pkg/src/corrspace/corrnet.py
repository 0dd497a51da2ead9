"""Basic correlational network for one language pair.

Each language owns a projection into the shared space and a reconstruction
back out of it; the same weight matrix serves both directions (transposed on
the way back) and both the monolingual and cross-lingual reconstructions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import DimensionError


@dataclass
class ProjectionParams:
    """W (d x h), projection bias b (h,), reconstruction bias b_prime (d,)."""

    w: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray

    @property
    def dim_in(self) -> int:
        return self.w.shape[0]

    @property
    def dim_common(self) -> int:
        return self.w.shape[1]


def init_projection(dim_in: int, dim_common: int, rng: np.random.Generator) -> ProjectionParams:
    """Scaled uniform init for the weight, zeros for both biases."""
    bound = np.sqrt(6.0 / (dim_in + dim_common))
    w = rng.uniform(-bound, bound, size=(dim_in, dim_common))
    return ProjectionParams(w=w, b=np.zeros(dim_common), b_prime=np.zeros(dim_in))


def project_basic(m: np.ndarray, p: ProjectionParams) -> np.ndarray:
    """sigmoid(m @ W + b): rows of `m` mapped into the common space."""
    return numerics.sigmoid(numerics.affine(m, p.w, p.b))


def projection_backward(d_h: np.ndarray, h: np.ndarray, m: np.ndarray, p: ProjectionParams):
    """Gradients (d_w, d_b) of the basic projection; `m` is a fixed input."""
    d_pre = numerics.sigmoid_backward(d_h, h)
    _, d_w, d_b = numerics.affine_backward(d_pre, m, p.w)
    return d_w, d_b


def reconstruct(h: np.ndarray, p: ProjectionParams) -> np.ndarray:
    """sigmoid(h @ W^T + b_prime): back from the common space.

    Feeding the same language's projection gives the monolingual
    reconstruction; feeding the other language's gives the cross-lingual one.
    """
    if h.shape[1] != p.dim_common:
        raise DimensionError(f"reconstruct: h has {h.shape[1]} columns, expected {p.dim_common}")
    return numerics.sigmoid(h @ p.w.T + p.b_prime)


def _recon_term_backward(d_rec, rec, h_src, p, grads, d_h_src):
    # rec = sigmoid(h_src @ W^T + b_prime); accumulates into grads and d_h_src.
    d_pre = numerics.sigmoid_backward(d_rec, rec)
    grads["w"] += d_pre.T @ h_src
    grads["b_prime"] += d_pre.sum(axis=0)
    d_h_src += d_pre @ p.w


def word_terms_with_grads(m_i, h_i, m_j, h_j, p_i: ProjectionParams, p_j: ProjectionParams):
    """The five word-level loss terms for given projections h_i, h_j.

    Returns (loss, grads_i, grads_j, d_h_i, d_h_j) where grads hold 'w' and
    'b_prime' contributions; gradients through the projection itself are the
    caller's job via the returned d_h arrays.
    """
    if m_i.shape[0] != m_j.shape[0]:
        raise DimensionError(
            f"aligned matrices have {m_i.shape[0]} and {m_j.shape[0]} rows"
        )
    grads_i = {"w": np.zeros_like(p_i.w), "b_prime": np.zeros_like(p_i.b_prime)}
    grads_j = {"w": np.zeros_like(p_j.w), "b_prime": np.zeros_like(p_j.b_prime)}
    d_h_i = np.zeros_like(h_i)
    d_h_j = np.zeros_like(h_j)

    loss = 0.0
    # Monolingual and cross-lingual reconstructions for each side.
    for m, p, grads, h_own, d_h_own, h_other, d_h_other in (
        (m_i, p_i, grads_i, h_i, d_h_i, h_j, d_h_j),
        (m_j, p_j, grads_j, h_j, d_h_j, h_i, d_h_i),
    ):
        rec_mono = reconstruct(h_own, p)
        term, d_rec, _ = numerics.cosine_row_loss_backward(rec_mono, m)
        loss += term
        _recon_term_backward(d_rec, rec_mono, h_own, p, grads, d_h_own)

        rec_cross = reconstruct(h_other, p)
        term, d_rec, _ = numerics.cosine_row_loss_backward(rec_cross, m)
        loss += term
        _recon_term_backward(d_rec, rec_cross, h_other, p, grads, d_h_other)

    term, d_x, d_y = numerics.cosine_row_loss_backward(h_i, h_j)
    loss += term
    d_h_i += d_x
    d_h_j += d_y
    return loss, grads_i, grads_j, d_h_i, d_h_j


def loss_word(m_i, m_j, p_i: ProjectionParams, p_j: ProjectionParams) -> float:
    """O_W for one dictionary-aligned pair, using the basic projection."""
    return loss_word_with_grads(m_i, m_j, p_i, p_j)[0]


def loss_word_with_grads(m_i, m_j, p_i: ProjectionParams, p_j: ProjectionParams):
    """Returns (loss, grads) with grads keyed '<side>.<name>' for both languages."""
    h_i = project_basic(m_i, p_i)
    h_j = project_basic(m_j, p_j)
    loss, grads_i, grads_j, d_h_i, d_h_j = word_terms_with_grads(m_i, h_i, m_j, h_j, p_i, p_j)
    d_w_i, d_b_i = projection_backward(d_h_i, h_i, m_i, p_i)
    d_w_j, d_b_j = projection_backward(d_h_j, h_j, m_j, p_j)
    grads = {
        "i.w": grads_i["w"] + d_w_i,
        "i.b": d_b_i,
        "i.b_prime": grads_i["b_prime"],
        "j.w": grads_j["w"] + d_w_j,
        "j.b": d_b_j,
        "j.b_prime": grads_j["b_prime"],
    }
    return loss, grads
