"""Character-level word representations.

A word is a sequence of character indices into a per-language inventory
(index 0 = PAD, frozen zero vector). For each filter width n the word is
right-padded to at least n, every n-gram window is pushed through
tanh(weights @ window + bias), and a per-filter max over window positions is
taken. A word of length k yields max(k - n + 1, 1) windows per bank: windows
never slide past the word's own characters, so extra padding cannot change
the pooled output. The final representation concatenates the pooled vectors
of all banks in ascending width order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .corpus import CharInventory, EmbeddingTable
from .errors import DimensionError

log = logging.getLogger(__name__)


@dataclass
class ConvFilterBank:
    width: int
    weights: np.ndarray  # (filters, width * char_dim)
    bias: np.ndarray  # (filters,)

    @property
    def filters(self) -> int:
        return self.weights.shape[0]


@dataclass
class CharEmbeddingTable:
    """Lookup embeddings, one row per inventory symbol; row 0 (PAD) stays zero."""

    inventory: CharInventory
    matrix: np.ndarray  # (len(inventory), char_dim)
    uncovered: int = 0  # inventory characters found in no word at init time

    @property
    def char_dim(self) -> int:
        return self.matrix.shape[1]


@dataclass
class ConvCache:
    """Forward-pass bookkeeping needed by conv_words_backward."""

    idx: np.ndarray  # (n_words, buffer_len) padded char indices
    lengths: np.ndarray
    widths: list[int] = field(default_factory=list)
    argmax: list[np.ndarray] = field(default_factory=list)  # per bank (n_words, filters)
    pooled: list[np.ndarray] = field(default_factory=list)


def init_banks(widths, filters: int, char_dim: int, rngs) -> list[ConvFilterBank]:
    """One bank per width, scaled-uniform weights, zero bias; `rngs` maps width -> rng."""
    banks = []
    for width in sorted(widths):
        fan_in = width * char_dim
        bound = np.sqrt(6.0 / (fan_in + filters))
        weights = rngs[width].uniform(-bound, bound, size=(filters, fan_in))
        banks.append(ConvFilterBank(width, weights, np.zeros(filters)))
    return banks


def init_char_embeddings(word_table: EmbeddingTable, inventory: CharInventory,
                         char_dim: int | None = None) -> CharEmbeddingTable:
    """Seed each character with the mean of the word vectors containing it.

    A word counts once however often the character repeats in it. Characters
    contained in no word get a zero row and are counted in `uncovered`.
    The first `char_dim` embedding dimensions are kept (default: all).
    """
    d = word_table.dim if char_dim is None else char_dim
    if d > word_table.dim or d < 1:
        raise DimensionError(f"char_dim must lie in [1, {word_table.dim}], got {d}")
    sums = np.zeros((len(inventory), d))
    counts = np.zeros(len(inventory), dtype=np.intp)
    for word, row in zip(word_table.vocab.words, word_table.matrix):
        for ch in set(word):
            pos = inventory.index.get(ch)
            if pos is not None:
                sums[pos] += row[:d]
                counts[pos] += 1
    covered = counts > 0
    matrix = np.zeros((len(inventory), d))
    matrix[covered] = sums[covered] / counts[covered, None]
    matrix[0] = 0.0  # PAD
    uncovered = int(np.sum(~covered[1:]))  # PAD is not a real character
    if uncovered:
        log.warning("%s: %d inventory character(s) appear in no word, rows left zero",
                    inventory.language, uncovered)
    return CharEmbeddingTable(inventory, matrix, uncovered=uncovered)


def _check_banks(banks, char_dim):
    widths = [b.width for b in banks]
    if not banks or widths != sorted(widths) or len(set(widths)) != len(widths):
        raise DimensionError("banks must be non-empty with strictly ascending widths")
    for b in banks:
        if b.weights.shape[1] != b.width * char_dim:
            raise DimensionError(
                f"bank of width {b.width} expects {b.width * char_dim} inputs, "
                f"weights have {b.weights.shape[1]}"
            )


def conv_words_forward(seqs, table: CharEmbeddingTable, banks):
    """Representations for a batch of words.

    Returns (reps, cache) with reps of shape (n_words, filters * n_banks).
    """
    _check_banks(banks, table.char_dim)
    if not seqs:
        raise DimensionError("conv_words_forward needs at least one word")
    # trailing PAD carries no signal; stripping it makes the word's true
    # length govern the window count, so extra padding can never change output
    seqs = [np.trim_zeros(np.asarray(s, dtype=np.intp), "b") for s in seqs]
    lengths = np.array([len(s) for s in seqs], dtype=np.intp)
    if np.any(lengths < 1):
        raise ValueError("cannot convolve an empty word")
    max_width = banks[-1].width
    buffer_len = max(int(lengths.max()), max_width)
    idx = np.zeros((len(seqs), buffer_len), dtype=np.intp)
    for w, seq in enumerate(seqs):
        idx[w, : len(seq)] = seq
    x = table.matrix[idx]  # (n_words, buffer_len, char_dim)

    cache = ConvCache(idx=idx, lengths=lengths)
    parts = []
    for bank in banks:
        n = bank.width
        n_buf_pos = buffer_len - n + 1
        windows = np.stack([x[:, i : i + n, :] for i in range(n_buf_pos)], axis=1)
        windows = windows.reshape(len(seqs), n_buf_pos, n * table.char_dim)
        acts = numerics.tanh_map(windows @ bank.weights.T + bank.bias)
        n_pos = np.maximum(lengths - n + 1, 1)  # valid positions per word
        valid = np.arange(n_buf_pos)[None, :] < n_pos[:, None]
        masked = np.where(valid[:, :, None], acts, -np.inf)
        pooled = masked.max(axis=1)
        cache.widths.append(n)
        cache.argmax.append(masked.argmax(axis=1))
        cache.pooled.append(pooled)
        parts.append(pooled)
    return np.concatenate(parts, axis=1), cache


def conv_words_backward(d_reps, cache: ConvCache, table: CharEmbeddingTable, banks):
    """Gradients of a batch loss through the convolution stack.

    Returns (d_emb, bank_grads) where d_emb matches the embedding matrix with
    a zeroed PAD row and bank_grads maps width -> (d_weights, d_bias).
    """
    n_words = cache.idx.shape[0]
    d_emb = np.zeros_like(table.matrix)
    bank_grads = {}
    offset = 0
    for bank, argmax, pooled in zip(banks, cache.argmax, cache.pooled):
        n = bank.width
        d_pooled = d_reps[:, offset : offset + bank.filters]
        offset += bank.filters
        d_act = numerics.tanh_backward(d_pooled, pooled)  # (n_words, filters)

        # char indices under each winning window: (n_words, filters, width)
        char_ids = cache.idx[
            np.arange(n_words)[:, None, None],
            argmax[:, :, None] + np.arange(n)[None, None, :],
        ]
        gathered = table.matrix[char_ids].reshape(n_words, bank.filters, n * table.char_dim)
        d_weights = np.einsum("wf,wfc->fc", d_act, gathered)
        d_bias = d_act.sum(axis=0)
        d_windows = d_act[:, :, None] * bank.weights[None, :, :]
        d_windows = d_windows.reshape(n_words, bank.filters, n, table.char_dim)
        np.add.at(d_emb, char_ids.reshape(-1), d_windows.reshape(-1, table.char_dim))
        bank_grads[n] = (d_weights, d_bias)
    d_emb[0] = 0.0  # PAD row frozen
    return d_emb, bank_grads


def conv_word(seq, table: CharEmbeddingTable, banks) -> np.ndarray:
    """Representation of a single word (a 1-D vector)."""
    reps, _ = conv_words_forward([np.asarray(seq, dtype=np.intp)], table, banks)
    return reps[0]


def loss_char(reps_i, reps_j) -> float:
    """O_char for one pair: summed cosine distance of aligned representations."""
    return numerics.cosine_row_loss(reps_i, reps_j)


def final_representation(h_vec, w_vec) -> np.ndarray:
    """[projected ; character] concatenation, projected part first."""
    return np.concatenate([np.asarray(h_vec, dtype=float), np.asarray(w_vec, dtype=float)])
