"""Synthetic bilingual benchmark data.

Language "la" gets random unit vectors; language "lb" is the same space under
a random orthogonal map plus Gaussian noise. Spellings are built from a
shared random stem per translation pair (stem vs stem+"en"), so true pairs
share character 3-grams while unrelated words almost never do. The full
dictionary splits 80/20 into train and held-out files, and both languages get
linguistic-property cluster files with matching function-ids (clusters pick
the same translation indices on both sides).
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import (
    Cluster,
    EmbeddingTable,
    Vocabulary,
    save_clusters,
    save_dictionary,
    save_embeddings,
)

LANG_A = "la"
LANG_B = "lb"
STEM_LEN = 6
N_WORD_CLUSTERS = 6
N_PAIR_CLUSTERS = 2
CLUSTER_SIZE = 8


@dataclass
class SynthData:
    table_a: EmbeddingTable
    table_b: EmbeddingTable
    train_pairs: list  # (word_a, word_b)
    heldout_pairs: list
    clusters_a: list  # Cluster
    clusters_b: list


def _random_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q * np.sign(np.diag(r))


def _unique_stems(count: int, rng: np.random.Generator) -> list[str]:
    letters = np.array(list(string.ascii_lowercase))
    stems: list[str] = []
    seen = set()
    while len(stems) < count:
        stem = "".join(rng.choice(letters, size=STEM_LEN))
        if stem not in seen:
            seen.add(stem)
            stems.append(stem)
    return stems


def generate(seed: int, vocab_size: int, dim: int, noise: float) -> SynthData:
    """Build the benchmark in memory; deterministic for a fixed seed."""
    if vocab_size < 2 or dim < 1 or noise < 0:
        raise ValueError("vocab_size >= 2, dim >= 1 and noise >= 0 required")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5359]))
    stems = _unique_stems(vocab_size, rng)
    words_a = stems
    words_b = [s + "en" for s in stems]

    vecs_a = rng.normal(size=(vocab_size, dim))
    vecs_a /= np.linalg.norm(vecs_a, axis=1)[:, None]
    q = _random_orthogonal(dim, rng)
    vecs_b = vecs_a @ q + noise * rng.normal(size=(vocab_size, dim))

    table_a = EmbeddingTable(Vocabulary(LANG_A, words_a), vecs_a)
    table_b = EmbeddingTable(Vocabulary(LANG_B, words_b), vecs_b)

    order = rng.permutation(vocab_size)
    n_train = max(1, int(round(vocab_size * 0.8)))
    train_idx, heldout_idx = order[:n_train], order[n_train:]
    train_pairs = [(words_a[k], words_b[k]) for k in train_idx]
    heldout_pairs = [(words_a[k], words_b[k]) for k in heldout_idx]

    clusters_a: list[Cluster] = []
    clusters_b: list[Cluster] = []
    for c in range(N_WORD_CLUSTERS):
        members = rng.choice(vocab_size, size=min(CLUSTER_SIZE, vocab_size), replace=False)
        clusters_a.append(Cluster(f"class{c}", "word", [words_a[k] for k in members]))
        clusters_b.append(Cluster(f"class{c}", "word", [words_b[k] for k in members]))
    for c in range(N_PAIR_CLUSTERS):
        picks = rng.choice(vocab_size, size=2 * min(CLUSTER_SIZE // 2, vocab_size // 2), replace=False)
        halves = picks.reshape(-1, 2)
        clusters_a.append(Cluster(f"affix{c}", "pair", [(words_a[b], words_a[e]) for b, e in halves]))
        clusters_b.append(Cluster(f"affix{c}", "pair", [(words_b[b], words_b[e]) for b, e in halves]))
    return SynthData(table_a, table_b, train_pairs, heldout_pairs, clusters_a, clusters_b)


def write(data: SynthData, out_dir) -> Path:
    """Write all resource files plus a ready-to-train manifest; returns its path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_embeddings(data.table_a, out / f"emb_{LANG_A}.txt")
    save_embeddings(data.table_b, out / f"emb_{LANG_B}.txt")
    save_dictionary(*zip(*data.train_pairs), out / "dict_train.tsv")
    if data.heldout_pairs:
        save_dictionary(*zip(*data.heldout_pairs), out / "dict_heldout.tsv")
    save_clusters(data.clusters_a, out / f"clusters_{LANG_A}.tsv")
    save_clusters(data.clusters_b, out / f"clusters_{LANG_B}.tsv")
    manifest = out / "train.manifest"
    with manifest.open("w", encoding="utf-8") as fh:
        fh.write(f"embeddings\t{LANG_A}\temb_{LANG_A}.txt\n")
        fh.write(f"embeddings\t{LANG_B}\temb_{LANG_B}.txt\n")
        fh.write(f"dictionary\t{LANG_A}\t{LANG_B}\tdict_train.tsv\n")
        fh.write(f"clusters\t{LANG_A}\tclusters_{LANG_A}.tsv\n")
        fh.write(f"clusters\t{LANG_B}\tclusters_{LANG_B}.tsv\n")
    return manifest
