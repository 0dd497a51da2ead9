"""Parsing, validation and writing of all resource files.

Formats (all UTF-8 text):

* embedding file     line 1 ``<vocab_size> <dim>``, then one word plus `dim`
                     space-separated decimals per line; words contain no spaces
* dictionary file    TSV ``word_li<TAB>word_lj``; ``#`` lines are comments
* cluster file       TSV ``function_id<TAB>kind<TAB>member...`` with kind in
                     {word, pair}; pair members are written ``basic|extended``
* linguistic matrix  same layout as the embedding file
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionError,
    EmptyDictionaryError,
    NonFiniteError,
    ParseError,
    VocabularyError,
)

log = logging.getLogger(__name__)

PAD_CHAR = "\x00"


@dataclass
class Vocabulary:
    language: str
    words: list[str]
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise VocabularyError(f"duplicate words in vocabulary for {self.language}")

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index


@dataclass
class EmbeddingTable:
    """A vocabulary plus its dense (|V| x d) float64 matrix."""

    vocab: Vocabulary
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.vocab):
            raise DimensionError(
                f"embedding matrix {self.matrix.shape} does not match vocabulary "
                f"of size {len(self.vocab)}"
            )
        if self.matrix.shape[1] < 1:
            raise DimensionError("embedding dimension must be at least 1")
        if not np.all(np.isfinite(self.matrix)):
            raise NonFiniteError(f"embedding table for {self.vocab.language} holds non-finite values")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def row(self, word: str) -> np.ndarray:
        return self.matrix[self.vocab.index[word]]


@dataclass
class DictionaryPairSet:
    """Aligned word-index pairs for one language pair."""

    lang_i: str
    lang_j: str
    pairs: np.ndarray  # (k, 2) int, columns index vocab_i and vocab_j
    kept: int = 0
    skipped: int = 0


@dataclass
class Cluster:
    function_id: str
    kind: str  # "word" or "pair"
    members: list  # words, or (basic, extended) tuples


@dataclass
class LinguisticClusterSet:
    language: str
    clusters: list[Cluster]
    dropped_empty: int = 0

    def function_ids(self) -> list[str]:
        return [c.function_id for c in self.clusters]


@dataclass
class CharInventory:
    """Character set of one language; index 0 is a reserved PAD symbol."""

    language: str
    symbols: list[str]
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {c: i for i, c in enumerate(self.symbols)}

    def __len__(self):
        return len(self.symbols)

    def encode(self, word: str) -> np.ndarray:
        try:
            return np.array([self.index[c] for c in word], dtype=np.intp)
        except KeyError as exc:
            raise VocabularyError(
                f"character {exc.args[0]!r} of word {word!r} is not in the "
                f"{self.language} inventory"
            ) from None


def _language_from_path(path) -> str:
    return Path(path).stem


def load_embeddings(path, language: str | None = None) -> EmbeddingTable:
    """Parse an embedding file, validating header, dimensions and finiteness."""
    path = Path(path)
    language = language or _language_from_path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise ParseError(path, 1, f"expected header '<count> <dim>', got {header.strip()!r}")
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(path, 1, f"non-integer header {header.strip()!r}") from None
        if count < 1 or dim < 1:
            raise ParseError(path, 1, f"header counts must be positive, got {count} {dim}")

        words: list[str] = []
        seen: dict[str, int] = {}
        matrix = np.empty((count, dim))
        line_no = 1
        for line in fh:
            line_no += 1
            if not line.strip():
                continue
            if len(words) == count:
                raise ParseError(path, line_no, f"more than the declared {count} entries")
            fields = line.split()
            if len(fields) != dim + 1:
                raise ParseError(
                    path, line_no, f"expected 1 word + {dim} values, got {len(fields)} fields"
                )
            word = fields[0]
            if word in seen:
                raise ParseError(path, line_no, f"duplicate word {word!r} (first at line {seen[word]})")
            try:
                values = np.array([float(v) for v in fields[1:]])
            except ValueError:
                raise ParseError(path, line_no, "unparseable numeric value") from None
            if not np.all(np.isfinite(values)):
                raise ParseError(path, line_no, f"non-finite value for word {word!r}")
            seen[word] = line_no
            matrix[len(words)] = values
            words.append(word)
        if len(words) != count:
            raise ParseError(path, line_no + 1, f"declared {count} entries but found {len(words)}")
    return EmbeddingTable(Vocabulary(language, words), matrix)


def save_embeddings(table: EmbeddingTable, path) -> None:
    """Write the embedding text format at 6 decimals (save/load/save stable)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"{len(table.vocab)} {table.dim}\n")
        for word, row in zip(table.vocab.words, table.matrix):
            fh.write(word + " " + " ".join(f"{v:.6f}" for v in row) + "\n")


def load_dictionary(path, vocab_i: Vocabulary, vocab_j: Vocabulary,
                    policy: str = "skip-unresolved") -> DictionaryPairSet:
    """Parse a TSV dictionary against two vocabularies.

    Multi-word entries (a column containing spaces) are always excluded; rows
    are word vectors, so only single tokens can resolve. Unresolved single
    tokens are skipped or fatal depending on `policy`.
    """
    if policy not in ("skip-unresolved", "error-on-unresolved"):
        raise ValueError(f"unknown policy {policy!r}")
    path = Path(path)
    pairs: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    skipped = 0
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.rstrip("\n").split("\t")
            if len(cols) != 2 or not cols[0] or not cols[1]:
                raise ParseError(path, line_no, f"expected 2 tab-separated columns, got {len(cols)}")
            wi, wj = cols
            if " " in wi or " " in wj:
                skipped += 1
                continue
            if wi not in vocab_i or wj not in vocab_j:
                if policy == "error-on-unresolved":
                    missing = wi if wi not in vocab_i else wj
                    raise ParseError(path, line_no, f"word {missing!r} is not in the vocabulary")
                skipped += 1
                continue
            pair = (vocab_i.index[wi], vocab_j.index[wj])
            if pair in seen:
                continue
            seen.add(pair)
            pairs.append(pair)
    if not pairs:
        raise EmptyDictionaryError(f"{path}: no resolvable pairs for {vocab_i.language}-{vocab_j.language}")
    arr = np.array(pairs, dtype=np.intp)
    return DictionaryPairSet(vocab_i.language, vocab_j.language, arr, kept=len(pairs), skipped=skipped)


def save_dictionary(words_i, words_j, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for wi, wj in zip(words_i, words_j):
            fh.write(f"{wi}\t{wj}\n")


def load_clusters(path, vocab: Vocabulary) -> LinguisticClusterSet:
    """Parse a cluster file and resolve members against `vocab`.

    Lines sharing a function_id merge (the kinds must agree); members that do
    not resolve are dropped; clusters left empty are dropped and counted.
    """
    path = Path(path)
    by_id: dict[str, Cluster] = {}
    kind_line: dict[str, int] = {}
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.rstrip("\n").split("\t")
            if len(cols) < 3:
                raise ParseError(path, line_no, "expected function_id, kind and at least one member")
            fid, kind, raw_members = cols[0], cols[1], cols[2:]
            if kind not in ("word", "pair"):
                raise ParseError(path, line_no, f"kind must be 'word' or 'pair', got {kind!r}")
            if fid in by_id and by_id[fid].kind != kind:
                raise ParseError(
                    path, line_no,
                    f"cluster {fid!r} mixes kinds {by_id[fid].kind!r} (line {kind_line[fid]}) and {kind!r}",
                )
            members = []
            for m in raw_members:
                if kind == "word":
                    if m in vocab:
                        members.append(m)
                else:
                    halves = m.split("|")
                    if len(halves) != 2 or not halves[0] or not halves[1]:
                        raise ParseError(path, line_no, f"pair member must be 'basic|extended', got {m!r}")
                    if halves[0] in vocab and halves[1] in vocab:
                        members.append((halves[0], halves[1]))
            if fid in by_id:
                by_id[fid].members.extend(members)
            else:
                by_id[fid] = Cluster(fid, kind, members)
                kind_line[fid] = line_no

    dropped = 0
    clusters = []
    for cluster in by_id.values():
        if cluster.members:
            clusters.append(cluster)
        else:
            dropped += 1
    if dropped:
        log.info("%s: dropped %d cluster(s) with no resolvable members", path, dropped)
    return LinguisticClusterSet(vocab.language, clusters, dropped_empty=dropped)


def save_clusters(clusters: list[Cluster], path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for c in clusters:
            if c.kind == "word":
                members = c.members
            else:
                members = [f"{b}|{e}" for b, e in c.members]
            fh.write("\t".join([c.function_id, c.kind, *members]) + "\n")


def build_char_inventory(vocab: Vocabulary) -> CharInventory:
    """Collect every character of the vocabulary, code-point ascending after PAD."""
    if not vocab.words:
        raise VocabularyError("cannot build a character inventory from an empty vocabulary")
    chars = set()
    for word in vocab.words:
        if PAD_CHAR in word:
            raise VocabularyError(f"word {word!r} contains the reserved PAD character")
        chars.update(word)
    return CharInventory(vocab.language, [PAD_CHAR] + sorted(chars))
