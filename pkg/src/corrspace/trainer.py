"""Joint optimization of all alignment losses over all language pairs.

One Adadelta step per mini-batch covers the word, neighborhood and character
losses for that batch's dictionary rows; the linguistic-property loss gets
one extra step per language pair per epoch (cluster counts are small and do
not depend on the batch). Everything is deterministic for a fixed seed:
every parameter draws from its own seed stream keyed by (seed, language,
parameter), so enabling one component never shifts another's initialization,
and a disabled component reproduces the smaller model bit for bit.
"""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import chars, corrnet, lingprops, neighborhood, numerics
from .corpus import (
    PAD_CHAR,
    CharInventory,
    DictionaryPairSet,
    EmbeddingTable,
    LinguisticClusterSet,
    Vocabulary,
    build_char_inventory,
)
from .errors import CorrspaceError, DimensionError, NonFiniteError, ParseError

log = logging.getLogger(__name__)

COMPONENT_ORDER = ("W", "N", "Ch", "L")
LOG_HEADER = "epoch\tO_W\tO_N\tO_char\tO_R\tO_total"


def parse_components(text: str) -> frozenset:
    """Parse an ablation string like 'W+N+Ch+L'; word alignment is mandatory."""
    tokens = text.split("+")
    unknown = [t for t in tokens if t not in COMPONENT_ORDER]
    if unknown:
        raise CorrspaceError(f"unknown component(s) {unknown}; expected from {COMPONENT_ORDER}")
    comps = frozenset(tokens)
    if "W" not in comps:
        raise CorrspaceError("the W (word alignment) component cannot be disabled")
    return comps


def components_string(components) -> str:
    return "+".join(t for t in COMPONENT_ORDER if t in components)


@dataclass
class TrainConfig:
    """Hyperparameters; the defaults are the full-scale ones."""

    dim_common: int = 512
    char_dim: int | None = None  # None: each language's own embedding dim
    filters: int = 20
    widths: tuple = (1, 2, 3)
    batch_size: int = 500
    learning_rate: float = 0.5
    neighbors: int = 5
    epochs: int = 100
    seed: int = 0
    components: frozenset = frozenset(COMPONENT_ORDER)
    early_stop_patience: int = 5
    early_stop_rel_tol: float = 1e-5

    def final_dim(self) -> int:
        extra = len(self.widths) * self.filters if "Ch" in self.components else 0
        return self.dim_common + extra


@dataclass
class TrainResources:
    tables: dict  # language -> EmbeddingTable
    dictionaries: list  # DictionaryPairSet per language pair
    clusters: dict = field(default_factory=dict)  # language -> LinguisticClusterSet


@dataclass
class LanguageParams:
    language: str
    proj: corrnet.ProjectionParams
    neigh: neighborhood.NeighborParams | None = None
    char_table: chars.CharEmbeddingTable | None = None
    banks: list | None = None
    cluster_bias: np.ndarray | None = None


@dataclass
class ModelParams:
    languages: dict  # language -> LanguageParams


@dataclass
class ComponentLosses:
    o_w: float = 0.0
    o_n: float = 0.0
    o_char: float = 0.0
    o_r: float = 0.0

    @property
    def total(self) -> float:
        return self.o_w + self.o_n + self.o_char + self.o_r


def _rng(seed: int, *labels: str) -> np.random.Generator:
    entropy = [seed]
    for label in labels:
        entropy.append(int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:4], "big"))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def initialize_model(resources: TrainResources, config: TrainConfig) -> ModelParams:
    comps = config.components
    languages = {}
    for lang in sorted(resources.tables):
        table = resources.tables[lang]
        proj = corrnet.init_projection(table.dim, config.dim_common, _rng(config.seed, lang, "proj"))
        neigh = None
        if "N" in comps:
            neigh = neighborhood.init_neighbor(table.dim, config.dim_common, _rng(config.seed, lang, "neigh"))
        char_table = banks = None
        if "Ch" in comps:
            inventory = build_char_inventory(table.vocab)
            char_table = chars.init_char_embeddings(table, inventory, config.char_dim)
            rngs = {w: _rng(config.seed, lang, f"conv{w}") for w in config.widths}
            banks = chars.init_banks(config.widths, config.filters, char_table.char_dim, rngs)
        cluster_bias = np.zeros(config.dim_common) if "L" in comps else None
        languages[lang] = LanguageParams(lang, proj, neigh, char_table, banks, cluster_bias)
    return ModelParams(languages)


def trainable_params(model: ModelParams) -> dict:
    """Named views of every trainable array; the PAD embedding row is excluded."""
    out = {}
    for lang in sorted(model.languages):
        lp = model.languages[lang]
        out[f"{lang}:w"] = lp.proj.w
        out[f"{lang}:b"] = lp.proj.b
        out[f"{lang}:b_prime"] = lp.proj.b_prime
        if lp.neigh is not None:
            out[f"{lang}:u"] = lp.neigh.u
            out[f"{lang}:b_star"] = lp.neigh.b_star
        if lp.char_table is not None:
            out[f"{lang}:char_emb"] = lp.char_table.matrix[1:]
            for bank in lp.banks:
                out[f"{lang}:conv{bank.width}_weight"] = bank.weights
                out[f"{lang}:conv{bank.width}_bias"] = bank.bias
        if lp.cluster_bias is not None:
            out[f"{lang}:b_cluster"] = lp.cluster_bias
    return out


@dataclass
class _PairState:
    lang_i: str
    lang_j: str
    idx_i: np.ndarray
    idx_j: np.ndarray
    m_i: np.ndarray
    m_j: np.ndarray
    cent_i: np.ndarray | None = None
    cent_j: np.ndarray | None = None
    seqs_i: list | None = None
    seqs_j: list | None = None
    clusters_i: lingprops.ClusterVectorSet | None = None
    clusters_j: lingprops.ClusterVectorSet | None = None
    lingprops_empty: bool = False

    def __len__(self):
        return self.idx_i.size


@dataclass
class TrainState:
    model: ModelParams
    pairs: list
    config: TrainConfig


def setup(resources: TrainResources, config: TrainConfig) -> TrainState:
    """Initialize the model and precompute all per-pair fixed inputs."""
    if len(resources.tables) < 2:
        raise CorrspaceError("training needs at least 2 languages")
    if not resources.dictionaries:
        raise CorrspaceError("training needs at least one bilingual dictionary")
    comps = config.components
    model = initialize_model(resources, config)

    encoded: dict = {}
    if "Ch" in comps:
        for lang, lp in model.languages.items():
            vocab = resources.tables[lang].vocab
            encoded[lang] = [lp.char_table.inventory.encode(w) for w in vocab.words]

    cluster_vectors = {}
    if "L" in comps:
        for lang, clusters in resources.clusters.items():
            if lang not in resources.tables:
                raise CorrspaceError(f"cluster file references unknown language {lang!r}")
            cluster_vectors[lang] = lingprops.build_cluster_vectors(clusters, resources.tables[lang])

    pairs = []
    for d in sorted(resources.dictionaries, key=lambda d: (d.lang_i, d.lang_j)):
        if d.lang_i == d.lang_j:
            raise CorrspaceError(f"dictionary pairs a language with itself: {d.lang_i}")
        for lang in (d.lang_i, d.lang_j):
            if lang not in resources.tables:
                raise CorrspaceError(f"dictionary references unknown language {lang!r}")
        t_i, t_j = resources.tables[d.lang_i], resources.tables[d.lang_j]
        idx_i, idx_j = d.pairs[:, 0], d.pairs[:, 1]
        ps = _PairState(d.lang_i, d.lang_j, idx_i, idx_j, t_i.matrix[idx_i], t_j.matrix[idx_j])
        if "N" in comps:
            ps.cent_i = neighborhood.build_neighbor_clusters(t_i, idx_i, config.neighbors).centroids
            ps.cent_j = neighborhood.build_neighbor_clusters(t_j, idx_j, config.neighbors).centroids
        if "Ch" in comps:
            ps.seqs_i = [encoded[d.lang_i][k] for k in idx_i]
            ps.seqs_j = [encoded[d.lang_j][k] for k in idx_j]
        if "L" in comps:
            cv_i = cluster_vectors.get(d.lang_i)
            cv_j = cluster_vectors.get(d.lang_j)
            if cv_i is None or cv_j is None:
                ps.lingprops_empty = True
                log.warning("pair %s-%s: linguistic clusters missing, O_R skipped", d.lang_i, d.lang_j)
            else:
                sub_i, sub_j = lingprops.intersect_cluster_sets(cv_i, cv_j)
                if not sub_i.function_ids:
                    ps.lingprops_empty = True
                    log.warning("pair %s-%s: no shared function-ids, O_R skipped", d.lang_i, d.lang_j)
                else:
                    ps.clusters_i, ps.clusters_j = sub_i, sub_j
        pairs.append(ps)
    return TrainState(model, pairs, config)


def _accumulate(grads: dict, key: str, value: np.ndarray) -> None:
    if key in grads:
        grads[key] += value
    else:
        grads[key] = value


def _batch_losses_and_grads(state: TrainState, ps: _PairState, rows):
    """Forward and backward for one batch: (ComponentLosses, grads by name)."""
    model, comps = state.model, state.config.components
    lp_i = model.languages[ps.lang_i]
    lp_j = model.languages[ps.lang_j]
    m_i, m_j = ps.m_i[rows], ps.m_j[rows]
    use_n = "N" in comps

    if use_n:
        c_i, c_j = ps.cent_i[rows], ps.cent_j[rows]
        h_i = neighborhood.project_augmented(m_i, c_i, lp_i.proj, lp_i.neigh)
        h_j = neighborhood.project_augmented(m_j, c_j, lp_j.proj, lp_j.neigh)
    else:
        h_i = corrnet.project_basic(m_i, lp_i.proj)
        h_j = corrnet.project_basic(m_j, lp_j.proj)

    losses = ComponentLosses()
    grads: dict = {}

    o_w, wg_i, wg_j, d_h_i, d_h_j = corrnet.word_terms_with_grads(m_i, h_i, m_j, h_j, lp_i.proj, lp_j.proj)
    losses.o_w = o_w
    _accumulate(grads, f"{ps.lang_i}:w", wg_i["w"])
    _accumulate(grads, f"{ps.lang_i}:b_prime", wg_i["b_prime"])
    _accumulate(grads, f"{ps.lang_j}:w", wg_j["w"])
    _accumulate(grads, f"{ps.lang_j}:b_prime", wg_j["b_prime"])

    if use_n:
        o_n, ng_i, ng_j, nd_h_i, nd_h_j = neighborhood.neighbor_terms_with_grads(
            c_i, h_i, c_j, h_j, lp_i.neigh, lp_j.neigh
        )
        losses.o_n = o_n
        d_h_i += nd_h_i
        d_h_j += nd_h_j
        _accumulate(grads, f"{ps.lang_i}:u", ng_i["u"])
        _accumulate(grads, f"{ps.lang_i}:b_star", ng_i["b_star"])
        _accumulate(grads, f"{ps.lang_j}:u", ng_j["u"])
        _accumulate(grads, f"{ps.lang_j}:b_star", ng_j["b_star"])
        for lang, d_h, h, m, c, lp in (
            (ps.lang_i, d_h_i, h_i, m_i, c_i, lp_i),
            (ps.lang_j, d_h_j, h_j, m_j, c_j, lp_j),
        ):
            d_w, d_u, d_b = neighborhood.augmented_backward(d_h, h, m, c, lp.proj, lp.neigh)
            _accumulate(grads, f"{lang}:w", d_w)
            _accumulate(grads, f"{lang}:u", d_u)
            _accumulate(grads, f"{lang}:b", d_b)
    else:
        for lang, d_h, h, m, lp in (
            (ps.lang_i, d_h_i, h_i, m_i, lp_i),
            (ps.lang_j, d_h_j, h_j, m_j, lp_j),
        ):
            d_w, d_b = corrnet.projection_backward(d_h, h, m, lp.proj)
            _accumulate(grads, f"{lang}:w", d_w)
            _accumulate(grads, f"{lang}:b", d_b)

    if "Ch" in comps:
        seqs_i = [ps.seqs_i[r] for r in rows]
        seqs_j = [ps.seqs_j[r] for r in rows]
        reps_i, cache_i = chars.conv_words_forward(seqs_i, lp_i.char_table, lp_i.banks)
        reps_j, cache_j = chars.conv_words_forward(seqs_j, lp_j.char_table, lp_j.banks)
        o_char, d_r_i, d_r_j = numerics.cosine_row_loss_backward(reps_i, reps_j)
        losses.o_char = o_char
        for lang, d_r, cache, lp in (
            (ps.lang_i, d_r_i, cache_i, lp_i),
            (ps.lang_j, d_r_j, cache_j, lp_j),
        ):
            d_emb, bank_grads = chars.conv_words_backward(d_r, cache, lp.char_table, lp.banks)
            _accumulate(grads, f"{lang}:char_emb", d_emb[1:])
            for width, (d_w, d_b) in bank_grads.items():
                _accumulate(grads, f"{lang}:conv{width}_weight", d_w)
                _accumulate(grads, f"{lang}:conv{width}_bias", d_b)
    return losses, grads


def _lingprop_losses_and_grads(state: TrainState, ps: _PairState):
    if ps.clusters_i is None:
        return 0.0, {}
    lp_i = state.model.languages[ps.lang_i]
    lp_j = state.model.languages[ps.lang_j]
    loss, g = lingprops.loss_lingprops_with_grads(
        ps.clusters_i, ps.clusters_j, lp_i.proj, lp_j.proj, lp_i.cluster_bias, lp_j.cluster_bias
    )
    grads = {
        f"{ps.lang_i}:w": g["i.w"],
        f"{ps.lang_i}:b_cluster": g["i.b_cluster"],
        f"{ps.lang_j}:w": g["j.w"],
        f"{ps.lang_j}:b_cluster": g["j.b_cluster"],
    }
    return loss, grads


def total_loss(state: TrainState, pair_index: int, rows) -> float:
    """Sum of the enabled loss components for one batch of one pair."""
    return total_loss_and_grads(state, pair_index, rows)[0]


def total_loss_and_grads(state: TrainState, pair_index: int, rows):
    """(loss, grads over every trainable block) for one batch plus O_R."""
    ps = state.pairs[pair_index]
    losses, grads = _batch_losses_and_grads(state, ps, rows)
    total = losses.total
    if "L" in state.config.components:
        o_r, lg = _lingprop_losses_and_grads(state, ps)
        total += o_r
        for key, value in lg.items():
            _accumulate(grads, key, value)
    full = trainable_params(state.model)
    out = {k: grads[k] if k in grads else np.zeros_like(v) for k, v in full.items()}
    return total, out


def evaluate_losses(state: TrainState) -> ComponentLosses:
    """Component losses over every full dictionary at the current parameters."""
    sums = ComponentLosses()
    for ps in state.pairs:
        rows = np.arange(len(ps))
        for start in range(0, len(ps), state.config.batch_size):
            losses, _ = _batch_losses_and_grads(state, ps, rows[start : start + state.config.batch_size])
            sums.o_w += losses.o_w
            sums.o_n += losses.o_n
            sums.o_char += losses.o_char
        if "L" in state.config.components:
            sums.o_r += _lingprop_losses_and_grads(state, ps)[0]
    return sums


def _check_finite(value: float, state: TrainState, epoch: int, pair_index: int, batch_start: int):
    if np.isfinite(value):
        return
    norms = {k: float(np.linalg.norm(v)) for k, v in trainable_params(state.model).items()}
    raise NonFiniteError(
        f"non-finite loss {value} at epoch {epoch}, pair {pair_index}, "
        f"batch offset {batch_start}; parameter norms: {norms}"
    )


@dataclass
class TrainOutcome:
    model: ModelParams
    state: TrainState
    log: list  # (epoch, o_w, o_n, o_char, o_r, total) per epoch
    initial: ComponentLosses
    epochs_run: int


def train(resources: TrainResources, config: TrainConfig, out_dir=None) -> TrainOutcome:
    """Run the epoch loop; checkpoints and the log land in `out_dir` if given."""
    if config.seed < 0:
        raise CorrspaceError("seed must be non-negative")
    state = setup(resources, config)
    params = trainable_params(state.model)
    opt = numerics.AdadeltaState(lr=config.learning_rate)
    shuffle_rng = _rng(config.seed, "train", "shuffle")
    initial = evaluate_losses(state)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    log_rows = []
    for epoch in range(1, config.epochs + 1):
        epoch_losses = ComponentLosses()
        for pair_index, ps in enumerate(state.pairs):
            perm = shuffle_rng.permutation(len(ps))
            for start in range(0, len(ps), config.batch_size):
                rows = perm[start : start + config.batch_size]
                losses, grads = _batch_losses_and_grads(state, ps, rows)
                _check_finite(losses.total, state, epoch, pair_index, start)
                numerics.adadelta_step({k: params[k] for k in grads}, grads, opt)
                epoch_losses.o_w += losses.o_w
                epoch_losses.o_n += losses.o_n
                epoch_losses.o_char += losses.o_char
            if "L" in config.components:
                o_r, lgrads = _lingprop_losses_and_grads(state, ps)
                if lgrads:
                    _check_finite(o_r, state, epoch, pair_index, -1)
                    numerics.adadelta_step({k: params[k] for k in lgrads}, lgrads, opt)
                epoch_losses.o_r += o_r
        log_rows.append((epoch, epoch_losses.o_w, epoch_losses.o_n, epoch_losses.o_char,
                         epoch_losses.o_r, epoch_losses.total))
        if out is not None:
            for lang, lp in state.model.languages.items():
                save_checkpoint(lp, out / f"checkpoint_{lang}.txt")
        patience = config.early_stop_patience
        if patience > 0 and len(log_rows) > patience:
            before = log_rows[-1 - patience][5]
            now = log_rows[-1][5]
            if before - now < config.early_stop_rel_tol * max(abs(before), 1e-12):
                log.info("early stop at epoch %d", epoch)
                break
    if out is not None:
        save_train_log(log_rows, out / "train_log.tsv")
    return TrainOutcome(state.model, state, log_rows, initial, len(log_rows))


def save_train_log(log_rows, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(LOG_HEADER + "\n")
        for row in log_rows:
            fh.write(str(row[0]) + "\t" + "\t".join(f"{v:.9g}" for v in row[1:]) + "\n")


def load_train_log(path):
    rows = []
    with Path(path).open(encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != LOG_HEADER:
            raise ParseError(path, 1, f"unexpected training log header {header!r}")
        for line in fh:
            fields = line.split()
            rows.append((int(fields[0]), *(float(v) for v in fields[1:])))
    return rows


def project_vocabulary(table: EmbeddingTable, lang_params: LanguageParams,
                       config: TrainConfig) -> EmbeddingTable:
    """Common-space representations [h ; w_char] for every vocabulary word."""
    if "N" in config.components and lang_params.neigh is not None:
        clusters = neighborhood.build_neighbor_clusters(
            table, np.arange(len(table.vocab)), config.neighbors
        )
        h = neighborhood.project_augmented(table.matrix, clusters.centroids,
                                           lang_params.proj, lang_params.neigh)
    else:
        h = corrnet.project_basic(table.matrix, lang_params.proj)
    if "Ch" in config.components and lang_params.char_table is not None:
        seqs = [lang_params.char_table.inventory.encode(w) for w in table.vocab.words]
        reps, _ = chars.conv_words_forward(seqs, lang_params.char_table, lang_params.banks)
        matrix = np.hstack([h, reps])
    else:
        matrix = h
    return EmbeddingTable(Vocabulary(table.vocab.language, list(table.vocab.words)), matrix)


# Checkpoints: "PARAM <language> <name> <rows> <cols>" blocks with one matrix
# row per line at 9 significant digits. Bias vectors are stored 1 x n; the
# character inventory travels as a row of code points so one file carries a
# complete language.

_VECTOR_PARAMS = {"b", "b_prime", "b_star", "b_cluster", "char_codes"}
_CONV_RE = re.compile(r"^conv(\d+)_(weight|bias)$")


def _checkpoint_blocks(lp: LanguageParams):
    yield "w", lp.proj.w
    yield "b", lp.proj.b[None, :]
    yield "b_prime", lp.proj.b_prime[None, :]
    if lp.neigh is not None:
        yield "u", lp.neigh.u
        yield "b_star", lp.neigh.b_star[None, :]
    if lp.char_table is not None:
        codes = np.array([[float(ord(c)) for c in lp.char_table.inventory.symbols[1:]]])
        yield "char_codes", codes
        yield "char_emb", lp.char_table.matrix
        for bank in lp.banks:
            yield f"conv{bank.width}_weight", bank.weights
            yield f"conv{bank.width}_bias", bank.bias[None, :]
    if lp.cluster_bias is not None:
        yield "b_cluster", lp.cluster_bias[None, :]


def save_checkpoint(lang_params: LanguageParams, path) -> None:
    if " " in lang_params.language:
        raise CorrspaceError(f"language id {lang_params.language!r} may not contain spaces")
    with Path(path).open("w", encoding="utf-8") as fh:
        for name, matrix in _checkpoint_blocks(lang_params):
            rows, cols = matrix.shape
            fh.write(f"PARAM {lang_params.language} {name} {rows} {cols}\n")
            for row in matrix:
                fh.write(" ".join(f"{v:.9g}" for v in row) + "\n")


def load_checkpoint(path) -> dict:
    """Parse a checkpoint into {language: LanguageParams}."""
    path = Path(path)
    raw: dict = {}
    with path.open(encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    i = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        fields = lines[i].split()
        if len(fields) != 5 or fields[0] != "PARAM":
            raise ParseError(path, i + 1, f"expected 'PARAM <lang> <name> <rows> <cols>', got {lines[i]!r}")
        _, lang, name, rows_s, cols_s = fields
        rows, cols = int(rows_s), int(cols_s)
        if i + 1 + rows > len(lines):
            raise ParseError(path, i + 1, f"block {name} declares {rows} rows but the file ends early")
        block = np.empty((rows, cols))
        for r in range(rows):
            values = lines[i + 1 + r].split()
            if len(values) != cols:
                raise ParseError(path, i + 2 + r, f"expected {cols} values, got {len(values)}")
            block[r] = [float(v) for v in values]
        if not np.all(np.isfinite(block)):
            raise ParseError(path, i + 1, f"non-finite value in block {name}")
        raw.setdefault(lang, {})[name] = block
        i += rows + 1

    out = {}
    for lang, blocks in raw.items():
        for required in ("w", "b", "b_prime"):
            if required not in blocks:
                raise ParseError(path, 1, f"language {lang} is missing block {required!r}")
        proj = corrnet.ProjectionParams(blocks["w"], blocks["b"][0], blocks["b_prime"][0])
        neigh = None
        if "u" in blocks:
            neigh = neighborhood.NeighborParams(blocks["u"], blocks["b_star"][0])
        char_table = banks = None
        if "char_emb" in blocks:
            symbols = [PAD_CHAR] + [chr(int(round(c))) for c in blocks["char_codes"][0]]
            inventory = CharInventory(lang, symbols)
            matrix = blocks["char_emb"]
            if matrix.shape[0] != len(symbols):
                raise ParseError(path, 1, f"char_emb rows {matrix.shape[0]} != inventory size {len(symbols)}")
            if np.any(matrix[0] != 0.0):
                raise ParseError(path, 1, "the PAD embedding row must be zero")
            char_table = chars.CharEmbeddingTable(inventory, matrix)
            banks = []
            for name in sorted(blocks):
                m = _CONV_RE.match(name)
                if m and m.group(2) == "weight":
                    width = int(m.group(1))
                    banks.append(chars.ConvFilterBank(width, blocks[name], blocks[f"conv{width}_bias"][0]))
            banks.sort(key=lambda b: b.width)
        cluster_bias = blocks["b_cluster"][0] if "b_cluster" in blocks else None
        out[lang] = LanguageParams(lang, proj, neigh, char_table, banks, cluster_bias)
    return out
