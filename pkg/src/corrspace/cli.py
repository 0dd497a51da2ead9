"""Command-line entry point.

Subcommands: train, project, eval, neighbors, synth, gradcheck.
Exit codes: 0 success, 1 check failure, 2 usage or input error.

A run manifest is a flat UTF-8 text file of tab-separated directives, with
paths resolved relative to the manifest's directory:

    embeddings  <language> <path>
    dictionary  <lang_i> <lang_j> <path>
    clusters    <language> <path>
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import corpus, numerics, qvec, synth, trainer
from .errors import CorrspaceError, NonFiniteError, ParseError


@dataclass
class RunManifest:
    path: Path
    embeddings: dict = field(default_factory=dict)  # language -> Path
    dictionaries: list = field(default_factory=list)  # (lang_i, lang_j, Path)
    clusters: dict = field(default_factory=dict)  # language -> Path

    def all_paths(self):
        yield from self.embeddings.values()
        for _, _, p in self.dictionaries:
            yield p
        yield from self.clusters.values()


def read_manifest(path) -> RunManifest:
    path = Path(path)
    manifest = RunManifest(path)
    base = path.parent
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.rstrip("\n").split("\t")
            kind = fields[0]
            if kind == "embeddings" and len(fields) == 3:
                manifest.embeddings[fields[1]] = base / fields[2]
            elif kind == "dictionary" and len(fields) == 4:
                manifest.dictionaries.append((fields[1], fields[2], base / fields[3]))
            elif kind == "clusters" and len(fields) == 3:
                manifest.clusters[fields[1]] = base / fields[2]
            else:
                raise ParseError(path, line_no, f"unrecognized manifest line {line.strip()!r}")
    if not manifest.embeddings:
        raise ParseError(path, 1, "manifest declares no embeddings")
    return manifest


def echo_manifest(manifest: RunManifest, config: trainer.TrainConfig, out_dir: Path) -> None:
    with (out_dir / "manifest.txt").open("w", encoding="utf-8") as fh:
        for lang, p in sorted(manifest.embeddings.items()):
            fh.write(f"embeddings\t{lang}\t{Path(p).resolve()}\n")
        for li, lj, p in manifest.dictionaries:
            fh.write(f"dictionary\t{li}\t{lj}\t{Path(p).resolve()}\n")
        for lang, p in sorted(manifest.clusters.items()):
            fh.write(f"clusters\t{lang}\t{Path(p).resolve()}\n")
        fh.write(f"config\tcomponents\t{trainer.components_string(config.components)}\n")
        fh.write(f"config\tepochs\t{config.epochs}\n")
        fh.write(f"config\tbatch_size\t{config.batch_size}\n")
        fh.write(f"config\tlearning_rate\t{config.learning_rate}\n")
        fh.write(f"config\tneighbors\t{config.neighbors}\n")
        fh.write(f"config\tfilters\t{config.filters}\n")
        fh.write("config\twidths\t" + ",".join(str(w) for w in config.widths) + "\n")
        fh.write(f"config\tdim_common\t{config.dim_common}\n")
        fh.write(f"config\tchar_dim\t{config.char_dim if config.char_dim is not None else 'auto'}\n")
        fh.write(f"config\tseed\t{config.seed}\n")
        fh.write(f"out_dir\t{out_dir.resolve()}\n")


def _config_from_args(args) -> trainer.TrainConfig:
    widths = tuple(int(w) for w in args.widths.split(","))
    if len(set(widths)) != len(widths) or any(w < 1 for w in widths):
        raise CorrspaceError(f"--widths must be distinct positive integers, got {args.widths!r}")
    return trainer.TrainConfig(
        dim_common=args.dim_common,
        char_dim=args.char_dim,
        filters=args.filters,
        widths=widths,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        neighbors=args.neighbors,
        epochs=args.epochs,
        seed=args.seed,
        components=trainer.parse_components(args.components),
    )


def _load_resources(manifest: RunManifest, config: trainer.TrainConfig) -> trainer.TrainResources:
    missing = [p for p in manifest.all_paths() if not Path(p).is_file()]
    if missing:
        raise CorrspaceError(f"missing resource file: {missing[0]}")
    tables = {lang: corpus.load_embeddings(p, language=lang) for lang, p in manifest.embeddings.items()}
    dictionaries = []
    for li, lj, p in manifest.dictionaries:
        if li not in tables or lj not in tables:
            raise CorrspaceError(f"dictionary {p} references undeclared language {li!r} or {lj!r}")
        dictionaries.append(corpus.load_dictionary(p, tables[li].vocab, tables[lj].vocab))
    clusters = {}
    if "L" in config.components:
        for lang in tables:
            if lang not in manifest.clusters:
                raise CorrspaceError(f"components include L but the manifest has no clusters for {lang!r}")
        clusters = {lang: corpus.load_clusters(p, tables[lang].vocab) for lang, p in manifest.clusters.items()}
    return trainer.TrainResources(tables, dictionaries, clusters)


def cmd_train(args) -> int:
    manifest = read_manifest(args.manifest)
    config = _config_from_args(args)
    resources = _load_resources(manifest, config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    echo_manifest(manifest, config, out_dir)
    outcome = trainer.train(resources, config, out_dir=out_dir)
    print(f"trained {outcome.epochs_run} epoch(s); outputs in {out_dir}")
    return 0


def _projection_config(lang_params: trainer.LanguageParams, args) -> trainer.TrainConfig:
    comps = {"W"}
    if lang_params.neigh is not None:
        comps.add("N")
    if lang_params.char_table is not None and not args.no_char:
        comps.add("Ch")
    widths = tuple(b.width for b in lang_params.banks) if lang_params.banks else (1, 2, 3)
    filters = lang_params.banks[0].filters if lang_params.banks else 0
    return trainer.TrainConfig(
        dim_common=lang_params.proj.dim_common,
        widths=widths,
        filters=filters,
        neighbors=args.neighbors,
        components=frozenset(comps),
    )


def cmd_project(args) -> int:
    languages = trainer.load_checkpoint(args.checkpoint)
    if args.language is not None:
        if args.language not in languages:
            raise CorrspaceError(
                f"language {args.language!r} absent from checkpoint (has: {sorted(languages)})"
            )
        lang = args.language
    elif len(languages) == 1:
        lang = next(iter(languages))
    else:
        raise CorrspaceError(f"checkpoint holds {sorted(languages)}; pick one with --language")
    lang_params = languages[lang]
    table = corpus.load_embeddings(args.embeddings, language=lang)
    config = _projection_config(lang_params, args)
    projected = trainer.project_vocabulary(table, lang_params, config)
    corpus.save_embeddings(projected, args.out)
    print(f"wrote {args.out}: {len(projected.vocab)} words, dim {projected.dim}")
    return 0


def cmd_eval(args) -> int:
    if len(args.embeddings) != len(args.linguistic):
        raise CorrspaceError("need exactly one linguistic table per embedding table")
    metric = args.mode
    tables = [corpus.load_embeddings(p) for p in args.embeddings]
    lings = [corpus.load_embeddings(p) for p in args.linguistic]
    rows = []
    instances = []
    for table, ling in zip(tables, lings):
        inst = qvec.align_vocab(table, ling)
        instances.append(inst)
        score = qvec.qvec_score(inst).score if metric == "qvec" else qvec.qvec_cca_score(inst)
        rows.append((table.vocab.language, metric, score, inst.coverage))
    if len(tables) > 1:
        inst = qvec.multilingual_instance(tables, lings)
        score = qvec.qvec_score(inst).score if metric == "qvec" else qvec.qvec_cca_score(inst)
        rows.append(("multilingual", metric, score, inst.coverage))
    for setting, m, score, coverage in rows:
        print(f"{setting}\t{m}\t{score:.6f}\t{coverage:.4f}")
    return 0


def cmd_neighbors(args) -> int:
    table_i = corpus.load_embeddings(args.table_i)
    table_j = corpus.load_embeddings(args.table_j)
    if args.word not in table_i.vocab:
        raise CorrspaceError(f"word {args.word!r} not in {args.table_i}")
    query = table_i.row(args.word)
    qn = np.linalg.norm(query)
    norms = np.maximum(np.linalg.norm(table_j.matrix, axis=1), numerics.NORM_FLOOR)
    sims = table_j.matrix @ query / (norms * max(qn, numerics.NORM_FLOOR))
    same_table = Path(args.table_i).resolve() == Path(args.table_j).resolve()
    if same_table:
        sims[table_i.vocab.index[args.word]] = -np.inf
    order = np.lexsort((np.arange(sims.size), -sims))
    take = min(args.k, int(np.sum(np.isfinite(sims))))
    for idx in order[:take]:
        print(f"{table_j.vocab.words[idx]}\t{sims[idx]:.6f}")
    return 0


def cmd_synth(args) -> int:
    data = synth.generate(args.seed, args.vocab_size, args.dim, args.noise)
    manifest = synth.write(data, args.out)
    print(f"wrote synthetic resources; manifest at {manifest}")
    return 0


def toy_gradcheck(seed: int) -> numerics.GradCheckReport:
    """Gradient-check the full joint loss on a tiny two-language model.

    All parameters get a small seeded jitter first: the averaged character
    initialization gives characters with identical word sets identical rows,
    which parks the max-pool exactly on a tie, and finite differences across
    such a kink measure the average of the two one-sided slopes. A generic
    nearby point has no ties and checks the same backward code.
    """
    data = synth.generate(seed, 10, 4, 0.05)
    resources = trainer.TrainResources(
        tables={synth.LANG_A: data.table_a, synth.LANG_B: data.table_b},
        dictionaries=[_full_dictionary(data)],
        clusters={
            synth.LANG_A: corpus.LinguisticClusterSet(synth.LANG_A, data.clusters_a),
            synth.LANG_B: corpus.LinguisticClusterSet(synth.LANG_B, data.clusters_b),
        },
    )
    config = trainer.TrainConfig(
        dim_common=3, filters=2, widths=(1, 2), batch_size=64, neighbors=3, seed=seed
    )
    state = trainer.setup(resources, config)
    jitter_rng = trainer._rng(seed, "gradcheck", "jitter")
    for array in trainer.trainable_params(state.model).values():
        array += jitter_rng.uniform(-0.05, 0.05, size=array.shape)
    rows = np.arange(len(state.pairs[0]))

    def loss_fn(params):
        live = trainer.trainable_params(state.model)
        for key, value in params.items():
            live[key][...] = value
        return trainer.total_loss_and_grads(state, 0, rows)

    return numerics.finite_diff_check(loss_fn, trainer.trainable_params(state.model), tolerance=1e-4)


def _full_dictionary(data: synth.SynthData) -> corpus.DictionaryPairSet:
    idx_a = [data.table_a.vocab.index[a] for a, _ in data.train_pairs + data.heldout_pairs]
    idx_b = [data.table_b.vocab.index[b] for _, b in data.train_pairs + data.heldout_pairs]
    pairs = np.column_stack([idx_a, idx_b]).astype(np.intp)
    return corpus.DictionaryPairSet(synth.LANG_A, synth.LANG_B, pairs, kept=len(idx_a))


def cmd_gradcheck(args) -> int:
    report = toy_gradcheck(args.seed)
    print(report.summary())
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrspace",
        description="Multilingual common semantic space: training, projection and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train a common space from a run manifest")
    train.add_argument("--manifest", required=True)
    train.add_argument("--out", required=True, help="output directory for checkpoints and the log")
    _add_train_flags(train)
    train.set_defaults(func=cmd_train)

    project = sub.add_parser("project", help="project a vocabulary into the trained space")
    project.add_argument("--checkpoint", required=True)
    project.add_argument("--embeddings", required=True)
    project.add_argument("--out", required=True)
    project.add_argument("--language", default=None)
    project.add_argument("--no-char", action="store_true", help="drop the character part")
    project.add_argument("--neighbors", type=int, default=5)
    project.set_defaults(func=cmd_project)

    ev = sub.add_parser("eval", help="QVEC / QVEC-CCA scores against linguistic matrices")
    ev.add_argument("--embeddings", nargs="+", required=True)
    ev.add_argument("--linguistic", nargs="+", required=True)
    ev.add_argument("--mode", choices=("qvec", "qvec-cca"), default="qvec")
    ev.set_defaults(func=cmd_eval)

    nb = sub.add_parser("neighbors", help="nearest words of table j for a word of table i")
    nb.add_argument("table_i")
    nb.add_argument("table_j")
    nb.add_argument("word")
    nb.add_argument("-k", type=int, default=5)
    nb.set_defaults(func=cmd_neighbors)

    sy = sub.add_parser("synth", help="generate the synthetic bilingual benchmark")
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--vocab-size", type=int, default=500)
    sy.add_argument("--dim", type=int, default=32)
    sy.add_argument("--noise", type=float, default=0.01)
    sy.add_argument("--out", required=True)
    sy.set_defaults(func=cmd_synth)

    gc = sub.add_parser("gradcheck", help="finite-difference check of the joint loss gradients")
    gc.add_argument("--seed", type=int, default=0)
    gc.set_defaults(func=cmd_gradcheck)
    return parser


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--components", default="W+N+Ch+L",
                   help="ablation: W | W+N | W+N+Ch | W+N+L | W+N+Ch+L")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--neighbors", type=int, default=5)
    p.add_argument("--filters", type=int, default=20)
    p.add_argument("--widths", default="1,2,3")
    p.add_argument("--dim-common", type=int, default=512)
    p.add_argument("--char-dim", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NonFiniteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (CorrspaceError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
