#!/usr/bin/env python3
"""Dictionary-size robustness sweep: train the full model and the W-only
ablation on shrinking training dictionaries and compare held-out
precision@1 degradation.

Usage: python scripts/run_dictionary_robustness.py [--seed 7] [--sizes 400 100 20]
"""

import argparse
import contextlib
import io
import sys
import tempfile
from pathlib import Path

import numpy as np

from corrspace import cli, corpus


def run_cli(argv):
    with contextlib.redirect_stdout(io.StringIO()):
        code = cli.main([str(a) for a in argv])
    if code != 0:
        raise SystemExit(f"command {argv[0]} failed with exit code {code}")


def precision_at_1(proj_a, proj_b, heldout):
    a = corpus.load_embeddings(proj_a, language="la")
    b = corpus.load_embeddings(proj_b, language="lb")
    bn = b.matrix / np.linalg.norm(b.matrix, axis=1)[:, None]
    hits = 0
    for wa, wb in heldout:
        q = a.row(wa)
        hits += b.vocab.words[int(np.argmax(bn @ (q / np.linalg.norm(q))))] == wb
    return hits / len(heldout)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--sizes", type=int, nargs="+", default=[400, 100, 20])
    ap.add_argument("--epochs", type=int, default=200)
    args = ap.parse_args()

    root = Path(tempfile.mkdtemp(prefix="corrspace_robust_"))
    data_dir = root / "data"
    run_cli(["synth", "--seed", args.seed, "--vocab-size", 500, "--dim", 32,
             "--noise", 0.01, "--out", data_dir])
    train_lines = (data_dir / "dict_train.tsv").read_text().splitlines()
    heldout = [l.split("\t") for l in (data_dir / "dict_heldout.tsv").read_text().splitlines()]

    print(f"workdir {root}")
    print("pairs\tW+N+Ch+L\tW")
    results = {}
    for size in args.sizes:
        (data_dir / f"dict_{size}.tsv").write_text("\n".join(train_lines[:size]) + "\n")
        manifest = data_dir / f"manifest_{size}.txt"
        manifest.write_text(
            "embeddings\tla\temb_la.txt\nembeddings\tlb\temb_lb.txt\n"
            f"dictionary\tla\tlb\tdict_{size}.tsv\n"
            "clusters\tla\tclusters_la.tsv\nclusters\tlb\tclusters_lb.tsv\n"
        )
        row = []
        for components in ("W+N+Ch+L", "W"):
            run = root / f"run_{size}_{components.replace('+', '_')}"
            run_cli(["train", "--manifest", manifest, "--out", run,
                     "--components", components, "--epochs", args.epochs,
                     "--batch-size", 100, "--dim-common", 32, "--filters", 4,
                     "--widths", "1,2,3", "--neighbors", 5, "--seed", args.seed])
            for lang in ("la", "lb"):
                run_cli(["project", "--checkpoint", run / f"checkpoint_{lang}.txt",
                         "--embeddings", data_dir / f"emb_{lang}.txt",
                         "--out", run / f"proj_{lang}.txt", "--neighbors", 5])
            p1 = precision_at_1(run / "proj_la.txt", run / "proj_lb.txt", heldout)
            results[(size, components)] = p1
            row.append(f"{p1:.3f}")
        print(f"{size}\t" + "\t".join(row))

    largest, smallest = max(args.sizes), min(args.sizes)
    full_drop = results[(largest, "W+N+Ch+L")] - results[(smallest, "W+N+Ch+L")]
    w_drop = results[(largest, "W")] - results[(smallest, "W")]
    print(f"degradation {largest}->{smallest} pairs: full {full_drop:.3f}, W-only {w_drop:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
