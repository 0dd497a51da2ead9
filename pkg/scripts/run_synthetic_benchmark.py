#!/usr/bin/env python3
"""End-to-end synthetic benchmark: generate data, train the full model,
project both vocabularies and report held-out translation precision@1.

Usage: python scripts/run_synthetic_benchmark.py [--seed 7] [--out DIR]
"""

import argparse
import contextlib
import io
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from corrspace import cli, corpus, trainer


def run_cli(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli.main([str(a) for a in argv])
    if code != 0:
        raise SystemExit(f"command {argv[0]} failed with exit code {code}")
    return buf.getvalue()


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
    ap.add_argument("--out", default=None, help="working directory (default: temp)")
    ap.add_argument("--epochs", type=int, default=200)
    args = ap.parse_args()

    root = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="corrspace_bench_"))
    data_dir, run_dir = root / "data", root / "run"
    started = time.monotonic()

    run_cli(["synth", "--seed", args.seed, "--vocab-size", 500, "--dim", 32,
             "--noise", 0.01, "--out", data_dir])
    run_cli(["train", "--manifest", data_dir / "train.manifest", "--out", run_dir,
             "--components", "W+N+Ch+L", "--epochs", args.epochs, "--batch-size", 100,
             "--dim-common", 32, "--filters", 4, "--widths", "1,2,3",
             "--neighbors", 5, "--seed", args.seed])
    for lang in ("la", "lb"):
        run_cli(["project", "--checkpoint", run_dir / f"checkpoint_{lang}.txt",
                 "--embeddings", data_dir / f"emb_{lang}.txt",
                 "--out", run_dir / f"proj_{lang}.txt", "--neighbors", 5])

    log = trainer.load_train_log(run_dir / "train_log.tsv")
    heldout = [l.split("\t") for l in (data_dir / "dict_heldout.tsv").read_text().splitlines()]
    p1 = precision_at_1(run_dir / "proj_la.txt", run_dir / "proj_lb.txt", heldout)
    elapsed = time.monotonic() - started

    print(f"workdir                {root}")
    print(f"epochs run             {len(log)}")
    print(f"O_W first/last epoch   {log[0][1]:.1f} / {log[-1][1]:.1f}  (ratio {log[-1][1] / log[0][1]:.3f})")
    print(f"O_char first/last      {log[0][3]:.2f} / {log[-1][3]:.2f}")
    print(f"held-out precision@1   {p1:.3f}  ({len(heldout)} pairs)")
    print(f"wall time              {elapsed:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
