"""Run the pipeline end to end on the bundled desk corpus.

    python scripts/run_desk_experiment.py [--out DIR] [--arch attn_bilstm] [--grid] [--small]

Stages: preprocess, build-vocab, train-embeddings, train and evaluate, with
an optional 16-cell grid at the end. ``--small`` swaps in reduced model and
embedding sizes so the grid finishes in well under a minute.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from hinglish_emo.cli import main as cli
from hinglish_emo.corpus import resource_path

SMALL = """
[embedding]
dim = 16
epochs = 1
buckets = 2000
[cnn]
kernels = 8
hidden = 16,8
[rnn]
lstm_units = 8
hidden = 8
attn_dim = 8
[training]
epochs = 2
max_len = 16
"""


def write_config(out: Path, small: bool) -> Path:
    w = out / "work"
    text = (
        "[paths]\n"
        f"corpus_in = {resource_path('desk/tweets.jsonl')}\n"
        f"english_in = {resource_path('desk/english.jsonl')}\n"
        f"corpus_out = {w}/corpus.clean.jsonl\nenglish_out = {w}/english.clean.jsonl\n"
        f"diagnostics = {w}/diagnostics.tsv\nclass_report = {w}/class_counts.txt\n"
        f"vocab = {w}/vocab.tsv\nembeddings_dir = {w}/embeddings\n"
        f"checkpoints = {w}/checkpoints\nreports = {w}/reports\n"
    )
    path = out / "desk.ini"
    path.write_text(text + (SMALL if small else ""), encoding="utf-8")
    return path


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/desk")
    ap.add_argument("--arch", default="attn_bilstm")
    ap.add_argument("--grid", action="store_true", help="also run the architecture x embedding x corpus grid")
    ap.add_argument("--small", action="store_true", help="reduced sizes for a quick run")
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = str(write_config(out, args.small))
    stages = [["preprocess"], ["build-vocab"], ["train-embeddings", "--all" if args.grid else "--embedding-mode=word"],
              ["train", "--training-arch", args.arch], ["evaluate"]]
    if args.grid:
        stages.append(["grid"])
    for stage in stages:
        t0 = time.perf_counter()
        print(f"== {stage[0]}", flush=True)
        code = cli(["-v", *stage, "--config", cfg])
        print(f"== {stage[0]} exit {code} ({time.perf_counter() - t0:.1f}s)", flush=True)
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
