"""Acceptance suite: one test per headline criterion, each reporting PASS/FAIL.

The lines are collected in ``conftest.ACCEPTANCE_LINES`` and printed in the
terminal summary, so they appear even when output capture is on.
"""
from __future__ import annotations

import json
import math
import random
import time
from pathlib import Path

import numpy as np

from conftest import ACCEPTANCE_LINES, DESK_ENGLISH, DESK_TWEETS, pyar_corpus, topic_gap, two_topic_corpus
from hinglish_emo.cli import main
from hinglish_emo.config import PipelineConfig
from hinglish_emo.corpus import Emotion, class_counts, parse_corpus
from hinglish_emo.embeddings import SgnsConfig, cosine, fasttext_vector, sgns_loss_grads, sgns_step, train_sgns, word_vectors
from hinglish_emo.models import ARCHITECTURES, forward, init_model
from hinglish_emo.numerics import ops
from hinglish_emo.numerics.gradcheck import check_gradients
from hinglish_emo.trainer import Dataset, RunHistory, TrainConfig, select_checkpoint, train
from hinglish_emo.vocab import build_negative_table, build_vocab, encode_sequence

GOLDEN = Path(__file__).parent / "golden"


def report(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# --------------------------------------------------------------- gradients

def test_gradient_correctness():
    from test_models import IDS, smooth_instance
    from test_numerics import PRIMITIVES, _cases, _weighted

    t0 = time.perf_counter()
    worst = {}
    for seed in range(3):
        cases, r = _cases(seed)
        for name in PRIMITIVES:
            arrays, fn, out_shape = cases[name]
            R = r.normal(size=out_shape)
            errs = check_gradients(lambda p: _weighted(fn(p), R), arrays)
            worst[name] = max(worst.get(name, 0.0), *errs.values())
        s = r.uniform(0.05, 0.95, size=(4, 6))
        y = r.integers(0, 6, size=4)
        errs = check_gradients(lambda p: ops.categorical_cross_entropy(p["s"], y), {"s": s})
        worst["categorical_cross_entropy"] = max(worst.get("categorical_cross_entropy", 0.0), errs["s"])
    for arch in ARCHITECTURES:
        for start in (0, 100):
            P = smooth_instance(arch, start)
            yb = np.array([1, 4])

            def loss(leaves):
                return ops.categorical_cross_entropy(forward(IDS, P, training=True, rng=5, leaves=leaves), yb)

            worst[f"model:{arch}"] = max(worst.get(f"model:{arch}", 0.0), *check_gradients(loss, P.params).values())
    elapsed = time.perf_counter() - t0
    top = max(worst.values())
    report("gradient correctness", top <= 1e-4 and elapsed < 60,
           f"{len(worst)} checks, worst rel err {top:.2e} ({max(worst, key=worst.get)}), {elapsed:.1f}s")


# ----------------------------------------------------------------- oracles

def test_oracle_equivalence():
    from test_numerics import naive_conv, naive_pool

    mismatches = {"conv1d_valid": 0, "global_max_pool": 0, "select_checkpoint": 0}
    for seed in range(100):
        r = np.random.default_rng(seed)
        k = int(r.integers(1, 5))
        L, d, F = int(r.integers(k, k + 6)), int(r.integers(1, 4)), int(r.integers(1, 4))
        x, K, b = r.normal(size=(L, d)), r.normal(size=(F, k, d)), r.normal(size=F)
        if not np.allclose(ops.conv1d_valid(x, K, b).data, naive_conv(x, K, b), rtol=1e-12, atol=1e-12):
            mismatches["conv1d_valid"] += 1

        T, F = int(r.integers(1, 8)), int(r.integers(1, 5))
        x = r.integers(-3, 4, size=(T, F)).astype(float)  # small integers force ties
        mask = r.random(T) < 0.7
        mask[int(r.integers(T))] = True
        if not np.array_equal(ops.global_max_pool(x, mask).data, naive_pool(x, mask)):
            mismatches["global_max_pool"] += 1

        accs = list(r.integers(0, 5, size=int(r.integers(1, 25))) / 4)
        best = max(accs)
        if select_checkpoint(accs) != 1 + next(i for i, a in enumerate(accs) if a == best):
            mismatches["select_checkpoint"] += 1
    report("oracle equivalence", not any(mismatches.values()), f"100 instances each, mismatches {mismatches}")


# --------------------------------------------------------------------- SGNS

def test_sgns_loss_and_monotone_steps():
    from test_embeddings import _random_set

    zero_err = max(abs(sgns_loss_grads(np.zeros(300), np.zeros(300), np.zeros((K, 300)))[0] - (1 + K) * math.log(2))
                   for K in (1, 5, 10, 20))
    bad = []
    for lr in (0.001, 0.005, 0.01, 0.025, 0.05):
        for mode in ("word", "subword"):
            for seed in range(5):
                E = _random_set(mode, seed=seed)
                losses = [sgns_step(0, 1, [2, 3, 4, 5], E, lr) for _ in range(200)]
                if not all(b < a for a, b in zip(losses, losses[1:])):
                    bad.append((lr, mode, seed))
    report("SGNS loss and steps", zero_err <= 1e-12 and not bad,
           f"zero-vector error {zero_err:.1e}, non-monotone runs {len(bad)} of 50")


# -------------------------------------------------------- embedding semantics

def _train_default(sents, **kw):
    v = build_vocab((t for s in sents for t in s.split()), min_count=1)
    corpus = [encode_sequence(s, v) for s in sents]
    return train_sgns(corpus, v, build_negative_table(v), SgnsConfig(**kw))


def test_embedding_semantics():
    sents, A, B = two_topic_corpus(200_000)
    t0 = time.perf_counter()
    E = _train_default(sents, epochs=5)
    elapsed = time.perf_counter() - t0
    within, cross = topic_gap(word_vectors(E), E.index, A, B)
    report("embedding semantics", within - cross >= 0.2 and elapsed < 300,
           f"{sum(len(s.split()) for s in sents)} tokens, within {within:.3f} cross {cross:.3f} "
           f"gap {within - cross:.3f}, {elapsed:.1f}s")


def test_subword_oov():
    details, ok = [], True
    for seed in range(3):
        E = _train_default(pyar_corpus(seed), mode="subword", seed=seed + 1)
        oov = fasttext_vector("pyaar", E)
        W = word_vectors(E)
        base = cosine(oov, W[E.index["pyar"]])
        median = float(np.median([cosine(oov, W[i]) for t, i in E.index.items() if t != "pyar"]))
        ok &= "pyaar" not in E.index and base > median
        details.append(f"{base:.3f}>{median:.3f}")
    report("subword OOV", ok, "cos(pyaar, pyar) vs median over seeds: " + ", ".join(details))


# ------------------------------------------------------------- memorization

def test_memorization_capacity():
    r = np.random.default_rng(0)
    max_len = 16
    ids = np.zeros((12, max_len), dtype=np.int64)
    for i in range(12):
        n = int(r.integers(3, max_len + 1))
        ids[i, :n] = r.integers(2, 40, n)
    data = Dataset(ids, np.arange(12) % 6)
    base = PipelineConfig()
    base.training.max_len = max_len
    out = {}
    for arch in ARCHITECTURES:
        P = init_model(base.model(vocab_size=40, arch=arch), seed=0)
        h = train(P, data, TrainConfig(epochs=200, save_checkpoints=False, target_train_accuracy=0.99), val=data)
        out[arch] = (h.records[-1].train_accuracy, len(h))
    ok = all(acc >= 0.99 for acc, _ in out.values())
    report("memorization capacity", ok,
           ", ".join(f"{a} {acc:.2f}@{n}ep" for a, (acc, n) in out.items()) + " (default sizes, limit 200)")


# ------------------------------------------------------- desk end-to-end

def _desk_workspace(tmp: Path, extra: str = "") -> Path:
    cfg = tmp / "desk.ini"
    cfg.write_text(
        "[paths]\n"
        f"corpus_in = {DESK_TWEETS}\nenglish_in = {DESK_ENGLISH}\n"
        f"corpus_out = {tmp}/clean.jsonl\nenglish_out = {tmp}/english.jsonl\n"
        f"diagnostics = {tmp}/diag.tsv\nclass_report = {tmp}/counts.txt\nvocab = {tmp}/vocab.tsv\n"
        f"embeddings_dir = {tmp}/emb\ncheckpoints = {tmp}/ckpt\nreports = {tmp}/reports\n" + extra,
        encoding="utf-8")
    return cfg


def test_desk_end_to_end(tmp_path):
    cfg = str(_desk_workspace(tmp_path))
    t0 = time.perf_counter()
    codes = [main(["preprocess", "--config", cfg]),
             main(["build-vocab", "--config", cfg]),
             main(["train-embeddings", "--config", cfg]),
             main(["train", "--config", cfg, "--training-arch", "attn_bilstm"])]
    elapsed = time.perf_counter() - t0
    n = sum(1 for _ in open(tmp_path / "clean.jsonl", encoding="utf-8"))
    history = RunHistory.from_jsonl((tmp_path / "ckpt/history.jsonl").read_text(encoding="utf-8"))
    best = select_checkpoint(history)
    acc = history.records[best - 1].val_accuracy
    ok = codes == [0, 0, 0, 0] and len(history) == 20 and acc >= 0.60 and elapsed < 600
    report("desk end-to-end", ok,
           f"{n} labeled records, attn_bilstm best epoch {best}, val acc {acc:.3f} (chance 0.167), {elapsed:.0f}s")


# ----------------------------------------------------------------- protocol

def test_protocol_fidelity():
    dump = PipelineConfig().dump()
    golden = (GOLDEN / "default_config.ini").read_text(encoding="utf-8")
    import configparser

    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string(dump)
    published = {
        "embedding.dim": ("300", cp["embedding"]["dim"]),
        "embedding.window": ("10", cp["embedding"]["window"]),
        "cnn.dropout": ("0.5", cp["cnn"]["dropout"]),
        "cnn.stride": ("1", cp["cnn"]["stride"]),
        "cnn.kernels": ("200", cp["cnn"]["kernels"]),
        "cnn.kernel_sizes": ("3,6,9,12", cp["cnn"]["kernel_sizes"]),
        "rnn.lstm_units": ("150", cp["rnn"]["lstm_units"]),
        "rnn.input_dropout": ("0.2", cp["rnn"]["input_dropout"]),
        "rnn.recurrent_dropout": ("0.2", cp["rnn"]["recurrent_dropout"]),
        "training.adam_epsilon": ("1e-08", cp["training"]["adam_epsilon"]),
        "training.epochs": ("20", cp["training"]["epochs"]),
        "training.val_fraction": ("0.1", cp["training"]["val_fraction"]),
    }
    wrong = {k: v for k, v in published.items() if v[0] != v[1]}
    report("protocol fidelity", dump == golden and not wrong,
           f"golden dump {'identical' if dump == golden else 'DIFFERS'}, {len(published) - len(wrong)}"
           f"/{len(published)} published values exact")


# -------------------------------------------------------------- bookkeeping

PUBLISHED_COUNTS = {Emotion.HAPPINESS: 25869, Emotion.SADNESS: 20931, Emotion.ANGER: 28705,
                    Emotion.FEAR: 18981, Emotion.DISGUST: 35667, Emotion.SURPRISE: 18935}


def test_bookkeeping(tmp_path):
    labels = [e for e, n in PUBLISHED_COUNTS.items() for _ in range(n)]
    random.Random(0).shuffle(labels)
    path = tmp_path / "table1.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for i, e in enumerate(labels):
            fh.write(json.dumps({"id": str(i), "text": f"tweet {i}", "label": e.label}) + "\n")
    records, diags = parse_corpus(path)
    counts = class_counts(records)
    total = sum(counts.values())
    report("bookkeeping", not diags and counts == PUBLISHED_COUNTS and total == 149088,
           " ".join(f"{e.label}={counts[e]}" for e in Emotion) + f" total={total}")


# -------------------------------------------------------------- determinism

REDUCED = ("[embedding]\ndim = 16\nepochs = 1\nbuckets = 2000\n"
           "[cnn]\nkernels = 8\nhidden = 16,8\n"
           "[rnn]\nlstm_units = 8\nhidden = 8\nattn_dim = 8\n"
           "[training]\nepochs = 2\nmax_len = 16\n")


def test_grid_determinism(tmp_path):
    cfg = str(_desk_workspace(tmp_path, REDUCED))
    t0 = time.perf_counter()
    for cmd in (["preprocess"], ["build-vocab"], ["train-embeddings", "--all"]):
        assert main(cmd + ["--config", cfg]) == 0
    tables = []
    for _ in range(2):
        assert main(["grid", "--config", cfg]) == 0
        tables.append((tmp_path / "reports/grid.tsv").read_text(encoding="utf-8"))
    rows = tables[0].splitlines()[1:]
    ok = tables[0] == tables[1] and len(rows) == 16 and "ERROR" not in tables[0]
    report("grid determinism", ok,
           f"{len(rows)} cells, tables {'identical' if tables[0] == tables[1] else 'DIFFER'}, "
           f"{time.perf_counter() - t0:.0f}s (reduced sizes)")
