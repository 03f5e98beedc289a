"""``hinglish-emo`` command line.

Every command accepts ``--config FILE`` plus one ``--<section>-<key>``
override per configuration key.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import corpus as C
from .config import SECTIONS, ConfigError, PipelineConfig, apply_overrides, load_config
from .embeddings import CORPUS_VARIANTS, embedding_corpus, load_vec, nearest_neighbors, save_vec, train_sgns
from .models import ARCHITECTURES, EmptyInput, PreprocessContext, init_model, load_model, predict
from .trainer import (EMBEDDING_TAGS, Dataset, GridCell, embedding_matrix, evaluate, results_text_table,
                      results_tsv, run_experiment_grid, select_checkpoint, split_train_val, train)
from .vocab import Vocab, build_negative_table, build_vocab, encode_batch, encode_sequence

EXIT_OK, EXIT_OTHER, EXIT_MISSING, EXIT_EMPTY, EXIT_ARCH, EXIT_EMPTY_PREDICT = 0, 1, 2, 3, 4, 5

log = logging.getLogger("hinglish_emo")


class CommandError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ------------------------------------------------------------------ helpers

def _require(path: str | Path, what: str) -> Path:
    p = Path(path)
    if not str(path) or not p.exists():
        raise CommandError(f"missing {what}: {path}", EXIT_MISSING)
    return p


def embedding_path(cfg: PipelineConfig, mode: str, corpus: str) -> Path:
    return Path(cfg.paths.embeddings_dir) / f"{EMBEDDING_TAGS[mode]}_{corpus.replace('+', '_')}.vec"


def _resources(cfg: PipelineConfig):
    hmap = C.HashtagMap.from_json(cfg.paths.hashtags) if cfg.paths.hashtags else C.default_hashtag_map()
    hi_default, en_default = C.default_lexicons()
    hi = C.load_lexicon(cfg.paths.lexicon_hindi) if cfg.paths.lexicon_hindi else hi_default
    en = C.load_lexicon(cfg.paths.lexicon_english) if cfg.paths.lexicon_english else en_default
    return hmap, hi, en


def _clean_records(path: str | Path):
    records, diags = C.parse_corpus(_require(path, "cleaned corpus"))
    for d in diags:
        log.warning("%s: %s", path, d)
    return records


def _labeled_dataset(cfg: PipelineConfig, vocab: Vocab) -> Dataset:
    records = [r for r in _clean_records(cfg.paths.corpus_out) if r.label is not None and r.clean_text]
    if not records:
        raise CommandError("cleaned corpus holds no labeled records", EXIT_EMPTY)
    ids = encode_batch([r.clean_text for r in records], vocab, cfg.training.max_len)
    return Dataset(ids, [int(r.label) for r in records])


def _load_vocab(cfg: PipelineConfig) -> Vocab:
    return Vocab.load(_require(cfg.paths.vocab, "vocab (run build-vocab)"))


def _check_arch(arch: str) -> None:
    if arch not in ARCHITECTURES:
        raise CommandError(f"unknown architecture {arch!r}; expected one of {', '.join(ARCHITECTURES)}", EXIT_ARCH)


def _best_checkpoint(cfg: PipelineConfig) -> Path:
    marker = _require(Path(cfg.paths.checkpoints) / "best.txt", "best-epoch marker (run train)")
    _, path = marker.read_text(encoding="utf-8").split("\t")
    return _require(path.strip(), "checkpoint")


# ----------------------------------------------------------------- commands

def cmd_preprocess(cfg: PipelineConfig, args) -> int:
    src = _require(cfg.paths.corpus_in, "input corpus")
    hmap, hi, en = _resources(cfg)
    records, diags = C.parse_corpus(src)
    result = C.preprocess(records, hmap, hi, en, min_count=cfg.corpus.min_count)
    for p in (cfg.paths.corpus_out, cfg.paths.diagnostics, cfg.paths.class_report):
        Path(p).parent.mkdir(parents=True, exist_ok=True)
    C.write_corpus(cfg.paths.corpus_out, result.records)
    with open(cfg.paths.diagnostics, "w", encoding="utf-8") as fh:
        fh.write("source\tline_or_id\treason\n")
        for d in diags:
            fh.write(f"{src}\t{d.line}\t{d.message}\n")
        for rid, reason in result.dropped:
            fh.write(f"{src}\t{rid}\t{reason}\n")
    if cfg.paths.english_in:
        en_src = _require(cfg.paths.english_in, "English corpus")
        en_records, en_diags = C.parse_corpus(en_src)
        en_result = C.preprocess(en_records, hmap, hi, en, min_count=cfg.corpus.min_count,
                                 require_label=False, language_filter=False)
        Path(cfg.paths.english_out).parent.mkdir(parents=True, exist_ok=True)
        C.write_corpus(cfg.paths.english_out, en_result.records)
        with open(cfg.paths.diagnostics, "a", encoding="utf-8") as fh:
            for d in en_diags:
                fh.write(f"{en_src}\t{d.line}\t{d.message}\n")
            for rid, reason in en_result.dropped:
                fh.write(f"{en_src}\t{rid}\t{reason}\n")
        print(f"english: {len(en_result.records)} records kept of {len(en_records)}")
    report = C.format_class_counts(C.class_counts(result.records))
    Path(cfg.paths.class_report).write_text(report, encoding="utf-8")
    print(f"kept {len(result.records)} of {len(records)} records "
          f"({len(diags)} malformed, {len(result.dropped)} dropped)")
    print(report, end="")
    return EXIT_OK


def cmd_build_vocab(cfg: PipelineConfig, args) -> int:
    records = _clean_records(cfg.paths.corpus_out)
    vocab = build_vocab((t for r in records for t in (r.clean_text or "").split()), cfg.corpus.min_count)
    Path(cfg.paths.vocab).parent.mkdir(parents=True, exist_ok=True)
    vocab.save(cfg.paths.vocab)
    print(f"vocab size {len(vocab)} ({vocab.n_real} tokens + pad, unk) -> {cfg.paths.vocab}")
    return EXIT_OK


def _train_one_embedding(cfg: PipelineConfig, mode: str, variant: str) -> Path:
    hinglish = [r.clean_text for r in _clean_records(cfg.paths.corpus_out) if r.clean_text]
    english: list[str] = []
    if variant == "hinglish+english":
        english = [r.clean_text for r in _clean_records(cfg.paths.english_out) if r.clean_text]
    try:
        texts = embedding_corpus(hinglish, english, variant)
    except ValueError as exc:
        raise CommandError(str(exc), EXIT_EMPTY) from exc
    if not texts:
        raise CommandError("embedding corpus is empty", EXIT_EMPTY)
    vocab = build_vocab((t for s in texts for t in s.split()), cfg.corpus.min_count)
    if vocab.n_real == 0:
        raise CommandError("embedding corpus has no token above min_count", EXIT_EMPTY)
    seqs = [encode_sequence(s, vocab) for s in texts]
    E = train_sgns(seqs, vocab, build_negative_table(vocab, cfg.embedding.alpha), cfg.sgns(mode))
    out = embedding_path(cfg, mode, variant)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_vec(E, out)
    print(f"{out}: vocab {len(E.tokens)}  dim {E.dim}  mode {mode}  corpus {variant}")
    return out


def cmd_train_embeddings(cfg: PipelineConfig, args) -> int:
    if getattr(args, "all", False):
        combos = [(m, c) for m in ("word", "subword") for c in CORPUS_VARIANTS
                  if c == "hinglish" or Path(cfg.paths.english_out).exists()]
    else:
        combos = [(cfg.embedding.mode, cfg.embedding.corpus)]
    for mode, variant in combos:
        _train_one_embedding(cfg, mode, variant)
    return EXIT_OK


def _initial_model(cfg: PipelineConfig, vocab: Vocab, arch: str):
    mode, variant = cfg.training.embedding_mode, cfg.training.embedding_corpus
    path = embedding_path(cfg, mode, variant)
    if path.exists():
        E = load_vec(path)
        mcfg = cfg.model(len(vocab), E.dim, arch)
        return init_model(mcfg, embedding_matrix(vocab, E, cfg.training.seed), seed=cfg.training.seed), path
    log.warning("no embeddings at %s; using random initialisation", path)
    return init_model(cfg.model(len(vocab), arch=arch), seed=cfg.training.seed), None


def cmd_train(cfg: PipelineConfig, args) -> int:
    arch = cfg.training.arch
    _check_arch(arch)
    vocab = _load_vocab(cfg)
    data = _labeled_dataset(cfg, vocab)
    P, emb_path = _initial_model(cfg, vocab, arch)
    tcfg = cfg.train_config(verbose=True)
    tcfg.manifest = {"vocab_path": str(Path(cfg.paths.vocab).resolve()),
                     "embedding_mode": cfg.training.embedding_mode,
                     "embedding_corpus": cfg.training.embedding_corpus,
                     "embedding_path": "" if emb_path is None else str(emb_path)}
    history = train(P, data, tcfg)
    best = select_checkpoint(history)
    marker = Path(cfg.paths.checkpoints) / "best.txt"
    marker.write_text(f"{best}\t{history.records[best - 1].checkpoint}\n", encoding="utf-8")
    print(f"best epoch {best} (val_acc {history.records[best - 1].val_accuracy:.4f}) -> {marker}")
    return EXIT_OK


def cmd_evaluate(cfg: PipelineConfig, args) -> int:
    vocab = _load_vocab(cfg)
    path = Path(args.checkpoint) if getattr(args, "checkpoint", None) else _best_checkpoint(cfg)
    P = load_model(_require(path, "checkpoint"))
    data = _labeled_dataset(cfg, vocab)
    if not getattr(args, "full", False):
        _, va = split_train_val(data.labels, cfg.training.val_fraction, cfg.training.seed)
        data = data.subset(va)
    report = evaluate(P, data)
    Path(cfg.paths.reports).mkdir(parents=True, exist_ok=True)
    out = Path(cfg.paths.reports) / "evaluation.tsv"
    out.write_text(report.as_table(), encoding="utf-8")
    (Path(cfg.paths.reports) / "evaluation.json").write_text(json.dumps(report.to_json(), indent=1), encoding="utf-8")
    print(report.as_table(), end="")
    return EXIT_OK


def cmd_predict(cfg: PipelineConfig, args) -> int:
    if not args.text:
        raise CommandError("predict needs --text", EXIT_OTHER)
    vocab = _load_vocab(cfg)
    path = Path(args.checkpoint) if getattr(args, "checkpoint", None) else _best_checkpoint(cfg)
    P = load_model(_require(path, "checkpoint"))
    hmap, _, _ = _resources(cfg)
    try:
        emotion, scores = predict(args.text, P, PreprocessContext(vocab, hmap.keywords))
    except EmptyInput as exc:
        raise CommandError(str(exc), EXIT_EMPTY_PREDICT) from exc
    print(emotion.label)
    print(" ".join(f"{e.label}={s:.4f}" for e, s in zip(C.Emotion, scores)))
    return EXIT_OK


def _split_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def cmd_grid(cfg: PipelineConfig, args) -> int:
    archs = _split_list(cfg.grid.architectures)
    for a in archs:
        _check_arch(a)
    modes = _split_list(cfg.grid.embeddings)
    corpora = _split_list(cfg.grid.corpora)
    vocab = _load_vocab(cfg)
    data = _labeled_dataset(cfg, vocab)
    tr, va = split_train_val(data.labels, cfg.training.val_fraction, cfg.training.seed)
    cells = [GridCell(a, m, c) for a in archs for m in modes for c in corpora]
    paths = {(m, c): embedding_path(cfg, m, c) for m in modes for c in corpora}
    results = run_experiment_grid(cells, data.subset(tr), data.subset(va), vocab, paths,
                                  cfg.model(len(vocab)), cfg.train_config(), Path(cfg.paths.checkpoints) / "grid")
    reports = Path(cfg.paths.reports)
    reports.mkdir(parents=True, exist_ok=True)
    (reports / "grid.tsv").write_text(results_tsv(results), encoding="utf-8")
    table = results_text_table(results)
    (reports / "grid.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    for r in results:
        if r.error:
            print(f"cell {r.cell.arch}/{r.cell.mode}/{r.cell.corpus} failed: {r.error}", file=sys.stderr)
    return EXIT_OK


def cmd_neighbors(cfg: PipelineConfig, args) -> int:
    path = _require(embedding_path(cfg, cfg.embedding.mode, cfg.embedding.corpus), "embeddings")
    E = load_vec(path)
    try:
        hits = nearest_neighbors(args.query, E, args.k)
    except KeyError as exc:
        raise CommandError(str(exc), EXIT_OTHER) from exc
    for tok, cos in hits:
        print(f"{tok}\t{cos:.4f}")
    return EXIT_OK


def cmd_config(cfg: PipelineConfig, args) -> int:
    print(cfg.dump(), end="")
    return EXIT_OK


COMMANDS = {
    "preprocess": (cmd_preprocess, "label, filter and clean the raw corpus"),
    "build-vocab": (cmd_build_vocab, "build the classifier vocabulary"),
    "train-embeddings": (cmd_train_embeddings, "train word2vec/fasttext style embeddings"),
    "train": (cmd_train, "train one classifier with per-epoch checkpoints"),
    "evaluate": (cmd_evaluate, "evaluate the selected checkpoint"),
    "predict": (cmd_predict, "classify one text"),
    "grid": (cmd_grid, "run the architecture x embedding x corpus grid"),
    "neighbors": (cmd_neighbors, "nearest neighbours of a word"),
    "config": (cmd_config, "print the effective configuration"),
}


# ------------------------------------------------------------------- parser

def _add_config_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI configuration file")
    defaults = PipelineConfig()
    for section, cls in SECTIONS.items():
        group = p.add_argument_group(f"[{section}]")
        for f in fields(cls):
            default = getattr(getattr(defaults, section), f.name)
            group.add_argument(f"--{section}-{f.name.replace('_', '-')}", dest=f"cfg__{section}__{f.name}",
                               metavar="V", default=None, help=f"default: {default!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hinglish-emo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        _add_config_options(p)
        if name == "train-embeddings":
            p.add_argument("--all", action="store_true", help="train every mode x corpus variant")
        if name in ("evaluate", "predict"):
            p.add_argument("--checkpoint", help="checkpoint to load (default: best epoch)")
        if name == "evaluate":
            p.add_argument("--full", action="store_true", help="evaluate on the whole corpus, not the split")
        if name == "predict":
            p.add_argument("--text", required=True)
        if name == "neighbors":
            p.add_argument("--query", required=True)
            p.add_argument("--k", type=int, default=10)
    return parser


def resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config)
    overrides = {}
    for key, value in vars(args).items():
        if key.startswith("cfg__") and value is not None:
            _, section, name = key.split("__")
            overrides[(section, name)] = value
    return apply_overrides(cfg, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command][0](cfg, args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, C.ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_OTHER
    except C.CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING


if __name__ == "__main__":
    sys.exit(main())
