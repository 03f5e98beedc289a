"""Pipeline configuration: INI sections of typed fields with defaults.

Sections ``embedding``, ``cnn`` and ``rnn`` carry the published
hyper-parameters; ``training`` holds the optimiser and protocol settings.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .embeddings import SgnsConfig
from .models import ModelConfig
from .trainer import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class PathsSection:
    corpus_in: str = "data/tweets.jsonl"
    english_in: str = ""
    corpus_out: str = "work/corpus.clean.jsonl"
    english_out: str = "work/english.clean.jsonl"
    diagnostics: str = "work/diagnostics.tsv"
    class_report: str = "work/class_counts.txt"
    hashtags: str = ""  # empty: bundled map
    lexicon_hindi: str = ""  # empty: bundled list
    lexicon_english: str = ""
    vocab: str = "work/vocab.tsv"
    embeddings_dir: str = "work/embeddings"
    checkpoints: str = "work/checkpoints"
    reports: str = "work/reports"


@dataclass
class CorpusSection:
    min_count: int = 10


@dataclass
class EmbeddingSection:
    dim: int = 300
    window: int = 10
    sampling: str = "negative"
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    lr_floor: float = 1e-4
    alpha: float = 0.75
    subsample: float = 0.0
    mode: str = "word"
    corpus: str = "hinglish"
    nmin: int = 3
    nmax: int = 6
    buckets: int = 200_000
    seed: int = 1


@dataclass
class CnnSection:
    dropout: float = 0.5
    stride: int = 1
    kernels: int = 200
    kernel_sizes: str = "3,6,9,12"
    hidden: str = "256,64"


@dataclass
class RnnSection:
    lstm_units: int = 150
    input_dropout: float = 0.2
    recurrent_dropout: float = 0.2
    hidden: int = 64
    attn_dim: int = 64


@dataclass
class TrainingSection:
    arch: str = "attn_bilstm"
    epochs: int = 20
    batch_size: int = 64
    lr: float = 1e-3
    adam_epsilon: float = 1e-8
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    val_fraction: float = 0.10
    max_len: int = 64
    output: str = "sigmoid"
    freeze_embeddings: bool = False
    embedding_mode: str = "word"
    embedding_corpus: str = "hinglish"
    dtype: str = "float32"
    seed: int = 0


@dataclass
class GridSection:
    architectures: str = "cnn,lstm,bilstm,attn_bilstm"
    embeddings: str = "word,subword"
    corpora: str = "hinglish,hinglish+english"


SECTIONS = {
    "paths": PathsSection,
    "corpus": CorpusSection,
    "embedding": EmbeddingSection,
    "cnn": CnnSection,
    "rnn": RnnSection,
    "training": TrainingSection,
    "grid": GridSection,
}


@dataclass
class PipelineConfig:
    paths: PathsSection = field(default_factory=PathsSection)
    corpus: CorpusSection = field(default_factory=CorpusSection)
    embedding: EmbeddingSection = field(default_factory=EmbeddingSection)
    cnn: CnnSection = field(default_factory=CnnSection)
    rnn: RnnSection = field(default_factory=RnnSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    grid: GridSection = field(default_factory=GridSection)

    # ----- derived configs

    def sgns(self, mode: str | None = None) -> SgnsConfig:
        e = self.embedding
        if e.sampling != "negative":
            raise ConfigError(f"only negative sampling is supported, got {e.sampling!r}")
        return SgnsConfig(dim=e.dim, window=e.window, negatives=e.negatives, epochs=e.epochs,
                          lr=e.lr, lr_floor=e.lr_floor, alpha=e.alpha, sample=e.subsample,
                          seed=e.seed, mode=mode or e.mode, nmin=e.nmin, nmax=e.nmax,
                          buckets=e.buckets)

    def model(self, vocab_size: int = 2, embed_dim: int | None = None, arch: str | None = None) -> ModelConfig:
        if self.cnn.stride != 1:
            raise ConfigError("only stride 1 convolutions are supported")
        t = self.training
        return ModelConfig(arch=arch or t.arch, vocab_size=vocab_size,
                           embed_dim=self.embedding.dim if embed_dim is None else embed_dim,
                           max_len=t.max_len, kernel_sizes=_ints(self.cnn.kernel_sizes),
                           n_kernels=self.cnn.kernels, cnn_dropout=self.cnn.dropout,
                           cnn_hidden=_ints(self.cnn.hidden), lstm_units=self.rnn.lstm_units,
                           input_dropout=self.rnn.input_dropout,
                           recurrent_dropout=self.rnn.recurrent_dropout, rnn_hidden=self.rnn.hidden,
                           attn_dim=self.rnn.attn_dim, output=t.output,
                           freeze_embeddings=t.freeze_embeddings, dtype=t.dtype)

    def train_config(self, checkpoint_dir: str | None = None, verbose: bool = False) -> TrainConfig:
        t = self.training
        return TrainConfig(epochs=t.epochs, batch_size=t.batch_size, lr=t.lr, beta1=t.adam_beta1,
                           beta2=t.adam_beta2, eps=t.adam_epsilon, seed=t.seed,
                           val_fraction=t.val_fraction,
                           checkpoint_dir=checkpoint_dir or self.paths.checkpoints, verbose=verbose)

    # ----- io

    def dump(self) -> str:
        """INI text of every key; parsing it back gives an equal config."""
        cp = configparser.ConfigParser(interpolation=None)
        for name in SECTIONS:
            sec = getattr(self, name)
            cp[name] = {f.name: _render(getattr(sec, f.name)) for f in fields(sec)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in str(text).split(",") if x.strip())


def _render(v: Any) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def coerce(section: str, key: str, raw: str):
    cls = SECTIONS[section]
    names = {f.name: f for f in fields(cls)}
    if key not in names:
        raise ConfigError(f"unknown config key {section}.{key}")
    default = getattr(cls(), key)
    try:
        if isinstance(default, bool):
            low = str(raw).strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from None
    return str(raw)


def apply_overrides(cfg: PipelineConfig, overrides: dict[tuple[str, str], Any]) -> PipelineConfig:
    for (section, key), raw in overrides.items():
        value = coerce(section, key, raw) if isinstance(raw, str) else raw
        setattr(cfg, section, replace(getattr(cfg, section), **{key: value}))
    return cfg


def parse_config_text(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string(text)
    overrides = {}
    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in cp[section].items():
            coerce(section, key, raw)
            overrides[(section, key)] = raw
    return apply_overrides(base or PipelineConfig(), overrides)


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return parse_config_text(Path(path).read_text(encoding="utf-8"))
