"""Stratified splitting, checkpointed training, checkpoint selection,
evaluation and the architecture x embedding x corpus grid."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import Emotion
from .embeddings import EmbeddingSet, load_vec, vector
from .models import ModelConfig, ModelParams, forward, init_model, load_model, predict_scores, save_model
from .numerics import ops
from .numerics.checkpoint import atomic_write_bytes
from .numerics.optim import AdamState, adam_update
from .numerics.tensor import backward
from .vocab import N_RESERVED, PAD, Vocab

log = logging.getLogger(__name__)

EMBEDDING_TAGS = {"word": "word2vec", "subword": "fasttext"}


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 64
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    val_fraction: float = 0.10
    checkpoint_dir: str = "checkpoints"
    eval_train: bool = True
    verbose: bool = False
    save_checkpoints: bool = True
    target_train_accuracy: float | None = None  # stop once reached (capacity checks)
    manifest: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError(f"val_fraction must lie in (0, 1), got {self.val_fraction}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class Dataset:
    ids: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.ids) != len(self.labels):
            raise ValueError("ids and labels differ in length")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.ids[idx], self.labels[idx])


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float
    checkpoint: str


@dataclass
class RunHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def val_accuracies(self) -> list[float]:
        return [r.val_accuracy for r in self.records]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(r)) + "\n" for r in self.records)

    @classmethod
    def from_jsonl(cls, text: str) -> "RunHistory":
        return cls([EpochRecord(**json.loads(l)) for l in text.splitlines() if l.strip()])


# --------------------------------------------------------------------- split

def split_train_val(labels: Sequence[int] | Dataset, fraction: float = 0.10,
                    seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Stratified split returning (train indices, val indices), both sorted.

    The total validation size is round(N * fraction); it is shared among
    classes by largest remainder so each class is within one example of its
    exact share.
    """
    y = np.asarray(labels.labels if isinstance(labels, Dataset) else labels)
    if len(y) < 10:
        raise ValueError(f"need at least 10 examples to split, got {len(y)}")
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    classes, counts = np.unique(y, return_counts=True)
    if np.any(counts < 2):
        raise ValueError(f"classes {classes[counts < 2].tolist()} have fewer than 2 examples")
    exact = counts * fraction
    alloc = np.floor(exact).astype(int)
    remaining = int(round(len(y) * fraction)) - alloc.sum()
    order = sorted(range(len(classes)), key=lambda i: (-(exact[i] - alloc[i]), classes[i]))
    for i in order[:max(0, remaining)]:
        alloc[i] += 1
    alloc = np.minimum(alloc, counts - 1)
    rng = np.random.default_rng(seed)
    val = []
    for c, n_val in zip(classes, alloc):
        members = np.flatnonzero(y == c)
        val.extend(rng.permutation(members)[:n_val].tolist())
    val_idx = np.sort(np.asarray(val, dtype=np.int64))
    train_mask = np.ones(len(y), dtype=bool)
    train_mask[val_idx] = False
    return np.flatnonzero(train_mask), val_idx


# --------------------------------------------------------------------- train

def _loss_and_grads(P: ModelParams, ids, y, rng):
    leaves = P.leaves()
    scores = forward(ids, P, training=True, rng=rng, leaves=leaves)
    loss = ops.categorical_cross_entropy(scores, y, normalize=True)
    grads = backward(loss, list(leaves.values()))
    grads = dict(zip(leaves, grads))
    if "embedding" in grads:
        grads["embedding"][PAD] = 0.0
    return float(loss.data), grads


def dataset_loss_accuracy(P: ModelParams, data: Dataset, batch_size: int = 256) -> tuple[float, float]:
    if len(data) == 0:
        return float("nan"), float("nan")
    scores = predict_scores(data.ids, P, batch_size)
    loss = float(ops.categorical_cross_entropy(scores, data.labels).data)
    acc = float(np.mean(np.argmax(scores, axis=1) == data.labels))
    return loss, acc


def train(P: ModelParams, data: Dataset, cfg: TrainConfig, val: Dataset | None = None) -> RunHistory:
    """Adam on categorical cross entropy with a checkpoint per epoch.

    Without ``val`` the data is split with ``cfg.val_fraction``. Raises
    TrainingDiverged on a non-finite loss; checkpoints already written stay.
    """
    if val is None:
        tr_idx, va_idx = split_train_val(data.labels, cfg.val_fraction, cfg.seed)
        data, val = data.subset(tr_idx), data.subset(va_idx)
    ckdir = Path(cfg.checkpoint_dir)
    if cfg.save_checkpoints:
        ckdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    state = AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    history = RunHistory()
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(data))
        losses, weights = [], []
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            loss, grads = _loss_and_grads(P, data.ids[batch], data.labels[batch], rng)
            if not math.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
            try:
                adam_update(P.params, grads, state)
            except FloatingPointError as exc:
                raise TrainingDiverged(f"epoch {epoch}: {exc}") from exc
            losses.append(loss)
            weights.append(len(batch))
        train_loss = float(np.average(losses, weights=weights))
        if cfg.eval_train:
            _, train_acc = dataset_loss_accuracy(P, data)
        else:
            train_acc = float("nan")
        val_loss, val_acc = dataset_loss_accuracy(P, val)
        path = ckdir / f"epoch_{epoch:03d}.ckpt"
        if cfg.save_checkpoints:
            save_model(P, path, cfg.manifest)
        history.records.append(EpochRecord(epoch, train_loss, train_acc, val_loss, val_acc,
                                           str(path) if cfg.save_checkpoints else ""))
        if cfg.save_checkpoints:
            atomic_write_bytes(ckdir / "history.jsonl", history.to_jsonl().encode("utf-8"))
        msg = (f"epoch {epoch:3d}  train_loss {train_loss:.4f}  train_acc {train_acc:.4f}  "
               f"val_loss {val_loss:.4f}  val_acc {val_acc:.4f}")
        log.debug(msg)
        if cfg.verbose:
            print(msg, flush=True)
        if cfg.target_train_accuracy is not None and train_acc >= cfg.target_train_accuracy:
            break
    return history


def select_checkpoint(history: RunHistory | Sequence[float]) -> int:
    """1-based epoch with the best validation accuracy; earliest wins ties."""
    accs = history.val_accuracies if isinstance(history, RunHistory) else list(history)
    if not accs:
        raise ValueError("empty history")
    best = 0
    for i, a in enumerate(accs):
        if a > accs[best]:
            best = i
    return best + 1


# ------------------------------------------------------------------ evaluate

@dataclass
class EvalReport:
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    confusion: np.ndarray  # rows: true class, columns: predicted

    @property
    def support(self) -> np.ndarray:
        return self.confusion.sum(axis=1)

    def as_table(self) -> str:
        lines = [f"accuracy\t{self.accuracy:.4f}", "class\tprecision\trecall\tf1\tsupport"]
        for e in Emotion:
            lines.append(f"{e.label}\t{self.precision[e]:.4f}\t{self.recall[e]:.4f}\t"
                         f"{self.f1[e]:.4f}\t{int(self.support[e])}")
        lines.append("confusion\t" + "\t".join(e.label for e in Emotion))
        for e in Emotion:
            lines.append(e.label + "\t" + "\t".join(str(int(v)) for v in self.confusion[e]))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {"accuracy": self.accuracy, "precision": self.precision.tolist(),
                "recall": self.recall.tolist(), "f1": self.f1.tolist(),
                "confusion": self.confusion.tolist()}


def report_from_predictions(y_true, y_pred, n_classes: int = len(Emotion)) -> EvalReport:
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    if len(y_true) == 0:
        raise ValueError("cannot evaluate an empty dataset")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    tp = np.diag(cm).astype(float)
    pred_tot, true_tot = cm.sum(axis=0), cm.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(pred_tot > 0, tp / np.maximum(pred_tot, 1), 0.0)
        recall = np.where(true_tot > 0, tp / np.maximum(true_tot, 1), 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / np.where(denom > 0, denom, 1), 0.0)
    return EvalReport(float(np.trace(cm) / cm.sum()), precision, recall, f1, cm)


def evaluate(P: ModelParams, data: Dataset) -> EvalReport:
    if len(data) == 0:
        raise ValueError("cannot evaluate an empty dataset")
    scores = predict_scores(data.ids, P)
    return report_from_predictions(data.labels, np.argmax(scores, axis=1))


# ---------------------------------------------------------------------- grid

def embedding_matrix(vocab: Vocab, E: EmbeddingSet, seed: int = 0) -> np.ndarray:
    """vocab_size x dim initial embedding layer built from ``E``. Tokens the
    embedding set cannot represent get small random vectors."""
    rng = np.random.default_rng(seed)
    out = rng.uniform(-0.05, 0.05, (len(vocab), E.dim))
    out[PAD] = 0.0
    for i in range(N_RESERVED, len(vocab)):
        tok = vocab.tokens[i]
        if E.mode == "subword" or tok in E.index:
            out[i] = vector(tok, E)
    return out


@dataclass(frozen=True)
class GridCell:
    arch: str
    mode: str  # "word" | "subword"
    corpus: str  # "hinglish" | "hinglish+english"


def default_grid() -> list[GridCell]:
    return [GridCell(a, m, c)
            for a in ("cnn", "lstm", "bilstm", "attn_bilstm")
            for m in ("word", "subword")
            for c in ("hinglish", "hinglish+english")]


@dataclass
class GridResult:
    cell: GridCell
    accuracy: float | None
    best_epoch: int | None
    error: str | None = None


def run_experiment_grid(cells: Sequence[GridCell], train_set: Dataset, val_set: Dataset, vocab: Vocab,
                        embedding_paths: dict[tuple[str, str], str | Path], model_cfg: ModelConfig,
                        train_cfg: TrainConfig, out_dir: str | Path,
                        loader: Callable[[Path], EmbeddingSet] = load_vec) -> list[GridResult]:
    """Train and evaluate one model per cell. A cell whose embedding
    artefact is missing or fails records an error and the grid moves on."""
    out_dir = Path(out_dir)
    results = []
    for cell in cells:
        tag = f"{cell.arch}__{EMBEDDING_TAGS[cell.mode]}__{cell.corpus.replace('+', '_')}"
        try:
            path = embedding_paths.get((cell.mode, cell.corpus))
            if path is None or not Path(path).exists():
                raise FileNotFoundError(f"no embedding artefact for {cell.mode}/{cell.corpus}")
            E = loader(Path(path))
            if E.mode != cell.mode:
                raise ValueError(f"{path} holds {E.mode} embeddings, cell wants {cell.mode}")
            mcfg = replace(model_cfg, arch=cell.arch, vocab_size=len(vocab), embed_dim=E.dim)
            P = init_model(mcfg, embedding_matrix(vocab, E, train_cfg.seed), seed=train_cfg.seed)
            tcfg = replace(train_cfg, checkpoint_dir=str(out_dir / tag))
            history = train(P, train_set, tcfg, val=val_set)
            best = select_checkpoint(history)
            report = evaluate(load_model(history.records[best - 1].checkpoint), val_set)
            results.append(GridResult(cell, report.accuracy, best))
        except Exception as exc:  # per-cell failure must not stop the grid
            log.warning("grid cell %s failed: %s", tag, exc)
            results.append(GridResult(cell, None, None, str(exc)))
    return results


RESULT_COLUMNS = ("architecture", "embedding", "corpus", "accuracy", "best_epoch")


def results_tsv(results: Sequence[GridResult]) -> str:
    lines = ["\t".join(RESULT_COLUMNS)]
    for r in results:
        acc = "ERROR" if r.accuracy is None else f"{r.accuracy:.6f}"
        best = "" if r.best_epoch is None else str(r.best_epoch)
        lines.append("\t".join([r.cell.arch, EMBEDDING_TAGS[r.cell.mode], r.cell.corpus, acc, best]))
    return "\n".join(lines) + "\n"


def results_text_table(results: Sequence[GridResult]) -> str:
    """Table-3 shaped view: architectures as rows, corpus x embedding columns."""
    cols = [(c, m) for c in ("hinglish", "hinglish+english") for m in ("word", "subword")]
    header = ["model"] + [f"{c}/{EMBEDDING_TAGS[m]}" for c, m in cols]
    cell_map = {(r.cell.arch, r.cell.corpus, r.cell.mode): r for r in results}
    archs = list(dict.fromkeys(r.cell.arch for r in results))
    rows = [header]
    for a in archs:
        row = [a]
        for c, m in cols:
            r = cell_map.get((a, c, m))
            if r is None:
                row.append("-")
            elif r.accuracy is None:
                row.append("ERROR")
            else:
                row.append(f"{100 * r.accuracy:.2f}")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    return "\n".join("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in rows) + "\n"
