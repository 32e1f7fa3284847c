"""
training.py
Step-driven SGD training with a halving learning rate, periodic checkpoints
and dev-set model selection
"""

import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .conllu import strip_analyses
from .decode import DecodeConfig, check_compatible, predict_corpus
from .errors import NonFiniteError
from .evaluation import METRICS, evaluate
from .model import backward, load_model, make_batch, save_model, sgd_update
from .snippets import encode

logger = logging.getLogger(__name__)

SELECTION_METRICS = ("analysis_accuracy", "lemma_accuracy", "tag_accuracy")
# dropout masks come from a stream no epoch seed can collide with
DROPOUT_STREAM = 1 << 30


@dataclass(frozen=True)
class TrainConfig:
    total_steps: int = 50000
    checkpoint_every: int = 1000
    lr_initial: float = 1.0
    lr_halve_start_step: int = 25000
    lr_halve_every: int = 10000
    batch_size: int = 32
    clip_norm: float = 5.0
    selection_metric: str = "analysis_accuracy"
    rng_seed: int = 0
    keep_all: bool = False

    def __post_init__(self):
        for name in ("total_steps", "checkpoint_every", "lr_halve_every", "batch_size"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.lr_halve_start_step < 0:
            raise ValueError(f"lr_halve_start_step must be >= 0, got {self.lr_halve_start_step!r}")
        if not self.lr_initial > 0:
            raise ValueError(f"lr_initial must be positive, got {self.lr_initial!r}")
        if self.selection_metric not in SELECTION_METRICS:
            raise ValueError(f"selection_metric must be one of {SELECTION_METRICS}, got {self.selection_metric!r}")

    def to_dict(self):
        return asdict(self)


def lr_schedule(cfg, step):
    """
    Learning rate at a 0-based step.

    Constant at `lr_initial` before `lr_halve_start_step`; halved at that step
    and again every `lr_halve_every` steps after it.

    Examples
    --------
    >>> cfg = TrainConfig()
    >>> [lr_schedule(cfg, s) for s in (0, 24999, 25000, 35000, 45000)]
    [1.0, 1.0, 0.5, 0.25, 0.125]

    """
    if step < 0:
        raise ValueError(f"step must be >= 0, got {step}")
    if step < cfg.lr_halve_start_step:
        return cfg.lr_initial
    halvings = (step - cfg.lr_halve_start_step) // cfg.lr_halve_every + 1
    return cfg.lr_initial * 0.5**halvings


def make_batches(encoded, cfg, epoch):
    """
    One epoch of batches.

    Examples are ordered by source length with a random tie-break, cut into
    consecutive batches of `cfg.batch_size` (so each batch holds similar
    lengths), and the batch order is shuffled. Everything is seeded by
    ``(cfg.rng_seed, epoch)``.

    Parameters
    ----------
    encoded : list of (numpy.ndarray, numpy.ndarray)
        Encoded (source, target) pairs.
    cfg : TrainConfig
    epoch : int

    Returns
    -------
    list of Batch

    """
    if not encoded:
        raise ValueError("no training examples")
    rng = np.random.default_rng([cfg.rng_seed, epoch])
    lengths = np.array([len(source) for source, _ in encoded])
    order = np.lexsort((rng.random(len(encoded)), lengths))
    chunks = [order[i:i + cfg.batch_size] for i in range(0, len(order), cfg.batch_size)]
    return [make_batch([encoded[i] for i in chunks[k]]) for k in rng.permutation(len(chunks))]


def batch_stream(encoded, cfg):
    """Endless iterator of (epoch, Batch), one epoch after the other."""
    epoch = 0
    while True:
        for batch in make_batches(encoded, cfg, epoch):
            yield epoch, batch
        epoch += 1


@dataclass(frozen=True)
class CheckpointRecord:
    step: int
    lr: float
    train_loss: float
    dev_metrics: Dict[str, float]
    path: Optional[str] = field(default=None, compare=False)


@dataclass
class TrainReport:
    checkpoints: List[CheckpointRecord]
    selected_step: int
    selection_metric: str = "analysis_accuracy"
    wall_time: float = field(default=0.0, compare=False)

    @property
    def selected(self):
        for record in self.checkpoints:
            if record.step == self.selected_step:
                return record
        raise KeyError(self.selected_step)


def select_checkpoint(records, metric):
    """Record with the highest `metric`; the earliest wins ties."""
    if not records:
        raise ValueError("no checkpoints to select from")
    best = records[0]
    for record in records[1:]:
        if record.dev_metrics[metric] > best.dev_metrics[metric]:
            best = record
    return best


def checkpoint_path(directory, step):
    return os.path.join(directory, f"checkpoint_{step:06d}.lmd")


def _dev_metrics(model, dev_corpus, vocab, snippet_cfg, workers):
    prediction = predict_corpus(model, strip_analyses(dev_corpus), vocab, snippet_cfg, DecodeConfig(beam_size=1),
                                voting=False, workers=workers)
    report = evaluate(prediction.corpus, dev_corpus)
    return {name: report.overall[name] for name in METRICS}


def train(model, train_examples, dev_corpus, vocab, snippet_cfg, cfg, checkpoint_dir=None, workers=1):
    """
    Train `model` in place for ``cfg.total_steps`` SGD steps.

    Every `checkpoint_every` steps, and after the last step, the model is
    evaluated on `dev_corpus` with greedy decoding and saved to
    `checkpoint_dir` when one is given.

    Parameters
    ----------
    model : Model
    train_examples : list of SnippetExample
        Examples without a target are skipped.
    dev_corpus : Corpus
        Gold-annotated development corpus.
    vocab : Vocab
    snippet_cfg : SnippetConfig
        Stored in the checkpoints, prediction must use the same.
    cfg : TrainConfig
    checkpoint_dir : str, optional
        Unless ``cfg.keep_all``, only the selected and the last checkpoint
        files are kept.
    workers : int
        Threads used for dev decoding.

    Returns
    -------
    (Model, TrainReport)
        The selected checkpoint's model (reloaded from disk when checkpoints
        were written) and the report.

    Raises
    ------
    NonFiniteError
        With the 1-based step at which the loss or gradients stopped being
        finite.

    """
    if dev_corpus is None:
        raise ValueError("train needs a gold dev corpus for model selection")
    check_compatible(model, vocab)
    encoded = [encode(example, vocab) for example in train_examples if example.target is not None]
    if not encoded:
        raise ValueError("no training example has a target")
    if checkpoint_dir is not None:
        os.makedirs(checkpoint_dir, exist_ok=True)

    logger.info("training %d examples for %d steps (batch %d, checkpoint every %d)", len(encoded), cfg.total_steps,
                cfg.batch_size, cfg.checkpoint_every)
    start = time.perf_counter()
    dropout_rng = np.random.default_rng([cfg.rng_seed, DROPOUT_STREAM])
    stream = batch_stream(encoded, cfg)
    records = []
    best_model, best_record = None, None
    loss_sum, loss_count = 0.0, 0

    for step in range(cfg.total_steps):
        _, batch = next(stream)
        lr = lr_schedule(cfg, step)
        loss, grads = backward(model, batch, rng=dropout_rng)
        if not math.isfinite(loss):
            raise NonFiniteError(f"non-finite training loss at step {step + 1}", step + 1)
        try:
            sgd_update(model, grads, lr, cfg.clip_norm)
        except NonFiniteError as err:
            raise NonFiniteError(f"{err} at step {step + 1}", step + 1) from err
        loss_sum += loss
        loss_count += 1

        done = step + 1
        if done % cfg.checkpoint_every and done != cfg.total_steps:
            continue
        metrics = _dev_metrics(model, dev_corpus, vocab, snippet_cfg, workers)
        path = None
        if checkpoint_dir is not None:
            path = checkpoint_path(checkpoint_dir, done)
            save_model(model, path, vocab, {
                "snippet_config": snippet_cfg.to_dict(),
                "step": done,
                "lr": lr,
                "dev_metrics": metrics,
            })
        record = CheckpointRecord(done, lr, loss_sum / loss_count, metrics, path)
        records.append(record)
        loss_sum, loss_count = 0.0, 0
        logger.info("step %d lr %.6g loss %.4f %s", done, lr, record.train_loss,
                    " ".join(f"{name} {value:.4f}" for name, value in metrics.items()))

        if select_checkpoint(records, cfg.selection_metric) is record:
            best_record = record
            best_model = model.copy()

    report = TrainReport(records, best_record.step, cfg.selection_metric, time.perf_counter() - start)
    logger.info("selected step %d (%s %.4f) after %.1fs", best_record.step, cfg.selection_metric,
                best_record.dev_metrics[cfg.selection_metric], report.wall_time)

    if checkpoint_dir is not None:
        best_model = load_model(best_record.path, vocab)
        if not cfg.keep_all:
            keep = {best_record.path, records[-1].path}
            for record in records:
                if record.path not in keep and os.path.exists(record.path):
                    os.remove(record.path)
    return best_model, report


def format_report_tsv(report):
    """Checkpoint table: step, lr, train loss, dev metrics, selection mark."""
    lines = ["\t".join(("step", "lr", "train_loss") + METRICS + ("selected",))]
    for record in report.checkpoints:
        cells = [str(record.step), f"{record.lr:.6g}", f"{record.train_loss:.6f}"]
        cells += [f"{record.dev_metrics[name]:.6f}" for name in METRICS]
        cells.append("*" if record.step == report.selected_step else "")
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def write_report(report, path):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(format_report_tsv(report))
