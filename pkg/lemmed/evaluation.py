"""
evaluation.py
Lemma, tag and joint analysis metrics with an OOV split
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .conllu import oov_mask
from .errors import MisalignedCorporaError

logger = logging.getLogger(__name__)

METRICS = ("lemma_accuracy", "avg_lemma_distance", "tag_accuracy", "avg_tag_f1", "analysis_accuracy")


def levenshtein(a, b):
    """
    Unit-cost edit distance between two strings, over code points.

    Examples
    --------
    >>> levenshtein("bit", "bite")
    1

    """
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, char_a in enumerate(a, start=1):
        current = [i]
        for j, char_b in enumerate(b, start=1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (char_a != char_b)))
        previous = current
    return previous[-1]


@dataclass(frozen=True)
class TagScore:
    precision: float
    recall: float
    f1: float


def tag_f1(pred, gold):
    """
    Set precision, recall and F1 of predicted grammemes against gold ones.

    Two empty tags agree completely (F1 = 1); an empty tag against a
    non-empty one scores 0.
    """
    p, g = set(pred), set(gold)
    if not p and not g:
        return TagScore(1.0, 1.0, 1.0)
    if not p or not g:
        return TagScore(0.0, 0.0, 0.0)
    common = len(p & g)
    precision = common / len(p)
    recall = common / len(g)
    if precision + recall == 0:
        return TagScore(precision, recall, 0.0)
    return TagScore(precision, recall, 2 * precision * recall / (precision + recall))


@dataclass(frozen=True)
class SplitMetrics:
    token_count: int
    lemma_accuracy: float
    avg_lemma_distance: float
    tag_accuracy: float
    avg_tag_f1: float
    analysis_accuracy: float

    def __getitem__(self, name):
        if name not in METRICS:
            raise KeyError(name)
        return getattr(self, name)


@dataclass(frozen=True)
class EvalReport:
    """
    Metrics over all tokens, and, when a training reference was given, over
    the tokens whose gold analysis is unseen (`oov`) or seen (`seen`) in it.
    A split with no tokens is None.
    """
    overall: SplitMetrics
    oov: Optional[SplitMetrics] = None
    seen: Optional[SplitMetrics] = None
    oov_token_count: Optional[int] = None

    def __getitem__(self, name):
        return self.overall[name]

    @property
    def token_count(self):
        return self.overall.token_count

    @property
    def shared_task_average(self):
        """Mean of LACC, 100 - LDIST, TACC and TF1, on a 0-100 scale."""
        o = self.overall
        return (100 * o.lemma_accuracy + (100 - 100 * o.avg_lemma_distance) + 100 * o.tag_accuracy +
                100 * o.avg_tag_f1) / 4


def _split(columns, mask):
    count = int(mask.sum())
    if count == 0:
        return None
    return SplitMetrics(count, *(float(column[mask].mean()) for column in columns))


def _check_aligned(pred, gold):
    if len(pred.sentences) != len(gold.sentences):
        raise MisalignedCorporaError(
            f"predicted corpus has {len(pred.sentences)} sentences, gold has {len(gold.sentences)}",
            min(len(pred.sentences), len(gold.sentences)))
    for s, (p_sentence, g_sentence) in enumerate(zip(pred.sentences, gold.sentences)):
        for t, (p_token, g_token) in enumerate(zip(p_sentence.tokens, g_sentence.tokens)):
            if p_token.surface != g_token.surface:
                raise MisalignedCorporaError(
                    f"sentence {s}, token {t}: predicted surface {p_token.surface!r} != gold {g_token.surface!r}", s,
                    t)
            if p_token.gold is None or g_token.gold is None:
                side = "predicted" if p_token.gold is None else "gold"
                raise MisalignedCorporaError(f"sentence {s}, token {t}: {side} analysis missing", s, t)
        if len(p_sentence) != len(g_sentence):
            raise MisalignedCorporaError(
                f"sentence {s}: predicted has {len(p_sentence)} tokens, gold has {len(g_sentence)}", s,
                min(len(p_sentence), len(g_sentence)))


def evaluate(pred, gold, train_reference=None):
    """
    Score predicted analyses against gold ones.

    Parameters
    ----------
    pred : Corpus
    gold : Corpus
        Same sentences and surfaces as `pred`; every token analyzed.
    train_reference : Corpus, optional
        Training corpus; tokens whose gold (lemma, tag) never occurs in it
        form the OOV split.

    Returns
    -------
    EvalReport

    Raises
    ------
    MisalignedCorporaError
        At the first sentence/token where the corpora disagree.

    """
    _check_aligned(pred, gold)
    lemma_ok, distance, tag_ok, f1, analysis_ok = [], [], [], [], []
    for p_sentence, g_sentence in zip(pred.sentences, gold.sentences):
        for p_token, g_token in zip(p_sentence.tokens, g_sentence.tokens):
            p, g = p_token.gold, g_token.gold
            lemma_ok.append(p.lemma == g.lemma)
            distance.append(levenshtein(p.lemma, g.lemma))
            tag_ok.append(p.tag == g.tag)
            f1.append(tag_f1(p.tag, g.tag).f1)
            analysis_ok.append(p == g)
    if not lemma_ok:
        raise ValueError("cannot evaluate an empty corpus")
    columns = [np.asarray(c, dtype=np.float64) for c in (lemma_ok, distance, tag_ok, f1, analysis_ok)]

    everything = np.ones(len(lemma_ok), dtype=bool)
    report = EvalReport(_split(columns, everything))
    if train_reference is not None:
        oov = np.array([flag for flags in oov_mask(gold, train_reference) for flag in flags], dtype=bool)
        report = EvalReport(report.overall, _split(columns, oov), _split(columns, ~oov), int(oov.sum()))
    logger.info("evaluated %d tokens: analysis accuracy %.4f", report.token_count, report.overall.analysis_accuracy)
    return report


def _cell(split, name):
    if split is None:
        return "-"
    return f"{split[name]:.4f}"


def format_report(report):
    """Fixed-order table: one row per metric with overall and OOV columns."""
    lines = [f"{'metric':<20} {'overall':>8} {'oov':>8}"]
    for name in METRICS:
        lines.append(f"{name:<20} {_cell(report.overall, name):>8} {_cell(report.oov, name):>8}")
    oov_tokens = "-" if report.oov_token_count is None else str(report.oov_token_count)
    lines.append(f"{'tokens':<20} {report.token_count:>8} {oov_tokens:>8}")
    return "\n".join(lines) + "\n"


def report_lines(report):
    """Machine-readable ``split.metric=value`` lines."""
    lines = [f"overall.tokens={report.token_count}"]
    lines += [f"overall.{name}={report.overall[name]:.6f}" for name in METRICS]
    for label in ("oov", "seen"):
        split = getattr(report, label)
        if split is not None:
            lines.append(f"{label}.tokens={split.token_count}")
            lines += [f"{label}.{name}={split[name]:.6f}" for name in METRICS]
    lines.append(f"shared_task_average={report.shared_task_average:.4f}")
    return "\n".join(lines) + "\n"
