"""
snippets.py
Source/target symbol sequences for the full-sequence and context-window modes

A source sequence is the characters of each surface form followed by the
word boundary symbol. A target sequence renders analyses as lemma
characters, one atomic "+g" symbol per grammeme and the boundary symbol.
In context-window mode the rendering of context tokens on the target side
is controlled by `TargetContext`.
"""

import enum
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

GRAMMEME_PREFIX = "+"


@dataclass(frozen=True)
class ControlSymbols:
    """Multi-character symbols; they can never equal a single surface character."""
    padding: str = "<PAD>"
    unknown: str = "<UNK>"
    sequence_start: str = "<S>"
    sequence_end: str = "</S>"
    word_boundary: str = "<WB>"

    def __iter__(self):
        # vocab order: padding gets id 0
        return iter((self.padding, self.unknown, self.sequence_start, self.sequence_end, self.word_boundary))


CONTROL = ControlSymbols()
CONTROL_SET = frozenset(CONTROL)
WORD_BOUNDARY = CONTROL.word_boundary
SEQUENCE_START = CONTROL.sequence_start
SEQUENCE_END = CONTROL.sequence_end
UNKNOWN = CONTROL.unknown
PADDING = CONTROL.padding


def grammeme_symbol(grammeme):
    return GRAMMEME_PREFIX + grammeme


def is_grammeme_symbol(symbol):
    return len(symbol) > 1 and symbol.startswith(GRAMMEME_PREFIX)


def is_control_symbol(symbol):
    return symbol in CONTROL_SET


class Mode(str, enum.Enum):
    FULL_SEQUENCE = "full_sequence"
    CONTEXT_WINDOW = "context_window"


class TargetContext(str, enum.Enum):
    NONE = "none"
    LEMMATA = "lemmata"
    TAGS = "tags"
    BOTH = "both"
    SURFACE = "surface"


@dataclass(frozen=True)
class SnippetConfig:
    """
    How sentences are cut into examples.

    `window` and `tc_mode` only matter in context-window mode; full-sequence
    targets always carry complete analyses.
    """
    mode: Mode = Mode.CONTEXT_WINDOW
    window: int = 1
    tc_mode: TargetContext = TargetContext.BOTH

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "tc_mode", TargetContext(self.tc_mode))
        if int(self.window) != self.window or self.window < 0:
            raise ValueError(f"window must be a non-negative integer, got {self.window!r}")
        object.__setattr__(self, "window", int(self.window))

    def to_dict(self):
        return {"mode": self.mode.value, "window": self.window, "tc_mode": self.tc_mode.value}

    @classmethod
    def from_dict(cls, values):
        return cls(mode=values["mode"], window=values["window"], tc_mode=values["tc_mode"])

    def same_as(self, other):
        """Equality that ignores the fields the mode does not use."""
        if self.mode != other.mode:
            return False
        if self.mode == Mode.FULL_SEQUENCE:
            return True
        return self.window == other.window and self.tc_mode == other.tc_mode


@dataclass(frozen=True)
class SnippetExample:
    source: Tuple[str, ...]
    target: Optional[Tuple[str, ...]]
    focal_index: Optional[int]
    focal_span: Optional[Tuple[int, int]]
    sentence_id: int
    token_count: int
    window_start: int = 0


def tokenize_surface(token):
    """Characters of the surface form followed by the word boundary, casing kept."""
    return tuple(token.surface) + (WORD_BOUNDARY,)


def tokenize_analysis(analysis):
    return tuple(analysis.lemma) + tuple(grammeme_symbol(g) for g in analysis.tag) + (WORD_BOUNDARY,)


def _render_context(token, tc_mode):
    if tc_mode == TargetContext.BOTH:
        return tokenize_analysis(token.gold)
    if tc_mode == TargetContext.LEMMATA:
        return tuple(token.gold.lemma) + (WORD_BOUNDARY,)
    if tc_mode == TargetContext.TAGS:
        return tuple(grammeme_symbol(g) for g in token.gold.tag) + (WORD_BOUNDARY,)
    if tc_mode == TargetContext.SURFACE:
        return tokenize_surface(token)
    return ()


def _has_gold(tokens):
    return all(token.gold is not None for token in tokens)


def build_full_sequence_example(sentence, sentence_id=0):
    """
    One example covering the whole sentence.

    The target is left out when any token lacks a gold analysis.
    """
    source = tuple(symbol for token in sentence.tokens for symbol in tokenize_surface(token))
    target = None
    if _has_gold(sentence.tokens):
        target = tuple(symbol for token in sentence.tokens for symbol in tokenize_analysis(token.gold))
    return SnippetExample(source=source,
                          target=target,
                          focal_index=None,
                          focal_span=None,
                          sentence_id=sentence_id,
                          token_count=len(sentence),
                          window_start=0)


def build_window_examples(sentence, cfg, sentence_id=0):
    """
    One example per token, each covering `cfg.window` words on either side.

    Parameters
    ----------
    sentence : Sentence
    cfg : SnippetConfig
        Must be in context-window mode.
    sentence_id : int

    Returns
    -------
    list of SnippetExample
        Exactly ``len(sentence)`` examples, in token order. `focal_span` is
        the half-open symbol range of the focal analysis in the target.

    """
    if cfg.mode != Mode.CONTEXT_WINDOW:
        raise ValueError("build_window_examples needs a context_window configuration")
    tokens = sentence.tokens
    length = len(tokens)
    examples = []
    for focal in range(length):
        start = max(0, focal - cfg.window)
        end = min(length - 1, focal + cfg.window)
        covered = tokens[start:end + 1]
        source = tuple(symbol for token in covered for symbol in tokenize_surface(token))

        target = None
        span = None
        if _has_gold(covered):
            target = []
            for position in range(start, end + 1):
                if position == focal:
                    unit = tokenize_analysis(tokens[position].gold)
                    span = (len(target), len(target) + len(unit))
                else:
                    unit = _render_context(tokens[position], cfg.tc_mode)
                target.extend(unit)
            target = tuple(target)

        examples.append(SnippetExample(source=source,
                                       target=target,
                                       focal_index=focal,
                                       focal_span=span,
                                       sentence_id=sentence_id,
                                       token_count=len(covered),
                                       window_start=start))
    return examples


def build_examples(corpus, cfg):
    """Examples for every sentence of `corpus`, sentence ids in corpus order."""
    examples = []
    for sentence_id, sentence in enumerate(corpus.sentences):
        if cfg.mode == Mode.FULL_SEQUENCE:
            examples.append(build_full_sequence_example(sentence, sentence_id))
        else:
            examples.extend(build_window_examples(sentence, cfg, sentence_id))
    logger.info("built %d %s examples from %d sentences", len(examples), cfg.mode.value, len(corpus))
    return examples


def focal_unit_ordinal(example, cfg):
    """Index of the boundary-terminated target unit that holds the focal analysis."""
    if cfg.mode == Mode.FULL_SEQUENCE or example.focal_index is None:
        raise ValueError("full-sequence examples have no focal unit")
    if cfg.tc_mode == TargetContext.NONE:
        return 0
    return example.focal_index - example.window_start


def format_example(example):
    """Space-separated source, a tab, then the space-separated target."""
    target = " ".join(example.target) if example.target is not None else ""
    return " ".join(example.source) + "\t" + target


@dataclass
class Vocab:
    """
    Symbol/id maps for both sides. Control symbols take ids 0-4 on each side;
    symbols missing from a side map to the unknown id.
    """
    source_symbols: Tuple[str, ...]
    target_symbols: Tuple[str, ...]
    min_freq: int = 1
    _source_index: Dict[str, int] = field(init=False, repr=False, compare=False)
    _target_index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.source_symbols = tuple(self.source_symbols)
        self.target_symbols = tuple(self.target_symbols)
        for side, symbols in (("source", self.source_symbols), ("target", self.target_symbols)):
            if tuple(symbols[:len(tuple(CONTROL))]) != tuple(CONTROL):
                raise ValueError(f"{side} vocabulary must start with the control symbols")
            if len(set(symbols)) != len(symbols):
                raise ValueError(f"{side} vocabulary has duplicate symbols")
        self._source_index = {symbol: i for i, symbol in enumerate(self.source_symbols)}
        self._target_index = {symbol: i for i, symbol in enumerate(self.target_symbols)}

    @property
    def source_size(self):
        return len(self.source_symbols)

    @property
    def target_size(self):
        return len(self.target_symbols)

    @property
    def pad_id(self):
        return self._target_index[PADDING]

    @property
    def unknown_id(self):
        return self._target_index[UNKNOWN]

    @property
    def start_id(self):
        return self._target_index[SEQUENCE_START]

    @property
    def end_id(self):
        return self._target_index[SEQUENCE_END]

    def source_id(self, symbol):
        return self._source_index.get(symbol, self._source_index[UNKNOWN])

    def target_id(self, symbol):
        return self._target_index.get(symbol, self._target_index[UNKNOWN])

    def encode_source(self, symbols):
        return np.array([self.source_id(s) for s in symbols], dtype=np.int64)

    def encode_target(self, symbols):
        ids = [self.start_id] + [self.target_id(s) for s in symbols] + [self.end_id]
        return np.array(ids, dtype=np.int64)

    def decode_source(self, ids):
        return tuple(self.source_symbols[int(i)] for i in ids)

    def decode_target(self, ids):
        """Symbols for `ids`, dropping the start/end framing."""
        framing = (self.start_id, self.end_id)
        return tuple(self.target_symbols[int(i)] for i in ids if int(i) not in framing)

    def to_dict(self):
        return {"source": list(self.source_symbols), "target": list(self.target_symbols), "min_freq": self.min_freq}

    @classmethod
    def from_dict(cls, values):
        return cls(tuple(values["source"]), tuple(values["target"]), int(values.get("min_freq", 1)))


def _kept_symbols(counts, min_freq):
    return tuple(sorted(symbol for symbol, count in counts.items() if count >= min_freq and symbol not in CONTROL_SET))


def build_vocab(examples, min_freq=1):
    """
    Vocabularies over the symbols of `examples`.

    Parameters
    ----------
    examples : list of SnippetExample
    min_freq : int
        Symbols seen fewer times are left out and encode as unknown.

    Returns
    -------
    Vocab

    """
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    source_counts = Counter()
    target_counts = Counter()
    for example in examples:
        source_counts.update(example.source)
        if example.target is not None:
            target_counts.update(example.target)
    vocab = Vocab(source_symbols=tuple(CONTROL) + _kept_symbols(source_counts, min_freq),
                  target_symbols=tuple(CONTROL) + _kept_symbols(target_counts, min_freq),
                  min_freq=min_freq)
    logger.info("vocabulary: %d source symbols, %d target symbols (min_freq=%d)", vocab.source_size,
                vocab.target_size, min_freq)
    return vocab


def encode(example, vocab):
    """
    Map an example to ids.

    Returns
    -------
    (numpy.ndarray, numpy.ndarray or None)
        Source ids, and target ids framed by the start and end symbols (None
        when the example has no target).

    """
    source = vocab.encode_source(example.source)
    target = vocab.encode_target(example.target) if example.target is not None else None
    return source, target
