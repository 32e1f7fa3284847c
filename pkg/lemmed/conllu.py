"""
conllu.py
Reader and writer for the tab-separated annotated corpus format

Each token line carries at least three tab-separated columns, FORM, LEMMA
and TAG, where TAG is a ";"-separated grammeme list or "_" for an empty tag.
Sentences are separated by blank lines and lines starting with "#" are
comments. Extra columns are ignored.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Set, Tuple

from .errors import CorpusFormatError

logger = logging.getLogger(__name__)

GRAMMEME_SEPARATOR = ";"
EMPTY_TAG = "_"
COMMENT_PREFIX = "#"

GOLD = "gold"
SURFACE_ONLY = "surface_only"
MODES = (GOLD, SURFACE_ONLY)


@dataclass(frozen=True)
class MorphoTag:
    """Sorted, duplicate-free tuple of grammemes. Build it with `normalize_tag`."""
    grammemes: Tuple[str, ...] = ()

    def __str__(self):
        if not self.grammemes:
            return EMPTY_TAG
        return GRAMMEME_SEPARATOR.join(self.grammemes)

    def __len__(self):
        return len(self.grammemes)

    def __iter__(self):
        return iter(self.grammemes)


@dataclass(frozen=True)
class Analysis:
    lemma: str
    tag: MorphoTag = MorphoTag()

    def __str__(self):
        return f"[{self.lemma}; {str(self.tag)}]"


@dataclass(frozen=True)
class Token:
    surface: str
    gold: Optional[Analysis] = None


@dataclass(frozen=True)
class Sentence:
    tokens: Tuple[Token, ...]

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    @property
    def surfaces(self):
        return [token.surface for token in self.tokens]


@dataclass(frozen=True)
class Corpus:
    sentences: Tuple[Sentence, ...]
    source_path: Optional[str] = field(default=None, compare=False)

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    @property
    def token_count(self):
        return sum(len(sentence) for sentence in self.sentences)


@dataclass(frozen=True)
class CorpusStats:
    sentence_count: int
    token_count: int
    grammeme_form_ratio: float
    oov_rate: Optional[float] = None
    oov_token_count: Optional[int] = None


def normalize_tag(raw):
    """
    Turn a raw grammeme string into a `MorphoTag`.

    Grammemes are deduplicated and sorted in lexicographic code point order,
    so "V;PST" and "PST;V" give the same tag.

    Parameters
    ----------
    raw : str
        ";"-separated grammemes, or "_" for an empty tag.

    Returns
    -------
    MorphoTag

    """
    if raw == EMPTY_TAG:
        return MorphoTag()
    grammemes = raw.split(GRAMMEME_SEPARATOR)
    if any(not g for g in grammemes):
        raise ValueError(f"empty grammeme in tag {raw!r}")
    # "_" never survives as a grammeme, it would not round-trip
    return MorphoTag(tuple(sorted(set(grammemes) - {EMPTY_TAG})))


def _decode_lines(text, source):
    if isinstance(text, (bytes, bytearray)):
        raw_lines = bytes(text).split(b"\n")
        if raw_lines and raw_lines[-1] == b"":
            raw_lines.pop()
        for number, raw in enumerate(raw_lines, start=1):
            try:
                yield number, raw.decode("utf-8").rstrip("\r")
            except UnicodeDecodeError as err:
                raise CorpusFormatError(f"input is not valid UTF-8 ({err.reason})", number, source) from err
    else:
        if isinstance(text, str):
            text = text.split("\n")
            if text and text[-1] == "":
                text.pop()
        for number, line in enumerate(text, start=1):
            yield number, line.rstrip("\r\n")


def parse_corpus(text, mode=GOLD, source_path=None):
    """
    Parse corpus text into a `Corpus`.

    Parameters
    ----------
    text : str, bytes or iterable of str
        Corpus content. Bytes are decoded as UTF-8 line by line so that
        decoding errors can be reported with their line number.
    mode : {"gold", "surface_only"}
        In gold mode LEMMA and TAG are read into an `Analysis`; in
        surface_only mode only FORM is read.
    source_path : str, optional
        Recorded on the corpus and used in error messages.

    Returns
    -------
    Corpus

    """
    if mode not in MODES:
        raise ValueError(f"unknown corpus mode {mode!r}, expected one of {MODES}")

    sentences = []
    tokens = []
    block_start = None
    block_has_comment = False

    def close_block():
        if tokens:
            sentences.append(Sentence(tuple(tokens)))
        elif block_has_comment:
            raise CorpusFormatError("empty sentence block", block_start, source_path)

    for number, line in _decode_lines(text, source_path):
        if not line.strip():
            close_block()
            tokens = []
            block_start = None
            block_has_comment = False
            continue
        if block_start is None:
            block_start = number
        if line.startswith(COMMENT_PREFIX):
            block_has_comment = True
            continue

        columns = line.split("\t")
        surface = columns[0]
        if not surface:
            raise CorpusFormatError("empty FORM column", number, source_path)
        if mode == SURFACE_ONLY:
            tokens.append(Token(surface))
            continue
        if len(columns) < 3:
            raise CorpusFormatError(f"expected at least 3 tab-separated columns, found {len(columns)}", number,
                                    source_path)
        try:
            tag = normalize_tag(columns[2])
        except ValueError as err:
            raise CorpusFormatError(str(err), number, source_path) from err
        tokens.append(Token(surface, Analysis(columns[1], tag)))

    close_block()
    corpus = Corpus(tuple(sentences), source_path)
    logger.debug("parsed %d sentences (%d tokens) from %s", len(corpus), corpus.token_count,
                 source_path or "<input>")
    return corpus


def read_corpus(path, mode=GOLD):
    with open(path, "rb") as handle:
        data = handle.read()
    return parse_corpus(data, mode=mode, source_path=str(path))


def _check_field(value, what, sentence_index, token_index):
    if "\t" in value or "\n" in value or "\r" in value:
        raise ValueError(f"{what} {value!r} of sentence {sentence_index}, token {token_index} "
                         "contains a tab or newline")


def write_corpus(corpus):
    """
    Render a corpus with analyses in the three-column format.

    Every block ends with a newline and is followed by one blank line, so
    `parse_corpus(write_corpus(c)) == c` for normalized corpora.
    """
    blocks = []
    for s, sentence in enumerate(corpus.sentences):
        lines = []
        for t, token in enumerate(sentence.tokens):
            if token.gold is None:
                raise ValueError(f"token {t} ({token.surface!r}) of sentence {s} has no analysis")
            _check_field(token.surface, "surface", s, t)
            if token.surface.startswith(COMMENT_PREFIX) or not token.surface.strip():
                raise ValueError(f"surface {token.surface!r} of sentence {s}, token {t} cannot be written "
                                 "as a token line")
            _check_field(token.gold.lemma, "lemma", s, t)
            lines.append(f"{token.surface}\t{token.gold.lemma}\t{token.gold.tag}\n")
        blocks.append("".join(lines) + "\n")
    return "".join(blocks)


def lexical_forms(corpus):
    """Set of gold analyses observed in `corpus`."""
    forms: Set[Analysis] = set()
    for sentence in corpus.sentences:
        for token in sentence.tokens:
            if token.gold is not None:
                forms.add(token.gold)
    return forms


def oov_mask(corpus, reference):
    """
    Per-token OOV flags: a token is OOV when its exact (lemma, tag) pair
    never occurs as a gold lexical form of `reference`. Tokens without a gold
    analysis are never OOV.
    """
    seen = lexical_forms(reference)
    return [[token.gold is not None and token.gold not in seen for token in sentence.tokens]
            for sentence in corpus.sentences]


def corpus_stats(corpus, reference=None):
    """
    Sentence and token counts, grammeme-form ratio and, against a reference
    training corpus, the OOV rate.

    Parameters
    ----------
    corpus : Corpus
    reference : Corpus, optional

    Returns
    -------
    CorpusStats

    """
    token_count = corpus.token_count
    grammemes = sum(len(token.gold.tag) for sentence in corpus.sentences for token in sentence.tokens
                    if token.gold is not None)
    ratio = grammemes / token_count if token_count else 0.0

    oov_rate = None
    oov_count = None
    if reference is not None:
        oov_count = sum(sum(flags) for flags in oov_mask(corpus, reference))
        oov_rate = oov_count / token_count if token_count else 0.0

    return CorpusStats(sentence_count=len(corpus.sentences),
                       token_count=token_count,
                       grammeme_form_ratio=ratio,
                       oov_rate=oov_rate,
                       oov_token_count=oov_count)


def strip_analyses(corpus):
    """Surface-only copy of `corpus`."""
    return Corpus(tuple(Sentence(tuple(Token(token.surface) for token in sentence.tokens))
                        for sentence in corpus.sentences), corpus.source_path)


def with_analyses(corpus, analyses):
    """Copy of `corpus` whose tokens carry `analyses` (one list per sentence)."""
    if len(analyses) != len(corpus.sentences):
        raise ValueError(f"expected {len(corpus.sentences)} sentences of analyses, got {len(analyses)}")
    sentences = []
    for sentence, sentence_analyses in zip(corpus.sentences, analyses):
        if len(sentence_analyses) != len(sentence):
            raise ValueError("analysis count does not match sentence length")
        sentences.append(Sentence(tuple(Token(token.surface, analysis)
                                        for token, analysis in zip(sentence.tokens, sentence_analyses))))
    return Corpus(tuple(sentences), corpus.source_path)
