"""
decode.py
Greedy and beam inference, parsing decoded streams into analyses, and
per-token aggregation (focal unit or majority vote)
"""

import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .conllu import Analysis, Corpus, MorphoTag, Sentence, Token
from .errors import VocabMismatchError
from .model import EncoderOutput, _log_softmax, decode_step, encode_source, init_decoder_state, make_batch
from .snippets import (CONTROL, CONTROL_SET, GRAMMEME_PREFIX, WORD_BOUNDARY, Mode, TargetContext,
                       build_window_examples, build_full_sequence_example, focal_unit_ordinal,
                       is_grammeme_symbol)

logger = logging.getLogger(__name__)

_CONTROL_IDS = {symbol: i for i, symbol in enumerate(CONTROL)}
START_ID = _CONTROL_IDS[CONTROL.sequence_start]
END_ID = _CONTROL_IDS[CONTROL.sequence_end]
# never emitted by the decoder
BLOCKED_IDS = (_CONTROL_IDS[CONTROL.padding], START_ID)

TRUNCATED = "truncated"
MALFORMED = "malformed"
SHORT_DECODE = "short_decode"
UNIT_COUNT_MISMATCH = "unit_count_mismatch"


@dataclass(frozen=True)
class DecodeConfig:
    beam_size: int = 5
    max_length: Optional[int] = None
    length_normalization: bool = False

    def __post_init__(self):
        if int(self.beam_size) != self.beam_size or self.beam_size < 1:
            raise ValueError(f"beam_size must be a positive integer, got {self.beam_size!r}")
        if self.max_length is not None and (int(self.max_length) != self.max_length or self.max_length < 1):
            raise ValueError(f"max_length must be a positive integer, got {self.max_length!r}")

    def length_limit(self, source_length):
        if self.max_length is not None:
            return self.max_length
        return 2 * source_length + 16


@dataclass
class Hypothesis:
    """
    A decoded target sequence.

    `ids` excludes the start and end symbols; `log_prob` includes the end
    symbol's log-probability when `finished`. `attention` has one row of
    source weights per decoder step when it was recorded.
    """
    ids: Tuple[int, ...]
    log_prob: float
    finished: bool
    attention: Optional[np.ndarray] = None

    @property
    def truncated(self):
        return not self.finished


def _encode_single(m, source_ids):
    source_ids = np.asarray(source_ids, dtype=np.int64)
    if source_ids.ndim != 1 or source_ids.size == 0:
        raise ValueError("source ids must be a non-empty 1-D sequence")
    return encode_source(m, make_batch([(source_ids, None)]), train_mode=False)


def _repeat(encoded, rows):
    return EncoderOutput(encoded.states[rows], encoded.mask[rows], encoded.final_h, encoded.final_c)


def _step_log_probs(m, prev_ids, state, encoded):
    logits, state = decode_step(m, prev_ids, state, encoded, train_mode=False)
    log_probs = _log_softmax(logits.astype(np.float64))
    log_probs[:, BLOCKED_IDS] = -np.inf
    return log_probs, state


def greedy_decode(m, source_ids, cfg=None):
    """
    Decode one source sequence, picking the most probable symbol at each step.

    Ties go to the lowest id. Decoding stops at the end symbol or after
    ``cfg.length_limit(len(source_ids))`` symbols; in the latter case the
    hypothesis is returned unfinished.

    Returns
    -------
    Hypothesis

    """
    cfg = cfg or DecodeConfig(beam_size=1)
    encoded = _encode_single(m, source_ids)
    limit = cfg.length_limit(len(encoded.mask[0]))
    state = init_decoder_state(m, encoded)
    prev = np.array([START_ID], dtype=np.int64)
    ids, rows = [], []
    log_prob = 0.0
    finished = False
    while len(ids) < limit:
        log_probs, state = _step_log_probs(m, prev, state, encoded)
        rows.append(state.attention[0])
        best = int(np.argmax(log_probs[0]))
        log_prob += float(log_probs[0, best])
        if best == END_ID:
            finished = True
            break
        ids.append(best)
        prev = np.array([best], dtype=np.int64)
    return Hypothesis(tuple(ids), log_prob, finished, np.stack(rows) if rows else None)


def _final_score(hypothesis, cfg):
    if not cfg.length_normalization:
        return hypothesis.log_prob
    return hypothesis.log_prob / (len(hypothesis.ids) + int(hypothesis.finished))


def _best(hypotheses, cfg):
    return min(hypotheses, key=lambda h: (-_final_score(h, cfg), h.ids))


def beam_decode(m, source_ids, cfg=None):
    """
    Beam search over summed log-probabilities.

    Hypotheses retire when they emit the end symbol. The greedy path is
    scored as well, so the result is never less probable than the greedy
    decode when the latter finishes. Ties go to the lexicographically
    smallest id sequence. A beam of one reproduces `greedy_decode`.

    Parameters
    ----------
    m : Model
    source_ids : sequence of int
    cfg : DecodeConfig, optional

    Returns
    -------
    Hypothesis
        The best finished hypothesis, or the best live one when nothing
        finished within the length limit.

    """
    cfg = cfg or DecodeConfig()
    greedy = greedy_decode(m, source_ids, cfg)

    encoded = _encode_single(m, source_ids)
    limit = cfg.length_limit(len(encoded.mask[0]))
    state = init_decoder_state(m, encoded)
    live = [Hypothesis((), 0.0, False, np.zeros((0, encoded.mask.shape[1])))]
    finished = [greedy] if greedy.finished else []

    for _ in range(limit):
        if not live:
            break
        prev = np.array([h.ids[-1] if h.ids else START_ID for h in live], dtype=np.int64)
        log_probs, step_state = _step_log_probs(m, prev, state, _repeat(encoded, np.zeros(len(live), dtype=int)))
        scores = np.array([h.log_prob for h in live])[:, None] + log_probs
        flat = scores.ravel()
        kth = np.sort(flat)[-min(cfg.beam_size, flat.size)]
        candidates = []
        for index in np.flatnonzero(flat >= kth):
            if not np.isfinite(flat[index]):
                continue
            row, symbol = divmod(int(index), scores.shape[1])
            parent = live[row]
            candidates.append((-float(flat[index]), parent.ids + (symbol,), row, symbol))
        candidates.sort(key=lambda c: (c[0], c[1]))

        next_live, next_rows = [], []
        for neg_score, _, row, symbol in candidates[:cfg.beam_size]:
            parent = live[row]
            attention = np.vstack([parent.attention, step_state.attention[row]])
            if symbol == END_ID:
                finished.append(Hypothesis(parent.ids, -neg_score, True, attention))
            else:
                next_live.append(Hypothesis(parent.ids + (symbol,), -neg_score, False, attention))
                next_rows.append(row)
        live = next_live
        state = step_state.select(np.array(next_rows, dtype=int)) if next_rows else step_state

        if finished and live and not cfg.length_normalization:
            # scores only decrease, nothing live can overtake the best finished
            if _final_score(_best(finished, cfg), cfg) >= max(h.log_prob for h in live):
                break

    if finished:
        return _best(finished, cfg)
    logger.debug("beam search found no finished hypothesis within %d symbols", limit)
    return _best(live + [greedy], cfg)


def decode_sequence(m, source_ids, cfg):
    if cfg.beam_size == 1:
        return greedy_decode(m, source_ids, cfg)
    return beam_decode(m, source_ids, cfg)


@dataclass(frozen=True)
class DecodedUnit:
    """One boundary-terminated segment of a decoded target stream."""
    analysis: Analysis
    malformed: bool = False
    terminated: bool = True


def _make_unit(symbols, terminated):
    lemma_chars, grammemes = [], []
    malformed = False
    for symbol in symbols:
        if is_grammeme_symbol(symbol):
            grammemes.append(symbol[len(GRAMMEME_PREFIX):])
        elif symbol in CONTROL_SET:
            malformed = True
        elif grammemes:
            # lemma characters after the tag started
            malformed = True
        else:
            lemma_chars.append(symbol)
    lemma = "".join(lemma_chars)
    if not lemma:
        malformed = True
    return DecodedUnit(Analysis(lemma, MorphoTag(tuple(sorted(set(grammemes))))), malformed, terminated)


def parse_units(symbols):
    """
    Split a decoded symbol stream at word boundaries.

    Leading non-grammeme symbols of a unit form the lemma and "+"-prefixed
    symbols the tag. Units with an empty lemma, stray control symbols or lemma
    characters after a grammeme are flagged malformed. A non-empty trailing
    unit without a boundary is kept with ``terminated=False``.

    Returns
    -------
    list of DecodedUnit

    """
    units = []
    current = []
    for symbol in symbols:
        if symbol == WORD_BOUNDARY:
            units.append(_make_unit(current, True))
            current = []
        else:
            current.append(symbol)
    if current:
        units.append(_make_unit(current, False))
    return units


def parse_analysis_units(symbols):
    return [unit.analysis for unit in parse_units(symbols)]


def fallback_analysis(token):
    return Analysis(token.surface, MorphoTag())


def _repair(analysis, token):
    # a unit without a lemma keeps its tag and borrows the surface
    if analysis.lemma:
        return analysis, False
    return Analysis(token.surface, analysis.tag), True


@dataclass
class Alignment:
    analyses: List[Analysis]
    mismatch: bool
    flags: List[Optional[str]] = field(default_factory=list)


def align_full_sequence(units, sentence):
    """
    Map decoded analyses onto the tokens of `sentence` by position.

    With unequal counts the longest positional prefix is kept, extra units
    are dropped, and uncovered tokens fall back to (surface; empty tag). The
    result always has ``len(sentence)`` analyses.

    Parameters
    ----------
    units : list of Analysis
    sentence : Sentence

    Returns
    -------
    Alignment

    """
    mismatch = len(units) != len(sentence)
    analyses, flags = [], []
    for position, token in enumerate(sentence.tokens):
        if position < len(units):
            analysis, repaired = _repair(units[position], token)
            analyses.append(analysis)
            flags.append(MALFORMED if repaired else None)
        else:
            analyses.append(fallback_analysis(token))
            flags.append(UNIT_COUNT_MISMATCH)
    if mismatch:
        logger.debug("full-sequence decode gave %d units for %d tokens", len(units), len(sentence))
    return Alignment(analyses, mismatch, flags)


@dataclass(frozen=True)
class Candidate:
    analysis: Analysis
    focal_distance: int
    snippet_index: int


@dataclass
class VotingBallot:
    """Candidates for one token, one per covering snippet that produced a unit for it."""
    candidates: List[Candidate] = field(default_factory=list)

    def add(self, analysis, focal_distance, snippet_index):
        self.candidates.append(Candidate(analysis, focal_distance, snippet_index))

    def __len__(self):
        return len(self.candidates)


def vote(ballot):
    """
    Most frequent analysis of a ballot.

    Lemma and tag are voted jointly. Among equally frequent analyses the one
    with the single closest candidate wins: smallest focal distance, then
    lowest snippet index of that same candidate.
    """
    candidates = ballot.candidates if isinstance(ballot, VotingBallot) else list(ballot)
    if not candidates:
        raise ValueError("cannot vote on an empty ballot")
    counts = defaultdict(int)
    # (focal distance, snippet index) of the closest candidate, compared as one pair
    closest = {}
    for candidate in candidates:
        counts[candidate.analysis] += 1
        key = (candidate.focal_distance, candidate.snippet_index)
        closest[candidate.analysis] = min(closest.get(candidate.analysis, key), key)
    return min(counts, key=lambda analysis: (-counts[analysis], closest[analysis]))


@dataclass
class SentencePrediction:
    analyses: List[Analysis]
    flags: List[Optional[str]]

    @property
    def flagged(self):
        return any(flag is not None for flag in self.flags)


def check_compatible(m, vocab):
    if (m.config.source_vocab_size, m.config.target_vocab_size) != (vocab.source_size, vocab.target_size):
        raise VocabMismatchError(f"model expects vocabularies of {m.config.source_vocab_size}/"
                                 f"{m.config.target_vocab_size} symbols, got {vocab.source_size}/{vocab.target_size}")


def check_voting(snippet_cfg):
    if snippet_cfg.mode != Mode.CONTEXT_WINDOW:
        raise ValueError("voting needs context_window mode")
    if snippet_cfg.tc_mode != TargetContext.BOTH:
        raise ValueError("voting needs tc_mode 'both', other snippets do not render full analyses")


def _decode_units(m, vocab, example, decode_cfg):
    hypothesis = decode_sequence(m, vocab.encode_source(example.source), decode_cfg)
    return parse_units(vocab.decode_target(hypothesis.ids)), hypothesis.truncated


def _surface_sentence(sentence):
    return Sentence(tuple(Token(token.surface) for token in sentence.tokens))


def _predict_full_sequence(m, sentence, vocab, decode_cfg):
    units, truncated = _decode_units(m, vocab, build_full_sequence_example(sentence), decode_cfg)
    alignment = align_full_sequence([unit.analysis for unit in units], sentence)
    flags = alignment.flags
    for position, unit in enumerate(units[:len(sentence)]):
        if unit.malformed and flags[position] is None:
            flags[position] = MALFORMED
    if truncated:
        flags = [flag or TRUNCATED for flag in flags]
    return SentencePrediction(alignment.analyses, flags)


def _predict_focal(m, sentence, vocab, snippet_cfg, decode_cfg):
    analyses, flags = [], []
    for example in build_window_examples(sentence, snippet_cfg):
        token = sentence.tokens[example.focal_index]
        units, truncated = _decode_units(m, vocab, example, decode_cfg)
        ordinal = focal_unit_ordinal(example, snippet_cfg)
        if ordinal >= len(units):
            analyses.append(fallback_analysis(token))
            flags.append(SHORT_DECODE)
            continue
        analysis, repaired = _repair(units[ordinal].analysis, token)
        analyses.append(analysis)
        if repaired or units[ordinal].malformed:
            flags.append(MALFORMED)
        else:
            flags.append(TRUNCATED if truncated else None)
    return SentencePrediction(analyses, flags)


def collect_ballots(m, sentence, vocab, snippet_cfg, decode_cfg):
    """
    Decode every snippet of `sentence` and file each decoded unit under the
    token it covers.

    Returns
    -------
    (list of VotingBallot, list of bool)
        One ballot per token, and whether any of its candidates needed a
        lemma repair.

    """
    ballots = [VotingBallot() for _ in sentence.tokens]
    malformed = [False] * len(sentence)
    for snippet_index, example in enumerate(build_window_examples(sentence, snippet_cfg)):
        units, _ = _decode_units(m, vocab, example, decode_cfg)
        for offset in range(min(example.token_count, len(units))):
            position = example.window_start + offset
            analysis, repaired = _repair(units[offset].analysis, sentence.tokens[position])
            malformed[position] |= repaired
            ballots[position].add(analysis, abs(position - example.focal_index), snippet_index)
    return ballots, malformed


def _predict_voting(m, sentence, vocab, snippet_cfg, decode_cfg):
    ballots, malformed = collect_ballots(m, sentence, vocab, snippet_cfg, decode_cfg)
    analyses, flags = [], []
    for position, (token, ballot) in enumerate(zip(sentence.tokens, ballots)):
        if not len(ballot):
            analyses.append(fallback_analysis(token))
            flags.append(SHORT_DECODE)
        else:
            analyses.append(vote(ballot))
            flags.append(MALFORMED if malformed[position] else None)
    return SentencePrediction(analyses, flags)


def analyze_sentence(m, sentence, vocab, snippet_cfg, decode_cfg=None, voting=False):
    """
    Analyses and per-token flags for one sentence.

    Parameters
    ----------
    m : Model
    sentence : Sentence
        Only surface forms are used.
    vocab : Vocab
    snippet_cfg : SnippetConfig
        Must be the configuration the model was trained with.
    decode_cfg : DecodeConfig, optional
    voting : bool
        Aggregate every covering snippet by majority vote (context-window
        mode with tc_mode both only).

    Returns
    -------
    SentencePrediction
        Exactly ``len(sentence)`` analyses. A flag names the fallback or
        defect behind a token's analysis, or is None.

    """
    decode_cfg = decode_cfg or DecodeConfig()
    check_compatible(m, vocab)
    if voting:
        check_voting(snippet_cfg)
    sentence = _surface_sentence(sentence)
    if snippet_cfg.mode == Mode.FULL_SEQUENCE:
        prediction = _predict_full_sequence(m, sentence, vocab, decode_cfg)
    elif voting:
        prediction = _predict_voting(m, sentence, vocab, snippet_cfg, decode_cfg)
    else:
        prediction = _predict_focal(m, sentence, vocab, snippet_cfg, decode_cfg)
    assert len(prediction.analyses) == len(sentence)
    return prediction


def predict_sentence(m, sentence, vocab, snippet_cfg, decode_cfg=None, voting=False):
    return analyze_sentence(m, sentence, vocab, snippet_cfg, decode_cfg, voting).analyses


@dataclass
class CorpusPrediction:
    corpus: Corpus
    flags: List[List[Optional[str]]]

    @property
    def flagged_count(self):
        return sum(flag is not None for sentence in self.flags for flag in sentence)


def predict_corpus(m, corpus, vocab, snippet_cfg, decode_cfg=None, voting=False, workers=1):
    """
    Predict every sentence of `corpus`.

    With ``workers > 1`` sentences are decoded on a thread pool sharing the
    read-only model; output order follows the corpus.

    Returns
    -------
    CorpusPrediction

    """
    decode_cfg = decode_cfg or DecodeConfig()
    check_compatible(m, vocab)
    if voting:
        check_voting(snippet_cfg)

    def run(sentence):
        return analyze_sentence(m, sentence, vocab, snippet_cfg, decode_cfg, voting)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            predictions = list(pool.map(run, corpus.sentences))
    else:
        predictions = [run(sentence) for sentence in corpus.sentences]

    sentences = tuple(
        Sentence(tuple(Token(token.surface, analysis) for token, analysis in zip(sentence.tokens, p.analyses)))
        for sentence, p in zip(corpus.sentences, predictions))
    result = CorpusPrediction(Corpus(sentences, corpus.source_path), [p.flags for p in predictions])
    logger.info("predicted %d sentences (%d tokens, %d flagged)", len(corpus), corpus.token_count,
                result.flagged_count)
    return result


def write_mismatches(prediction):
    """Sidecar text: one ``sentence<TAB>token<TAB>reason`` line per flagged token, 0-based indices."""
    lines = []
    for s, flags in enumerate(prediction.flags):
        for t, flag in enumerate(flags):
            if flag is not None:
                lines.append(f"{s}\t{t}\t{flag}\n")
    return "".join(lines)
