"""
Tests for snippet construction and vocabularies.
"""

import numpy as np
import pytest

from lemmed.conllu import Sentence, Token
from lemmed.snippets import (CONTROL, SEQUENCE_END, SEQUENCE_START, UNKNOWN, WORD_BOUNDARY, Mode, SnippetConfig,
                             TargetContext, Vocab, build_examples, build_full_sequence_example, build_vocab,
                             build_window_examples, encode, focal_unit_ordinal, format_example, is_grammeme_symbol,
                             tokenize_analysis, tokenize_surface)

WB = WORD_BOUNDARY


def cw(window=1, tc="both"):
    return SnippetConfig(mode="context_window", window=window, tc_mode=tc)


def test_control_symbols_are_multi_character():
    assert all(len(symbol) > 1 for symbol in CONTROL)
    assert list(CONTROL)[0] == "<PAD>"


def test_tokenize(bats_corpus):
    bats, bit, _ = bats_corpus.sentences[0].tokens
    assert tokenize_surface(bats) == ("B", "a", "t", "s", WB)
    assert tokenize_analysis(bit.gold) == ("b", "i", "t", "e", "+PST", "+V", WB)


def test_full_sequence_bats(bats_corpus):
    example = build_full_sequence_example(bats_corpus.sentences[0])
    assert example.source == tuple("Bats") + (WB,) + tuple("bit") + (WB,) + tuple("cats") + (WB,)
    assert example.target == (tuple("bat") + ("+N", "+PL", WB) + tuple("bite") + ("+PST", "+V", WB) + tuple("cat") +
                              ("+N", "+PL", WB))
    assert example.token_count == 3


def test_window_bats_both(bats_corpus):
    examples = build_window_examples(bats_corpus.sentences[0], cw(1, "both"))
    middle = examples[1]
    assert middle.source == tuple("Bats") + (WB,) + tuple("bit") + (WB,) + tuple("cats") + (WB,)
    assert middle.target == (tuple("bat") + ("+N", "+PL", WB) + tuple("bite") + ("+PST", "+V", WB) + tuple("cat") +
                             ("+N", "+PL", WB))
    assert middle.focal_span == (6, 13)
    assert middle.target[slice(*middle.focal_span)] == tuple("bite") + ("+PST", "+V", WB)


@pytest.mark.parametrize("tc, expected", [
    ("none", tuple("bite") + ("+PST", "+V", WB)),
    ("lemmata", tuple("bat") + (WB,) + tuple("bite") + ("+PST", "+V", WB) + tuple("cat") + (WB,)),
    ("tags", ("+N", "+PL", WB) + tuple("bite") + ("+PST", "+V", WB) + ("+N", "+PL", WB)),
    ("surface", tuple("Bats") + (WB,) + tuple("bite") + ("+PST", "+V", WB) + tuple("cats") + (WB,)),
])
def test_target_context_rendering(bats_corpus, tc, expected):
    middle = build_window_examples(bats_corpus.sentences[0], cw(1, tc))[1]
    assert middle.target == expected
    assert middle.target[slice(*middle.focal_span)] == tuple("bite") + ("+PST", "+V", WB)


def test_window_zero_is_single_token(bats_corpus):
    examples = build_window_examples(bats_corpus.sentences[0], cw(0))
    assert [e.source for e in examples] == [tuple(w) + (WB,) for w in ("Bats", "bit", "cats")]


def test_window_requires_context_mode(bats_corpus):
    with pytest.raises(ValueError):
        build_window_examples(bats_corpus.sentences[0], SnippetConfig(mode="full_sequence"))


def test_surface_only_examples_have_no_target():
    sentence = Sentence((Token("Bats"), Token("bit")))
    assert all(e.target is None for e in build_window_examples(sentence, cw()))
    assert build_full_sequence_example(sentence).target is None


def test_overlap_law_random():
    rng = np.random.default_rng(3)
    for _ in range(500):
        length = int(rng.integers(1, 13))
        window = int(rng.integers(0, 4))
        sentence = Sentence(tuple(Token(f"w{i}") for i in range(length)))
        examples = build_window_examples(sentence, cw(window))
        assert len(examples) == length
        coverage = [0] * length
        for example in examples:
            for position in range(example.window_start, example.window_start + example.token_count):
                coverage[position] += 1
        for i in range(length):
            assert coverage[i] == min(length - 1, i + window) - max(0, i - window) + 1
        if length >= 2 * window + 1 and window > 0:
            assert coverage[0] == coverage[-1] == window + 1
            assert max(coverage) == 2 * window + 1


def test_focal_unit_ordinal(bats_corpus):
    sentence = bats_corpus.sentences[0]
    assert [focal_unit_ordinal(e, cw(1)) for e in build_window_examples(sentence, cw(1))] == [0, 1, 1]
    assert [focal_unit_ordinal(e, cw(1, "none")) for e in build_window_examples(sentence, cw(1, "none"))] == [0, 0, 0]


def test_build_examples_sentence_ids(synthetic_corpus):
    examples = build_examples(synthetic_corpus, cw())
    assert len(examples) == synthetic_corpus.token_count
    assert examples[-1].sentence_id == len(synthetic_corpus) - 1
    full = build_examples(synthetic_corpus, SnippetConfig(mode=Mode.FULL_SEQUENCE))
    assert len(full) == len(synthetic_corpus)


def test_snippet_config_validation():
    with pytest.raises(ValueError):
        SnippetConfig(window=-1)
    with pytest.raises(ValueError):
        SnippetConfig(tc_mode="everything")
    assert SnippetConfig().tc_mode is TargetContext.BOTH


def test_same_as_ignores_unused_fields():
    a = SnippetConfig(mode="full_sequence", window=1)
    b = SnippetConfig(mode="full_sequence", window=3, tc_mode="none")
    assert a.same_as(b)
    assert not cw(1).same_as(cw(2))
    assert SnippetConfig.from_dict(cw(2, "tags").to_dict()) == cw(2, "tags")


def test_format_example(bats_corpus):
    line = format_example(build_window_examples(bats_corpus.sentences[0], cw(0))[0])
    assert line == "B a t s <WB>\tb a t +N +PL <WB>"


def test_vocab(bats_corpus):
    vocab = build_vocab(build_examples(bats_corpus, cw()))
    assert vocab.source_symbols[:5] == tuple(CONTROL)
    assert vocab.target_symbols[:5] == tuple(CONTROL)
    assert "B" in vocab.source_symbols and "B" not in vocab.target_symbols
    assert all(is_grammeme_symbol(s) for s in vocab.target_symbols if s.startswith("+"))
    assert vocab.source_id("Ж") == vocab.source_id(UNKNOWN)
    ids = vocab.encode_target(["b", "a", "t"])
    assert ids[0] == vocab.start_id and ids[-1] == vocab.end_id
    assert vocab.decode_target(ids) == ("b", "a", "t")
    assert Vocab.from_dict(vocab.to_dict()) == vocab


def test_vocab_min_freq(bats_corpus):
    vocab = build_vocab(build_examples(bats_corpus, cw(0)), min_freq=2)
    assert "B" not in vocab.source_symbols
    assert "a" in vocab.source_symbols
    with pytest.raises(ValueError):
        build_vocab([], min_freq=0)


def test_vocab_requires_control_prefix():
    with pytest.raises(ValueError):
        Vocab(("a",) + tuple(CONTROL), tuple(CONTROL))


def test_encode(bats_corpus):
    examples = build_examples(bats_corpus, cw())
    vocab = build_vocab(examples)
    source, target = encode(examples[0], vocab)
    assert source.dtype == np.int64
    assert vocab.decode_source(source) == examples[0].source
    assert target[0] == vocab.target_id(SEQUENCE_START) and target[-1] == vocab.target_id(SEQUENCE_END)
    assert vocab.decode_target(target) == examples[0].target
