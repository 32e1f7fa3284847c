"""
Tests for the lemma, tag and analysis metrics.
"""

import numpy as np
import pytest

from lemmed.conllu import Analysis, Corpus, MorphoTag, Sentence, Token, normalize_tag, parse_corpus
from lemmed.errors import MisalignedCorporaError
from lemmed.evaluation import METRICS, evaluate, format_report, levenshtein, report_lines, tag_f1


@pytest.mark.parametrize("a, b, distance", [
    ("", "", 0),
    ("", "abc", 3),
    ("bit", "bite", 1),
    ("Bats", "bat", 2),
    ("kitten", "sitting", 3),
    ("straße", "strasse", 2),
])
def test_levenshtein_known(a, b, distance):
    assert levenshtein(a, b) == distance


def _table_distance(a, b):
    table = np.zeros((len(a) + 1, len(b) + 1), dtype=int)
    table[:, 0] = np.arange(len(a) + 1)
    table[0, :] = np.arange(len(b) + 1)
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            table[i, j] = min(table[i - 1, j] + 1, table[i, j - 1] + 1, table[i - 1, j - 1] + (a[i - 1] != b[j - 1]))
    return int(table[-1, -1])


def _word(rng):
    return "".join(rng.choice(list("abcé"), size=int(rng.integers(0, 13))))


def test_levenshtein_against_full_table():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        a, b = _word(rng), _word(rng)
        assert levenshtein(a, b) == _table_distance(a, b)


def test_levenshtein_metric_laws():
    rng = np.random.default_rng(1)
    for _ in range(300):
        a, b, c = _word(rng), _word(rng), _word(rng)
        assert levenshtein(a, b) == levenshtein(b, a)
        assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)
        assert (levenshtein(a, b) == 0) == (a == b)


def test_tag_f1_partial_overlap():
    score = tag_f1(normalize_tag("PST;V"), normalize_tag("PST;V;3;SG"))
    assert score.precision == 1.0
    assert score.recall == 0.5
    assert score.f1 == pytest.approx(2 / 3)


@pytest.mark.parametrize("pred, gold, f1", [
    ("_", "_", 1.0),
    ("_", "N", 0.0),
    ("N", "_", 0.0),
    ("N", "V", 0.0),
    ("N;PL", "PL;N", 1.0),
])
def test_tag_f1_edges(pred, gold, f1):
    assert tag_f1(normalize_tag(pred), normalize_tag(gold)).f1 == f1


def test_perfect_prediction(bats_corpus):
    report = evaluate(bats_corpus, bats_corpus)
    assert [report[name] for name in METRICS] == [1.0, 0.0, 1.0, 1.0, 1.0]
    assert report.token_count == 3
    assert report.shared_task_average == 100.0
    assert report.oov is None


def test_one_wrong_lemma(bats_corpus):
    pred = parse_corpus("Bats\tbats\tN;PL\nbit\tbite\tPST;V\ncats\tcat\tN;PL\n\n")
    report = evaluate(pred, bats_corpus)
    assert report["lemma_accuracy"] == pytest.approx(2 / 3)
    assert report["avg_lemma_distance"] == pytest.approx(1 / 3)
    assert report["tag_accuracy"] == 1.0
    assert report["analysis_accuracy"] == pytest.approx(2 / 3)


def _random_pair(rng):
    lemmas = ["a", "ab", "b", "ba", ""]
    grammemes = ["N", "V", "PL"]

    def analysis():
        tag = tuple(sorted(set(rng.choice(grammemes, size=int(rng.integers(0, 3))))))
        return Analysis(str(rng.choice(lemmas)), MorphoTag(tag))

    gold, pred = [], []
    for _ in range(int(rng.integers(1, 4))):
        surfaces = [f"w{i}" for i in range(int(rng.integers(1, 5)))]
        gold.append(Sentence(tuple(Token(s, analysis()) for s in surfaces)))
        pred.append(Sentence(tuple(Token(s, analysis()) for s in surfaces)))
    return Corpus(tuple(pred)), Corpus(tuple(gold))


def _hand_f1(pred_tag, gold_tag):
    pred, gold = set(pred_tag.grammemes), set(gold_tag.grammemes)
    if not pred and not gold:
        return 1.0
    common = len(pred & gold)
    if common == 0:
        return 0.0
    return 2 * common / (len(pred) + len(gold))


def test_metrics_against_direct_count():
    rng = np.random.default_rng(2)
    for _ in range(100):
        pred, gold = _random_pair(rng)
        pairs = [(p.gold, g.gold) for ps, gs in zip(pred, gold) for p, g in zip(ps, gs)]
        report = evaluate(pred, gold)
        n = len(pairs)
        assert report["lemma_accuracy"] == pytest.approx(sum(p.lemma == g.lemma for p, g in pairs) / n)
        assert report["avg_lemma_distance"] == pytest.approx(sum(_table_distance(p.lemma, g.lemma) for p, g in pairs)
                                                             / n)
        assert report["tag_accuracy"] == pytest.approx(sum(p.tag == g.tag for p, g in pairs) / n)
        assert report["analysis_accuracy"] == pytest.approx(sum(p == g for p, g in pairs) / n)
        assert report["avg_tag_f1"] == pytest.approx(sum(_hand_f1(p.tag, g.tag) for p, g in pairs) / n)
        assert report["analysis_accuracy"] <= min(report["lemma_accuracy"], report["tag_accuracy"])
        assert report["tag_accuracy"] <= report["avg_tag_f1"] + 1e-12


def test_oov_split_weighted_mean():
    gold = parse_corpus("Bats\tbat\tN;PL\nbit\tbite\tPST;V\ncats\tcat\tN;PL\n\nbit\tbit\tN;SG\n\n")
    pred = parse_corpus("Bats\tbat\tN;PL\nbit\tbit\tPST;V\ncats\tcats\tN;PL\n\nbit\tbit\tN;SG\n\n")
    train = parse_corpus("Bats\tbat\tN;PL\nbit\tbite\tPST;V\n\n")
    report = evaluate(pred, gold, train)
    assert report.oov_token_count == 2
    assert report.oov.token_count + report.seen.token_count == report.token_count
    for name in METRICS:
        weighted = (report.oov[name] * report.oov.token_count + report.seen[name] * report.seen.token_count)
        assert report[name] == pytest.approx(weighted / report.token_count)
    assert report.oov["lemma_accuracy"] == 0.5
    assert report.seen["lemma_accuracy"] == 0.5


def test_no_oov_tokens(bats_corpus):
    report = evaluate(bats_corpus, bats_corpus, bats_corpus)
    assert report.oov is None
    assert report.oov_token_count == 0
    assert report.seen.token_count == 3


@pytest.mark.parametrize("pred_text, sentence, token", [
    ("Bats\tbat\tN;PL\nbite\tbite\tPST;V\ncats\tcat\tN;PL\n\n", 0, 1),
    ("Bats\tbat\tN;PL\nbit\tbite\tPST;V\n\n", 0, 2),
    ("Bats\tbat\tN;PL\nbit\tbite\tPST;V\ncats\tcat\tN;PL\n\nx\tx\tN\n\n", 1, None),
])
def test_misalignment_reports_position(bats_corpus, pred_text, sentence, token):
    with pytest.raises(MisalignedCorporaError) as info:
        evaluate(parse_corpus(pred_text), bats_corpus)
    assert info.value.sentence_index == sentence
    assert info.value.token_index == token


def test_missing_analysis_is_misaligned(bats_corpus):
    pred = parse_corpus("Bats\nbit\ncats\n\n", mode="surface_only")
    with pytest.raises(MisalignedCorporaError):
        evaluate(pred, bats_corpus)


def test_empty_corpus():
    with pytest.raises(ValueError):
        evaluate(Corpus(()), Corpus(()))


def test_format_report(bats_corpus):
    text = format_report(evaluate(bats_corpus, bats_corpus))
    lines = text.splitlines()
    assert lines[0].split() == ["metric", "overall", "oov"]
    assert [line.split()[0] for line in lines[1:]] == list(METRICS) + ["tokens"]
    assert lines[1].split() == ["lemma_accuracy", "1.0000", "-"]
    assert lines[-1].split() == ["tokens", "3", "-"]


def test_report_lines(bats_corpus):
    lines = report_lines(evaluate(bats_corpus, bats_corpus, bats_corpus)).splitlines()
    assert lines[0] == "overall.tokens=3"
    assert "overall.lemma_accuracy=1.000000" in lines
    assert "seen.tokens=3" in lines
    assert not any(line.startswith("oov.") for line in lines)
    assert lines[-1] == "shared_task_average=100.0000"
