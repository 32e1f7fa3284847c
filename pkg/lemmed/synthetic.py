"""
synthetic.py
Small deterministic corpora with rule-based suffixal morphology
"""

import numpy as np

from .conllu import Analysis, Corpus, Sentence, Token, normalize_tag

CONSONANTS = "bdghklmprtvz"
VOWELS = "aiou"

# (part of speech, lemma suffix, [(form suffix, tag), ...])
PARADIGMS = (
    ("N", "", (("", "N;SG"), ("s", "N;PL"))),
    ("V", "e", (("e", "PRS;V"), ("ed", "PST;V"), ("ing", "PTCP;V"))),
    ("ADJ", "o", (("o", "ADJ"), ("oy", "ADJ;CMPR"))),
)

# every letter a stem or suffix can produce
ALPHABET = "".join(sorted(set(CONSONANTS + VOWELS).union(*(lemma_suffix + "".join(form for form, _ in forms)
                                                             for _, lemma_suffix, forms in PARADIGMS))))


def _stem(rng):
    syllables = rng.integers(1, 3)
    return "".join(str(rng.choice(list(CONSONANTS))) + str(rng.choice(list(VOWELS))) for _ in range(syllables)) + str(
        rng.choice(list(CONSONANTS)))


def make_lexicon(seed=0, stems_per_class=6):
    """Distinct stems per part of speech, mapped to their lemma and forms."""
    rng = np.random.default_rng(seed)
    used = set()
    lexicon = []
    for _, lemma_suffix, forms in PARADIGMS:
        entries = []
        while len(entries) < stems_per_class:
            stem = _stem(rng)
            if stem in used:
                continue
            used.add(stem)
            entries.append([(stem + form_suffix, Analysis(stem + lemma_suffix, normalize_tag(tag)))
                            for form_suffix, tag in forms])
        lexicon.append(entries)
    return lexicon


def make_synthetic_corpus(n_sentences=32, seed=0, min_length=3, max_length=6):
    """
    A corpus over a 20-character alphabet.

    Each sentence draws 3 to 6 word forms from a fixed lexicon of nouns,
    verbs and adjectives; forms are built by suffixation so every analysis is
    predictable from the surface. Deterministic in `seed`.

    Returns
    -------
    Corpus

    """
    if n_sentences < 1:
        raise ValueError(f"n_sentences must be >= 1, got {n_sentences}")
    lexicon = make_lexicon(seed)
    rng = np.random.default_rng([seed, n_sentences])
    sentences = []
    for _ in range(n_sentences):
        length = int(rng.integers(min_length, max_length + 1))
        tokens = []
        for _ in range(length):
            entries = lexicon[int(rng.integers(len(lexicon)))]
            forms = entries[int(rng.integers(len(entries)))]
            surface, analysis = forms[int(rng.integers(len(forms)))]
            tokens.append(Token(surface, analysis))
        sentences.append(Sentence(tuple(tokens)))
    return Corpus(tuple(sentences))
