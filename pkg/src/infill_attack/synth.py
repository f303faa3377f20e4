"""Lexicon-generated two-class review corpus with matching word vectors and POS lexicon.

Documents are built from clause templates. Each document has a polarity;
sentiment-bearing clauses agree with it by strict majority, and neutral
clauses carry no polarity words. Genre modifiers and neutral adjectives
lean toward one label (``bias``), a spurious cue a bag-of-words victim
picks up. Word vectors are group centroids plus
noise, with positive and negative sentiment words sharing an "evaluative"
direction but pointing opposite ways along a polarity direction.
"""
from __future__ import annotations

import random
from pathlib import Path

import numpy as np

from .models.similarity import save_vectors
from .textcore import Dataset, LabeledExample, tokenize, write_dataset

LABELS = ("neg", "pos")

WORDS = {
    "noun": "movie film story plot acting cast director script ending soundtrack camera scene "
            "dialogue pacing character screenplay performance music visuals sequel".split(),
    "nmod": "comedy family love musical romance horror war crime monster disaster".split(),
    "adj_pos": "great good wonderful excellent brilliant superb lovely delightful charming "
               "fantastic amazing enjoyable".split(),
    "adj_neg": "bad terrible awful boring dull weak poor horrible mediocre tedious bland "
               "clumsy".split(),
    "adj_neu": "new short french recent quiet big long old british slow loud small".split(),
    "adv": "very really quite truly rather pretty so extremely".split(),
    "verb_pos": "loved enjoyed liked adored admired".split(),
    "verb_neg": "hated disliked regretted avoided resented".split(),
    "det": "the this that".split(),
    "pron": "i we they".split(),
}

TAGS = {"noun": "NOUN", "nmod": "NOUN", "adj_pos": "ADJ", "adj_neg": "ADJ", "adj_neu": "ADJ",
        "adv": "ADV", "verb_pos": "VERB", "verb_neg": "VERB", "det": "DT", "pron": "PRON"}

FUNCTION_WORDS = "was is and but overall honestly also a the .".split()


def _leaning(rng: random.Random, group: str, label: str, bias: float) -> str:
    # first half of the list leans positive, second half negative
    words = WORDS[group]
    half = len(words) // 2
    lean_pos = (label == "pos") == (rng.random() < bias)
    return rng.choice(words[:half] if lean_pos else words[half:])


def _clause(rng: random.Random, polarity: str | None, label: str, bias: float) -> str:
    pick = lambda group: rng.choice(WORDS[group])
    np_ = " ".join(filter(None, [pick("det"), _leaning(rng, "nmod", label, bias) if rng.random() < 0.6 else None,
                                 _leaning(rng, "adj_neu", label, bias) if rng.random() < 0.3 else None,
                                 pick("noun")]))
    if polarity is None:
        return rng.choice([
            f"{np_} was {pick('adj_neu')}",
            f"{np_} is {pick('adv')} {pick('adj_neu')}",
            f"{pick('pron')} saw {np_}",
        ])
    adj, verb = f"adj_{polarity}", f"verb_{polarity}"
    adv = f"{pick('adv')} " if rng.random() < 0.5 else ""
    return rng.choice([
        f"{np_} was {adv}{pick(adj)}",
        f"{pick('pron')} {pick(verb)} {np_}",
        f"{np_} is {adv}{pick(adj)}",
        f"a {pick(adj)} {pick('noun')}",
    ])


def make_document(rng: random.Random, label: str, bias: float = 0.75) -> str:
    other = "neg" if label == "pos" else "pos"
    n_sent = rng.choice((1, 1, 2, 3))
    while True:
        pols = [label if rng.random() < 0.75 else other for _ in range(n_sent)]
        if pols.count(label) > pols.count(other):
            break
    clauses = pols + [None] * rng.choice((0, 1, 1, 2))
    rng.shuffle(clauses)
    parts = []
    for i, pol in enumerate(clauses):
        text = _clause(rng, pol, label, bias)
        if i and rng.random() < 0.4:
            text = rng.choice(("and ", "but ", "also ")) + text
        parts.append(text + " .")
    return " ".join(parts)


def synthetic_corpus(n: int, seed: int = 0, bias: float = 0.75) -> Dataset:
    rng = random.Random(f"corpus:{seed}")
    examples = []
    for i in range(n):
        label = rng.choice(LABELS)
        examples.append(LabeledExample(tokenize(make_document(rng, label, bias)), label))
    return Dataset(tuple(examples), LABELS, meta={"source": "synthetic", "seed": seed})


def synthetic_vectors(seed: int = 0, dim: int = 32, noise: float = 0.6,
                      polarity_scale: float = 3.0) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    unit = lambda: (v := rng.standard_normal(dim)) / np.linalg.norm(v)
    evaluative, polarity = unit(), polarity_scale * unit()
    centers = {g: unit() for g in WORDS}
    centers["adj_pos"] = evaluative + polarity
    centers["adj_neg"] = evaluative - polarity
    verb = centers["verb_pos"]
    centers["verb_pos"], centers["verb_neg"] = verb + polarity, verb - polarity
    vectors = {}
    for group, words in WORDS.items():
        for w in words:
            vectors.setdefault(w, centers[group] + noise * unit())
    for w in FUNCTION_WORDS:
        vectors.setdefault(w, unit())
    return vectors


def synthetic_lexicon() -> dict[str, str]:
    lex = {}
    for group, words in WORDS.items():
        for w in words:
            lex.setdefault(w, TAGS[group])
    return lex


def write_synthetic(out_dir: str | Path, n_train: int = 2000, n_test: int = 200, seed: int = 0) -> dict[str, Path]:
    """Write train/test jsonl, a word-vector file and a POS lexicon under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    full = synthetic_corpus(n_train + n_test, seed)
    paths = {name: out / fname for name, fname in
             (("train", "train.jsonl"), ("test", "test.jsonl"), ("vectors", "vectors.txt"),
              ("lexicon", "lexicon.tsv"))}
    write_dataset(full.subset(range(n_train)), paths["train"])
    write_dataset(full.subset(range(n_train, n_train + n_test)), paths["test"])
    save_vectors(synthetic_vectors(seed), paths["vectors"])
    paths["lexicon"].write_text("".join(f"{w}\t{t}\n" for w, t in sorted(synthetic_lexicon().items())),
                                encoding="utf-8")
    return paths
