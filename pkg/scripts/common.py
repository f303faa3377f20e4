"""Shared setup for the experiment scripts: synthetic split plus reference models."""
from infill_attack.reference import reference_suite
from infill_attack.synth import synthetic_corpus, synthetic_lexicon, synthetic_vectors


def synthetic_setup(seed: int, n_train: int = 2000, n_test: int = 200):
    full = synthetic_corpus(n_train + n_test, seed)
    train = full.subset(range(n_train))
    test = full.subset(range(n_train, n_train + n_test))
    return train, test, reference_suite(train, synthetic_vectors(seed), synthetic_lexicon())
