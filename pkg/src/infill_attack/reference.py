"""Assemble the desk-scale reference model stack."""
from __future__ import annotations

from typing import Mapping

import numpy as np

from .engine import ModelSuite
from .models import (EmbeddingSimilarity, LexiconTagger, NgramPerplexity, RuleGrammarChecker,
                     train_reference_mlm, train_reference_victim)
from .textcore import Dataset


def reference_suite(train: Dataset, vectors: Mapping[str, np.ndarray], lexicon: Mapping[str, str] | None = None,
                    delta: float = 0.1, alpha: float = 1.0, mlm_corpus: Dataset | None = None) -> ModelSuite:
    """NB victim and trigram infill model trained on ``train`` plus rule-based scorers."""
    mlm = train_reference_mlm(mlm_corpus or train, delta=delta)
    return ModelSuite(
        victim=train_reference_victim(train, alpha=alpha),
        mlm=mlm,
        similarity=EmbeddingSimilarity(vectors),
        tagger=LexiconTagger(lexicon),
        perplexity=NgramPerplexity.from_model(mlm),
        grammar=RuleGrammarChecker(),
    )
