from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..textcore import Dataset, TokenizedText
from .base import LabelDistribution, ModelNotTrainedError


def features(text: TokenizedText, pair: TokenizedText | None = None) -> list[str]:
    """Lowercased surfaces of the text followed by its pair, if any."""
    toks = [s.lower() for s in text.surfaces]
    if pair is not None:
        toks += [s.lower() for s in pair.surfaces]
    return toks


class NaiveBayesVictim:
    """Multinomial naive Bayes over token counts with additive smoothing.

    Class priors are the (unsmoothed) label frequencies, so a label that
    never occurs in training gets probability 0. Tokens outside the training
    vocabulary are ignored at prediction time.
    """

    kind = "naive-bayes"

    def __init__(self, alpha: float = 1.0):
        if alpha <= 0:
            raise ValueError("alpha must be > 0")
        self.alpha = float(alpha)
        self.labels: tuple[str, ...] = ()
        self.vocab: tuple[str, ...] = ()
        self.class_counts: np.ndarray | None = None
        self.token_counts: np.ndarray | None = None

    @property
    def trained(self) -> bool:
        return self.class_counts is not None

    def fit(self, train: Dataset, label_set: Sequence[str] | None = None) -> "NaiveBayesVictim":
        labels = tuple(label_set) if label_set is not None else train.label_set
        if len(labels) < 2:
            raise ValueError(f"need at least 2 labels to train a classifier, got {list(labels)}")
        if not len(train):
            raise ValueError("empty training set")
        docs = [(Counter(features(ex.text_a, ex.text_b)), ex.gold_label) for ex in train.examples]
        vocab = sorted({w for c, _ in docs for w in c})
        index = {w: i for i, w in enumerate(vocab)}
        lab_index = {lab: i for i, lab in enumerate(labels)}
        class_counts = np.zeros(len(labels))
        token_counts = np.zeros((len(labels), len(vocab)))
        for counts, lab in docs:
            j = lab_index[lab]
            class_counts[j] += 1
            for w, c in counts.items():
                token_counts[j, index[w]] += c
        return self._set(labels, tuple(vocab), class_counts, token_counts)

    def _set(self, labels, vocab, class_counts, token_counts) -> "NaiveBayesVictim":
        self.labels, self.vocab = labels, vocab
        self.class_counts, self.token_counts = class_counts, token_counts
        self._index = {w: i for i, w in enumerate(vocab)}
        with np.errstate(divide="ignore"):
            self._log_prior = np.log(class_counts / class_counts.sum())
        smoothed = token_counts + self.alpha
        # (vocab, labels) so a token lookup is one contiguous row
        self._log_lik = np.ascontiguousarray(
            (np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))).T)
        return self

    def log_joint(self, toks: Sequence[str]) -> np.ndarray:
        idx = [self._index[w] for w in toks if w in self._index]
        return self._log_prior + self._log_lik[idx].sum(axis=0)

    def predict(self, text: TokenizedText, pair: TokenizedText | None = None) -> LabelDistribution:
        if not self.trained:
            raise ModelNotTrainedError("victim")
        scores = self.log_joint(features(text, pair))
        scores = np.exp(scores - scores.max())
        return LabelDistribution(self.labels, tuple((scores / scores.sum()).tolist()))

    def accuracy(self, data: Dataset) -> float:
        if not len(data):
            return float("nan")
        hits = sum(self.predict(ex.text_a, ex.text_b).argmax() == ex.gold_label for ex in data.examples)
        return hits / len(data)

    def to_json(self) -> dict:
        if not self.trained:
            raise ModelNotTrainedError("victim")
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "labels": list(self.labels),
            "class_counts": self.class_counts.tolist(),
            "vocab": list(self.vocab),
            "token_counts": {lab: {w: c for w, c in zip(self.vocab, row.tolist()) if c}
                             for lab, row in zip(self.labels, self.token_counts)},
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "NaiveBayesVictim":
        if obj.get("kind") != cls.kind:
            raise ValueError("not a naive-bayes model file")
        labels, vocab = tuple(obj["labels"]), tuple(obj["vocab"])
        index = {w: i for i, w in enumerate(vocab)}
        tc = np.zeros((len(labels), len(vocab)))
        for j, lab in enumerate(labels):
            for w, c in obj["token_counts"][lab].items():
                tc[j, index[w]] = c
        return cls(obj["alpha"])._set(labels, vocab, np.asarray(obj["class_counts"], dtype=float), tc)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NaiveBayesVictim":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def train_reference_victim(train: Dataset, kind: str = "naive-bayes", alpha: float = 1.0,
                           label_set: Sequence[str] | None = None) -> NaiveBayesVictim:
    if kind != "naive-bayes":
        raise ValueError(f"unknown victim kind {kind!r}")
    return NaiveBayesVictim(alpha).fit(train, label_set)
