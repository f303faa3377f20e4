from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence, runtime_checkable

import numpy as np

from ..textcore import TokenizedText

NORM_TOL = 1e-6
MASK_KINDS = ("replace", "insert", "merge")
POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV", "DT", "PRON", "PREP", "NUM", "PUNCT", "OTHER")


class ModelNotTrainedError(RuntimeError):
    def __init__(self, what: str = "model"):
        super().__init__(f"{what} not trained")


@dataclass(frozen=True)
class LabelDistribution:
    """Victim output over an ordered label set; ``labels`` order breaks argmax ties."""

    labels: tuple[str, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.probs) or not self.labels:
            raise ValueError("labels and probs must be non-empty and aligned")

    @classmethod
    def from_mapping(cls, probs: Mapping[str, float], order: Sequence[str] | None = None) -> "LabelDistribution":
        labels = tuple(order) if order is not None else tuple(probs)
        return cls(labels, tuple(float(probs.get(lab, 0.0)) for lab in labels))

    def __getitem__(self, label: str) -> float:
        return self.probs[self.labels.index(label)]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.labels, self.probs))

    def argmax(self) -> str:
        best = 0
        for i, p in enumerate(self.probs):
            if p > self.probs[best]:
                best = i
        return self.labels[best]


@dataclass(frozen=True, eq=False)
class VocabDistribution:
    """Infill distribution over a vocabulary, stored as parallel arrays."""

    tokens: tuple[str, ...]
    probs: np.ndarray

    @classmethod
    def from_mapping(cls, probs: Mapping[str, float]) -> "VocabDistribution":
        toks = tuple(probs)
        return cls(toks, np.fromiter((float(probs[t]) for t in toks), dtype=float, count=len(toks)))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.tokens, self.probs.tolist()))

    def get(self, token: str, default: float = 0.0) -> float:
        try:
            return float(self.probs[self.tokens.index(token)])
        except ValueError:
            return default

    def above(self, threshold: float) -> list[tuple[str, float]]:
        idx = np.flatnonzero(self.probs > threshold)
        return [(self.tokens[i], float(self.probs[i])) for i in idx]


@dataclass(frozen=True)
class MaskedContext:
    left: tuple[str, ...]
    right: tuple[str, ...]
    kind: str
    origin_position: int
    replaced_surfaces: tuple[str, ...] = ()

    def __post_init__(self):
        expected = {"replace": 1, "insert": 0, "merge": 2}
        if self.kind not in expected:
            raise ValueError(f"unknown mask kind {self.kind!r}")
        if len(self.replaced_surfaces) != expected[self.kind]:
            raise ValueError(f"{self.kind} mask must replace {expected[self.kind]} surface(s)")

    def fill(self, z: str) -> tuple[str, ...]:
        return self.left + (z,) + self.right


@dataclass(frozen=True)
class ModelEndpoint:
    base_url: str
    timeout: float = 10.0
    retries: int = 2
    backoff: float = 0.05

    def __post_init__(self):
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


@runtime_checkable
class MaskedLanguageModel(Protocol):
    def predict(self, ctx: MaskedContext) -> VocabDistribution: ...


@runtime_checkable
class VictimClassifier(Protocol):
    labels: tuple[str, ...]

    def predict(self, text: TokenizedText, pair: TokenizedText | None = None) -> LabelDistribution: ...


@runtime_checkable
class SimilarityScorer(Protocol):
    def score(self, a: TokenizedText, b: TokenizedText,
              window: int | None = None, center: int | None = None) -> float: ...


@runtime_checkable
class PerplexityScorer(Protocol):
    def perplexity(self, text: TokenizedText) -> float: ...


@runtime_checkable
class GrammarChecker(Protocol):
    def count(self, text: TokenizedText) -> int: ...


@runtime_checkable
class PosTagger(Protocol):
    def tag(self, text: TokenizedText) -> list[str]: ...


def crop_window(n: int, window: int, center: int) -> slice:
    """Token slice of ``window`` positions centered on ``center``, clipped to ``[0, n)``."""
    start = center - (window - 1) // 2
    return slice(max(0, start), max(0, min(n, start + window)))
