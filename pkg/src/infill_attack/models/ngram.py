"""Bidirectional trigram infill model and n-gram perplexity scorers.

The infill distribution for a mask with left context ``... u v`` and right
context ``r1 r2 ...`` is

    p(z | ctx)  ∝  p_fwd(z | u, v) * p_bwd(z | r1, r2)

with both directional factors additive-smoothed over the fill vocabulary and
the product renormalized. Contexts shorter than two tokens are padded with
boundary symbols. A fully empty context (nothing on either side) carries no
evidence and returns the smoothed unigram distribution. With ``delta=0`` a
directional factor whose context was never observed falls back to the
unigram distribution, and a product with zero total mass does as well.
"""
from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..textcore import Dataset, TokenizedText, tokenize
from .base import MaskedContext, ModelNotTrainedError, VocabDistribution

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

Sentence = Sequence[str]


def _sentences(corpus) -> list[tuple[str, ...]]:
    if isinstance(corpus, Dataset):
        out = []
        for ex in corpus.examples:
            out.append(ex.text_a.surfaces)
            if ex.text_b is not None:
                out.append(ex.text_b.surfaces)
        return out
    if isinstance(corpus, (str, Path)):
        with Path(corpus).open(encoding="utf-8") as fh:
            return [tokenize(line).surfaces for line in fh]
    return [s.surfaces if isinstance(s, TokenizedText) else tuple(s) for s in corpus]


class NgramCounts:
    """Raw unigram/bigram/trigram tables in both directions."""

    def __init__(self):
        self.unigram: Counter[str] = Counter()
        self.bigram: dict[str, Counter[str]] = defaultdict(Counter)
        self.fwd: dict[tuple[str, str], Counter[str]] = defaultdict(Counter)
        self.bwd: dict[tuple[str, str], Counter[str]] = defaultdict(Counter)

    def add(self, sent: Sentence) -> None:
        if not sent:
            return
        padded = (BOS, BOS, *sent, EOS, EOS)
        self.unigram.update(sent)
        for i in range(2, len(padded) - 1):
            z = padded[i]
            self.bigram[padded[i - 1]][z] += 1
            self.fwd[padded[i - 2], padded[i - 1]][z] += 1
            if z != EOS:
                self.bwd[padded[i + 1], padded[i + 2]][z] += 1

    def to_json(self) -> dict:
        tab = lambda t: {"\t".join(k) if isinstance(k, tuple) else k: dict(sorted(v.items()))
                         for k, v in sorted(t.items())}
        return {"unigram": dict(sorted(self.unigram.items())), "bigram": tab(self.bigram),
                "fwd": tab(self.fwd), "bwd": tab(self.bwd)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "NgramCounts":
        c = cls()
        c.unigram.update(obj["unigram"])
        for k, v in obj["bigram"].items():
            c.bigram[k].update(v)
        for name in ("fwd", "bwd"):
            table = getattr(c, name)
            for k, v in obj[name].items():
                table[tuple(k.split("\t"))].update(v)
        return c


class InfillTrigramModel:
    """Reference masked LM: product of forward and backward trigram factors."""

    kind = "infill-trigram"

    def __init__(self, delta: float = 0.1):
        if delta < 0:
            raise ValueError("delta must be >= 0")
        self.delta = float(delta)
        self.counts: NgramCounts | None = None
        self.vocab: tuple[str, ...] = ()
        self._index: dict[str, int] = {}

    @property
    def trained(self) -> bool:
        return self.counts is not None

    @property
    def vocab_size(self) -> int:
        """Fill vocabulary plus the two boundary symbols."""
        return len(self.vocab) + 2

    def fit(self, corpus) -> "InfillTrigramModel":
        counts = NgramCounts()
        for sent in _sentences(corpus):
            counts.add(sent)
        if not counts.unigram:
            raise ValueError("empty corpus")
        return self._set_counts(counts)

    def _set_counts(self, counts: NgramCounts) -> "InfillTrigramModel":
        self.counts = counts
        self.vocab = tuple(sorted(counts.unigram))
        self._index = {t: i for i, t in enumerate(self.vocab)}
        self._factor.cache_clear()
        self._unigram = self._smooth(counts.unigram, None)
        return self

    def _smooth(self, table: Mapping[str, int], fallback: np.ndarray | None) -> np.ndarray:
        vec = np.full(len(self.vocab), self.delta)
        for z, c in table.items():
            i = self._index.get(z)
            if i is not None:
                vec[i] += c
        total = vec.sum()
        if total <= 0:
            return fallback
        return vec / total

    @lru_cache(maxsize=50_000)
    def _factor(self, direction: str, ctx: tuple[str, str]) -> np.ndarray:
        table = getattr(self.counts, direction).get(ctx, {})
        return self._smooth(table, self._unigram)

    def unigram(self) -> VocabDistribution:
        if not self.trained:
            raise ModelNotTrainedError("masked language model")
        return VocabDistribution(self.vocab, self._unigram.copy())

    def predict(self, ctx: MaskedContext) -> VocabDistribution:
        if not self.trained:
            raise ModelNotTrainedError("masked language model")
        if not ctx.left and not ctx.right:
            return self.unigram()
        left = (BOS, BOS, *ctx.left[-2:])[-2:]
        right = (*ctx.right[:2], EOS, EOS)[:2]
        p = self._factor("fwd", (left[0], left[1])) * self._factor("bwd", (right[0], right[1]))
        total = p.sum()
        p = self._unigram.copy() if total <= 0 else p / total
        return VocabDistribution(self.vocab, p)

    def to_json(self) -> dict:
        if not self.trained:
            raise ModelNotTrainedError("masked language model")
        return {"kind": self.kind, "order": 3, "delta": self.delta, "counts": self.counts.to_json()}

    @classmethod
    def from_json(cls, obj: Mapping) -> "InfillTrigramModel":
        if obj.get("kind") != cls.kind:
            raise ValueError(f"not an {cls.kind} model file")
        return cls(obj["delta"])._set_counts(NgramCounts.from_json(obj["counts"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "InfillTrigramModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def train_reference_mlm(corpus, order: int = 3, delta: float = 0.1) -> InfillTrigramModel:
    if order != 3:
        raise ValueError("only order 3 is implemented")
    return InfillTrigramModel(delta).fit(corpus)


class NgramPerplexity:
    """Forward interpolated trigram scorer.

    p(w | u v) = l3 * c(uvw)/c(uv) + l2 * c(vw)/c(v) + l1 * add-one unigram,
    where the unigram reserves one slot for unseen words. Empty history
    components drop out and their weight moves to the unigram term.
    """

    def __init__(self, counts: NgramCounts, lambdas: tuple[float, float, float] = (0.6, 0.3, 0.1)):
        self.counts = counts
        self.lambdas = lambdas
        self._n = sum(counts.unigram.values())
        self._v = len(counts.unigram) + 1
        self._bigram_tot = {k: sum(v.values()) for k, v in counts.bigram.items()}
        self._fwd_tot = {k: sum(v.values()) for k, v in counts.fwd.items()}

    @classmethod
    def from_model(cls, model: InfillTrigramModel, **kw) -> "NgramPerplexity":
        if not model.trained:
            raise ModelNotTrainedError("masked language model")
        return cls(model.counts, **kw)

    def prob(self, w: str, u: str, v: str) -> float:
        l3, l2, l1 = self.lambdas
        p = 0.0
        rest = l1
        tri_tot = self._fwd_tot.get((u, v), 0)
        if tri_tot:
            p += l3 * self.counts.fwd[u, v][w] / tri_tot
        else:
            rest += l3
        bi_tot = self._bigram_tot.get(v, 0)
        if bi_tot:
            p += l2 * self.counts.bigram[v][w] / bi_tot
        else:
            rest += l2
        return p + rest * (self.counts.unigram.get(w, 0) + 1) / (self._n + self._v)

    def perplexity(self, text: TokenizedText) -> float:
        toks = text.surfaces
        if not toks:
            raise ValueError("perplexity of empty text")
        hist = [BOS, BOS]
        nll = 0.0
        for w in toks:
            nll -= math.log(self.prob(w, hist[-2], hist[-1]))
            hist.append(w)
        return math.exp(nll / len(toks))


class UnigramPerplexity:
    """Context-free scorer over a fixed probability table."""

    def __init__(self, probs: Mapping[str, float], unk_prob: float = 1e-12):
        self.probs = dict(probs)
        self.unk_prob = unk_prob

    @classmethod
    def uniform(cls, vocab: Iterable[str]) -> "UnigramPerplexity":
        vocab = list(vocab)
        return cls({w: 1.0 / len(vocab) for w in vocab})

    def perplexity(self, text: TokenizedText) -> float:
        toks = text.surfaces
        if not toks:
            raise ValueError("perplexity of empty text")
        nll = -sum(math.log(self.probs.get(w, self.unk_prob)) for w in toks)
        return math.exp(nll / len(toks))
