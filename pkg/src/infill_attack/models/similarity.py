from __future__ import annotations

from pathlib import Path
from typing import Mapping

import numpy as np

from ..textcore import TokenizedText
from .base import crop_window


def load_vectors(path: str | Path) -> dict[str, np.ndarray]:
    """Read a ``word v1 ... vd`` text file; every line must have the same d."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            word, vals = parts[0], parts[1:]
            if dim is None:
                dim = len(vals)
            if len(vals) != dim or dim == 0:
                raise ValueError(f"{path}:{lineno}: expected {dim} components, got {len(vals)}")
            vectors[word] = np.array(vals, dtype=float)
    return vectors


def save_vectors(vectors: Mapping[str, np.ndarray], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for w in sorted(vectors):
            fh.write(w + " " + " ".join(repr(float(v)) for v in vectors[w]) + "\n")


def jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


class EmbeddingSimilarity:
    """Cosine between mean word vectors.

    Falls back to Jaccard over lowercased token sets when either side has no
    in-vocabulary token (or a zero mean vector). Empty vs empty scores 1,
    empty vs non-empty scores 0.
    """

    def __init__(self, vectors: Mapping[str, np.ndarray]):
        self.vectors = {w: np.asarray(v, dtype=float) for w, v in vectors.items()}
        self.dim = len(next(iter(self.vectors.values()))) if self.vectors else 0

    @classmethod
    def from_file(cls, path: str | Path) -> "EmbeddingSimilarity":
        return cls(load_vectors(path))

    def _lookup(self, w: str):
        v = self.vectors.get(w)
        return self.vectors.get(w.lower()) if v is None else v

    def _mean(self, toks):
        vecs = [v for v in map(self._lookup, toks) if v is not None]
        if not vecs:
            return None
        m = np.sum(vecs, axis=0)
        return m if np.any(m) else None

    def score(self, a: TokenizedText, b: TokenizedText,
              window: int | None = None, center: int | None = None) -> float:
        ta, tb = a.surfaces, b.surfaces
        if window is not None:
            if window < 1:
                raise ValueError("window must be >= 1")
            c = center if center is not None else 0
            ta, tb = ta[crop_window(len(ta), window, c)], tb[crop_window(len(tb), window, c)]
        return self.score_surfaces(ta, tb)

    def score_surfaces(self, ta, tb) -> float:
        if not ta or not tb:
            return 1.0 if not ta and not tb else 0.0
        if ta == tb:
            return 1.0
        ma, mb = self._mean(ta), self._mean(tb)
        if ma is None or mb is None:
            return jaccard({w.lower() for w in ta}, {w.lower() for w in tb})
        cos = float(ma @ mb / (np.linalg.norm(ma) * np.linalg.norm(mb)))
        return min(1.0, max(-1.0, cos))
