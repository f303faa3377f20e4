"""Replace / Insert / Merge: masking, candidate sets, fill choice and scoring."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from .models.base import (LabelDistribution, MaskedContext, MaskedLanguageModel, PosTagger,
                          SimilarityScorer, VictimClassifier)
from .textcore import TokenizedText

KINDS = ("replace", "insert", "merge")
DEFAULT_K = 5e-3
DEFAULT_L = 0.7
DEFAULT_WINDOW = 15
MLM_FREE_SAMPLE = 200
NP_PATTERNS = frozenset({("ADJ", "NOUN"), ("NOUN", "NOUN"), ("DT", "NOUN")})

Predict = Callable[[TokenizedText], LabelDistribution]


class PerturbationError(ValueError):
    pass


def _check(x: TokenizedText, positions, kind: str) -> None:
    n = len(x)
    for p in positions:
        if not 0 <= p < n:
            raise PerturbationError(f"{kind} position {p} out of range for {n} tokens")
        if p in x.frozen:
            raise PerturbationError(f"{kind} touches frozen position {p}")


def mask_replace(x: TokenizedText, i: int) -> MaskedContext:
    _check(x, (i,), "replace")
    s = x.surfaces
    return MaskedContext(s[:i], s[i + 1:], "replace", i, (s[i],))


def mask_insert(x: TokenizedText, i: int) -> MaskedContext:
    """Mask slot right after token ``i``."""
    _check(x, (i,), "insert")
    s = x.surfaces
    return MaskedContext(s[:i + 1], s[i + 1:], "insert", i, ())


def np_gate(x: TokenizedText, i: int, tagger: PosTagger | None, enabled: bool = True) -> bool:
    """True iff the bigram at ``(i, i+1)`` is tagged ADJ-NOUN, NOUN-NOUN or DT-NOUN."""
    if not enabled:
        return True
    if tagger is None:
        raise ValueError("noun-phrase gate needs a POS tagger")
    tags = tagger.tag(x)
    return (tags[i], tags[i + 1]) in NP_PATTERNS


def mask_merge(x: TokenizedText, i: int, tagger: PosTagger | None = None) -> MaskedContext:
    """Mask the bigram ``(i, i+1)`` with one slot; checks the NP gate when a tagger is given."""
    if i >= len(x) - 1:
        raise PerturbationError(f"merge position {i} has no bigram in {len(x)} tokens")
    _check(x, (i, i + 1), "merge")
    if tagger is not None and not np_gate(x, i, tagger):
        raise PerturbationError(f"bigram at {i} is not a noun phrase")
    s = x.surfaces
    return MaskedContext(s[:i], s[i + 2:], "merge", i, (s[i], s[i + 1]))


def _mask(x: TokenizedText, kind: str, i: int) -> MaskedContext:
    return {"replace": mask_replace, "insert": mask_insert, "merge": mask_merge}[kind](x, i)


def edit(x: TokenizedText, kind: str, i: int, z: str) -> TokenizedText:
    """Apply one edit at live index ``i``, remapping frozen positions."""
    n = len(x)
    s = x.surfaces
    if kind == "replace":
        if not 0 <= i < n:
            raise PerturbationError(f"replace position {i} out of range for {n} tokens")
        return TokenizedText.from_surfaces(s[:i] + (z,) + s[i + 1:], x.frozen)
    if kind == "insert":
        if not 0 <= i < n:
            raise PerturbationError(f"insert position {i} out of range for {n} tokens")
        return TokenizedText.from_surfaces(s[:i + 1] + (z,) + s[i + 1:],
                                           (p + 1 if p > i else p for p in x.frozen))
    if kind == "merge":
        if not 0 <= i < n - 1:
            raise PerturbationError(f"merge position {i} has no bigram in {n} tokens")
        return TokenizedText.from_surfaces(s[:i] + (z,) + s[i + 2:],
                                           (p - 1 if p > i + 1 else p for p in x.frozen if p not in (i, i + 1)))
    raise PerturbationError(f"unknown action kind {kind!r}")


@dataclass(frozen=True)
class Candidate:
    token: str
    mlm_prob: float
    local_sim: float


@dataclass(frozen=True)
class CandidateSet:
    members: tuple[Candidate, ...]
    ctx: MaskedContext
    n_considered: int = 0

    def tokens(self) -> set[str]:
        return {c.token for c in self.members}

    def __len__(self) -> int:
        return len(self.members)


def build_candidate_set(
    ctx: MaskedContext,
    x: TokenizedText,
    mlm: MaskedLanguageModel,
    sim: SimilarityScorer,
    k: float = DEFAULT_K,
    l: float = DEFAULT_L,
    window: int = DEFAULT_WINDOW,
    *,
    disable_sim: bool = False,
    disable_mlm: bool = False,
    sample_size: int = MLM_FREE_SAMPLE,
    rng: random.Random | None = None,
) -> CandidateSet:
    """Fill tokens with ``p_mlm > k`` whose filled text keeps local similarity ``> l``.

    With ``disable_mlm`` the probability filter is replaced by a uniform
    sample of ``sample_size`` vocabulary tokens; with ``disable_sim`` the
    similarity filter is skipped. For replace masks the original token is
    never a candidate. ``n_considered`` counts tokens entering the
    similarity stage before the original-token exclusion.
    """
    if not (0 <= k <= 1 and 0 <= l <= 1):
        raise ValueError("thresholds must lie in [0, 1]")
    if window < 1:
        raise ValueError("window must be >= 1")
    dist = mlm.predict(ctx)
    if disable_mlm:
        rng = rng or random.Random(0)
        idx = sorted(rng.sample(range(len(dist.tokens)), min(sample_size, len(dist.tokens))))
        pool = [(dist.tokens[i], float(dist.probs[i])) for i in idx]
    else:
        pool = dist.above(k)
    n_considered = len(pool)
    if ctx.kind == "replace":
        pool = [(z, p) for z, p in pool if z != ctx.replaced_surfaces[0]]
    members = []
    for z, p in pool:
        filled = TokenizedText.from_surfaces(ctx.fill(z))
        s = sim.score(x, filled, window=window, center=ctx.origin_position)
        if disable_sim or s > l:
            members.append(Candidate(z, p, s))
    return CandidateSet(tuple(members), ctx, n_considered)


def victim_query(victim: VictimClassifier, pair: TokenizedText | None = None, slot: str = "a") -> Predict:
    """Bind the untouched text of a pair so the victim sees texts in their original order."""
    if pair is None:
        return lambda t: victim.predict(t)
    if slot == "a":
        return lambda t: victim.predict(t, pair)
    return lambda t: victim.predict(pair, t)


def select_fill(Z: CandidateSet, x: TokenizedText, y: str, predict: Predict) -> tuple[Candidate, float] | None:
    """Member minimizing the victim's gold probability on the filled text.

    Ties go to the higher MLM probability, then the lexicographically
    smaller token. Returns None for an empty set.
    """
    best = None
    for c in Z.members:
        filled = TokenizedText.from_surfaces(Z.ctx.fill(c.token))
        p = predict(filled)[y]
        key = (p, -c.mlm_prob, c.token)
        if best is None or key < best[0]:
            best = (key, c, p)
    return None if best is None else (best[1], best[2])


@dataclass(frozen=True)
class Action:
    kind: str
    position: int
    fill: str
    score: float
    resulting_gold_prob: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown action kind {self.kind!r}")


def apply_action(x: TokenizedText, a: Action, at: int | None = None) -> TokenizedText:
    """Apply ``a`` at its own position, or at live index ``at`` when given."""
    return edit(x, a.kind, a.position if at is None else at, a.fill)


def score_action(x: TokenizedText, y: str, kind: str, position: int, fill: str, predict: Predict) -> Action:
    p = predict(edit(x, kind, position, fill))[y]
    return Action(kind, position, fill, -p, p)
