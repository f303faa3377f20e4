"""Greedy attack: one best action per position, applied in score order.

Actions are scored once against the original text. The attack then applies
them highest score first (ties: replace > insert > merge, then lower
position) until the victim's prediction leaves the gold label or the step
budget runs out. Inserts and merges shift the live indices of the
remaining actions; a merge also drops remaining actions anchored on either
merged token.
"""
from __future__ import annotations

import json
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .models.base import (GrammarChecker, MaskedLanguageModel, PerplexityScorer, PosTagger,
                          SimilarityScorer, VictimClassifier)
from .perturb import (DEFAULT_K, DEFAULT_L, DEFAULT_WINDOW, KINDS, MLM_FREE_SAMPLE, NP_PATTERNS,
                      Action, Predict, PerturbationError, _mask, build_candidate_set, edit,
                      np_gate, select_fill, victim_query)
from .textcore import Dataset, LabeledExample, TokenizedText, select_attack_target

KIND_RANK = {k: r for r, k in enumerate(KINDS)}


@dataclass(frozen=True)
class AttackConfig:
    k: float = DEFAULT_K
    l: float = DEFAULT_L
    max_steps: int | None = None  # None: ceil(10% of text length), at least 1
    window: int = DEFAULT_WINDOW
    enabled_actions: tuple[str, ...] = KINDS
    disable_sim_filter: bool = False
    disable_mlm_filter: bool = False
    sample_size: int = MLM_FREE_SAMPLE
    np_gate: bool = True
    attack_punct: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "enabled_actions", tuple(self.enabled_actions))
        if not self.enabled_actions or set(self.enabled_actions) - set(KINDS):
            raise ValueError(f"enabled_actions must be a non-empty subset of {KINDS}")
        if not (0 <= self.k <= 1 and 0 <= self.l <= 1):
            raise ValueError("thresholds k and l must lie in [0, 1]")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.window < 1 or self.sample_size < 1:
            raise ValueError("window and sample_size must be >= 1")

    def steps_for(self, n: int) -> int:
        return self.max_steps if self.max_steps is not None else max(1, math.ceil(0.1 * n))


@dataclass
class ModelSuite:
    """Everything an attack (and its evaluation) talks to."""

    victim: VictimClassifier
    mlm: MaskedLanguageModel
    similarity: SimilarityScorer
    tagger: PosTagger | None = None
    perplexity: PerplexityScorer | None = None
    grammar: GrammarChecker | None = None


@dataclass(frozen=True)
class AppliedAction:
    action: Action
    live_pos: int


@dataclass
class AttackResult:
    gold_label: str
    original: TokenizedText
    adversarial: TokenizedText
    success: bool = False
    skipped: bool = False
    applied: list[AppliedAction] = field(default_factory=list)
    initial_gold_prob: float | None = None
    final_gold_prob: float | None = None
    final_label: str | None = None
    target: str = "a"
    pair: TokenizedText | None = None
    error: str | None = None

    @property
    def steps(self) -> int:
        return len(self.applied)

    def to_json(self) -> dict:
        return {
            "gold_label": self.gold_label,
            "success": self.success,
            "skipped": self.skipped,
            "error": self.error,
            "steps": self.steps,
            "original": list(self.original.surfaces),
            "frozen": sorted(self.original.frozen),
            "adversarial": list(self.adversarial.surfaces),
            "target": self.target,
            "pair": None if self.pair is None else list(self.pair.surfaces),
            "applied": [{"kind": a.action.kind, "orig_pos": a.action.position, "live_pos": a.live_pos,
                         "fill": a.action.fill, "score": a.action.score} for a in self.applied],
            "initial_gold_prob": self.initial_gold_prob,
            "final_gold_prob": self.final_gold_prob,
            "final_label": self.final_label,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AttackResult":
        original = TokenizedText.from_surfaces(obj["original"], obj.get("frozen", ()))
        applied = [AppliedAction(Action(a["kind"], a["orig_pos"], a["fill"], a["score"], -a["score"]),
                                 a["live_pos"]) for a in obj["applied"]]
        return cls(
            gold_label=obj["gold_label"], original=original,
            adversarial=TokenizedText.from_surfaces(obj["adversarial"]),
            success=obj["success"], skipped=obj["skipped"], applied=applied,
            initial_gold_prob=obj["initial_gold_prob"], final_gold_prob=obj["final_gold_prob"],
            final_label=obj["final_label"], target=obj.get("target", "a"),
            pair=None if obj.get("pair") is None else TokenizedText.from_surfaces(obj["pair"]),
            error=obj.get("error"),
        )


def write_trace(results: Iterable[AttackResult], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_json(), ensure_ascii=False) + "\n")


def read_trace(path: str | Path) -> list[AttackResult]:
    with Path(path).open(encoding="utf-8") as fh:
        return [AttackResult.from_json(json.loads(line)) for line in fh if line.strip()]


def _attackable(x: TokenizedText, i: int, config: AttackConfig) -> bool:
    return i not in x.frozen and (config.attack_punct or not x.tokens[i].is_punct)


def _action_rng(config: AttackConfig, i: int, kind: str) -> random.Random:
    # string seeds hash deterministically, independent of evaluation order
    return random.Random(f"{config.seed}:{i}:{kind}")


def best_action_at(x: TokenizedText, y: str, i: int, models: ModelSuite, config: AttackConfig,
                   predict: Predict, tags: Sequence[str] | None = None) -> Action | None:
    """Highest-scoring of replace/insert/merge at position ``i``, or None if all are empty.

    ``tags`` are precomputed POS tags of ``x`` for the noun-phrase gate.
    """
    best: Action | None = None
    for kind in KINDS:
        if kind not in config.enabled_actions:
            continue
        if kind == "merge":
            if i + 1 >= len(x) or not _attackable(x, i + 1, config):
                continue
            if config.np_gate:
                if tags is None:
                    if not np_gate(x, i, models.tagger):
                        continue
                elif (tags[i], tags[i + 1]) not in NP_PATTERNS:
                    continue
        ctx = _mask(x, kind, i)
        Z = build_candidate_set(
            ctx, x, models.mlm, models.similarity, config.k, config.l, config.window,
            disable_sim=config.disable_sim_filter, disable_mlm=config.disable_mlm_filter,
            sample_size=config.sample_size, rng=_action_rng(config, i, kind))
        chosen = select_fill(Z, x, y, predict)
        if chosen is None:
            continue
        cand, p = chosen
        action = Action(kind, i, cand.token, -p, p)
        # strict comparison keeps the earlier kind on ties
        if best is None or action.score > best.score:
            best = action
    return best


def build_action_pool(x: TokenizedText, y: str, models: ModelSuite, config: AttackConfig,
                      predict: Predict | None = None, workers: int = 1) -> list[Action]:
    """At most one action per attackable position, in position order."""
    predict = predict or victim_query(models.victim)
    positions = [i for i in range(len(x)) if _attackable(x, i, config)]
    tags = None
    if "merge" in config.enabled_actions and config.np_gate:
        if models.tagger is None:
            raise ValueError("noun-phrase gate needs a POS tagger")
        tags = models.tagger.tag(x)
    work = lambda i: best_action_at(x, y, i, models, config, predict, tags)
    if workers > 1 and len(positions) > 1:
        with ThreadPoolExecutor(workers) as ex:
            found = list(ex.map(work, positions))
    else:
        found = [work(i) for i in positions]
    return [a for a in found if a is not None]


def pool_order(pool: Sequence[Action]) -> list[Action]:
    return sorted(pool, key=lambda a: (-a.score, KIND_RANK[a.kind], a.position))


def reindex(live: dict[int, int], applied: Action, p: int) -> dict[int, int]:
    """Update ``orig_pos -> live_pos`` of remaining actions after applying ``applied`` at live ``p``."""
    if applied.kind == "insert":
        return {o: q + 1 if q > p else q for o, q in live.items()}
    if applied.kind == "merge":
        return {o: q - 1 if q > p + 1 else q for o, q in live.items() if q not in (p, p + 1)}
    return dict(live)


def attack(example: LabeledExample, models: ModelSuite, config: AttackConfig,
           pool_workers: int = 1) -> AttackResult:
    if example.text_b is None:
        x, pair, slot = example.text_a, None, "a"
    else:
        slot, frozen = select_attack_target(example)
        x, pair = (example.text_a, example.text_b) if slot == "a" else (example.text_b, example.text_a)
        x = x.with_frozen(frozen | x.frozen)
    y = example.gold_label
    predict = victim_query(models.victim, pair, slot)
    result = AttackResult(y, x, x, target=slot, pair=pair)

    dist = predict(x)
    result.initial_gold_prob = result.final_gold_prob = dist[y]
    result.final_label = dist.argmax()
    if result.final_label != y:
        result.skipped = True
        return result

    pool = build_action_pool(x, y, models, config, predict, pool_workers)
    live = {a.position: a.position for a in pool}
    budget = config.steps_for(len(x))
    current = x
    for action in pool_order(pool):
        if result.steps >= budget:
            break
        if action.position not in live:
            continue
        p = live.pop(action.position)
        current = edit(current, action.kind, p, action.fill)
        live = reindex(live, action, p)
        result.applied.append(AppliedAction(action, p))
        dist = predict(current)
        result.adversarial = current
        result.final_gold_prob = dist[y]
        result.final_label = dist.argmax()
        if result.final_label != y:
            result.success = True
            break
    return result


def attack_dataset(dataset: Dataset, models: ModelSuite, config: AttackConfig,
                   workers: int = 1) -> list[AttackResult]:
    """Attack every example; failures are recorded per result instead of raised."""

    def one(ex: LabeledExample) -> AttackResult:
        try:
            return attack(ex, models, config)
        except Exception as e:  # isolate per-example failures
            return AttackResult(ex.gold_label, ex.text_a, ex.text_a, pair=ex.text_b,
                                error=f"{type(e).__name__}: {e}")

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(one, dataset.examples))
    return [one(ex) for ex in dataset.examples]


__all__ = [
    "AppliedAction", "AttackConfig", "AttackResult", "ModelSuite", "PerturbationError",
    "attack", "attack_dataset", "best_action_at", "build_action_pool", "np_gate",
    "pool_order", "read_trace", "reindex", "write_trace",
]
