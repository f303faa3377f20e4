"""Independent reference implementations used by the test suite.

These avoid the library's own index bookkeeping: the greedy oracle tracks
live tokens by identity instead of shifting integer positions.
"""
from __future__ import annotations

import math
import random

import numpy as np

from infill_attack.engine import AttackConfig, ModelSuite
from infill_attack.models import (EmbeddingSimilarity, LexiconTagger, MaskedContext, NaiveBayesVictim,
                                  train_reference_mlm)
from infill_attack.textcore import Dataset, LabeledExample, TokenizedText

KIND_ORDER = ("replace", "insert", "merge")
NP = {("ADJ", "NOUN"), ("NOUN", "NOUN"), ("DT", "NOUN")}

TOY_WORDS = "the a movie film plot good bad great dull awful fine".split()
TOY_TAGS = {"the": "DT", "a": "DT", "movie": "NOUN", "film": "NOUN", "plot": "NOUN", "good": "ADJ",
            "bad": "ADJ", "great": "ADJ", "dull": "ADJ", "awful": "ADJ", "fine": "ADJ"}
POS_WORDS, NEG_WORDS = {"good", "great", "fine"}, {"bad", "dull", "awful"}


def toy_suite(seed: int) -> tuple[ModelSuite, Dataset]:
    """Small trained stack over an 11-word vocabulary plus a labelled pool of 3-8 token texts."""
    rng = random.Random(seed)
    docs = []
    for _ in range(120):
        words = [rng.choice(TOY_WORDS) for _ in range(rng.randint(3, 8))]
        pos, neg = sum(w in POS_WORDS for w in words), sum(w in NEG_WORDS for w in words)
        if pos == neg:
            continue
        docs.append(LabeledExample(TokenizedText.from_surfaces(words), "pos" if pos > neg else "neg"))
    data = Dataset(tuple(docs), ("neg", "pos"))
    g = np.random.default_rng(seed)
    vectors = {w: g.standard_normal(8) for w in TOY_WORDS}
    suite = ModelSuite(
        victim=NaiveBayesVictim(1.0).fit(data),
        mlm=train_reference_mlm([ex.text_a.surfaces for ex in docs], delta=0.05),
        similarity=EmbeddingSimilarity(vectors),
        tagger=LexiconTagger(TOY_TAGS),
    )
    return suite, data


def gold_prob(models: ModelSuite, surfaces, y) -> float:
    return models.victim.predict(TokenizedText.from_surfaces(surfaces))[y]


def oracle_candidates(models, x: TokenizedText, kind: str, i: int, k: float, l: float, window: int):
    """Enumerate the whole MLM vocabulary and test both filters directly."""
    s = list(x.surfaces)
    if kind == "replace":
        left, right, drop = s[:i], s[i + 1:], s[i]
    elif kind == "insert":
        left, right, drop = s[:i + 1], s[i + 1:], None
    else:
        left, right, drop = s[:i], s[i + 2:], None
    replaced = {"replace": (s[i],), "insert": (), "merge": tuple(s[i:i + 2])}[kind]
    dist = models.mlm.predict(MaskedContext(tuple(left), tuple(right), kind, i, replaced)).as_dict()
    out = []
    for z, p in dist.items():
        if z == drop:
            continue
        filled = TokenizedText.from_surfaces(left + [z] + right)
        sim = models.similarity.score(x, filled, window, i)
        if p > k and sim > l:
            out.append((z, p, left + [z] + right))
    return out


def oracle_pool(models, x: TokenizedText, y: str, config: AttackConfig):
    tags = models.tagger.tag(x) if models.tagger is not None else None
    pool = []
    for i in range(len(x)):
        if i in x.frozen:
            continue
        best = None
        for kind in KIND_ORDER:
            if kind not in config.enabled_actions:
                continue
            if kind == "merge":
                if i + 1 >= len(x) or i + 1 in x.frozen:
                    continue
                if config.np_gate and (tags[i], tags[i + 1]) not in NP:
                    continue
            cands = oracle_candidates(models, x, kind, i, config.k, config.l, config.window)
            if not cands:
                continue
            scored = [(gold_prob(models, filled, y), -p, z) for z, p, filled in cands]
            g, _, z = min(scored)
            if best is None or -g > best[0]:
                best = (-g, kind, z)
        if best is not None:
            score, kind, z = best
            pool.append((-score, KIND_ORDER.index(kind), i, kind, z))
    pool.sort()
    return [(kind, i, z, -neg) for neg, _, i, kind, z in pool]


def oracle_attack(models, x: TokenizedText, y: str, config: AttackConfig):
    """Greedy application with identity-tracked tokens.

    Returns (applied [(kind, orig_pos, fill)], adversarial surfaces, success).
    """
    if models.victim.predict(x).argmax() != y:
        return [], list(x.surfaces), None
    live = [(j, s) for j, s in enumerate(x.surfaces)]  # (anchor id or None, surface)
    budget = config.max_steps if config.max_steps is not None else max(1, math.ceil(0.1 * len(x)))
    applied, used = [], set()
    for kind, o, z, _ in oracle_pool(models, x, y, config):
        if len(applied) >= budget:
            break
        ids = [a for a, _ in live]
        if o in used or o not in ids:
            continue
        used.add(o)
        p = ids.index(o)
        if kind == "replace":
            live[p] = (None, z)
        elif kind == "insert":
            live.insert(p + 1, (None, z))
        else:
            live[p:p + 2] = [(None, z)]
        applied.append((kind, o, z))
        if models.victim.predict(TokenizedText.from_surfaces([s for _, s in live])).argmax() != y:
            return applied, [s for _, s in live], True
    return applied, [s for _, s in live], False


def replay(original: TokenizedText, applied):
    """Apply a trace by live position, tracking where every original token ends up.

    Returns (surfaces, {orig index: live index} for surviving originals).
    """
    cur = [(j, w) for j, w in enumerate(original.surfaces)]
    for a in applied:
        p, z = a.live_pos, a.action.fill
        if a.action.kind == "replace":
            cur[p] = (None, z)
        elif a.action.kind == "insert":
            cur.insert(p + 1, (None, z))
        else:
            cur[p:p + 2] = [(None, z)]
    return [w for _, w in cur], {j: q for q, (j, _) in enumerate(cur) if j is not None}


def requery(models, result):
    if result.pair is None:
        return models.victim.predict(result.adversarial)
    if result.target == "a":
        return models.victim.predict(result.adversarial, result.pair)
    return models.victim.predict(result.pair, result.adversarial)


def invariant_violations(result, models, config) -> list[str]:
    """Structural properties every attack result must satisfy."""
    bad = []
    x, adv = result.original, result.adversarial
    if result.error is not None:
        return [f"errored: {result.error}"]
    if result.skipped:
        if result.applied or adv != x:
            bad.append("skipped result carries edits")
        return bad
    if result.steps > config.steps_for(len(x)):
        bad.append("step budget exceeded")
    kinds = [a.action.kind for a in result.applied]
    if len(adv) != len(x) + kinds.count("insert") - kinds.count("merge"):
        bad.append("length identity")
    origs = [a.action.position for a in result.applied]
    if len(set(origs)) != len(origs):
        bad.append("position acted on twice")
    if any(a.action.kind not in config.enabled_actions for a in result.applied):
        bad.append("disabled action used")
    surfaces, where = replay(x, result.applied)
    if tuple(surfaces) != adv.surfaces:
        bad.append("trace replay mismatch")
    for j in x.frozen:
        if j not in where or adv.surfaces[where[j]] != x.surfaces[j]:
            bad.append(f"frozen token {j} not preserved")
    dist = requery(models, result)
    if result.success != (dist.argmax() != result.gold_label):
        bad.append("success flag disagrees with re-queried victim")
    if dist[result.gold_label] != result.final_gold_prob:
        bad.append("final gold probability mismatch")
    scores = [a.action.score for a in result.applied]
    if any(s1 < s2 for s1, s2 in zip(scores, scores[1:])):
        bad.append("applied scores not monotone")
    return bad
