import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infill_attack.models import (EmbeddingSimilarity, LabelDistribution, LexiconTagger, MaskedContext,
                                  VocabDistribution, train_reference_mlm)
from infill_attack.perturb import (Action, Candidate, CandidateSet, PerturbationError, apply_action,
                                   build_candidate_set, edit, mask_insert, mask_merge, mask_replace,
                                   np_gate, score_action, select_fill)
from infill_attack.textcore import TokenizedText, tokenize

T = TokenizedText.from_surfaces


class FixedMLM:
    def __init__(self, probs):
        self.dist = VocabDistribution.from_mapping(probs)

    def predict(self, ctx):
        return self.dist


class ConstSim:
    def __init__(self, value):
        self.value = value

    def score(self, a, b, window=None, center=None):
        return self.value


def table_victim(table, y="pos", other="neg"):
    """Gold probability looked up by the filled text's surfaces."""
    def predict(text):
        p = table[" ".join(text.surfaces)]
        return LabelDistribution((y, other), (p, 1 - p))
    return predict


# --- masking ----------------------------------------------------------------

def test_mask_replace_last_token():
    ctx = mask_replace(T("The movie is fantastic".split()), 3)
    assert (ctx.left, ctx.right, ctx.replaced_surfaces, ctx.kind) == (
        ("The", "movie", "is"), (), ("fantastic",), "replace")


def test_mask_replace_boundaries():
    x = T("a b c".split())
    assert mask_replace(x, 0).left == ()
    with pytest.raises(PerturbationError):
        mask_replace(x, 3)
    with pytest.raises(PerturbationError, match="frozen"):
        mask_replace(x.with_frozen({1}), 1)


def test_mask_insert():
    ctx = mask_insert(T(["I", "recommend"]), 0)
    assert (ctx.left, ctx.right, ctx.replaced_surfaces) == (("I",), ("recommend",), ())
    assert ctx.fill("highly") == ("I", "highly", "recommend")
    assert mask_insert(T(["I", "recommend"]), 1).right == ()
    with pytest.raises(PerturbationError):
        mask_insert(T(["I"]), 1)


def test_mask_merge_new_york():
    x = tokenize("I love New York")
    ctx = mask_merge(x, 2)
    assert ctx.replaced_surfaces == ("New", "York")
    assert ctx.left == ("I", "love") and ctx.right == ()
    assert ctx.fill("York") == ("I", "love", "York")
    with pytest.raises(PerturbationError):
        mask_merge(x, 3)
    with pytest.raises(PerturbationError, match="frozen"):
        mask_merge(x.with_frozen({3}), 2)


def test_mask_merge_np_gate():
    tagger = LexiconTagger({"red": "ADJ", "car": "NOUN"})
    assert mask_merge(T(["red", "car"]), 0, tagger).kind == "merge"
    with pytest.raises(PerturbationError, match="noun phrase"):
        mask_merge(T(["run", "fast"]), 0, tagger)


def test_np_gate_patterns():
    tagger = LexiconTagger({"red": "ADJ", "car": "NOUN"})
    assert np_gate(T(["red", "car"]), 0, tagger)
    assert np_gate(T(["the", "car"]), 0, tagger)
    assert not np_gate(T(["run", "fast"]), 0, tagger)
    assert np_gate(T(["run", "fast"]), 0, tagger, enabled=False)


# --- candidate sets -----------------------------------------------------------

def test_candidate_set_filters_and_excludes_original():
    x = T(["so", "good"])
    ctx = mask_replace(x, 1)
    Z = build_candidate_set(ctx, x, FixedMLM({"good": 0.5, "great": 0.4, "bad": 0.1}), ConstSim(0.9), k=0.2, l=0.7)
    assert Z.tokens() == {"great"}
    assert Z.members[0] == Candidate("great", 0.4, 0.9)


def test_candidate_set_unreachable_k():
    x = T(["so", "good"])
    Z = build_candidate_set(mask_insert(x, 0), x, FixedMLM({"good": 1.0}), ConstSim(1.0), k=1.0, l=0.0)
    assert len(Z) == 0


def test_candidate_set_similarity_threshold_is_strict():
    x = T(["a"])
    Z = build_candidate_set(mask_insert(x, 0), x, FixedMLM({"b": 1.0}), ConstSim(0.7), k=0.0, l=0.7)
    assert len(Z) == 0
    Z = build_candidate_set(mask_insert(x, 0), x, FixedMLM({"b": 1.0}), ConstSim(0.7), k=0.0, l=0.7, disable_sim=True)
    assert Z.tokens() == {"b"}


def test_mlm_free_ablation_samples_200():
    vocab = {f"w{i}": 1 / 500 for i in range(500)}
    x = T(["w1", "w2"])
    Z = build_candidate_set(mask_replace(x, 0), x, FixedMLM(vocab), ConstSim(1.0), disable_mlm=True,
                            rng=random.Random(3))
    assert Z.n_considered == 200
    # every sampled token passes the (constant) similarity filter except the original
    assert len(Z) in (199, 200)
    small = build_candidate_set(mask_insert(x, 0), x, FixedMLM({"a": 0.5, "b": 0.5}), ConstSim(1.0),
                                disable_mlm=True, rng=random.Random(0))
    assert small.n_considered == 2


def test_candidate_set_rejects_bad_thresholds():
    x = T(["a"])
    with pytest.raises(ValueError):
        build_candidate_set(mask_insert(x, 0), x, FixedMLM({"a": 1.0}), ConstSim(1.0), k=1.5)
    with pytest.raises(ValueError):
        build_candidate_set(mask_insert(x, 0), x, FixedMLM({"a": 1.0}), ConstSim(1.0), window=0)


WORDS = "the a movie film plot good bad great dull was is very .".split()


def reference_models(seed):
    rng = random.Random(seed)
    sents = [[rng.choice(WORDS) for _ in range(rng.randint(2, 7))] for _ in range(30)]
    mlm = train_reference_mlm(sents, delta=0.05)
    g = np.random.default_rng(seed)
    sim = EmbeddingSimilarity({w: g.standard_normal(6) for w in WORDS[:-1]})
    return mlm, sim


def brute_force_Z(ctx, x, mlm, sim, k, l, window):
    """Enumerate the vocabulary and apply both predicates directly."""
    dist = mlm.predict(ctx).as_dict()
    out = set()
    for z, p in dist.items():
        if ctx.kind == "replace" and z == ctx.replaced_surfaces[0]:
            continue
        filled = T(ctx.left + (z,) + ctx.right)
        if p > k and sim.score(x, filled, window, ctx.origin_position) > l:
            out.add(z)
    return out


texts = st.lists(st.sampled_from(WORDS), min_size=2, max_size=9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 3), texts, st.data(), st.sampled_from([0.0, 0.005, 0.05]), st.sampled_from([0.0, 0.5, 0.9]),
       st.sampled_from([1, 3, 15]))
def test_candidate_set_matches_brute_force(seed, words, data, k, l, window):
    mlm, sim = reference_models(seed)
    x = T(words)
    kind = data.draw(st.sampled_from(["replace", "insert", "merge"]))
    hi = len(x) - 2 if kind == "merge" else len(x) - 1
    i = data.draw(st.integers(0, hi))
    ctx = {"replace": mask_replace, "insert": mask_insert, "merge": mask_merge}[kind](x, i)
    Z = build_candidate_set(ctx, x, mlm, sim, k, l, window)
    assert Z.tokens() == brute_force_Z(ctx, x, mlm, sim, k, l, window)
    assert len(Z.tokens()) == len(Z.members)
    for c in Z.members:
        assert c.mlm_prob > k and c.local_sim > l
    # ablation and threshold monotonicity on the same input
    assert build_candidate_set(ctx, x, mlm, sim, k, l, window, disable_sim=True).tokens() >= Z.tokens()
    assert build_candidate_set(ctx, x, mlm, sim, k + 0.01, l, window).tokens() <= Z.tokens()
    assert build_candidate_set(ctx, x, mlm, sim, k, min(1.0, l + 0.05), window).tokens() <= Z.tokens()


# --- fill selection -----------------------------------------------------------

def cset(ctx, *members):
    return CandidateSet(tuple(Candidate(t, p, 1.0) for t, p in members), ctx)


def test_select_fill_minimizes_gold_probability():
    x = T(["so", "good"])
    ctx = mask_replace(x, 1)
    Z = cset(ctx, ("great", 0.5), ("decent", 0.4))
    predict = table_victim({"so great": 0.3, "so decent": 0.9})
    assert select_fill(Z, x, "pos", predict) == (Z.members[0], 0.3)


def test_select_fill_empty_and_singleton():
    x = T(["so", "good"])
    ctx = mask_replace(x, 1)
    assert select_fill(cset(ctx), x, "pos", table_victim({})) is None
    one = cset(ctx, ("fine", 0.2))
    assert select_fill(one, x, "pos", table_victim({"so fine": 0.8}))[0].token == "fine"


def test_select_fill_tie_breaks():
    x = T(["so", "good"])
    ctx = mask_replace(x, 1)
    predict = table_victim({"so b": 0.5, "so a": 0.5, "so c": 0.5})
    assert select_fill(cset(ctx, ("b", 0.2), ("a", 0.1), ("c", 0.3)), x, "pos", predict)[0].token == "c"
    assert select_fill(cset(ctx, ("b", 0.2), ("a", 0.2)), x, "pos", predict)[0].token == "a"


@given(st.lists(st.tuples(st.sampled_from("abcdefgh"), st.floats(0, 1), st.floats(0, 1)), min_size=1,
                max_size=8, unique_by=lambda t: t[0]))
def test_select_fill_is_enumerated_minimum(members):
    x = T(["w"])
    ctx = mask_replace(x, 0)
    Z = cset(ctx, *[(t, p) for t, p, _ in members])
    predict = table_victim({t: g for t, _, g in members})
    cand, p = select_fill(Z, x, "pos", predict)
    assert all(p <= g for _, _, g in members)
    assert p == dict((t, g) for t, _, g in members)[cand.token]


# --- applying and scoring -------------------------------------------------------

def act(kind, pos, fill, p=0.5):
    return Action(kind, pos, fill, -p, p)


def test_apply_action_examples():
    assert apply_action(T("a b c".split()), act("replace", 1, "x")).surfaces == ("a", "x", "c")
    assert apply_action(T("a b".split()), act("insert", 0, "x")).surfaces == ("a", "x", "b")
    assert apply_action(T("a b c".split()), act("merge", 0, "a")).surfaces == ("a", "c")
    with pytest.raises(PerturbationError):
        apply_action(T("a b".split()), act("merge", 1, "x"))


def test_apply_action_remaps_frozen():
    x = T("a b c d".split(), frozen={0, 3})
    assert apply_action(x, act("insert", 1, "x")).frozen == {0, 4}
    assert apply_action(x, act("merge", 1, "x")).frozen == {0, 2}
    assert apply_action(x, act("replace", 1, "x")).frozen == {0, 3}


@given(st.lists(st.sampled_from("abc"), min_size=2, max_size=6), st.sampled_from(["replace", "insert", "merge"]),
       st.data())
def test_length_algebra(words, kind, data):
    x = T(words)
    i = data.draw(st.integers(0, len(x) - (2 if kind == "merge" else 1)))
    out = edit(x, kind, i, "z")
    assert len(out) - len(x) == {"replace": 0, "insert": 1, "merge": -1}[kind]


def test_score_action():
    x = T(["so", "good"])
    sure = score_action(x, "pos", "replace", 1, "great", table_victim({"so great": 1.0}))
    flip = score_action(x, "pos", "replace", 1, "bad", table_victim({"so bad": 0.0}))
    assert sure.score == -1.0 and flip.score == 0.0 and flip.resulting_gold_prob == 0.0
    a = score_action(x, "pos", "insert", 0, "not", table_victim({"so not good": 0.2}))
    b = score_action(x, "pos", "insert", 0, "very", table_victim({"so very good": 0.7}))
    assert a.score > b.score
    assert a.score == -a.resulting_gold_prob
