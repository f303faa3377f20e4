import logging
import time

import pytest

from infill_attack.models import MaskedContext, ModelEndpoint, NgramPerplexity, RuleGrammarChecker
from infill_attack.models.remote import (RemoteError, RemoteProtocolError, RemoteVictim, parse_probs,
                                         remote_client)
from infill_attack.textcore import TokenizedText

from mockserver import Server
from oracles import toy_suite

T = TokenizedText.from_surfaces


@pytest.fixture
def server():
    s = Server().start()
    yield s
    s.stop()


@pytest.fixture(scope="module")
def local():
    models, data = toy_suite(0)
    models.perplexity = NgramPerplexity.from_model(models.mlm)
    models.grammar = RuleGrammarChecker()
    return models, data


def serve_local(server, models):
    """Expose in-process models over the wire with the same JSON shapes the clients expect."""
    h = server.handlers
    h["mlm"] = lambda p: (200, {"probs": models.mlm.predict(MaskedContext(
        tuple(p["left"]), tuple(p["right"]), p["kind"], len(p["left"]),
        {"replace": ("x",), "insert": (), "merge": ("x", "y")}[p["kind"]])).as_dict()})
    h["victim"] = lambda p: (200, {"probs": models.victim.predict(
        T(p["tokens"]), T(p["pair"]) if "pair" in p else None).as_dict()})
    h["similarity"] = lambda p: (200, {"score": models.similarity.score(T(p["a"]), T(p["b"]))})
    h["perplexity"] = lambda p: (200, {"ppl": models.perplexity.perplexity(T(p["tokens"]))})
    h["grammar"] = lambda p: (200, {"count": models.grammar.count(T(p["tokens"]))})
    h["pos"] = lambda p: (200, {"tags": list(models.tagger.tag(T(p["tokens"])))})


def test_round_trip_matches_local_models_exactly(server, local):
    models, data = local
    serve_local(server, models)
    ep = server.endpoint()
    x = data.examples[0].text_a
    ctx = MaskedContext(x.surfaces[:1], x.surfaces[2:], "replace", 1, x.surfaces[1:2])
    assert remote_client(ep, "mlm").predict(ctx).as_dict() == models.mlm.predict(ctx).as_dict()
    assert remote_client(ep, "victim", labels=models.victim.labels).predict(x).as_dict() == \
        models.victim.predict(x).as_dict()
    y = data.examples[1].text_a
    assert remote_client(ep, "similarity").score(x, y) == models.similarity.score(x, y)
    assert remote_client(ep, "similarity").score(x, y, 3, 1) == models.similarity.score(x, y, 3, 1)
    assert remote_client(ep, "perplexity").perplexity(x) == models.perplexity.perplexity(x)
    assert remote_client(ep, "grammar").count(x) == models.grammar.count(x)
    assert remote_client(ep, "pos").tag(x) == list(models.tagger.tag(x))


def test_victim_pair_payload(server):
    seen = {}

    def victim(p):
        seen.update(p)
        return 200, {"probs": {"yes": 0.25, "no": 0.75}}
    server.handlers["victim"] = victim
    dist = RemoteVictim(server.endpoint(), labels=("no", "yes")).predict(T(["a"]), T(["b", "c"]))
    assert seen == {"tokens": ["a"], "pair": ["b", "c"]}
    assert dist.labels == ("no", "yes") and dist.argmax() == "no"


def test_unnormalized_probs_warn_and_renormalize(server, caplog):
    server.handlers["victim"] = lambda p: (200, {"probs": {"pos": 0.3, "neg": 0.2}})
    with caplog.at_level(logging.WARNING):
        dist = RemoteVictim(server.endpoint()).predict(T(["a"]))
    assert dist.as_dict() == pytest.approx({"pos": 0.6, "neg": 0.4})
    assert "renormaliz" in caplog.text


def test_probs_within_tolerance_are_kept_exact(caplog):
    with caplog.at_level(logging.WARNING):
        assert parse_probs({"probs": {"a": 0.1, "b": 0.2, "c": 0.7}}) == {"a": 0.1, "b": 0.2, "c": 0.7}
    assert not caplog.text


def test_timeout_raises_after_retries(server):
    def slow(p):
        time.sleep(0.5)
        return 200, {"count": 0}
    server.handlers["grammar"] = slow
    client = remote_client(server.endpoint(timeout=0.1, retries=2), "grammar")
    with pytest.raises(RemoteError, match="3 attempt"):
        client.count(T(["a"]))
    time.sleep(0.6)
    assert server.hits.count("grammar") == 3


def test_server_error_is_retried_then_succeeds(server):
    calls = []

    def flaky(p):
        calls.append(1)
        return (503, {"error": "busy"}) if len(calls) < 2 else (200, {"ppl": 4.0})
    server.handlers["perplexity"] = flaky
    assert remote_client(server.endpoint(retries=2), "perplexity").perplexity(T(["a"])) == 4.0
    assert len(calls) == 2


def test_client_error_is_not_retried(server):
    server.handlers["pos"] = lambda p: (400, {"error": "bad"})
    with pytest.raises(RemoteError, match="400"):
        remote_client(server.endpoint(retries=3), "pos").tag(T(["a"]))
    assert server.hits == ["pos"]


@pytest.mark.parametrize("role, body, field", [
    ("victim", {"prob": {"a": 1.0}}, "probs"),
    ("victim", {"probs": {"a": "high"}}, "probs"),
    ("similarity", {"score": "x"}, "score"),
    ("similarity", {"score": 3.0}, "score"),
    ("perplexity", {"ppl": -1}, "ppl"),
    ("grammar", {"count": 1.5}, "count"),
    ("pos", {"tags": ["NOUN", "NOUN"]}, "tags"),
    ("pos", {"tags": ["BOGUS"]}, "tags"),
])
def test_malformed_field_is_named(server, role, body, field):
    server.handlers[role] = lambda p: (200, body)
    client = remote_client(server.endpoint(), role)
    call = {"victim": lambda: client.predict(T(["a"])), "similarity": lambda: client.score(T(["a"]), T(["b"])),
            "perplexity": lambda: client.perplexity(T(["a"])), "grammar": lambda: client.count(T(["a"])),
            "pos": lambda: client.tag(T(["a"]))}[role]
    with pytest.raises(RemoteProtocolError) as err:
        call()
    assert err.value.field == field and repr(field) in str(err.value)


def test_non_json_body(server):
    server.handlers["grammar"] = lambda p: (200, b"<html>")
    with pytest.raises(RemoteProtocolError, match="JSON"):
        remote_client(server.endpoint(), "grammar").count(T(["a"]))


def test_unknown_role():
    with pytest.raises(ValueError, match="unknown role"):
        remote_client(ModelEndpoint("http://127.0.0.1:1"), "oracle")
