"""JSON-over-HTTP clients for externally served models.

Every role POSTs a small JSON body to ``{base_url}/{role}`` and parses one
field from the reply:

    /mlm        {left, right, kind}      -> {probs: {token: p}}
    /victim     {tokens, pair?}          -> {probs: {label: p}}
    /similarity {a, b, window?}          -> {score}
    /perplexity {tokens}                 -> {ppl}
    /grammar    {tokens}                 -> {count}
    /pos        {tokens}                 -> {tags}

Transport failures and 5xx replies are retried with exponential backoff;
4xx replies and malformed bodies are not.
"""
from __future__ import annotations

import logging
import math
import time
from typing import Any, Sequence

import httpx

from ..textcore import TokenizedText
from .base import (NORM_TOL, POS_TAGS, LabelDistribution, MaskedContext, ModelEndpoint,
                   VocabDistribution, crop_window)

log = logging.getLogger(__name__)

ROLES = ("mlm", "victim", "similarity", "perplexity", "grammar", "pos")


class RemoteError(RuntimeError):
    pass


class RemoteProtocolError(RemoteError):
    def __init__(self, field: str, detail: str):
        super().__init__(f"malformed response field {field!r}: {detail}")
        self.field = field


class _Client:
    def __init__(self, endpoint: ModelEndpoint, role: str):
        self.endpoint = endpoint
        self.role = role
        self.url = endpoint.base_url.rstrip("/") + "/" + role
        self._http = httpx.Client(timeout=endpoint.timeout,
                                  limits=httpx.Limits(max_connections=32, max_keepalive_connections=32))

    def close(self) -> None:
        self._http.close()

    def call(self, payload: dict) -> dict:
        attempts = self.endpoint.retries + 1
        last: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                time.sleep(self.endpoint.backoff * 2 ** (attempt - 1))
            try:
                resp = self._http.post(self.url, json=payload)
            except httpx.TransportError as e:
                last = e
                continue
            if resp.status_code >= 500:
                last = RemoteError(f"{self.url}: HTTP {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise RemoteError(f"{self.url}: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                body = resp.json()
            except ValueError:
                raise RemoteProtocolError("<body>", "not valid JSON") from None
            if not isinstance(body, dict):
                raise RemoteProtocolError("<body>", "not a JSON object")
            return body
        raise RemoteError(f"{self.url}: failed after {attempts} attempt(s): {last}")


def _field(body: dict, name: str) -> Any:
    if name not in body:
        raise RemoteProtocolError(name, "missing")
    return body[name]


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise RemoteProtocolError(name, f"expected a finite number, got {value!r}")
    return float(value)


def parse_probs(body: dict, url: str = "") -> dict[str, float]:
    """Validate a ``probs`` map; renormalize (with a warning) if it does not sum to 1."""
    raw = _field(body, "probs")
    if not isinstance(raw, dict) or not raw:
        raise RemoteProtocolError("probs", "expected a non-empty object")
    probs = {str(k): _number(v, "probs") for k, v in raw.items()}
    if any(p < 0 for p in probs.values()):
        raise RemoteProtocolError("probs", "negative probability")
    total = sum(probs.values())
    if total <= 0:
        raise RemoteProtocolError("probs", "probabilities sum to 0")
    if abs(total - 1.0) > NORM_TOL:
        log.warning("%s: probabilities sum to %.6g; renormalizing", url, total)
        probs = {k: p / total for k, p in probs.items()}
    return probs


class RemoteMLM(_Client):
    def __init__(self, endpoint: ModelEndpoint):
        super().__init__(endpoint, "mlm")

    def predict(self, ctx: MaskedContext) -> VocabDistribution:
        body = self.call({"left": list(ctx.left), "right": list(ctx.right), "kind": ctx.kind})
        return VocabDistribution.from_mapping(parse_probs(body, self.url))


class RemoteVictim(_Client):
    def __init__(self, endpoint: ModelEndpoint, labels: Sequence[str] | None = None):
        super().__init__(endpoint, "victim")
        self.labels = tuple(labels) if labels is not None else ()

    def predict(self, text: TokenizedText, pair: TokenizedText | None = None) -> LabelDistribution:
        payload: dict = {"tokens": list(text.surfaces)}
        if pair is not None:
            payload["pair"] = list(pair.surfaces)
        probs = parse_probs(self.call(payload), self.url)
        if self.labels:
            missing = [lab for lab in self.labels if lab not in probs]
            if missing:
                raise RemoteProtocolError("probs", f"missing label(s) {missing}")
            return LabelDistribution.from_mapping(probs, self.labels)
        return LabelDistribution.from_mapping(probs)


class RemoteSimilarity(_Client):
    """Windowed queries are cropped client-side and sent without ``window``."""

    def __init__(self, endpoint: ModelEndpoint):
        super().__init__(endpoint, "similarity")

    def score(self, a: TokenizedText, b: TokenizedText,
              window: int | None = None, center: int | None = None) -> float:
        ta, tb = list(a.surfaces), list(b.surfaces)
        if window is not None:
            c = center or 0
            ta, tb = ta[crop_window(len(ta), window, c)], tb[crop_window(len(tb), window, c)]
        score = _number(_field(self.call({"a": ta, "b": tb}), "score"), "score")
        if not -1.0 - NORM_TOL <= score <= 1.0 + NORM_TOL:
            raise RemoteProtocolError("score", f"{score} outside [-1, 1]")
        return score


class RemotePerplexity(_Client):
    def __init__(self, endpoint: ModelEndpoint):
        super().__init__(endpoint, "perplexity")

    def perplexity(self, text: TokenizedText) -> float:
        if not len(text):
            raise ValueError("perplexity of empty text")
        ppl = _number(_field(self.call({"tokens": list(text.surfaces)}), "ppl"), "ppl")
        if ppl <= 0:
            raise RemoteProtocolError("ppl", f"expected a positive number, got {ppl}")
        return ppl


class RemoteGrammar(_Client):
    def __init__(self, endpoint: ModelEndpoint):
        super().__init__(endpoint, "grammar")

    def count(self, text: TokenizedText) -> int:
        value = _field(self.call({"tokens": list(text.surfaces)}), "count")
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise RemoteProtocolError("count", f"expected a non-negative integer, got {value!r}")
        return value


class RemotePosTagger(_Client):
    def __init__(self, endpoint: ModelEndpoint):
        super().__init__(endpoint, "pos")

    def tag(self, text: TokenizedText) -> list[str]:
        tags = _field(self.call({"tokens": list(text.surfaces)}), "tags")
        if not isinstance(tags, list) or len(tags) != len(text):
            raise RemoteProtocolError("tags", f"expected a list of {len(text)} tags")
        bad = [t for t in tags if t not in POS_TAGS]
        if bad:
            raise RemoteProtocolError("tags", f"unknown tag(s) {bad}")
        return tags


_CLASSES = {"mlm": RemoteMLM, "victim": RemoteVictim, "similarity": RemoteSimilarity,
            "perplexity": RemotePerplexity, "grammar": RemoteGrammar, "pos": RemotePosTagger}


def remote_client(endpoint: ModelEndpoint, role: str, **kw):
    if role not in _CLASSES:
        raise ValueError(f"unknown role {role!r}; expected one of {ROLES}")
    return _CLASSES[role](endpoint, **kw)
