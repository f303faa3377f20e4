"""Deterministic rule-based grammar error counter.

Rules, each occurrence counting one error:

* duplicate adjacent word (case-insensitive; punctuation tokens exempt)
* ``a`` before a vowel-initial word
* ``an`` before a consonant-initial word
* sentence-final punctuation (``.``, ``!``, ``?``) with no word token
  before it since the start of the text or the previous sentence end,
  i.e. a terminator that ends nothing

Vowel-initial means the first letter is one of ``aeiou``, with small
exception lists for silent-h words (``an hour``) and ``yoo``/``wuh``
sounds (``a user``, ``a one``). Non-alphabetic followers are ignored.
"""
from __future__ import annotations

from ..textcore import TokenizedText

SENTENCE_FINAL = {".", "!", "?"}
AN_EXCEPTIONS = ("hour", "honest", "honor", "honour", "heir")
A_EXCEPTIONS = ("uni", "use", "usu", "uti", "eu", "one", "once", "ubiq")


def _wants_an(word: str) -> bool | None:
    w = word.lower()
    if not w[:1].isalpha():
        return None
    if w.startswith(AN_EXCEPTIONS):
        return True
    if w.startswith(A_EXCEPTIONS):
        return False
    return w[0] in "aeiou"


class RuleGrammarChecker:
    def errors(self, text: TokenizedText) -> list[tuple[int, str]]:
        """(position, rule) for every error, in text order."""
        out = []
        toks = text.tokens
        sentence_has_word = False
        for i, tok in enumerate(toks):
            s = tok.surface
            if tok.is_punct:
                if s in SENTENCE_FINAL:
                    if not sentence_has_word:
                        out.append((i, "empty-sentence-final"))
                    sentence_has_word = False
                continue
            sentence_has_word = True
            if i > 0 and not toks[i - 1].is_punct and toks[i - 1].surface.lower() == s.lower():
                out.append((i, "duplicate"))
            if i + 1 < len(toks) and s.lower() in ("a", "an") and not toks[i + 1].is_punct:
                wants = _wants_an(toks[i + 1].surface)
                if wants is not None and wants != (s.lower() == "an"):
                    out.append((i, "a-an"))
        return out

    def count(self, text: TokenizedText) -> int:
        return len(self.errors(text))
