"""Lexicon-plus-suffix part-of-speech tagger.

Tagging order for each token: punctuation -> PUNCT; numerals -> NUM;
lexicon lookup (lowercased); suffix table (longest suffix first, only for
words of at least four letters); otherwise OTHER.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

from ..textcore import TokenizedText
from .base import POS_TAGS

_CLOSED = {
    "DT": "the a an this that these those every each some any no another either neither all both",
    "PRON": "i you he she it we they me him her us them my your his its our their mine yours "
            "hers ours theirs myself yourself himself herself itself ourselves themselves "
            "who whom whose what which someone something anyone anything everyone everything "
            "nobody nothing",
    "PREP": "in on at by for with about against between into through during before after above "
            "below to from up down of off over under near across along among around behind "
            "beyond beside besides despite inside outside onto toward towards upon within without "
            "than via per like",
    "NUM": "zero one two three four five six seven eight nine ten eleven twelve twenty thirty "
           "hundred thousand million billion first second third",
    "VERB": "is am are was were be been being have has had do does did will would shall should "
            "can could may might must get gets got make makes made go goes went gone say says said "
            "see saw seen know knew think thought take took come came give gave find found "
            "want wants like likes love loves hate hates recommend recommends feel felt seem seems "
            "look looks become became leave left keep kept let run runs ran",
    "ADV": "not very really too so also just only even still never always often sometimes "
           "quite rather almost here there now then again well soon already yet ever fast hard "
           "perhaps maybe",
    "ADJ": "good bad great new old big small high low long short best worst better worse "
           "fine nice poor real true false free full sure hot cold young late early "
           "major minor little own other same different happy sad",
    "OTHER": "and or but nor if because while although though as whether since unless until "
             "yes oh",
}

BASE_LEXICON: dict[str, str] = {w: tag for tag, words in _CLOSED.items() for w in words.split()}

SUFFIXES: tuple[tuple[str, str], ...] = tuple(sorted((
    ("ness", "NOUN"), ("ment", "NOUN"), ("tion", "NOUN"), ("sion", "NOUN"), ("ity", "NOUN"),
    ("ism", "NOUN"), ("ist", "NOUN"), ("ship", "NOUN"), ("hood", "NOUN"), ("ance", "NOUN"),
    ("ence", "NOUN"), ("er", "NOUN"), ("or", "NOUN"),
    ("ly", "ADV"), ("wise", "ADV"),
    ("ous", "ADJ"), ("ful", "ADJ"), ("less", "ADJ"), ("able", "ADJ"), ("ible", "ADJ"),
    ("ive", "ADJ"), ("al", "ADJ"), ("ic", "ADJ"), ("ish", "ADJ"), ("est", "ADJ"),
    ("ize", "VERB"), ("ise", "VERB"), ("ify", "VERB"), ("ed", "VERB"), ("ing", "VERB"),
), key=lambda kv: -len(kv[0])))


def load_lexicon(path: str | Path) -> dict[str, str]:
    """Read ``word<TAB>TAG`` lines."""
    lex = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            word, _, tag = line.rstrip("\n").partition("\t")
            if tag not in POS_TAGS:
                raise ValueError(f"{path}:{lineno}: unknown tag {tag!r}")
            lex[word.lower()] = tag
    return lex


def _is_number(s: str) -> bool:
    return any(c.isdigit() for c in s) and all(c.isdigit() or c in ".,:-/%" for c in s)


class LexiconTagger:
    def __init__(self, lexicon: Mapping[str, str] | None = None):
        self.lexicon = {**BASE_LEXICON, **{w.lower(): t for w, t in (lexicon or {}).items()}}

    def tag_word(self, surface: str, is_punct: bool = False) -> str:
        if is_punct:
            return "PUNCT"
        if _is_number(surface):
            return "NUM"
        w = surface.lower()
        tag = self.lexicon.get(w)
        if tag is not None:
            return tag
        if len(w) >= 4 and w.isalpha():
            for suffix, tag in SUFFIXES:
                if w.endswith(suffix):
                    return tag
        return "OTHER"

    def tag(self, text: TokenizedText) -> list[str]:
        return [self.tag_word(t.surface, t.is_punct) for t in text.tokens]
