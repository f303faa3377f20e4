"""Word-level text handling: tokens, labeled datasets, pair targets, eval subsets."""
from __future__ import annotations

import csv
import json
import random
import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence


class DatasetError(ValueError):
    pass


def _is_punct_char(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "PS"


@dataclass(frozen=True)
class Token:
    surface: str
    is_punct: bool = False

    def __post_init__(self):
        if not self.surface or any(c.isspace() for c in self.surface):
            raise ValueError(f"bad token surface {self.surface!r}")


@lru_cache(maxsize=65536)
def make_token(surface: str) -> Token:
    """Token with ``is_punct`` derived from its characters."""
    return Token(surface, all(_is_punct_char(c) for c in surface))


@dataclass(frozen=True)
class TokenizedText:
    tokens: tuple[Token, ...] = ()
    frozen: frozenset[int] = frozenset()

    def __post_init__(self):
        n = len(self.tokens)
        if any(p < 0 or p >= n for p in self.frozen):
            raise ValueError(f"frozen positions {sorted(self.frozen)} out of range for {n} tokens")

    @classmethod
    def from_surfaces(cls, surfaces: Iterable[str], frozen: Iterable[int] = ()) -> "TokenizedText":
        return cls(tuple(make_token(s) for s in surfaces), frozenset(frozen))

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    def with_frozen(self, frozen: Iterable[int]) -> "TokenizedText":
        return TokenizedText(self.tokens, frozenset(frozen))

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, i: int) -> Token:
        return self.tokens[i]


def _split_chunk(chunk: str) -> list[str]:
    start, end = 0, len(chunk)
    while start < end and _is_punct_char(chunk[start]):
        start += 1
    while end > start and _is_punct_char(chunk[end - 1]):
        end -= 1
    return list(chunk[:start]) + ([chunk[start:end]] if start < end else []) + list(chunk[end:])


def tokenize(raw: str) -> TokenizedText:
    """Split on whitespace and detach leading/trailing punctuation characters.

    Each detached punctuation character becomes its own token; punctuation
    inside a word (``don't``, ``3.5``) stays attached.
    """
    surfaces = [piece for chunk in raw.split() for piece in _split_chunk(chunk)]
    return TokenizedText.from_surfaces(surfaces)


def detokenize(text: TokenizedText) -> str:
    out: list[str] = []
    for tok in text.tokens:
        if out and not tok.is_punct:
            out.append(" ")
        out.append(tok.surface)
    return "".join(out)


@dataclass(frozen=True)
class LabeledExample:
    text_a: TokenizedText
    gold_label: str
    text_b: TokenizedText | None = None

    @property
    def is_pair(self) -> bool:
        return self.text_b is not None


@dataclass(frozen=True)
class Dataset:
    examples: tuple[LabeledExample, ...]
    label_set: tuple[str, ...]
    task_kind: str = "single-text"
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.label_set)) != len(self.label_set):
            raise DatasetError(f"duplicate labels in {self.label_set}")
        if self.task_kind not in ("single-text", "text-pair"):
            raise DatasetError(f"unknown task kind {self.task_kind!r}")
        labels = set(self.label_set)
        for ex in self.examples:
            if ex.gold_label not in labels:
                raise DatasetError(f"label {ex.gold_label!r} not in label set {self.label_set}")

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.examples[i] for i in indices), self.label_set, self.task_kind, self.meta)


DEFAULT_SCHEMA = {"text": "text", "text_b": "text_b", "label": "label"}


def _read_records(path: Path, fmt: str):
    if fmt == "jsonl":
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as e:
                    raise DatasetError(f"{path}:{lineno}: invalid JSON ({e.msg})") from None
                if not isinstance(rec, dict):
                    raise DatasetError(f"{path}:{lineno}: record is not an object")
                yield lineno, rec
    elif fmt == "tsv":
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
            header = next(reader, None)
            if header is None:
                raise DatasetError(f"{path}: missing header row")
            for lineno, row in enumerate(reader, 2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise DatasetError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
                yield lineno, dict(zip(header, row))
    else:
        raise DatasetError(f"unknown dataset format {fmt!r}")


def load_dataset(
    path: str | Path,
    fmt: str | None = None,
    schema: Mapping[str, str] | None = None,
    label_set: Sequence[str] | None = None,
) -> Dataset:
    """Read a jsonl or tsv dataset.

    ``schema`` maps the logical fields ``text``, ``text_b`` and ``label`` to
    record keys. A dataset is text-pair when the ``text_b`` key is present in
    the first record. Line numbers in errors are 1-based physical lines.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    fmt = fmt or ("tsv" if path.suffix == ".tsv" else "jsonl")
    fields = {**DEFAULT_SCHEMA, **(schema or {})}
    fixed = tuple(label_set) if label_set is not None else None
    seen: dict[str, None] = {}
    examples = []
    pair = None
    for lineno, rec in _read_records(path, fmt):
        if pair is None:
            pair = fields["text_b"] in rec
        missing = [fields[k] for k in (("text", "text_b", "label") if pair else ("text", "label"))
                   if fields[k] not in rec]
        if missing:
            raise DatasetError(f"{path}:{lineno}: record missing field(s) {', '.join(missing)}")
        label = str(rec[fields["label"]])
        if fixed is not None and label not in fixed:
            raise DatasetError(f"{path}:{lineno}: unknown label {label!r}")
        seen.setdefault(label)
        text_b = tokenize(str(rec[fields["text_b"]])) if pair else None
        examples.append(LabeledExample(tokenize(str(rec[fields["text"]])), label, text_b))
    return Dataset(tuple(examples), fixed or tuple(seen), "text-pair" if pair else "single-text")


def write_dataset(dataset: Dataset, path: str | Path, extra: Sequence[Mapping] | None = None) -> None:
    """Write ``dataset`` as jsonl using the default field names.

    ``extra`` optionally supplies per-example additional fields.
    """
    with Path(path).open("w", encoding="utf-8") as fh:
        for i, ex in enumerate(dataset.examples):
            rec = {"text": detokenize(ex.text_a)}
            if ex.text_b is not None:
                rec["text_b"] = detokenize(ex.text_b)
            rec["label"] = ex.gold_label
            if extra is not None:
                rec.update(extra[i])
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def select_attack_target(example: LabeledExample) -> tuple[str, frozenset[int]]:
    """Pick the longer text of a pair (ties go to ``a``) and freeze shared tokens.

    Returns ``("a" | "b", frozen_positions)``; matching is on lowercased surfaces.
    """
    if example.text_b is None:
        raise ValueError("select_attack_target needs a text-pair example")
    a, b = example.text_a, example.text_b
    target, other = (a, b) if len(a) >= len(b) else (b, a)
    other_surfaces = {t.surface.lower() for t in other.tokens}
    frozen = frozenset(i for i, t in enumerate(target.tokens) if t.surface.lower() in other_surfaces)
    return ("a" if target is a else "b"), frozen


def attacked_text(example: LabeledExample) -> TokenizedText:
    if example.text_b is None:
        return example.text_a
    slot, _ = select_attack_target(example)
    return example.text_a if slot == "a" else example.text_b


def sample_eval_subset(dataset: Dataset, n: int = 1000, max_len: int = 100, seed: int = 0) -> Dataset:
    """Length-filter then sample ``min(n, remaining)`` examples without replacement.

    Selected examples keep their original relative order.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    eligible = [i for i, ex in enumerate(dataset.examples) if len(attacked_text(ex)) <= max_len]
    chosen = random.Random(seed).sample(eligible, min(n, len(eligible)))
    return dataset.subset(sorted(chosen))
