"""Attack metrics, threshold sweeps, POS breakdowns and adversarial training."""
from __future__ import annotations

import csv
import io
import itertools
import json
import random
from collections import Counter
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from statistics import fmean
from typing import Iterable, Sequence

from .engine import AttackConfig, AttackResult, ModelSuite, attack_dataset
from .models.base import GrammarChecker, PerplexityScorer, PosTagger, SimilarityScorer
from .models.bayes import NaiveBayesVictim
from .textcore import Dataset, LabeledExample, detokenize

SWEEP_HEADER = ("k", "l", "a_rate", "sim", "ppl")


def modification_count(result: AttackResult) -> int:
    """Replace/insert count 1; a merge counts 1 if it keeps one of the merged tokens, else 2."""
    total = 0
    for a in result.applied:
        act = a.action
        if act.kind != "merge":
            total += 1
            continue
        o = act.position
        merged = result.original.surfaces[o:o + 2]
        total += 1 if act.fill in merged else 2
    return total


def modification_rate(result: AttackResult) -> float:
    if not len(result.original):
        raise ValueError("modification rate of an empty original text")
    return modification_count(result) / len(result.original)


@dataclass
class MetricsReport:
    n_total: int
    n_skipped: int
    n_success: int
    n_error: int = 0
    a_rate: float | None = None
    mod_rate: float | None = None
    ppl: float | None = None
    gerr: float | None = None
    sim: float | None = None
    mod_count: float | None = None

    def to_json(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        cols = [("A-rate", self.a_rate, 100, ".1f"), ("Mod", self.mod_rate, 100, ".1f"),
                ("PPL", self.ppl, 1, ".1f"), ("GErr", self.gerr, 1, ".2f"), ("Sim", self.sim, 1, ".2f")]
        head = " ".join(f"{name:>8}" for name, *_ in cols)
        vals = " ".join(f"{'-':>8}" if v is None else f"{v * scale:>8{fmt}}" for _, v, scale, fmt in cols)
        return f"{head}\n{vals}"


def aggregate(results: Sequence[AttackResult], perplexity: PerplexityScorer | None = None,
              grammar: GrammarChecker | None = None, similarity: SimilarityScorer | None = None) -> MetricsReport:
    """A-rate over attacked (non-skipped, non-errored) examples; the rest over successes only.

    Metrics whose scorer is not supplied stay None.
    """
    n_skipped = sum(r.skipped for r in results)
    n_error = sum(r.error is not None for r in results)
    wins = [r for r in results if r.success]
    report = MetricsReport(len(results), n_skipped, len(wins), n_error)
    attacked = len(results) - n_skipped - n_error
    if attacked > 0:
        report.a_rate = len(wins) / attacked
    if not wins:
        return report
    report.mod_rate = fmean(modification_rate(r) for r in wins)
    report.mod_count = fmean(modification_count(r) for r in wins)
    if perplexity is not None:
        report.ppl = fmean(perplexity.perplexity(r.adversarial) for r in wins)
    if grammar is not None:
        report.gerr = fmean(grammar.count(r.adversarial) - grammar.count(r.original) for r in wins)
    if similarity is not None:
        report.sim = fmean(similarity.score(r.original, r.adversarial) for r in wins)
    return report


def evaluate(results: Sequence[AttackResult], models: ModelSuite) -> MetricsReport:
    return aggregate(results, models.perplexity, models.grammar, models.similarity)


@dataclass(frozen=True)
class SweepPoint:
    k: float
    l: float
    a_rate: float | None
    sim: float | None
    ppl: float | None


def parse_grid(spec: str) -> list[tuple[float, float]]:
    """``"k=0.001,0.005;l=0.5,0.7"`` -> the (k, l) product in k-major order."""
    axes: dict[str, list[float]] = {}
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        name, _, values = part.partition("=")
        name = name.strip()
        if name not in ("k", "l") or not values.strip():
            raise ValueError(f"bad grid axis {part!r}")
        axes[name] = [float(v) for v in values.split(",") if v.strip()]
    if set(axes) != {"k", "l"} or not axes["k"] or not axes["l"]:
        raise ValueError("grid must give non-empty value lists for both k and l")
    return list(itertools.product(axes["k"], axes["l"]))


def sweep(dataset: Dataset, models: ModelSuite, base: AttackConfig, grid: Sequence[tuple[float, float]],
          workers: int = 1) -> list[SweepPoint]:
    if not grid:
        raise ValueError("empty sweep grid")
    points = []
    for k, l in grid:
        results = attack_dataset(dataset, models, replace(base, k=k, l=l), workers)
        rep = aggregate(results, models.perplexity, None, models.similarity)
        points.append(SweepPoint(k, l, rep.a_rate, rep.sim, rep.ppl))
    return points


def _cell(v: float | None) -> str:
    return "" if v is None else repr(float(v))


def sweep_csv(points: Iterable[SweepPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for p in points:
        w.writerow([_cell(p.k), _cell(p.l), _cell(p.a_rate), _cell(p.sim), _cell(p.ppl)])
    return buf.getvalue()


def write_sweep_csv(points: Iterable[SweepPoint], path: str | Path) -> None:
    Path(path).write_text(sweep_csv(points), encoding="utf-8")


def read_sweep_csv(path: str | Path) -> list[SweepPoint]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != SWEEP_HEADER:
        raise ValueError(f"{path}: header must be {','.join(SWEEP_HEADER)}")
    num = lambda s: None if s == "" else float(s)
    return [SweepPoint(*(num(c) for c in row)) for row in rows[1:]]


def pos_breakdown(results: Iterable[AttackResult], tagger: PosTagger) -> dict[str, dict[str, float]]:
    """Percentages of applied actions in successful attacks, keyed by POS pattern.

    replace: tag of the replaced token; insert: ``(left,right)`` tags around
    the slot (``END`` after the last token); merge: ``a-b`` tag bigram.
    Tags come from the original text.
    """
    tallies = {k: Counter() for k in ("replace", "insert", "merge")}
    for r in results:
        if not r.success:
            continue
        tags = tagger.tag(r.original)
        for a in r.applied:
            o = a.action.position
            if a.action.kind == "replace":
                key = tags[o]
            elif a.action.kind == "insert":
                key = f"({tags[o]},{tags[o + 1] if o + 1 < len(tags) else 'END'})"
            else:
                key = f"{tags[o]}-{tags[o + 1]}"
            tallies[a.action.kind][key] += 1
    out = {}
    for kind, tally in tallies.items():
        total = sum(tally.values())
        if total:
            out[kind] = {key: 100.0 * c / total for key, c in sorted(tally.items(), key=lambda kv: (-kv[1], kv[0]))}
    return out


def format_pos_breakdown(tables: dict[str, dict[str, float]], top: int = 3) -> str:
    lines = []
    for kind in ("replace", "insert", "merge"):
        rows = list(tables.get(kind, {}).items())[:top]
        lines.append(f"{kind.capitalize():<8} " + ("  ".join(f"{k}: {v:.0f}%" for k, v in rows) or "-"))
    return "\n".join(lines)


def adversarial_examples(train: Dataset, results: Sequence[AttackResult]) -> list[LabeledExample]:
    """Successful adversarial texts, each with its original gold label."""
    if len(results) != len(train):
        raise ValueError("results must align one-to-one with the training examples")
    out = []
    for ex, r in zip(train.examples, results):
        if not r.success:
            continue
        if ex.text_b is None:
            out.append(LabeledExample(r.adversarial.with_frozen(()), ex.gold_label))
        elif r.target == "a":
            out.append(LabeledExample(r.adversarial.with_frozen(()), ex.gold_label, ex.text_b))
        else:
            out.append(LabeledExample(ex.text_a, ex.gold_label, r.adversarial.with_frozen(())))
    return out


def write_augmented(dataset: Dataset, n_clean: int, path: str | Path) -> None:
    """jsonl with an ``adversarial`` flag set on every example after the first ``n_clean``."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for i, ex in enumerate(dataset.examples):
            rec = {"text": detokenize(ex.text_a)}
            if ex.text_b is not None:
                rec["text_b"] = detokenize(ex.text_b)
            rec["label"] = ex.gold_label
            rec["adversarial"] = i >= n_clean
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def export_augmented(train: Dataset, results: Sequence[AttackResult], path: str | Path | None = None,
                     source: Dataset | None = None) -> Dataset:
    """Training set plus successful adversarial examples; writes jsonl when ``path`` is given.

    ``results`` align with ``source`` (default: ``train``), which may be a subset that was attacked.
    """
    adv = adversarial_examples(source if source is not None else train, results)
    augmented = Dataset(train.examples + tuple(adv), train.label_set, train.task_kind)
    if path is not None:
        write_augmented(augmented, len(train), path)
    return augmented


@dataclass
class RobustnessRow:
    accuracy: float
    a_rate: float | None
    mod_rate: float | None
    mod_count: float | None


def adversarial_training_experiment(train: Dataset, test: Dataset, models: ModelSuite, config: AttackConfig,
                                    alpha: float = 1.0, attack_train: int | None = None,
                                    workers: int = 1) -> dict:
    """Clean-train, attack test, augment with attacks on train, retrain, re-attack.

    ``attack_train`` limits how many training examples (a seeded sample) are
    attacked to produce augmentation data. Returns the before row, the after
    row, and ``delta`` (after - before) for every column.
    """
    before_victim = NaiveBayesVictim(alpha).fit(train)
    suite = replace(models, victim=before_victim)

    def row(s: ModelSuite) -> RobustnessRow:
        rep = aggregate(attack_dataset(test, s, config, workers))
        return RobustnessRow(s.victim.accuracy(test), rep.a_rate, rep.mod_rate, rep.mod_count)

    before = row(suite)
    idx = list(range(len(train)))
    if attack_train is not None and attack_train < len(train):
        idx = sorted(random.Random(config.seed).sample(idx, attack_train))
    source = train.subset(idx)
    adv = adversarial_examples(source, attack_dataset(source, suite, config, workers))
    augmented = Dataset(train.examples + tuple(adv), train.label_set, train.task_kind)
    after_victim = NaiveBayesVictim(alpha).fit(augmented)
    after = row(replace(models, victim=after_victim))

    def diff(a, b):
        return None if a is None or b is None else a - b

    delta = {k: diff(getattr(after, k), getattr(before, k)) for k in asdict(before)}
    return {"before": asdict(before), "after": asdict(after), "delta": delta, "n_adversarial": len(adv)}
