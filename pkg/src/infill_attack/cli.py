"""Command-line entry points.

All commands read one flat TOML config (``--config``); command-line flags
override file values, which override built-in defaults. ``--seed``,
``--workers`` and ``--out`` are accepted by every command.

Config keys
-----------
data:     train, test, format, text_field, text_b_field, label_field, n_eval, max_len
models:   victim, mlm, vectors, lexicon (local files);
          victim_url, mlm_url, similarity_url, perplexity_url, grammar_url, pos_url,
          timeout, retries (remote roles; a *_url wins over the local file)
training: alpha, delta, attack_train
attack:   k, l, max_steps, window, enabled_actions, disable_sim_filter,
          disable_mlm_filter, sample_size, np_gate, attack_punct, seed
outputs:  out_dir, grid
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

from .engine import AttackConfig, ModelSuite, attack_dataset, read_trace, write_trace
from .evaluate import (MetricsReport, adversarial_training_experiment, evaluate, export_augmented,
                       format_pos_breakdown, parse_grid, pos_breakdown, read_sweep_csv, sweep,
                       write_sweep_csv)
from .models import (EmbeddingSimilarity, InfillTrigramModel, LexiconTagger, ModelEndpoint, NaiveBayesVictim,
                     NgramPerplexity, RuleGrammarChecker, load_lexicon, load_vectors, remote_client,
                     train_reference_mlm)
from .models.ngram import _sentences
from .textcore import Dataset, load_dataset, sample_eval_subset

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("infill_attack")

ATTACK_KEYS = tuple(f.name for f in fields(AttackConfig))
PATH_KEYS = ("train", "test", "victim", "mlm", "vectors", "lexicon", "out_dir")


class UsageError(Exception):
    """Bad configuration or inputs; reported with exit code 2."""


@dataclass
class RunConfig:
    train: str | None = None
    test: str | None = None
    format: str | None = None
    text_field: str = "text"
    text_b_field: str = "text_b"
    label_field: str = "label"
    n_eval: int | None = None
    max_len: int = 100

    victim: str | None = None
    mlm: str | None = None
    vectors: str | None = None
    lexicon: str | None = None
    victim_url: str | None = None
    mlm_url: str | None = None
    similarity_url: str | None = None
    perplexity_url: str | None = None
    grammar_url: str | None = None
    pos_url: str | None = None
    timeout: float = 10.0
    retries: int = 2

    alpha: float = 1.0
    delta: float = 0.1
    attack_train: int | None = None

    k: float = AttackConfig.k
    l: float = AttackConfig.l
    max_steps: int | None = None
    window: int = AttackConfig.window
    enabled_actions: list[str] = field(default_factory=lambda: list(AttackConfig().enabled_actions))
    disable_sim_filter: bool = False
    disable_mlm_filter: bool = False
    sample_size: int = AttackConfig.sample_size
    np_gate: bool = True
    attack_punct: bool = True
    seed: int = 0

    out_dir: str = "runs"
    grid: str | None = None

    @classmethod
    def from_mapping(cls, raw: dict[str, Any], source: str = "<config>") -> "RunConfig":
        types = {f.name: f.type for f in fields(cls)}
        problems = [f"{k} (unknown key)" for k in sorted(set(raw) - set(types))]
        problems += [f"{k} (expected {types[k]}, got {v!r})" for k, v in sorted(raw.items())
                     if k in types and not _type_ok(v, types[k])]
        if problems:
            raise UsageError(f"{source}: invalid config key(s): {'; '.join(problems)}")
        return cls(**raw)

    def attack_config(self) -> AttackConfig:
        try:
            return AttackConfig(**{k: getattr(self, k) for k in ATTACK_KEYS})
        except (TypeError, ValueError) as e:
            raise UsageError(f"invalid attack settings: {e}") from None

    def schema(self) -> dict[str, str]:
        return {"text": self.text_field, "text_b": self.text_b_field, "label": self.label_field}

    def require(self, *keys: str) -> None:
        missing = [k for k in keys if getattr(self, k) is None]
        if missing:
            raise UsageError(f"missing required config key(s): {', '.join(missing)}")


def _type_ok(value: Any, annotation: str) -> bool:
    if value is None:
        return annotation.endswith("| None")
    base = annotation.removesuffix(" | None")
    if base == "bool":
        return isinstance(value, bool)
    if base == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if base == "float":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if base == "list[str]":
        return isinstance(value, list) and all(isinstance(v, str) for v in value)
    return isinstance(value, str)


def load_run_config(path: str | Path | None, overrides: dict[str, Any]) -> RunConfig:
    raw: dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"config file not found: {p}")
        try:
            raw = tomllib.loads(p.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as e:
            raise UsageError(f"{p}: {e}") from None
        nested = sorted(k for k, v in raw.items() if isinstance(v, dict))
        if nested:
            raise UsageError(f"{p}: config must be flat; tables not allowed: {', '.join(nested)}")
        # relative paths in a config file are relative to that file
        for key in PATH_KEYS:
            if isinstance(raw.get(key), str):
                raw[key] = str(p.parent / raw[key])
    cfg = RunConfig.from_mapping(raw, str(path or "<defaults>"))
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


# --- building inputs --------------------------------------------------------------

def _existing(path: str, key: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{key}: file not found: {p}")
    return p


def _dataset(cfg: RunConfig, key: str) -> Dataset:
    cfg.require(key)
    path = _existing(getattr(cfg, key), key)
    try:
        return load_dataset(path, cfg.format, cfg.schema())
    except ValueError as e:
        raise UsageError(str(e)) from None


def build_models(cfg: RunConfig, labels: Sequence[str] | None = None) -> ModelSuite:
    ep = lambda url: ModelEndpoint(url, timeout=cfg.timeout, retries=cfg.retries)

    if cfg.victim_url:
        victim = remote_client(ep(cfg.victim_url), "victim", labels=labels)
    else:
        cfg.require("victim")
        victim = NaiveBayesVictim.load(_existing(cfg.victim, "victim"))

    local_mlm = None
    if cfg.mlm_url:
        mlm = remote_client(ep(cfg.mlm_url), "mlm")
    else:
        cfg.require("mlm")
        mlm = local_mlm = InfillTrigramModel.load(_existing(cfg.mlm, "mlm"))

    if cfg.similarity_url:
        similarity = remote_client(ep(cfg.similarity_url), "similarity")
    else:
        cfg.require("vectors")
        similarity = EmbeddingSimilarity(load_vectors(_existing(cfg.vectors, "vectors")))

    if cfg.pos_url:
        tagger = remote_client(ep(cfg.pos_url), "pos")
    else:
        tagger = LexiconTagger(load_lexicon(_existing(cfg.lexicon, "lexicon")) if cfg.lexicon else None)

    if cfg.perplexity_url:
        perplexity = remote_client(ep(cfg.perplexity_url), "perplexity")
    else:
        perplexity = NgramPerplexity.from_model(local_mlm) if local_mlm is not None else None

    grammar = remote_client(ep(cfg.grammar_url), "grammar") if cfg.grammar_url else RuleGrammarChecker()
    return ModelSuite(victim, mlm, similarity, tagger, perplexity, grammar)


def _eval_set(cfg: RunConfig) -> Dataset:
    data = _dataset(cfg, "test")
    if cfg.n_eval is not None:
        data = sample_eval_subset(data, cfg.n_eval, cfg.max_len, cfg.seed)
    return data


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- commands -----------------------------------------------------------------------

def cmd_train_victim(cfg: RunConfig, args) -> int:
    train = _dataset(cfg, "train")
    victim = NaiveBayesVictim(cfg.alpha).fit(train)
    out = Path(args.out or cfg.victim or Path(cfg.out_dir) / "victim.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    victim.save(out)
    NaiveBayesVictim.load(out)
    print(f"victim written to {out}")
    print(f"train accuracy: {victim.accuracy(train):.4f}")
    if cfg.test:
        print(f"eval accuracy: {victim.accuracy(_dataset(cfg, 'test')):.4f}")
    return 0


def _corpus(path: Path, cfg: RunConfig):
    if path.suffix in (".jsonl", ".tsv"):
        try:
            return load_dataset(path, cfg.format, cfg.schema())
        except ValueError as e:
            raise UsageError(str(e)) from None
    return path


def cmd_train_mlm(cfg: RunConfig, args) -> int:
    src = args.corpus or cfg.train
    if src is None:
        raise UsageError("missing corpus: pass --corpus or set 'train'")
    corpus = _corpus(_existing(src, "corpus"), cfg)
    if not any(_sentences(corpus)):
        raise UsageError(f"corpus {src} contains no tokens")
    model = train_reference_mlm(corpus, delta=cfg.delta)
    out = Path(args.out or cfg.mlm or Path(cfg.out_dir) / "mlm.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out)
    InfillTrigramModel.load(out)
    print(f"mlm written to {out}")
    print(f"|V| = {model.vocab_size}")
    return 0


def _check_trace(path: Path, n: int) -> None:
    if len(read_trace(path)) != n:
        raise UsageError(f"{path}: trace read back with the wrong number of records")


def cmd_attack(cfg: RunConfig, args) -> int:
    config = cfg.attack_config()
    data = _eval_set(cfg)
    models = build_models(cfg, data.label_set)
    results = attack_dataset(data, models, config, args.workers)
    for i, r in enumerate(results):
        status = "error" if r.error else "skip" if r.skipped else "ok" if r.success else "fail"
        log.info("example %d: %s (%d steps)", i, status, r.steps)
    report = evaluate(results, models)
    out = _out_dir(cfg)
    trace, metrics = out / "trace.jsonl", out / "metrics.json"
    write_trace(results, trace)
    metrics.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _check_trace(trace, len(results))
    MetricsReport(**json.loads(metrics.read_text(encoding="utf-8")))
    print(report.table())
    print(f"attacked {report.n_total - report.n_skipped - report.n_error}, skipped {report.n_skipped}, "
          f"succeeded {report.n_success}, errors {report.n_error}")
    print(f"trace: {trace}\nmetrics: {metrics}")
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    if not cfg.grid:
        raise UsageError("empty grid: pass --grid 'k=...;l=...'")
    try:
        grid = parse_grid(cfg.grid)
    except ValueError as e:
        raise UsageError(str(e)) from None
    data = _eval_set(cfg)
    models = build_models(cfg, data.label_set)
    points = sweep(data, models, cfg.attack_config(), grid, args.workers)
    path = Path(args.out) if args.out else _out_dir(cfg) / "sweep.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(points, path)
    if len(read_sweep_csv(path)) != len(points):
        raise UsageError(f"{path}: CSV read back with the wrong number of rows")
    for p in points:
        print(f"k={p.k:g} l={p.l:g} a_rate={p.a_rate}")
    print(f"sweep: {path}")
    return 0


def cmd_augment(cfg: RunConfig, args) -> int:
    train = _dataset(cfg, "train")
    models = build_models(cfg, train.label_set)
    source = train
    if cfg.attack_train is not None and cfg.attack_train < len(train):
        source = sample_eval_subset(train, cfg.attack_train, max_len=10 ** 9, seed=cfg.seed)
    results = attack_dataset(source, models, cfg.attack_config(), args.workers)
    path = Path(args.out) if args.out else _out_dir(cfg) / "augmented.jsonl"
    path.parent.mkdir(parents=True, exist_ok=True)
    augmented = export_augmented(train, results, path, source)
    if len(load_dataset(path)) != len(augmented):
        raise UsageError(f"{path}: augmented set read back with the wrong size")
    print(f"{len(augmented) - len(train)} adversarial examples added to {len(train)} training examples")
    print(f"augmented: {path}")
    if args.evaluate:
        out = adversarial_training_experiment(train, _dataset(cfg, "test"), models, cfg.attack_config(),
                                              cfg.alpha, cfg.attack_train, args.workers)
        print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_analyze_pos(cfg: RunConfig, args) -> int:
    path = Path(args.trace) if args.trace else Path(cfg.out_dir) / "trace.jsonl"
    results = read_trace(_existing(str(path), "trace"))
    if cfg.pos_url:
        tagger = remote_client(ModelEndpoint(cfg.pos_url, cfg.timeout, cfg.retries), "pos")
    else:
        tagger = LexiconTagger(load_lexicon(_existing(cfg.lexicon, "lexicon")) if cfg.lexicon else None)
    tables = pos_breakdown(results, tagger)
    print(format_pos_breakdown(tables))
    if args.out:
        Path(args.out).write_text(json.dumps(tables, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def cmd_make_synthetic(cfg: RunConfig, args) -> int:
    from .synth import write_synthetic

    out = Path(args.out or cfg.out_dir)
    paths = write_synthetic(out, args.n_train, args.n_test, cfg.seed)
    config = out / "config.toml"
    entries = {name: p.name for name, p in paths.items()}
    entries.update(victim="victim.json", mlm="mlm.json", out_dir="run")
    config.write_text("".join(f'{k} = "{v}"\n' for k, v in entries.items()) + f"seed = {cfg.seed}\n",
                      encoding="utf-8")
    print(f"synthetic data and config written under {out}")
    return 0


# --- argument parsing -------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat TOML run config")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int, default=1, help="parallel attack workers (default 1)")
    common.add_argument("--out", help="output path (file or directory, per command)")
    common.add_argument("-v", "--verbose", action="store_true", help="log one line per attacked example")

    attack_opts = argparse.ArgumentParser(add_help=False)
    attack_opts.add_argument("--k", type=float, help="MLM probability threshold")
    attack_opts.add_argument("--l", type=float, help="local similarity threshold")
    attack_opts.add_argument("--max-steps", type=int)
    attack_opts.add_argument("--actions", help="comma-separated subset of replace,insert,merge")
    attack_opts.add_argument("--n-eval", type=int, help="attack a seeded sample of this many test examples")

    p = argparse.ArgumentParser(prog="infill-attack", description="Mask-then-infill adversarial attacks.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("train-victim", parents=[common], help="fit the naive Bayes victim")
    s.add_argument("--train")
    s.add_argument("--test", help="optional split for reporting accuracy")
    s.add_argument("--alpha", type=float)
    s.set_defaults(func=cmd_train_victim)

    s = sub.add_parser("train-mlm", parents=[common], help="fit the trigram infill model")
    s.add_argument("--corpus", help="plain-text lines, or a jsonl/tsv dataset (default: train)")
    s.add_argument("--delta", type=float)
    s.set_defaults(func=cmd_train_mlm)

    s = sub.add_parser("attack", parents=[common, attack_opts],
                       help="attack the test set; --out is the output directory")
    s.set_defaults(func=cmd_attack)

    s = sub.add_parser("sweep", parents=[common, attack_opts], help="grid over (k, l); --out is the CSV path")
    s.add_argument("--grid", help="e.g. 'k=0.001,0.005;l=0.5,0.7'")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("augment", parents=[common, attack_opts],
                       help="attack the training set and write it augmented with successes")
    s.add_argument("--attack-train", type=int, help="attack only a seeded sample of this many examples")
    s.add_argument("--evaluate", action="store_true",
                   help="also retrain and report before/after robustness on the test set")
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("analyze-pos", parents=[common], help="POS tallies of applied actions in a trace")
    s.add_argument("--trace", help="trace jsonl (default: <out_dir>/trace.jsonl)")
    s.set_defaults(func=cmd_analyze_pos)

    s = sub.add_parser("make-synthetic", parents=[common], help="write the synthetic corpus and a config")
    s.add_argument("--n-train", type=int, default=2000)
    s.add_argument("--n-test", type=int, default=200)
    s.set_defaults(func=cmd_make_synthetic)
    return p


_FLAG_KEYS = {"seed": "seed", "train": "train", "test": "test", "alpha": "alpha", "delta": "delta",
              "k": "k", "l": "l", "max_steps": "max_steps", "n_eval": "n_eval", "grid": "grid",
              "attack_train": "attack_train"}


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = {key: getattr(args, flag) for flag, key in _FLAG_KEYS.items() if hasattr(args, flag)}
    if getattr(args, "actions", None):
        overrides["enabled_actions"] = [a.strip() for a in args.actions.split(",") if a.strip()]
    if args.out and args.command == "attack":
        overrides["out_dir"] = args.out
    try:
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        cfg = load_run_config(args.config, overrides)
        return args.func(cfg, args)
    except (UsageError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
