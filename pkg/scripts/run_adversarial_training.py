"""Retrain the victim on train + successful attacks on train; compare robustness before and after."""
import argparse
import json

from infill_attack.engine import AttackConfig
from infill_attack.evaluate import adversarial_training_experiment

from common import synthetic_setup


def fmt(v) -> str:
    return f"{'n/a':>8}" if v is None else f"{v:8.4f}"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--attack-train", type=int, default=1000,
                    help="attack a seeded sample of this many training examples (default 1000)")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--json", help="also dump all rows to this file")
    a = ap.parse_args()
    rows = {}
    for seed in a.seeds:
        train, test, suite = synthetic_setup(seed)
        out = adversarial_training_experiment(train, test, suite, AttackConfig(seed=seed),
                                              attack_train=a.attack_train, workers=a.workers)
        rows[seed] = out
        b, f = out["before"], out["after"]
        print(f"seed {seed} (+{out['n_adversarial']} adversarial examples)")
        for name in ("accuracy", "a_rate", "mod_rate", "mod_count"):
            print(f"  {name:<10} {fmt(b[name])} -> {fmt(f[name])}")
    if a.json:
        with open(a.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
