"""A-rate of the full attack against single-action variants and the two filter ablations."""
import argparse
import time

from infill_attack.engine import AttackConfig, attack_dataset
from infill_attack.evaluate import aggregate

from common import synthetic_setup

VARIANTS = {
    "full": {},
    "replace": {"enabled_actions": ("replace",)},
    "insert": {"enabled_actions": ("insert",)},
    "merge": {"enabled_actions": ("merge",)},
    "no-sim": {"disable_sim_filter": True},
    "no-mlm": {"disable_mlm_filter": True},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--n-train", type=int, default=2000)
    ap.add_argument("--n-test", type=int, default=200)
    ap.add_argument("--variants", nargs="+", default=list(VARIANTS), choices=list(VARIANTS))
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    print("seed " + " ".join(f"{v:>8}" for v in a.variants))
    for seed in a.seeds:
        t0 = time.perf_counter()
        train, test, suite = synthetic_setup(seed, a.n_train, a.n_test)
        rates = []
        for v in a.variants:
            cfg = AttackConfig(seed=seed, **VARIANTS[v])
            rates.append(aggregate(attack_dataset(test, suite, cfg, a.workers)).a_rate)
        print(f"{seed:>4} " + " ".join(f"{r:8.3f}" for r in rates) + f"   ({time.perf_counter() - t0:.0f}s)")


if __name__ == "__main__":
    main()
