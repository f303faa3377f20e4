"""Sweep the MLM threshold k and similarity threshold l, writing one CSV per seed."""
import argparse
from pathlib import Path

from infill_attack.engine import AttackConfig
from infill_attack.evaluate import parse_grid, sweep, write_sweep_csv

from common import synthetic_setup


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", default="k=0.001,0.005,0.02;l=0.5,0.7,0.9")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--out-dir", default="runs/sweep")
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    grid = parse_grid(a.grid)
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for seed in a.seeds:
        _, test, suite = synthetic_setup(seed)
        points = sweep(test, suite, AttackConfig(seed=seed), grid, a.workers)
        path = out / f"sweep_seed{seed}.csv"
        write_sweep_csv(points, path)
        print(f"seed {seed}: " + " ".join(f"(k={p.k:g}, l={p.l:g}) {p.a_rate:.3f}" for p in points))
        print(f"  -> {path}")


if __name__ == "__main__":
    main()
