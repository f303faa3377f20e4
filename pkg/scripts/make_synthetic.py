"""Write a synthetic sentiment corpus, word vectors, POS lexicon and a run config."""
import argparse

from infill_attack.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out")
    ap.add_argument("--n-train", type=int, default=2000)
    ap.add_argument("--n-test", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    raise SystemExit(main(["make-synthetic", "--out", a.out, "--n-train", str(a.n_train),
                           "--n-test", str(a.n_test), "--seed", str(a.seed)]))
