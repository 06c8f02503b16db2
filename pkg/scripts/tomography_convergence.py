"""Median MLE fidelity against shots per basis for random pure states."""

import argparse

import numpy as np

from rspsim.states import DensityMatrix, fidelity, from_stokes
from rspsim.tomography import measure_bases, mle_reconstruct


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    states = []
    for _ in range(args.trials):
        v = rng.normal(size=3)
        states.append(DensityMatrix(from_stokes(v / np.linalg.norm(v))))
    print("shots    median     p05        min")
    for n in (100, 1_000, 10_000, 100_000):
        f = [fidelity(mle_reconstruct(measure_bases(r, n, k)).rho_hat, r) for k, r in enumerate(states)]
        print(f"{n:<8} {np.median(f):.6f}  {np.percentile(f, 5):.6f}  {np.min(f):.6f}")


if __name__ == "__main__":
    main()
