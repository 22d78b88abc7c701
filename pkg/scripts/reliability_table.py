"""Estimated flip probabilities next to the construction rates b_k = k/20.

Fits JAM and VRJAM once on a desk-scale crowd of 6 annotators and writes
results/reliability.csv with columns k, b, empirical, jam_r, vrjam_mean_R.
"""

import csv
import time

import numpy as np

from _common import base_parser, load_experiment
from pairfuse.crowd import CrowdSpec, generate_crowd, uniform_rates
from pairfuse.jam import jam_fit
from pairfuse.vrjam import vrjam_fit


def main():
    p = base_parser(__doc__.splitlines()[0])
    p.add_argument("--K", type=int, default=6)
    args = p.parse_args()
    _, _, exp = load_experiment(args.n_items, args.seed)
    b = np.array(uniform_rates(args.K))
    a = generate_crowd(exp.truth, CrowdSpec(b=tuple(b), seed=args.seed), exp.pair_index)
    empirical = (a.Z != exp.truth).mean(axis=1)

    t0 = time.perf_counter()
    jm = jam_fit(a, exp.items, exp.pair_index, seed=args.seed, diffs=exp.diffs)
    t1 = time.perf_counter()
    vm = vrjam_fit(a, exp.items, exp.pair_index, seed=args.seed, diffs=exp.diffs)
    t2 = time.perf_counter()

    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "reliability.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "b", "empirical", "jam_r", "vrjam_mean_R"])
        for k in range(args.K):
            w.writerow([k + 1, f"{b[k]:.4f}", f"{empirical[k]:.4f}", f"{jm.r[k]:.4f}",
                        f"{vm.mean_reliability()[k]:.4f}"])
    print(f"pairs={len(exp.pair_index)}  JAM {t1 - t0:.1f}s ({jm.iterations} it)  "
          f"VRJAM {t2 - t1:.1f}s ({vm.iterations} it, D={vm.clusters.D})")
    print("b      ", np.round(b, 3))
    print("r      ", np.round(jm.r, 3))
    print("mean R ", np.round(vm.mean_reliability(), 3))


if __name__ == "__main__":
    main()
