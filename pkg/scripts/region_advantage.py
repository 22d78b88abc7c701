"""JAM vs VRJAM on a crowd whose reliability depends on the region of difference space.

The pair differences are split into two k-means regions. Even annotators flip
with probability 0.05 in region 0 and 0.40 in region 1; odd annotators the
other way round. A single r_k per annotator cannot describe that.
"""

import numpy as np

from _common import base_parser, load_experiment
from pairfuse.baselines import majority_vote
from pairfuse.crowd import CrowdSpec, generate_crowd
from pairfuse.eval import mcnemar_test, pairwise_accuracy
from pairfuse.jam import jam_fit, jam_infer
from pairfuse.vrjam import kmeans_fit, vrjam_fit, vrjam_infer


def main():
    p = base_parser(__doc__.splitlines()[0])
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--K", type=int, default=6)
    p.add_argument("--clusters", default="2", help="VRJAM cluster count or 'auto'")
    args = p.parse_args()
    _, _, exp = load_experiment(args.n_items, args.seed)
    regions = kmeans_fit(exp.diffs, 2, seed=args.seed)
    B = np.array([[0.05, 0.40] if k % 2 == 0 else [0.40, 0.05] for k in range(args.K)])
    n_clusters = args.clusters if args.clusters == "auto" else int(args.clusters)

    rows = []
    for rep in range(args.reps):
        seed = args.seed + rep
        a = generate_crowd(exp.truth, CrowdSpec(mode="region", B=B, clusters=regions, seed=seed),
                           exp.pair_index, exp.diffs)
        jm = jam_fit(a, exp.items, exp.pair_index, seed=seed, diffs=exp.diffs)
        vm = vrjam_fit(a, exp.items, exp.pair_index, seed=seed, n_clusters=n_clusters, diffs=exp.diffs)
        pj, pv = jam_infer(jm, a, exp.diffs), vrjam_infer(vm, a, exp.diffs)
        stat, sig = mcnemar_test(pv, pj, exp.truth)
        rows.append((pairwise_accuracy(majority_vote(a, seed), exp.truth),
                     pairwise_accuracy(pj, exp.truth), pairwise_accuracy(pv, exp.truth)))
        print(f"rep {rep}: MV={100 * rows[-1][0]:.2f} JAM={100 * rows[-1][1]:.2f} "
              f"VRJAM={100 * rows[-1][2]:.2f}  McNemar={stat:.1f}{' *' if sig else ''}")
        if rep == 0 and vm.clusters.D == 2:
            print("  recovered R (rows = annotators):")
            for k, row in enumerate(vm.R):
                print(f"    a{k + 1}: " + " ".join(f"{v:.3f}" for v in row))
    mean = np.mean(rows, axis=0)
    print(f"mean: MV={100 * mean[0]:.2f} JAM={100 * mean[1]:.2f} VRJAM={100 * mean[2]:.2f}")


if __name__ == "__main__":
    main()
