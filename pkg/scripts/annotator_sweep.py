"""Accuracy as the crowd grows from K = 3 to 9 annotators with b_k = k/20."""

from _common import base_parser, load_experiment
from pairfuse.eval import run_annotator_sweep


def main():
    p = base_parser(__doc__)
    p.add_argument("--k-min", type=int, default=3)
    p.add_argument("--k-max", type=int, default=9)
    p.add_argument("--reps", type=int, default=5)
    args = p.parse_args()
    items, quality, _ = load_experiment(args.n_items, args.seed)
    Ks = range(args.k_min, args.k_max + 1)
    res = run_annotator_sweep(items, quality, Ks, reps=args.reps, seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    res.to_csv(args.out / "annotator_sweep.csv")
    res.summary_to_csv(args.out / "annotator_summary.csv")
    print("K   " + "  ".join(f"{m:>6}" for m in ("MV", "IAM", "JAM", "VRJAM")) + "   JAM-MV")
    for K in Ks:
        means = [100 * res.mean(K, m) for m in ("MV", "IAM", "JAM", "VRJAM")]
        print(f"{K}   " + "  ".join(f"{v:6.2f}" for v in means) + f"   {means[2] - means[0]:6.2f}")


if __name__ == "__main__":
    main()
