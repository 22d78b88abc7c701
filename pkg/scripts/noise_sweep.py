"""Accuracy of MV / IAM / JAM / VRJAM as every flip rate is scaled by alpha."""

from _common import base_parser, load_experiment
from pairfuse.crowd import uniform_rates
from pairfuse.eval import run_noise_sweep


def main():
    p = base_parser(__doc__)
    p.add_argument("--alphas", default="1.0,1.3,1.6,1.9,2.2,2.5")
    p.add_argument("--reps", type=int, default=5)
    args = p.parse_args()
    items, quality, _ = load_experiment(args.n_items, args.seed)
    alphas = [float(a) for a in args.alphas.split(",")]
    res = run_noise_sweep(items, quality, uniform_rates(6), alphas, reps=args.reps, seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    res.to_csv(args.out / "noise_sweep.csv")
    res.summary_to_csv(args.out / "noise_summary.csv")
    print("alpha   " + "  ".join(f"{m:>6}" for m in ("MV", "IAM", "JAM", "VRJAM")) + "   JAM-MV")
    for a in alphas:
        means = [100 * res.mean(a, m) for m in ("MV", "IAM", "JAM", "VRJAM")]
        print(f"{a:5.2f}   " + "  ".join(f"{v:6.2f}" for v in means) + f"   {means[2] - means[0]:6.2f}")


if __name__ == "__main__":
    main()
