"""Negative smooth hinge against log-logistic on [-6, 6]; writes results/loss_grid.csv."""

import numpy as np

from _common import base_parser
from pairfuse.eval import loss_comparison_grid, loss_grid_inputs, write_loss_grid
from pairfuse.ranker import smooth_hinge


def main():
    p = base_parser(__doc__)
    args = p.parse_args()
    m = loss_grid_inputs()
    grid = loss_comparison_grid(m)
    args.out.mkdir(parents=True, exist_ok=True)
    write_loss_grid(grid, args.out / "loss_grid.csv")
    print(f"max |neg_hinge - log_logistic| = {grid['max_abs_diff']:.12f}")
    slope_gap = np.abs(-smooth_hinge(m)[1] - 1 / (1 + np.exp(m)))
    for lo in (2, 3, 4, 5):
        print(f"max slope difference for |m| >= {lo}: {slope_gap[np.abs(m) >= lo].max():.4f}")


if __name__ == "__main__":
    main()
