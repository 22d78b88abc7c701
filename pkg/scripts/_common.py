"""Shared setup for the experiment scripts."""

import argparse
from pathlib import Path

from pairfuse.datasets import desk_wine
from pairfuse.eval import Experiment


def base_parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--n-items", type=int, default=200, help="red-wine subset size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("results"))
    return p


def load_experiment(n_items: int, seed: int):
    items, quality, source = desk_wine(n_items, seed)
    print(f"data: {source}, {len(items)} items")
    return items, quality, Experiment.from_scores(items, quality)
