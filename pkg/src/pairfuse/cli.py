"""Command-line entry point: ``pairfuse fuse | simulate | sweep | compare-losses``.

Exit codes: 0 success, 2 usage or validation error, 3 EM did not converge
(outputs are still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .baselines import iam_fuse, iam_train, majority_vote
from .core import (IncompleteAnnotation, InvalidInput, ParseError, build_pair_index,
                   ground_truth_labels, pair_differences, standardize_features, subsample_pairs)
from .crowd import CrowdSpec, generate_crowd
from .datasets import (load_annotations_csv, load_items_csv, load_scores_csv, load_wine_csv,
                       looks_like_wine_csv, save_annotations_csv, save_items_csv, save_labels_csv,
                       subset_items)
from .eval import (SweepConfig, loss_comparison_grid, loss_grid_inputs, run_annotator_sweep,
                   run_noise_sweep, write_loss_grid)
from .jam import EmConfig, jam_fit, jam_infer
from .ranker import TrainConfig
from .vrjam import ClusterModel, vrjam_fit, vrjam_infer

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 2, 3


class UsageError(Exception):
    pass


def _clusters_arg(text):
    if text == "auto":
        return "auto"
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or a positive integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("cluster count must be >= 1")
    return value


def _float_list(text) -> list:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}") from None


def _int_grid(text) -> list:
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad integer grid {text!r}") from None


def _add_training_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=200, help="EM iterations")
    p.add_argument("--tol", type=float, default=1e-5, help="EM parameter-change tolerance")
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--inner-max-iter", type=int, default=500, help="gradient-descent iterations")
    p.add_argument("--cost-tol", type=float, default=1e-6)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--clusters", type=_clusters_arg, default="auto")
    p.add_argument("--threshold-ratio", type=float, default=0.5)
    p.add_argument("--d-max", type=int, default=8)
    p.add_argument("--no-standardize", action="store_true")


def _add_data_flags(p):
    p.add_argument("--items", help="items CSV (id,f1..fd) or UCI wine CSV")
    p.add_argument("--scores-col", help="column holding the ground-truth score")
    p.add_argument("--scores", help="id,score CSV")
    p.add_argument("--n-items", type=int, help="seeded subset of items")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pairfuse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="infer the latent preferences from an annotation file")
    p.add_argument("--config", help="JSON file of flag values; command-line flags win")
    p.add_argument("--items")
    p.add_argument("--annotations")
    p.add_argument("--method")
    p.add_argument("--out")
    _add_training_flags(p)

    p = sub.add_parser("simulate", help="generate a noisy synthetic crowd")
    p.add_argument("--config")
    _add_data_flags(p)
    p.add_argument("--b", help="comma-separated flip rates, one per annotator")
    p.add_argument("--region-spec", help="JSON with B (K x D) and centroids or cluster_file")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-pairs", type=int, help="seeded pair subsample")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--out", help="annotations CSV")
    p.add_argument("--truth-out", help="truth CSV (default: <out>.truth.csv)")
    p.add_argument("--items-out", help="also write the (subset) items CSV here")

    p = sub.add_parser("sweep", help="noise or annotator-count sweep")
    p.add_argument("--config")
    p.add_argument("--kind", choices=["noise", "annotators"])
    _add_data_flags(p)
    p.add_argument("--grid", help="alpha values (noise) or K values / a..b range (annotators)")
    p.add_argument("--base-b", default="0.05,0.1,0.15,0.2,0.25,0.3")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--methods", default="MV,IAM,JAM,VRJAM")
    p.add_argument("--out")
    _add_training_flags(p)

    p = sub.add_parser("compare-losses", help="negative smooth hinge vs log-logistic grid")
    p.add_argument("--config")
    p.add_argument("--min", type=float, default=-6.0, dest="lo")
    p.add_argument("--max", type=float, default=6.0, dest="hi")
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--out")
    return parser


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(overrides, dict):
            raise UsageError("config file must hold a JSON object")
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        # keys may be written as flag names ("max-iter", "min") or as dests
        dest_of = {}
        for action in subparser._actions:
            dest_of[action.dest] = action.dest
            for opt in action.option_strings:
                dest_of[opt.lstrip("-").replace("-", "_")] = action.dest
        unknown = sorted(k for k in overrides if k.replace("-", "_") not in dest_of)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        subparser.set_defaults(**{dest_of[k.replace("-", "_")]: v for k, v in overrides.items()})
        args = parser.parse_args(argv)
    return args


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _em_config(args) -> EmConfig:
    train = TrainConfig(args.learning_rate, args.inner_max_iter, args.cost_tol, args.l2, args.seed)
    return EmConfig(train, args.max_iter, args.tol)


def _load_scored_items(args):
    """Items and ground-truth scores from --items plus --scores-col / --scores."""
    _require(args, "items")
    if args.scores_col and args.scores:
        raise UsageError("use either --scores-col or --scores, not both")
    if looks_like_wine_csv(args.items):
        items, quality = load_wine_csv(args.items)
        if args.scores:
            quality = load_scores_csv(args.scores, items)
        elif args.scores_col not in (None, "quality"):
            raise UsageError("wine files only carry a 'quality' score column")
        scores = quality
    elif args.scores_col:
        items, scores = load_items_csv(args.items, score_column=args.scores_col)
    elif args.scores:
        items = load_items_csv(args.items)
        scores = load_scores_csv(args.scores, items)
    else:
        raise UsageError("ground-truth scores needed: --scores-col or --scores")
    if args.n_items:
        items, scores = subset_items(items, scores, args.n_items, args.seed)
    return items, scores


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_fuse(args) -> int:
    _require(args, "items", "annotations", "method", "out")
    method = str(args.method).lower()
    if method not in ("mv", "iam", "jam", "vrjam"):
        raise UsageError(f"unknown method {args.method!r} (choose mv, iam, jam, vrjam)")
    items = load_items_csv(args.items)
    annotations, pairs = load_annotations_csv(args.annotations, items)
    model_items = items if args.no_standardize else standardize_features(items)[0]
    diffs = pair_differences(model_items, pairs)
    config = _em_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    converged = True
    iterations = 0
    extra = ""
    header = "iteration,L,M,H,delta\n"
    if method == "mv":
        labels = majority_vote(annotations, args.seed)
        model = {"method": "mv", "seed": args.seed}
        (out / "diagnostics.csv").write_text(header, encoding="utf-8")
    elif method == "iam":
        iam = iam_train(annotations, model_items, pairs, config.train, diffs=diffs)
        labels = iam_fuse(iam, model_items, pairs)
        model = iam.to_dict()
        (out / "diagnostics.csv").write_text(header, encoding="utf-8")
    elif method == "jam":
        jm = jam_fit(annotations, model_items, pairs, config, args.seed, diffs=diffs)
        labels = jam_infer(jm, annotations, diffs)
        model = jm.to_dict()
        jm.diagnostics.to_csv(out / "diagnostics.csv")
        converged, iterations = jm.converged, jm.iterations
        extra = " r=" + ",".join(f"{v:.4f}" for v in jm.r)
    else:
        vm = vrjam_fit(annotations, model_items, pairs, config, args.seed, n_clusters=args.clusters,
                       threshold_ratio=args.threshold_ratio, D_max=args.d_max, diffs=diffs)
        labels = vrjam_infer(vm, annotations, diffs)
        model = vm.to_dict()
        vm.diagnostics.to_csv(out / "diagnostics.csv")
        converged, iterations = vm.converged, vm.iterations
        extra = f" D={vm.clusters.D} mean_R=" + ",".join(f"{v:.4f}" for v in vm.mean_reliability())
    save_labels_csv(labels, pairs, items, out / "labels.csv")
    _write_json(out / "model.json", model)
    flag = "" if converged else " NOT-CONVERGED"
    print(f"method={method} pairs={len(pairs)} annotators={annotations.K} iterations={iterations}{extra}{flag}")
    return EXIT_OK if converged else EXIT_NOT_CONVERGED


def _region_clusters(spec: dict, base: Path) -> ClusterModel:
    if "centroids" in spec:
        return ClusterModel(np.asarray(spec["centroids"], dtype=float))
    if "cluster_file" in spec:
        path = Path(spec["cluster_file"])
        if not path.is_absolute():
            path = base / path
        data = json.loads(path.read_text(encoding="utf-8"))
        return ClusterModel(np.asarray(data["centroids"], dtype=float))
    raise UsageError("region spec needs 'centroids' or 'cluster_file'")


def cmd_simulate(args) -> int:
    _require(args, "out")
    if (args.b is None) == (args.region_spec is None):
        raise UsageError("give exactly one of --b or --region-spec")
    items, scores = _load_scored_items(args)
    pairs = build_pair_index(items, scores)
    if args.n_pairs:
        pairs = subsample_pairs(pairs, args.n_pairs, args.seed)
    truth = ground_truth_labels(pairs, scores)
    if args.b is not None:
        spec = CrowdSpec(b=tuple(_float_list(args.b)), alpha=args.alpha, seed=args.seed)
        diffs = None
    else:
        path = Path(args.region_spec)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read region spec: {exc}") from None
        clusters = _region_clusters(raw, path.parent)
        B = np.asarray(raw.get("B"), dtype=float)
        if clusters.centroids.shape[1] != items.dim:
            raise UsageError("cluster centroids do not match the item dimension")
        spec = CrowdSpec(mode="region", B=B, clusters=clusters, alpha=args.alpha, seed=args.seed)
        model_items = items if args.no_standardize else standardize_features(items)[0]
        diffs = pair_differences(model_items, pairs)
    annotations = generate_crowd(truth, spec, pairs, diffs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_annotations_csv(annotations, pairs, items, out)
    truth_out = Path(args.truth_out) if args.truth_out else out.with_suffix(".truth.csv")
    save_labels_csv(truth, pairs, items, truth_out)
    if args.items_out:
        save_items_csv(items, args.items_out)
    rates = (annotations.Z != truth).mean(axis=1)
    print(f"annotators={annotations.K} pairs={len(pairs)} flip_rates=" + ",".join(f"{r:.4f}" for r in rates))
    return EXIT_OK


def cmd_sweep(args) -> int:
    _require(args, "kind", "grid", "out")
    items, scores = _load_scored_items(args)
    methods = tuple(m.strip().upper() for m in str(args.methods).split(",") if m.strip())
    if not methods or any(m not in ("MV", "IAM", "JAM", "VRJAM") for m in methods):
        raise UsageError(f"bad method list {args.methods!r}")
    config = SweepConfig(_em_config(args), args.clusters, args.threshold_ratio, args.d_max,
                         not args.no_standardize, methods)
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    if args.kind == "noise":
        grid = _float_list(args.grid)
        if not grid:
            raise UsageError("empty grid")
        result = run_noise_sweep(items, scores, _float_list(args.base_b), grid, args.reps, args.seed, config)
    else:
        grid = _int_grid(args.grid)
        if not grid:
            raise UsageError("empty grid")
        result = run_annotator_sweep(items, scores, grid, args.reps, args.seed, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result.to_csv(out / "sweep.csv")
    result.summary_to_csv(out / "summary.csv")
    for p, m, n, mean, std in result.summary():
        print(f"{result.param_name}={p} {m}: {100 * mean:.2f} +- {100 * std:.2f} (n={n})")
    return EXIT_OK


def cmd_compare_losses(args) -> int:
    _require(args, "out")
    grid = loss_comparison_grid(loss_grid_inputs(args.lo, args.hi, args.step))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_loss_grid(grid, out)
    print(f"rows={grid['input'].size} max_abs_diff={grid['max_abs_diff']:.12f}")
    return EXIT_OK


COMMANDS = {"fuse": cmd_fuse, "simulate": cmd_simulate, "sweep": cmd_sweep,
            "compare-losses": cmd_compare_losses}


def main(argv=None) -> int:
    try:
        args = _parse(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except UsageError as exc:
        print(f"pairfuse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InvalidInput, ParseError, IncompleteAnnotation, OSError, KeyError,
            ValueError) as exc:
        print(f"pairfuse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
