"""Command-line entry points for reproducible experiment runs.

Subcommands: ``train``, ``gen-noise``, ``gen-motif``, ``denoise``,
``interpret``, ``case-study``. Every run writes a manifest (resolved config,
seed, dataset hash, code version) before any training starts, and all
randomness flows from the one root seed, so identical (config, seed, data)
invocations emit identical result files.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from typing import Optional

import numpy as np

from . import __version__
from .case_study import CaseStudyConfig, run_case_study, write_trace_csv
from .checkpoint import save_params
from .config import flatten, load_config, to_train_config
from .experiments import (
    DenoisingRun,
    InterpretationRun,
    run_denoising,
    run_interpretation,
)
from .graphs import (
    ConfigError,
    Dataset,
    MotifConfig,
    add_noise_edges,
    dataset_hash,
    gen_planted_motif_dataset,
    kfold_splits,
    load_mask_sidecar,
    load_tu_dataset,
    random_splits,
    save_tu_dataset,
)
from .metrics import format_table, mean_std, write_table_csv
from .subgraph import dump_selections
from .train import evaluate_split, train, write_metrics_csv, write_mi_trace_csv


def _write_manifest(out_dir: str, command: str, args: argparse.Namespace,
                    config: dict, dataset: Optional[Dataset], outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "config": flatten(config),
        "dataset": None,
        "started_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": outputs,
    }
    if dataset is not None:
        manifest["dataset"] = {
            "name": dataset.name,
            "path": getattr(args, "data", None),
            "graphs": len(dataset.graphs),
            "hash": dataset_hash(dataset),
        }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_dataset(args: argparse.Namespace, config: dict,
                  continuous: Optional[bool] = None, with_masks: bool = False) -> Dataset:
    dataset = load_tu_dataset(args.data, args.name, continuous=continuous)
    if with_masks:
        dataset.masks = load_mask_sidecar(args.data, args.name)
    data_cfg = config["data"]
    if data_cfg["folds"] > 0:
        dataset.splits = kfold_splits(
            len(dataset.graphs), data_cfg["fold_index"], data_cfg["folds"], args.seed
        )
    else:
        ratios = (data_cfg["split_train"], data_cfg["split_val"], data_cfg["split_test"])
        dataset.splits = random_splits(len(dataset.graphs), ratios, args.seed)
    print(f"loaded {dataset.name}: {len(dataset.graphs)} graphs, "
          f"{'continuous labels' if dataset.continuous else f'{dataset.num_classes} classes'}")
    return dataset


# -- subcommands ---------------------------------------------------------------


def cmd_train(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    dataset = _load_dataset(args, config)
    os.makedirs(args.out, exist_ok=True)
    outputs = ["metrics.csv", "mi_trace.csv", "checkpoint.bin", "manifest.json"]
    _write_manifest(args.out, "train", args, config, dataset, outputs)

    train_cfg = to_train_config(config, args.seed)
    result = train(dataset, train_cfg)
    write_metrics_csv(os.path.join(args.out, "metrics.csv"), result)
    write_mi_trace_csv(os.path.join(args.out, "mi_trace.csv"), result)
    save_params(
        os.path.join(args.out, "checkpoint.bin"),
        [(name, p.data) for name, p in result.model.named_params()],
    )
    val = evaluate_split(result.model, dataset, "val", train_cfg.threshold)
    test = evaluate_split(result.model, dataset, "test", train_cfg.threshold)
    print(f"best epoch {result.best_epoch}; validation {val}; test {test}")
    return 0


def cmd_gen_noise(args: argparse.Namespace) -> int:
    dataset = load_tu_dataset(args.data, args.name)
    rng = np.random.default_rng(args.seed)
    noisy_graphs = []
    masks = []
    for graph in dataset.graphs:
        noisy, mask = add_noise_edges(graph, args.fraction, int(rng.integers(2**32)))
        noisy_graphs.append(noisy)
        masks.append(np.nonzero(mask)[0].tolist())
    noisy_ds = Dataset(
        graphs=noisy_graphs, num_classes=dataset.num_classes,
        masks=masks, name=args.out_name,
    )
    os.makedirs(args.out, exist_ok=True)
    save_tu_dataset(noisy_ds, args.out, args.out_name, masks=masks)
    total_edges = sum(g.num_edges for g in noisy_graphs)
    real_edges = sum(len(m) for m in masks)
    print(f"wrote {args.out_name}: {len(noisy_graphs)} graphs, "
          f"{real_edges} real / {total_edges} total edges")
    return 0


def cmd_gen_motif(args: argparse.Namespace) -> int:
    sizes = tuple(int(s) for s in args.motif_sizes.split(",")) if args.motif_sizes else None
    config = MotifConfig(
        num_graphs=args.num_graphs,
        motif_kinds=tuple(args.motif_kinds.split(",")),
        motif_size=args.motif_size,
        motif_sizes=sizes,
        background_nodes=(args.n_min, args.n_max),
        edge_prob=args.edge_prob,
        feature_mode=args.feature_mode,
        label_rule="size" if args.continuous else "kind",
        property_noise=args.noise,
        seed=args.seed,
    )
    dataset = gen_planted_motif_dataset(config)
    os.makedirs(args.out, exist_ok=True)
    save_tu_dataset(dataset, args.out, args.name, masks=dataset.masks)
    kind = "continuous" if dataset.continuous else f"{dataset.num_classes}-class"
    print(f"wrote {args.name}: {len(dataset.graphs)} {kind} graphs")
    return 0


def _aggregate(rows_per_seed: list[list], fields: list[str]) -> list[list[str]]:
    """Mean +- std across seeds for each method row."""
    methods = [r.method for r in rows_per_seed[0]]
    table = []
    for mi, method in enumerate(methods):
        cells = [method]
        for field in fields:
            values = [getattr(runs[mi], field) for runs in rows_per_seed]
            if any(np.isnan(v) for v in values):
                cells.append("-")
            elif len(values) == 1:
                cells.append(f"{values[0]:.3f}")
            else:
                m, s = mean_std(values)
                cells.append(f"{m:.3f} +- {s:.3f}")
        table.append(cells)
    return table


def cmd_denoise(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    dataset = _load_dataset(args, config, with_masks=True)
    os.makedirs(args.out, exist_ok=True)
    _write_manifest(args.out, "denoise", args, config, dataset,
                    ["denoise_table.csv", "denoise_table.txt", "manifest.json"])

    seeds = [args.seed + i for i in range(args.seeds)]
    rows_per_seed: list[list[DenoisingRun]] = []
    for seed in seeds:
        data_cfg = config["data"]
        ratios = (data_cfg["split_train"], data_cfg["split_val"], data_cfg["split_test"])
        dataset.splits = random_splits(len(dataset.graphs), ratios, seed)
        train_cfg = to_train_config(config, seed)
        rows_per_seed.append(run_denoising(dataset, train_cfg))
        print(f"seed {seed}: " + "; ".join(
            f"{r.method} recall={r.recall:.3f} acc={r.accuracy:.3f}"
            if r.structure_capable else f"{r.method} acc={r.accuracy:.3f}"
            for r in rows_per_seed[-1]
        ))

    headers = ["method", "recall", "precision", "accuracy"]
    table = _aggregate(rows_per_seed, ["recall", "precision", "accuracy"])
    text = format_table(headers, table)
    print(text)
    write_table_csv(os.path.join(args.out, "denoise_table.csv"), headers, table)
    with open(os.path.join(args.out, "denoise_table.txt"), "w") as fh:
        fh.write(text + "\n")
    return 0


def cmd_interpret(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    dataset = _load_dataset(args, config, with_masks=True)
    if not dataset.continuous:
        raise ConfigError(
            "interpretation needs a continuous-property dataset "
            f"({dataset.name} has {dataset.num_classes} classes)"
        )
    os.makedirs(args.out, exist_ok=True)
    _write_manifest(args.out, "interpret", args, config, dataset,
                    ["interpret_table.csv", "interpret_table.txt",
                     "subgraphs.jsonl", "manifest.json"])

    methods: list[str] = []
    if not args.no_baselines:
        methods += ["att05", "att07"]
    if args.no_con and args.no_mi:
        methods.append("gib_plain")  # both losses stripped: plain subgraph classifier
    elif args.no_con:
        methods.append("gib_no_con")
    elif args.no_mi:
        methods.append("gib_no_mi")
    else:
        methods += ["gib_no_con", "gib_no_mi", "gib"]

    seeds = [args.seed + i for i in range(args.seeds)]
    rows_per_seed: list[list[InterpretationRun]] = []
    for seed in seeds:
        data_cfg = config["data"]
        ratios = (data_cfg["split_train"], data_cfg["split_val"], data_cfg["split_test"])
        dataset.splits = random_splits(len(dataset.graphs), ratios, seed)
        train_cfg = to_train_config(config, seed)
        rows_per_seed.append(run_interpretation(dataset, train_cfg, tuple(methods)))
        print(f"seed {seed}: " + "; ".join(
            f"{r.method} bias={r.bias_mean:.3f}" for r in rows_per_seed[-1]
        ))

    headers = ["method", "bias_mean", "bias_std", "components_per_graph", "degenerate_rate"]
    table = _aggregate(rows_per_seed,
                       ["bias_mean", "bias_std", "components_per_graph", "degenerate_rate"])
    text = format_table(headers, table)
    print(text)
    write_table_csv(os.path.join(args.out, "interpret_table.csv"), headers, table)
    with open(os.path.join(args.out, "interpret_table.txt"), "w") as fh:
        fh.write(text + "\n")
    dump_selections(os.path.join(args.out, "subgraphs.jsonl"),
                    rows_per_seed[0][-1].records)
    return 0


def cmd_case_study(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    cs = config["case_study"]
    os.makedirs(args.out, exist_ok=True)
    _write_manifest(args.out, "case-study", args, config, None,
                    ["case_study_trace.csv", "manifest.json"])
    cs_config = CaseStudyConfig(
        epochs=args.epochs if args.epochs is not None else cs["epochs"],
        inner_steps=cs["inner_steps"],
        samples_per_epoch=cs["samples_per_epoch"],
        sigma2_init=cs["sigma2_init"],
        lr_inner=cs["lr_inner"],
        lr_outer=cs["lr_outer"],
        hidden=cs["hidden"],
        seed=args.seed,
        sigma2_fixed=args.sigma2_fixed,
    )
    trace = run_case_study(cs_config)
    write_trace_csv(os.path.join(args.out, "case_study_trace.csv"), trace)
    first, last = trace[0], trace[-1]
    print(f"epoch 1: estimate={first.mi_estimate:.4f} oracle={first.oracle_mi:.4f} "
          f"sigma2={first.sigma2:.4f}")
    print(f"epoch {last.epoch}: estimate={last.mi_estimate:.4f} oracle={last.oracle_mi:.4f} "
          f"sigma2={last.sigma2:.4f}")
    return 0


# -- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gib", description="subgraph recognition experiment runner"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, data: bool = True) -> None:
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="runs/latest", help="output directory")
        if data:
            p.add_argument("--data", required=True, help="dataset directory")
            p.add_argument("--name", required=True, help="dataset name prefix")

    p_train = sub.add_parser("train", help="train the subgraph model on a dataset")
    common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_noise = sub.add_parser("gen-noise", help="add spurious edges to a dataset")
    p_noise.add_argument("--data", required=True)
    p_noise.add_argument("--name", required=True)
    p_noise.add_argument("--fraction", type=float, default=0.3)
    p_noise.add_argument("--seed", type=int, default=0)
    p_noise.add_argument("--out", required=True)
    p_noise.add_argument("--out-name", default=None)
    p_noise.set_defaults(func=cmd_gen_noise)

    p_motif = sub.add_parser("gen-motif", help="generate a planted-motif dataset")
    p_motif.add_argument("--out", required=True)
    p_motif.add_argument("--name", default="MOTIF")
    p_motif.add_argument("--num-graphs", type=int, default=200)
    p_motif.add_argument("--motif-kinds", default="clique,cycle")
    p_motif.add_argument("--motif-size", type=int, default=5)
    p_motif.add_argument("--motif-sizes", default=None)
    p_motif.add_argument("--n-min", type=int, default=15)
    p_motif.add_argument("--n-max", type=int, default=25)
    p_motif.add_argument("--edge-prob", type=float, default=0.25)
    p_motif.add_argument("--feature-mode", default="degree_onehot",
                         choices=["degree_onehot", "ones"])
    p_motif.add_argument("--continuous", action="store_true",
                         help="label = motif size (+ noise) instead of motif kind")
    p_motif.add_argument("--noise", type=float, default=0.0)
    p_motif.add_argument("--seed", type=int, default=0)
    p_motif.set_defaults(func=cmd_gen_motif)

    p_denoise = sub.add_parser("denoise", help="edge-recovery comparison on noisy graphs")
    common(p_denoise)
    p_denoise.add_argument("--seeds", type=int, default=1, help="number of seeds to sweep")
    p_denoise.set_defaults(func=cmd_denoise)

    p_interp = sub.add_parser("interpret", help="property-bias comparison on a continuous dataset")
    common(p_interp)
    p_interp.add_argument("--seeds", type=int, default=1)
    p_interp.add_argument("--no-con", action="store_true", help="drop the connectivity loss")
    p_interp.add_argument("--no-mi", action="store_true", help="drop the compression loss")
    p_interp.add_argument("--no-baselines", action="store_true")
    p_interp.set_defaults(func=cmd_interpret)

    p_case = sub.add_parser("case-study", help="two-variable bi-level MI minimization")
    common(p_case, data=False)
    p_case.add_argument("--sigma2-fixed", type=float, default=None)
    p_case.add_argument("--epochs", type=int, default=None)
    p_case.set_defaults(func=cmd_case_study)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "out_name", "") is None:
        args.out_name = args.name + "_NOISY"
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, IOError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
