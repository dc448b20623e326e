"""Command-line entry point: gen, select, simulate, serve."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .acquisition import STRATEGIES
from .classifier import TrainConfig, load_params
from .harness import (
    ALConfig,
    ExperimentFailure,
    generate_synthetic,
    preset_counts,
    run_experiment,
    select_once,
    write_plot_data,
    write_records,
    write_summary,
)
from .iostore import (
    UNLABELED,
    parse_config_file,
    read_embeddings,
    read_labels,
    write_embeddings,
    write_labels,
)
from .numerics import FeatureMatrix
from .service import serve_forever

PRESETS = ("twitter-abusive", "wiki-attack", "balanced")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ndsal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic embedding + label pair")
    gen.add_argument("--preset", choices=PRESETS, default="balanced")
    gen.add_argument("--n", type=int, default=2000, help="total sample count")
    gen.add_argument("--k", type=int, default=None, help="classes for the balanced preset")
    gen.add_argument("--d", type=int, default=32, help="embedding dimension")
    gen.add_argument("--spread", type=float, default=1.0, help="within-class standard deviation")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output prefix (.embf and .labels.csv)")

    sel = sub.add_parser("select", help="select ids to annotate from an unlabeled pool")
    sel.add_argument("--embeddings", required=True)
    sel.add_argument("--labels", required=True, help="label file; -1 rows form the pool")
    sel.add_argument("--strategy", choices=STRATEGIES, required=True)
    sel.add_argument("--k", type=int, required=True, help="number of classes")
    sel.add_argument("--draw", type=int, required=True, help="how many ids to select")
    sel.add_argument("--seed", type=int, default=0)
    sel.add_argument("--model", default=None, help="optional .npz with trained parameters")
    sel.add_argument("--alpha", type=float, default=1.0, help="ndsplus mixing weight")
    sel.add_argument("--epochs", type=int, default=10)

    sim = sub.add_parser("simulate", help="run the active-learning harness from a config file")
    sim.add_argument("--config", required=True)

    srv = sub.add_parser("serve", help="start the annotation service")
    srv.add_argument("--port", type=int, default=8650)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--session-dir", required=True)
    srv.add_argument("--ui-dir", default=None, help="directory of built UI assets to serve")
    return parser


def _cmd_gen(args) -> int:
    num_classes = args.k
    if args.preset == "balanced" and num_classes is None:
        num_classes = 4
    counts = preset_counts(args.preset, args.n, num_classes)
    features, labels = generate_synthetic(counts, args.d, args.spread, args.seed)
    out = Path(args.out)
    emb_path = out.with_suffix(".embf")
    label_path = Path(str(out) + ".labels.csv")
    write_embeddings(emb_path, features.data)
    write_labels(label_path, features.ids, labels)
    print(f"wrote {emb_path} ({args.n}x{args.d}) and {label_path}; class counts {counts}")
    return 0


def _cmd_select(args) -> int:
    matrix = read_embeddings(args.embeddings).astype(np.float64)
    ids, labels = read_labels(args.labels, num_classes=args.k)
    if len(ids) != matrix.shape[0]:
        raise ValueError(f"label count {len(ids)} does not match embedding rows {matrix.shape[0]}")
    features = FeatureMatrix(matrix, ids)
    known = {s: int(l) for s, l in zip(ids, labels) if l != UNLABELED}
    pool = [s for s in ids if s not in known]
    params = load_params(args.model) if args.model else None
    selected = select_once(
        features,
        known,
        pool,
        args.strategy,
        args.k,
        args.draw,
        args.seed,
        train_config=TrainConfig(epochs=args.epochs),
        alpha=args.alpha,
        params=params,
    )
    for sample_id in selected:
        print(sample_id)
    return 0


def _parse_simulate_config(path):
    raw = parse_config_file(path)
    strategies = [s.strip() for s in raw.pop("strategy", "random").split(",") if s.strip()]
    data_keys = {
        "preset": str,
        "n_samples": int,
        "dim": int,
        "spread": float,
    }
    data = {k: data_keys[k](raw.pop(k)) for k in list(raw) if k in data_keys}
    out_dir = raw.pop("out_dir", "simulate-out")
    field_types = {
        "draw_size": int,
        "initial_size": int,
        "budget": int,
        "k": int,
        "epochs": int,
        "mc_passes": int,
        "dropout_rate": float,
        "alpha_decay": float,
        "alpha_mode": str,
        "repetitions": int,
        "master_seed": int,
        "learning_rate": float,
        "batch_size": int,
        "hidden": int,
        "recluster_each_cycle": lambda v: v.lower() in ("1", "true", "yes"),
        "f1_average": str,
    }
    fields = {}
    for key, value in raw.items():
        if key not in field_types:
            raise ValueError(f"unknown config key: {key!r}")
        fields[key] = field_types[key](value)
    configs = [ALConfig(strategy=s, **fields) for s in strategies]
    return configs, data, out_dir


def _cmd_simulate(args) -> int:
    configs, data, out_dir = _parse_simulate_config(args.config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    failure = None
    for config in configs:
        try:
            results.append(run_experiment(config, **data))
        except ExperimentFailure as err:
            # keep whatever finished so the run is not a total loss
            if err.partial.runs:
                results.append(err.partial)
            failure = err
            break
    write_records(out / "records.jsonl", results)
    write_summary(out / "summary.tsv", results)
    write_plot_data(out / "plotdata.tsv", results)
    if failure is not None:
        print(f"error: {failure} (partial results in {out})", file=sys.stderr)
        return 1
    for result in results:
        final = result.aggregate()[-1]
        print(
            f"{result.config.strategy}: mean F1 {final['mean_f1']:.4f} "
            f"at {final['labeled_count']} labeled ({final['repetitions']} repetitions)"
        )
    print(f"records in {out}/records.jsonl; summary in {out}/summary.tsv")
    return 0


def _cmd_serve(args) -> int:
    serve_forever(args.session_dir, args.port, args.host, args.ui_dir)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    commands = {
        "gen": _cmd_gen,
        "select": _cmd_select,
        "simulate": _cmd_simulate,
        "serve": _cmd_serve,
    }
    try:
        return commands[args.command](args)
    except (ValueError, OSError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
