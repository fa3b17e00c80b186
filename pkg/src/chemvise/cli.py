"""chemvise command line interface.

Subcommands: simulate, count-experiments, train, evaluate, sweep,
pca-plot, bench. Exit codes: 0 success, 2 config/validation error,
3 data/parse error, 4 numeric/training error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .augment import MixPolicy
from .classify import confusion, mcc, pca_fit, pca_transform_batch, svc_decision, train_linear_svc, svc_predict_batch
from .config import Config, default_config, load_config, resolve_master_seed
from .dataset import build_world, features_and_labels, load_dataset, write_dataset
from .embedder import TrainConfig, forward_batch, load_model, save_model, train_embedder
from .errors import ChemviseError, ConfigError
from .harness import count_experiments, emit_report, run_representation_protocol, run_window_sweep, _mixed_head_set
from .targets import TargetSpace, build_one_hot, build_simplex, gen_synthetic_semantic, load_semantic, mixture_target
from .util import derive_seed, fmt

_SPACE_FLAGS = {"semantic": "semantic", "onehot": "one_hot", "simplex": "simplex"}


def _load_cfg(path: str | None) -> Config:
    return load_config(path) if path else default_config()


def _space_from_flags(cfg: Config, kind_flag: str, embeddings: str | None,
                      analytes) -> TargetSpace:
    kind = _SPACE_FLAGS[kind_flag]
    t = cfg.targets
    if kind == "semantic":
        if embeddings:
            return load_semantic(embeddings)
        return gen_synthetic_semantic(list(analytes), t.dimension, t.n_clusters,
                                      t.cluster_spread, t.space_seed)
    if kind == "one_hot":
        return build_one_hot(list(analytes), t.dimension)
    return build_simplex(list(analytes), t.dimension, t.space_seed)


def cmd_simulate(args) -> int:
    cfg = _load_cfg(args.config)
    cfg.validate()
    seed = resolve_master_seed(cfg)
    world = build_world(cfg.simulator, seed)
    out = write_dataset(world, args.out)
    n = len(world.train) + len(world.val) + world.n_holdout
    print(f"wrote {n} trials to {out} (master seed {seed})")
    return 0


def cmd_count_experiments(args) -> int:
    print(count_experiments(args.analytes, args.concentrations))
    return 0


def cmd_train(args) -> int:
    cfg = _load_cfg(args.config)
    cfg.validate()
    target_analyte = cfg.simulator.target_analyte
    ds = load_dataset(args.dataset, target_analyte)
    space = _space_from_flags(cfg, args.target_space, args.embeddings,
                              cfg.simulator.analytes)

    window = args.window_s
    pre = cfg.simulator.pre_onset_s
    X, _labels = features_and_labels(ds.train, window, pre)
    targets = np.stack([mixture_target(space, t.mix) for t in ds.train])
    seed = resolve_master_seed(cfg)
    policy = MixPolicy(cfg.augment.lambda_min, cfg.augment.lambda_max,
                       cfg.augment.mix_probability, seed)
    tcfg = TrainConfig(width=cfg.embedder.width,
                       learning_rate=cfg.embedder.learning_rate,
                       epochs=cfg.embedder.epochs,
                       batch_size=cfg.embedder.batch_size,
                       n_hidden_layers=cfg.embedder.n_hidden_layers,
                       seed=derive_seed(seed, "cli-train"))
    X_val = Y_val = None
    if ds.val:
        X_val, _ = features_and_labels(ds.val, window, pre)
        Y_val = np.stack([mixture_target(space, t.mix) for t in ds.val])
    model, history = train_embedder(X, targets, tcfg, policy, X_val, Y_val)

    ids = list(space.analyte_ids)
    save_model(args.out, model, extra={
        "window_s": window,
        "pre_onset_s": pre,
        "target_analyte": target_analyte,
        "space_kind": space.kind,
        "space_analytes": np.array(ids),
        "space_vectors": space.matrix(ids),
        "lambda_min": policy.lambda_min,
        "lambda_max": policy.lambda_max,
        "head_mix_ratio": cfg.augment.head_mix_ratio,
        "svc_c": cfg.classify.svc_c,
        "svc_class_weight": cfg.classify.svc_class_weight,
        "svc_steps": cfg.classify.svc_steps,
        "seed": seed,
    })
    last = history.epoch_losses[-1] if history.epoch_losses.size else float("nan")
    val_txt = f", val loss {history.final_val_loss:.6g}" if history.final_val_loss is not None else ""
    print(f"trained embedder on {X.shape[0]} singles "
          f"(final training loss {last:.6g}{val_txt}); saved to {args.out}")
    return 0


def _head_from_model(model, meta, ds):
    """Rebuild the default SVC head on train-split embeddings."""
    window = float(meta["window_s"])
    pre = float(meta["pre_onset_s"])
    X, labels = features_and_labels(ds.train, window, pre)
    emb = forward_batch(model, X)
    policy = MixPolicy(float(meta["lambda_min"]), float(meta["lambda_max"]), 1.0, 0)
    n_mixed = int(round(float(meta["head_mix_ratio"]) * X.shape[0]))
    mixes = [t.mix for t in ds.train]
    seed = int(meta["seed"])
    Xm, ym = _mixed_head_set(X, mixes, policy, str(meta["target_analyte"]),
                             n_mixed, derive_seed(seed, "cli-headmix"))
    head_X = np.vstack([emb, forward_batch(model, Xm)]) if Xm.size else emb
    head_y = np.concatenate([labels, ym]) if Xm.size else labels
    return train_linear_svc(head_X, head_y, float(meta["svc_c"]),
                            float(meta["svc_class_weight"]),
                            derive_seed(seed, "cli-head"),
                            n_steps=int(meta["svc_steps"]))


def cmd_evaluate(args) -> int:
    model, meta = load_model(args.model)
    ds = load_dataset(args.dataset, str(meta["target_analyte"]))
    head = _head_from_model(model, meta, ds)

    if args.split == "test":
        ds.freeze()
        trials = ds.holdout_trials()
    else:
        trials = ds.train if args.split == "train" else ds.val
    if not trials:
        raise ConfigError(f"split {args.split!r} is empty")
    X, labels = features_and_labels(trials, float(meta["window_s"]),
                                    float(meta["pre_onset_s"]))
    emb = forward_batch(model, X)
    preds = svc_predict_batch(head, emb)
    lines = ["trial_id,label,prediction,decision"]
    for trial, y, p, e in zip(trials, labels, preds, emb):
        lines.append(",".join([trial.trial_id, str(int(y)), str(int(p)),
                               fmt(svc_decision(head, e))]))
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    counts = confusion(preds, labels)
    print(f"split={args.split} n={counts.total} mcc={mcc(counts):.4f} "
          f"accuracy={counts.accuracy:.4f} "
          f"tp={counts.tp} fp={counts.fp} tn={counts.tn} fn={counts.fn}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args.config)
    if args.seeds is not None:
        cfg.harness.n_repeats = args.seeds
    cfg.validate()
    runner = (run_representation_protocol if args.protocol == "representation"
              else run_window_sweep)
    report = runner(cfg)
    paths = emit_report(report, args.out)
    print(f"{len(report.rows)} rows -> {paths['report']}")
    return 0


def cmd_pca_plot(args) -> int:
    cfg = default_config()
    if args.model:
        model, meta = load_model(args.model)
        target_analyte = str(meta["target_analyte"])
        window = float(meta["window_s"])
        pre = float(meta["pre_onset_s"])
    else:
        model = meta = None
        target_analyte = cfg.simulator.target_analyte
        window = args.window_s
        pre = cfg.simulator.pre_onset_s

    ds = load_dataset(args.dataset, target_analyte)
    ds.freeze()
    groups = [("train", ds.train), ("val", ds.val), ("test", ds.holdout_trials())]

    def embed_features(trials):
        X, labels = features_and_labels(trials, window, pre)
        return (forward_batch(model, X) if model is not None else X), labels

    fit_X, _ = embed_features(ds.train)
    pca = pca_fit(fit_X, 2)
    lines = ["trial_id,pc1,pc2,label,split"]
    for split, trials in groups:
        if not trials:
            continue
        E, labels = embed_features(trials)
        P = pca_transform_batch(pca, E)
        for trial, y, row in zip(trials, labels, P):
            lines.append(",".join([trial.trial_id, fmt(row[0]), fmt(row[1]),
                                   str(int(y)), split]))
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote projections for {len(lines) - 1} trials to {args.out}")
    return 0


def cmd_bench(args) -> int:
    from .bench import run_benchmark

    run_benchmark(repeats=args.repeats)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chemvise", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset directory")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("count-experiments",
                       help="trials needed to cover all mixtures at all concentrations")
    p.add_argument("--analytes", type=int, required=True)
    p.add_argument("--concentrations", type=int, required=True)
    p.set_defaults(func=cmd_count_experiments)

    p = sub.add_parser("train", help="train an embedder on a dataset's train split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--target-space", choices=sorted(_SPACE_FLAGS), required=True)
    p.add_argument("--embeddings", default=None,
                   help="semantic embedding CSV (otherwise synthesized)")
    p.add_argument("--window-s", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a trained model on a dataset split")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="run a reproduction protocol and emit reports")
    p.add_argument("--protocol", choices=("representation", "window"), required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", type=int, default=None,
                   help="override harness.n_repeats")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pca-plot", help="2-D PCA projection CSV of a dataset")
    p.add_argument("--model", default=None,
                   help="embedder model; omit for raw-feature PCA")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window-s", type=float, default=4.0,
                   help="window for raw-feature mode (ignored with --model)")
    p.set_defaults(func=cmd_pca_plot)

    p = sub.add_parser("bench", help="compare numba and numpy kernel backends")
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ChemviseError as e:
        print(f"chemvise: error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
