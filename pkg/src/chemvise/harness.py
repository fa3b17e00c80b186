"""Experiment orchestration: splits, grid search, protocols, reports.

Two reproduction protocols run on the synthetic world:

* representation: for each target-space geometry (semantic, one-hot,
  simplex) train the embedder on singles with augmentation, fit three
  heads (KNN in representation space, linear SVC in representation space,
  linear SVC in the 2-D PCA projection) on embedded singles plus
  synthetic mixed embeddings, and score MCC on the double-analyte
  holdout.
* window: for each exposure window length, run a budgeted random grid
  search with stratified K-fold CV on singles per model family
  (embedder + SVC head, FFNN, SVC on raw features), retrain the best
  configuration on all singles, and score MCC on the holdout doubles.

Hyperparameter selection never touches the holdout: grid search only
receives the train split, and the dataset refuses holdout reads until
frozen (with file checksums re-verified for file-backed datasets).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .augment import MixPolicy, binary_label_of_mix
from .classify import (
    confusion,
    knn_predict_batch,
    mcc,
    pca_fit,
    pca_transform_batch,
    svc_predict_batch,
    train_linear_svc,
)
from .config import Config, config_sha256, config_to_dict, resolve_master_seed
from .dataset import Dataset, build_world, features_and_labels, load_dataset
from .embedder import TrainConfig, forward_batch, train_embedder, train_ffnn_baseline, ffnn_predict_batch
from .errors import ConfigError, DataError, ParseError
from .targets import TargetSpace, build_one_hot, build_simplex, gen_synthetic_semantic, load_semantic, mixture_target
from .util import derive_seed, fmt

FAMILIES = ("chemvise_svc", "ffnn", "svc_raw")
HEADS = ("knn", "svc", "svc_pca2")


def count_experiments(n: int, k: int) -> int:
    """Number of trials to cover every nonempty analyte subset at every
    per-analyte concentration choice: sum_{p=1..n} C(n,p) * k^p."""
    if n < 1 or k < 1:
        raise ConfigError(f"need n >= 1 and k >= 1, got n={n}, k={k}")
    return sum(math.comb(n, p) * k ** p for p in range(1, n + 1))


def kfold_split(labels, n_folds: int, seed: int):
    """Stratified K folds: seeded shuffle within each class, contiguous
    chunks per class, chunks dealt greedily onto the emptiest fold.

    Folds are disjoint, cover everything, differ in size by at most one,
    and per-class counts differ across folds by at most one.
    """
    labels = np.asarray(labels, dtype=bool)
    n = labels.shape[0]
    if n_folds < 2:
        raise ConfigError("n_folds must be >= 2")
    if n_folds > n:
        raise ConfigError(f"fewer samples ({n}) than folds ({n_folds})")
    rng = np.random.default_rng(int(seed))
    folds = [[] for _ in range(n_folds)]
    for cls in (False, True):
        idx = np.flatnonzero(labels == cls)
        if idx.size == 0:
            continue
        shuffled = rng.permutation(idx)
        base, rem = divmod(idx.size, n_folds)
        chunks, pos = [], 0
        for j in range(n_folds):
            size = base + (1 if j < rem else 0)
            chunks.append(shuffled[pos:pos + size])
            pos += size
        for chunk in chunks:
            target = min(range(n_folds), key=lambda f: (len(folds[f]), f))
            folds[target].extend(chunk.tolist())
    out = []
    all_idx = set(range(n))
    for f in range(n_folds):
        val = np.array(sorted(folds[f]), dtype=np.int64)
        train = np.array(sorted(all_idx - set(folds[f])), dtype=np.int64)
        out.append((train, val))
    return out


# ---------------------------------------------------------------------------
# grid sampling and model families

def sample_nn_params(grid, rng) -> dict:
    return {
        "width": int(grid.width[rng.integers(len(grid.width))]),
        "learning_rate": float(grid.learning_rate[rng.integers(len(grid.learning_rate))]),
        "epochs": int(grid.epochs[rng.integers(len(grid.epochs))]),
        "batch_size": int(grid.batch_size[rng.integers(len(grid.batch_size))]),
    }


def sample_svc_params(grid, rng) -> dict:
    return {
        "c_penalty": float(grid.c_low + rng.random() * (grid.c_high - grid.c_low)),
        "class_weight": float(grid.class_weight[rng.integers(len(grid.class_weight))]),
    }


def _mixed_head_set(X, mixes, policy, target_analyte, n_mixed, seed):
    """Synthetic mixed samples in feature space with OR-rule labels."""
    if n_mixed <= 0 or X.shape[0] < 2:
        return np.empty((0, X.shape[1])), np.empty(0, dtype=bool)
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    i = rng.integers(n, size=n_mixed)
    j = (i + 1 + rng.integers(n - 1, size=n_mixed)) % n
    lam = policy.lambda_min + rng.random(n_mixed) * (policy.lambda_max - policy.lambda_min)
    Xm = lam[:, None] * X[i] + (1.0 - lam[:, None]) * X[j]
    ym = np.array([
        binary_label_of_mix(mixes[a], mixes[b], l, target_analyte)
        for a, b, l in zip(i, j, lam)
    ])
    return Xm, ym


@dataclass
class _Context:
    """Everything a family trainer needs besides the fold data."""

    policy: MixPolicy
    space: TargetSpace | None
    classify_cfg: object
    augment_cfg: object
    target_analyte: str
    n_hidden_layers: int = 3


def train_family(family: str, params: dict, X, labels, mixes, ctx: _Context, seed: int):
    """Train one model family; returns predict(X2d) -> bool array."""
    if family == "chemvise_svc":
        targets = np.stack([mixture_target(ctx.space, m) for m in mixes])
        cfg = TrainConfig(width=params["width"], learning_rate=params["learning_rate"],
                          epochs=params["epochs"], batch_size=params["batch_size"],
                          n_hidden_layers=ctx.n_hidden_layers,
                          seed=derive_seed(seed, "embedder"))
        model, _ = train_embedder(X, targets, cfg, ctx.policy)
        emb = forward_batch(model, X)
        n_mixed = int(round(ctx.augment_cfg.head_mix_ratio * X.shape[0]))
        Xm, ym = _mixed_head_set(X, mixes, ctx.policy, ctx.target_analyte,
                                 n_mixed, derive_seed(seed, "headmix"))
        head_X = np.vstack([emb, forward_batch(model, Xm)]) if Xm.size else emb
        head_y = np.concatenate([labels, ym]) if Xm.size else labels
        svc = train_linear_svc(head_X, head_y, ctx.classify_cfg.svc_c,
                               ctx.classify_cfg.svc_class_weight,
                               derive_seed(seed, "head"),
                               n_steps=ctx.classify_cfg.svc_steps)
        return lambda Xq: svc_predict_batch(svc, forward_batch(model, Xq))

    if family == "ffnn":
        cfg = TrainConfig(width=params["width"], learning_rate=params["learning_rate"],
                          epochs=params["epochs"], batch_size=params["batch_size"],
                          n_hidden_layers=ctx.n_hidden_layers,
                          seed=derive_seed(seed, "ffnn"))
        policy = ctx.policy if ctx.augment_cfg.augment_baselines else None
        model = train_ffnn_baseline(X, labels, cfg, policy)
        return lambda Xq: ffnn_predict_batch(model, Xq)

    if family == "svc_raw":
        if ctx.augment_cfg.augment_baselines:
            n_mixed = int(round(ctx.augment_cfg.head_mix_ratio * X.shape[0]))
            Xm, ym = _mixed_head_set(X, mixes, ctx.policy, ctx.target_analyte,
                                     n_mixed, derive_seed(seed, "rawmix"))
            Xfit = np.vstack([X, Xm]) if Xm.size else X
            yfit = np.concatenate([labels, ym]) if Xm.size else labels
        else:
            Xfit, yfit = X, labels
        svc = train_linear_svc(Xfit, yfit, params["c_penalty"], params["class_weight"],
                               derive_seed(seed, "svc"),
                               n_steps=ctx.classify_cfg.svc_steps)
        return lambda Xq: svc_predict_batch(svc, Xq)

    raise ConfigError(f"unknown model family {family!r}")


def grid_search(family: str, grid, budget: int, n_folds: int,
                X, labels, mixes, ctx: _Context, seed: int):
    """Budgeted random search scored by mean stratified-CV MCC.

    Ties break toward the earlier sampled configuration. Only the train
    singles ever enter; holdout doubles are untouched by construction.
    """
    if budget < 1:
        raise ConfigError("search budget must be >= 1")
    rng = np.random.default_rng(derive_seed(seed, "sampling"))
    sampler = sample_svc_params if family == "svc_raw" else sample_nn_params
    candidates = [sampler(grid, rng) for _ in range(budget)]

    folds = kfold_split(labels, n_folds, derive_seed(seed, "folds"))
    cv_table = []
    means = []
    for ci, params in enumerate(candidates):
        scores = []
        for fi, (tr, va) in enumerate(folds):
            predict = train_family(family, params, X[tr], labels[tr],
                                   [mixes[t] for t in tr], ctx,
                                   derive_seed(seed, "cv", ci, fi))
            score = mcc(confusion(predict(X[va]), labels[va]))
            scores.append(score)
            cv_table.append({"config_index": ci, "fold": fi, "mcc": score, **params})
        means.append(float(np.mean(scores)))
    best = int(np.argmax(means))
    return candidates[best], cv_table


# ---------------------------------------------------------------------------
# reports

@dataclass
class ReportRow:
    protocol: str
    model_family: str
    target_space_kind: str
    window_length_s: float
    seed: int
    fold: int
    mcc: float
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int
    hyperparameters: str = ""

    def sort_key(self):
        return (self.protocol, self.model_family, self.target_space_kind,
                self.window_length_s, self.seed, self.fold)


@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)


def _params_str(params: dict) -> str:
    return ";".join(f"{k}={fmt(v)}" for k, v in sorted(params.items()))


def _provenance(cfg: Config, master_seed: int) -> dict:
    sha = config_sha256(cfg)
    return {
        "config": config_to_dict(cfg),
        "config_sha256": sha,
        "master_seed": int(master_seed),
        "version": f"chemvise-{__version__}+cfg.{sha[:12]}",
    }


def build_spaces(cfg: Config) -> dict[str, TargetSpace]:
    """The three candidate target spaces for the configured analytes."""
    t = cfg.targets
    analytes = list(cfg.simulator.analytes)
    if t.semantic_csv:
        semantic = load_semantic(t.semantic_csv)
        missing = [a for a in analytes if a not in semantic.analyte_ids]
        if missing:
            raise DataError(f"semantic CSV lacks analytes {missing}")
    else:
        semantic = gen_synthetic_semantic(analytes, t.dimension, t.n_clusters,
                                          t.cluster_spread, t.space_seed)
    return {
        "semantic": semantic,
        "one_hot": build_one_hot(analytes, t.dimension),
        "simplex": build_simplex(analytes, t.dimension, t.space_seed),
    }


def _world_for(cfg: Config, repeat_seed: int) -> Dataset:
    if cfg.harness.dataset_dir:
        return load_dataset(cfg.harness.dataset_dir, cfg.simulator.target_analyte)
    return build_world(cfg.simulator, repeat_seed)


def _policy(cfg: Config, seed: int) -> MixPolicy:
    a = cfg.augment
    return MixPolicy(a.lambda_min, a.lambda_max, a.mix_probability, seed)


def _evaluate(predict, X, labels):
    counts = confusion(predict(X), labels)
    return counts, mcc(counts), counts.accuracy


def run_representation_protocol(config: Config) -> ExperimentReport:
    """MCC on holdout doubles per (target-space kind x classifier head),
    repeated over n_repeats master seeds."""
    config.validate()
    master = resolve_master_seed(config)
    spaces = build_spaces(config)
    window = config.harness.representation_window_s
    pre = config.simulator.pre_onset_s
    ecfg = config.embedder

    rows = []
    for rep in range(config.harness.n_repeats):
        rep_seed = derive_seed(master, "rep", rep)
        world = _world_for(config, rep_seed)
        X, labels = features_and_labels(world.train, window, pre)
        mixes = [t.mix for t in world.train]
        policy = _policy(config, rep_seed)

        for kind in ("semantic", "one_hot", "simplex"):
            space = spaces[kind]
            targets = np.stack([mixture_target(space, m) for m in mixes])
            cfg_t = TrainConfig(width=ecfg.width, learning_rate=ecfg.learning_rate,
                                epochs=ecfg.epochs, batch_size=ecfg.batch_size,
                                n_hidden_layers=ecfg.n_hidden_layers,
                                seed=derive_seed(rep_seed, "embedder", kind))
            model, _ = train_embedder(X, targets, cfg_t, policy)
            emb = forward_batch(model, X)
            n_mixed = int(round(config.augment.head_mix_ratio * X.shape[0]))
            Xm, ym = _mixed_head_set(X, mixes, policy,
                                     config.simulator.target_analyte, n_mixed,
                                     derive_seed(rep_seed, "headmix", kind))
            head_X = np.vstack([emb, forward_batch(model, Xm)]) if Xm.size else emb
            head_y = np.concatenate([labels, ym]) if Xm.size else labels

            svc = train_linear_svc(head_X, head_y, config.classify.svc_c,
                                   config.classify.svc_class_weight,
                                   derive_seed(rep_seed, "head", kind),
                                   n_steps=config.classify.svc_steps)
            pca = pca_fit(head_X, 2)
            svc2d = train_linear_svc(pca_transform_batch(pca, head_X), head_y,
                                     config.classify.svc_c,
                                     config.classify.svc_class_weight,
                                     derive_seed(rep_seed, "head2d", kind),
                                     n_steps=config.classify.svc_steps)

            world.freeze()
            holdout = world.holdout_trials()
            Xh, yh = features_and_labels(holdout, window, pre)
            Eh = forward_batch(model, Xh)

            heads = {
                "knn": lambda E: knn_predict_batch(head_X, head_y, E, config.classify.knn_k),
                "svc": lambda E: svc_predict_batch(svc, E),
                "svc_pca2": lambda E: svc_predict_batch(svc2d, pca_transform_batch(pca, E)),
            }
            params = {"width": ecfg.width, "learning_rate": ecfg.learning_rate,
                      "epochs": ecfg.epochs, "batch_size": ecfg.batch_size}
            for head, predictor in heads.items():
                counts = confusion(predictor(Eh), yh)
                rows.append(ReportRow(
                    protocol="representation",
                    model_family=f"chemvise_{head}",
                    target_space_kind=kind,
                    window_length_s=window,
                    seed=rep, fold=-1,
                    mcc=mcc(counts), accuracy=counts.accuracy,
                    tp=counts.tp, fp=counts.fp, tn=counts.tn, fn=counts.fn,
                    hyperparameters=_params_str(params)))

    rows.sort(key=ReportRow.sort_key)
    return ExperimentReport(rows=rows, provenance=_provenance(config, master))


def run_window_sweep(config: Config) -> ExperimentReport:
    """Grid-searched holdout MCC per (window length x model family),
    repeated over n_repeats master seeds."""
    config.validate()
    master = resolve_master_seed(config)
    spaces = build_spaces(config)
    space = spaces[config.targets.kind]
    pre = config.simulator.pre_onset_s
    h = config.harness

    grids = {"chemvise_svc": h.chemvise_grid, "ffnn": h.ffnn_grid, "svc_raw": h.svc_grid}
    rows = []
    for rep in range(h.n_repeats):
        rep_seed = derive_seed(master, "sweep", rep)
        world = _world_for(config, rep_seed)
        mixes = [t.mix for t in world.train]
        policy = _policy(config, rep_seed)
        ctx = _Context(policy=policy, space=space, classify_cfg=config.classify,
                       augment_cfg=config.augment,
                       target_analyte=config.simulator.target_analyte,
                       n_hidden_layers=config.embedder.n_hidden_layers)

        for window in h.window_lengths_s:
            X, labels = features_and_labels(world.train, window, pre)
            holdout_cache = {}
            for family in FAMILIES:
                arm_seed = derive_seed(rep_seed, "arm", family, fmt(window))
                best, _cv = grid_search(family, grids[family], h.search_budget,
                                        h.n_folds, X, labels, mixes, ctx, arm_seed)
                predict = train_family(family, best, X, labels, mixes, ctx,
                                       derive_seed(arm_seed, "final"))
                world.freeze()
                if "feat" not in holdout_cache:
                    holdout_cache["feat"] = features_and_labels(
                        world.holdout_trials(), window, pre)
                Xh, yh = holdout_cache["feat"]
                counts = confusion(predict(Xh), yh)
                rows.append(ReportRow(
                    protocol="window",
                    model_family=family,
                    target_space_kind=config.targets.kind,
                    window_length_s=window,
                    seed=rep, fold=-1,
                    mcc=mcc(counts), accuracy=counts.accuracy,
                    tp=counts.tp, fp=counts.fp, tn=counts.tn, fn=counts.fn,
                    hyperparameters=_params_str(best)))

    rows.sort(key=ReportRow.sort_key)
    return ExperimentReport(rows=rows, provenance=_provenance(config, master))


# ---------------------------------------------------------------------------
# emission

_REPORT_HEADER = ("protocol,model_family,target_space_kind,window_length_s,"
                  "seed,fold,mcc,accuracy,tp,fp,tn,fn,hyperparameters")
_SUMMARY_HEADER = ("protocol,model_family,target_space_kind,window_length_s,"
                   "n,median_mcc,iqr_mcc")


def emit_report(report: ExperimentReport, out_dir) -> dict[str, Path]:
    """Write report.csv, summary.csv (median and IQR of MCC per group) and
    provenance.json. Re-running with identical inputs is byte-identical."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    lines = [_REPORT_HEADER]
    for r in sorted(report.rows, key=ReportRow.sort_key):
        lines.append(",".join([
            r.protocol, r.model_family, r.target_space_kind, fmt(r.window_length_s),
            str(r.seed), str(r.fold), fmt(r.mcc), fmt(r.accuracy),
            str(r.tp), str(r.fp), str(r.tn), str(r.fn),
            '"' + r.hyperparameters + '"']))
    report_path = out / "report.csv"
    report_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    groups: dict[tuple, list[float]] = {}
    for r in report.rows:
        key = (r.protocol, r.model_family, r.target_space_kind, r.window_length_s)
        groups.setdefault(key, []).append(r.mcc)
    slines = [_SUMMARY_HEADER]
    for key in sorted(groups):
        vals = np.array(groups[key])
        q25, q75 = np.percentile(vals, [25, 75])
        slines.append(",".join([
            key[0], key[1], key[2], fmt(key[3]), str(vals.size),
            fmt(float(np.median(vals))), fmt(float(q75 - q25))]))
    summary_path = out / "summary.csv"
    summary_path.write_text("\n".join(slines) + "\n", encoding="utf-8")

    prov_path = out / "provenance.json"
    prov_path.write_text(
        json.dumps(report.provenance, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    return {"report": report_path, "summary": summary_path, "provenance": prov_path}


def read_report(path) -> list[ReportRow]:
    """Parse report.csv back into rows (inverse of emit_report)."""
    path = Path(path)
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines or lines[0] != _REPORT_HEADER:
        raise ParseError(f"{path}: line 1: unexpected report header")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",", 12)
        if len(cells) != 13:
            raise ParseError(f"{path}: line {lineno}: expected 13 cells")
        hp = cells[12]
        if not (hp.startswith('"') and hp.endswith('"')):
            raise ParseError(f"{path}: line {lineno}: unquoted hyperparameters cell")
        try:
            rows.append(ReportRow(
                protocol=cells[0], model_family=cells[1], target_space_kind=cells[2],
                window_length_s=float(cells[3]), seed=int(cells[4]), fold=int(cells[5]),
                mcc=float(cells[6]), accuracy=float(cells[7]),
                tp=int(cells[8]), fp=int(cells[9]), tn=int(cells[10]), fn=int(cells[11]),
                hyperparameters=hp[1:-1]))
        except ValueError as e:
            raise ParseError(f"{path}: line {lineno}: {e}") from None
    return rows
