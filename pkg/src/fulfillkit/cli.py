"""Command-line pipeline from corpus to per-project delivery forecasts.

Each subcommand loads the run configuration, derives its own seed from the
master seed, resolves input artifacts (an explicit ``[paths]`` entry wins,
otherwise the run directory), and writes outputs with a provenance header.
Rerunning a stage with the same configuration rewrites the same bytes, so
a restart is a no-op.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import (
    PredictionRow,
    Provenance,
    load_classifier,
    load_regressor,
    load_semantic_model,
    read_feature_matrix,
    save_classifier,
    save_regressor,
    save_semantic_model,
    write_ablation_table,
    write_boruta_result,
    write_difficulty_report,
    write_eval_report,
    write_feature_matrix,
    write_prediction,
    write_vif_report,
)
from .clustering import build_semantic_model, cluster_difficulty
from .config import RunConfig, config_hash, load_config
from .corpus import Corpus, load_corpus, save_corpus
from .embeddings import (
    build_cooccurrence,
    load_embeddings,
    save_embeddings,
    train_embeddings,
)
from .errors import DataError, FulfillkitError
from .evaluation import (
    _column_medians,
    _imputed,
    _selected_indices,
    ablation,
    evaluate_all,
)
from .features import FeatureContext, FeatureMatrix, TimePoint, extract_matrix, log1p_matrix
from .models import (
    boxcox_apply,
    boxcox_fit,
    enet_fit_cv,
    enet_predict,
    gbt_fit,
    gbt_predict,
    recommend_duration,
)
from .selection import boruta_select, stepwise_aic, vif_eliminate
from .synth import SynthConfig, generate_synthetic
from .text import load_category_dictionary, load_stopwords, tokenize

# Fixed per-stage indices keep every stage's stream independent of the
# others, so adding a command never shifts an existing one's draws.
_STAGE_SEEDS = {
    "synth": 0,
    "embed": 1,
    "cluster": 2,
    "select": 3,
    "train-classifier": 4,
    "train-regressor": 5,
    "evaluate": 6,
    "ablate": 7,
}

_TP_CHOICES = tuple(tp.value for tp in TimePoint)


def stage_seed(master_seed: int, stage: str) -> int:
    """Deterministic per-stage seed derived from the master seed."""
    sequence = np.random.SeedSequence([master_seed, _STAGE_SEEDS[stage]])
    return int(sequence.generate_state(1)[0])


# -- artifact resolution ---------------------------------------------------------


def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _resolve(
    cfg: RunConfig, explicit: str | None, filename: str, producer: str
) -> Path:
    if explicit:
        return Path(explicit)
    candidate = Path(cfg.out_dir) / filename
    if candidate.exists():
        return candidate
    raise DataError(
        f"{filename} not found in {cfg.out_dir}; run `fulfillkit {producer}` first"
        " or point a [paths] entry at an existing file"
    )


def _optional(cfg: RunConfig, explicit: str | None, filename: str) -> Path | None:
    if explicit:
        return Path(explicit)
    candidate = Path(cfg.out_dir) / filename
    return candidate if candidate.exists() else None


def _provenance(cfg: RunConfig) -> Provenance:
    return Provenance(config_hash=config_hash(cfg), master_seed=cfg.master_seed)


def _load_run_corpus(cfg: RunConfig) -> Corpus:
    projects = _resolve(cfg, cfg.paths.corpus, "projects.jsonl", "synth")
    events = _optional(cfg, cfg.paths.events, "events.jsonl")
    labels = _optional(cfg, cfg.paths.labels, "labels.jsonl")
    return load_corpus(projects, events_path=events, labels_path=labels)


def _embedding_table(cfg: RunConfig):
    path = _resolve(cfg, cfg.paths.embeddings, "embeddings.txt", "embed")
    return load_embeddings(path)


def _build_context(cfg: RunConfig) -> FeatureContext:
    table = _embedding_table(cfg)
    model = load_semantic_model(_resolve(cfg, None, "semantic_model.json", "cluster"))
    return FeatureContext(
        semantic_model=model,
        embedding_table=table,
        liwc_dictionary=load_category_dictionary(cfg.paths.dictionary),
        liwc_categories=cfg.features.liwc_categories,
        stopwords=load_stopwords(cfg.paths.stopwords),
        n_slots=cfg.features.n_slots,
        semantic_mode=cfg.features.semantic_mode,
    )


def _chosen_tps(cfg: RunConfig, args, default: tuple[str, ...] | None = None) -> list[TimePoint]:
    names = args.tp or list(default if default is not None else cfg.features.tps)
    return [TimePoint.parse(name) for name in names]


def _emit(path: Path) -> None:
    print(f"wrote {path}")


# -- subcommands ---------------------------------------------------------------


def cmd_synth(cfg: RunConfig, args) -> None:
    seed = stage_seed(cfg.master_seed, "synth")
    corpus, _ = generate_synthetic(
        SynthConfig(
            n_projects=cfg.synth.n_projects,
            noise=cfg.synth.noise,
            duration_coverage=cfg.synth.duration_coverage,
        ),
        seed=seed,
    )
    out = _out_dir(cfg)
    save_corpus(
        corpus,
        out / "projects.jsonl",
        events_path=out / "events.jsonl",
        labels_path=out / "labels.jsonl",
        meta=_provenance(cfg).as_dict(),
    )
    print(f"generated {len(corpus.projects)} projects, {len(corpus.labels)} labels")
    for name in ("projects.jsonl", "events.jsonl", "labels.jsonl"):
        _emit(out / name)


def cmd_embed(cfg: RunConfig, args) -> None:
    corpus = _load_run_corpus(cfg)
    stop = load_stopwords(cfg.paths.stopwords)
    streams = [
        tokenize(reward.description, stop)
        for pid in sorted(corpus.projects)
        for reward in corpus.projects[pid].rewards
    ]
    cooc = build_cooccurrence(
        streams, window=cfg.embeddings.window, min_count=cfg.embeddings.min_count
    )
    table = train_embeddings(
        cooc,
        dim=cfg.embeddings.dim,
        iters=cfg.embeddings.iters,
        seed=stage_seed(cfg.master_seed, "embed"),
    )
    out = _out_dir(cfg)
    path = out / "embeddings.txt"
    save_embeddings(table, path, comments=_provenance(cfg).comment_lines())
    print(f"trained {len(table.vocab)} word vectors of dimension {table.dim}")
    _emit(path)


def cmd_cluster(cfg: RunConfig, args) -> None:
    corpus = _load_run_corpus(cfg)
    table = _embedding_table(cfg)
    stop = load_stopwords(cfg.paths.stopwords)
    model = build_semantic_model(
        corpus,
        table,
        seed=stage_seed(cfg.master_seed, "cluster"),
        stopwords=stop,
        k1_range=(cfg.clustering.k1_min, cfg.clustering.k1_max),
        k2_range=(cfg.clustering.k2_min, cfg.clustering.k2_max),
    )
    out = _out_dir(cfg)
    prov = _provenance(cfg)
    _emit(save_semantic_model(model, out / "semantic_model.json", prov))
    labeled = [
        (corpus.projects[pid], corpus.labels[pid]) for pid in corpus.labeled_ids()
    ]
    if not labeled:
        raise DataError("difficulty report needs labels; none found in the corpus")
    report = cluster_difficulty(labeled, model, table, stopwords=stop)
    print(
        f"selected k1={model.word_model.k} word clusters,"
        f" k2={model.reward_model.k} reward clusters"
    )
    _emit(write_difficulty_report(report, out / "difficulty.csv", prov))


def cmd_featurize(cfg: RunConfig, args) -> None:
    corpus = _load_run_corpus(cfg)
    context = _build_context(cfg)
    out = _out_dir(cfg)
    prov = _provenance(cfg)
    for tp in _chosen_tps(cfg, args):
        matrix = log1p_matrix(extract_matrix(corpus, context, tp))
        _emit(write_feature_matrix(matrix, out / f"features_{tp.value}.csv", prov))


def _labeled_rows(matrix: FeatureMatrix, corpus: Corpus) -> tuple[list[int], np.ndarray]:
    rows = [i for i, pid in enumerate(matrix.ids) if pid in corpus.labels]
    if not rows:
        raise DataError("no labeled projects among the feature rows")
    y = np.array(
        [1.0 if corpus.labels[matrix.ids[i]].on_time else 0.0 for i in rows]
    )
    return rows, y


def cmd_select(cfg: RunConfig, args) -> None:
    if cfg.selection.order == "none":
        print("selection order is none; nothing to do")
        return
    corpus = _load_run_corpus(cfg)
    out = _out_dir(cfg)
    prov = _provenance(cfg)
    seed = stage_seed(cfg.master_seed, "select")
    for tp in _chosen_tps(cfg, args, default=("tp4",)):
        matrix = read_feature_matrix(
            _resolve(cfg, None, f"features_{tp.value}.csv", "featurize")
        )
        rows, y = _labeled_rows(matrix, corpus)
        values = matrix.values[rows]
        ids = tuple(matrix.ids[i] for i in rows)
        imputed = _imputed(values, _column_medians(values))
        kept, report = vif_eliminate(
            FeatureMatrix(ids, matrix.specs, imputed, matrix.tp, matrix.transformed),
            threshold=cfg.selection.vif_threshold,
        )
        _emit(write_vif_report(kept, report, out / f"selection_vif_{tp.value}.csv", prov))
        if cfg.selection.order == "vif_boruta":
            kept_set = set(kept)
            positions = [i for i, name in enumerate(matrix.names) if name in kept_set]
            subset = FeatureMatrix(
                ids,
                tuple(matrix.specs[i] for i in positions),
                values[:, positions],
                matrix.tp,
                matrix.transformed,
            )
            result = boruta_select(
                subset,
                y,
                n_runs=cfg.selection.boruta_runs,
                alpha=cfg.selection.boruta_alpha,
                seed=seed,
                n_trees=cfg.selection.boruta_trees,
            )
            _emit(
                write_boruta_result(
                    result, out / f"selection_boruta_{tp.value}.csv", prov
                )
            )


def cmd_train_classifier(cfg: RunConfig, args) -> None:
    corpus = _load_run_corpus(cfg)
    context = _build_context(cfg)
    out = _out_dir(cfg)
    prov = _provenance(cfg)
    seed = stage_seed(cfg.master_seed, "train-classifier")
    ids = corpus.labeled_ids()
    if not ids:
        raise DataError("training a classifier needs labels; none found in the corpus")
    y = np.array([1.0 if corpus.labels[pid].on_time else 0.0 for pid in ids])
    for tp in _chosen_tps(cfg, args):
        matrix = log1p_matrix(extract_matrix(corpus, context, tp, ids))
        indices = _selected_indices(
            matrix.values,
            matrix.names,
            y,
            cfg.selection.order,
            seed,
            cfg.selection.vif_threshold,
            cfg.selection.boruta_runs,
            cfg.selection.boruta_alpha,
            cfg.selection.boruta_trees,
            None,
        )
        model = gbt_fit(
            matrix.values[:, indices],
            y,
            params=cfg.classifier,
            seed=seed,
            feature_names=[matrix.names[i] for i in indices],
        )
        _emit(save_classifier(model, out / f"classifier_{tp.value}.json", prov))


def cmd_train_regressor(cfg: RunConfig, args) -> None:
    corpus = _load_run_corpus(cfg)
    context = _build_context(cfg)
    out = _out_dir(cfg)
    prov = _provenance(cfg)
    seed = stage_seed(cfg.master_seed, "train-regressor")
    ids = [
        pid
        for pid in corpus.labeled_ids()
        if corpus.labels[pid].actual_duration_days is not None
    ]
    if not ids:
        raise DataError("training a regressor needs observed delivery durations")
    y_days = np.array([float(corpus.labels[pid].actual_duration_days) for pid in ids])
    for tp in _chosen_tps(cfg, args):
        matrix = log1p_matrix(extract_matrix(corpus, context, tp, ids))
        medians = _column_medians(matrix.values)
        imputed = _imputed(matrix.values, medians)
        if cfg.regressor.selection == "vif":
            kept, _ = vif_eliminate(imputed, threshold=cfg.selection.vif_threshold)
            indices = sorted(kept)
        else:
            indices = list(range(len(matrix.names)))
        X = imputed[:, indices]
        transform = boxcox_fit(X, y_days)
        z = boxcox_apply(y_days, transform)
        if cfg.regressor.stepwise:
            positions = sorted(stepwise_aic(X, z))
        else:
            positions = list(range(X.shape[1]))
        if not positions:
            raise DataError(
                "stepwise search kept no features; rerun with regressor.stepwise=false"
            )
        retained = [matrix.names[indices[p]] for p in positions]
        model = enet_fit_cv(
            X[:, positions], z, seed=seed, feature_names=retained
        )
        retained_medians = medians[[indices[p] for p in positions]]
        _emit(
            save_regressor(
                model,
                transform,
                out / f"regressor_{tp.value}.json",
                prov,
                medians=retained_medians,
            )
        )


def cmd_evaluate(cfg: RunConfig, args) -> None:
    corpus = _load_run_corpus(cfg)
    context = _build_context(cfg)
    report = evaluate_all(
        corpus,
        context,
        tps=_chosen_tps(cfg, args),
        k=cfg.evaluation.folds,
        seed=stage_seed(cfg.master_seed, "evaluate"),
        params=cfg.classifier,
        selection=cfg.selection.order,
        stepwise=cfg.regressor.stepwise,
        pairing=cfg.evaluation.pairing,
        vif_threshold=cfg.selection.vif_threshold,
        boruta_runs=cfg.selection.boruta_runs,
        boruta_alpha=cfg.selection.boruta_alpha,
        boruta_trees=cfg.selection.boruta_trees,
    )
    for path in write_eval_report(report, corpus, _out_dir(cfg), _provenance(cfg)):
        _emit(path)


def cmd_ablate(cfg: RunConfig, args) -> None:
    tps = _chosen_tps(cfg, args, default=("tp4",))
    if len(tps) != 1:
        raise DataError("ablate works one time point at a time; pass a single --tp")
    corpus = _load_run_corpus(cfg)
    context = _build_context(cfg)
    table = ablation(
        corpus,
        context,
        tp=tps[0],
        k=cfg.evaluation.folds,
        seed=stage_seed(cfg.master_seed, "ablate"),
        params=cfg.classifier,
        selection="none" if cfg.selection.order == "none" else "vif",
        vif_threshold=cfg.selection.vif_threshold,
    )
    _emit(write_ablation_table(table, _out_dir(cfg) / "ablation.csv", _provenance(cfg)))


# -- predict ---------------------------------------------------------------------


def _regression_rmse_table(cfg: RunConfig) -> dict[str, float]:
    """Per-time-point regression RMSE parsed back from the evaluation report."""
    path = _resolve(cfg, None, "eval_report.csv", "evaluate")
    rows = [
        line
        for line in path.read_text(encoding="utf-8").splitlines()
        if line and not line.startswith("#")
    ]
    if not rows:
        raise DataError(f"eval report {path} is empty")
    reader = csv.reader(rows)
    header = next(reader)
    try:
        tp_col = header.index("tp")
        task_col = header.index("task")
        rmse_col = header.index("rmse")
    except ValueError as exc:
        raise DataError(f"eval report {path} misses a column: {exc}") from None
    table: dict[str, float] = {}
    for record in reader:
        if record[task_col] == "regression" and record[rmse_col]:
            table[record[tp_col]] = float(record[rmse_col])
    return table


def _model_columns(matrix: FeatureMatrix, wanted: tuple[str, ...], kind: str) -> list[int]:
    lookup = {name: i for i, name in enumerate(matrix.names)}
    missing = [name for name in wanted if name not in lookup]
    if missing:
        raise DataError(
            f"{kind} expects features absent at {matrix.tp.value}: {', '.join(missing)}"
        )
    return [lookup[name] for name in wanted]


def cmd_predict(cfg: RunConfig, args) -> None:
    corpus = _load_run_corpus(cfg)
    if args.project not in corpus.projects:
        raise DataError(f"unknown project id {args.project!r}")
    project = corpus.projects[args.project]
    events = corpus.events_for(args.project)
    if args.now is not None:
        now = float(args.now)
    elif events:
        now = max(float(ev.ts) for ev in events)
    else:
        now = float(project.launch_ts)

    context = _build_context(cfg)
    rmse_table = _regression_rmse_table(cfg)
    rows: list[PredictionRow] = []
    for tp in _chosen_tps(cfg, args):
        if tp.cutoff(project) > now:
            rows.append(PredictionRow(tp.value, False, None, None, None))
            continue
        classifier = load_classifier(
            _resolve(cfg, None, f"classifier_{tp.value}.json", "train-classifier")
        )
        regressor, transform, medians = load_regressor(
            _resolve(cfg, None, f"regressor_{tp.value}.json", "train-regressor")
        )
        if medians is None:
            raise DataError(
                f"regressor_{tp.value}.json lacks imputation medians; retrain it"
            )
        matrix = log1p_matrix(extract_matrix(corpus, context, tp, [args.project]))

        cls_cols = _model_columns(matrix, classifier.feature_names, "classifier")
        probability = float(gbt_predict(classifier, matrix.values[:, cls_cols])[0])

        reg_cols = _model_columns(matrix, regressor.feature_names, "regressor")
        x = matrix.values[0, reg_cols].copy()
        gaps = np.isnan(x)
        x[gaps] = medians[gaps]
        days = float(enet_predict(regressor, transform, x[None, :])[0])
        if tp.value not in rmse_table:
            raise DataError(
                f"eval report has no regression row for {tp.value};"
                f" rerun `fulfillkit evaluate` with --tp {tp.value}"
            )
        buffered = recommend_duration(days, tp, {tp: rmse_table[tp.value]})
        rows.append(PredictionRow(tp.value, True, probability, days, buffered))

    out = _out_dir(cfg)
    path = write_prediction(rows, out / f"prediction_{args.project}.csv", _provenance(cfg))
    for row in rows:
        if row.available:
            print(
                f"{row.tp}: p(on_time)={row.probability_on_time:.3f}"
                f" estimated={row.estimated_days:.1f}d"
                f" buffered={row.buffered_days}d"
            )
        else:
            print(f"{row.tp}: unavailable (cutoff beyond observed data)")
    _emit(path)


# -- argument parsing ------------------------------------------------------------


_COMMANDS = {
    "synth": cmd_synth,
    "embed": cmd_embed,
    "cluster": cmd_cluster,
    "featurize": cmd_featurize,
    "select": cmd_select,
    "train-classifier": cmd_train_classifier,
    "train-regressor": cmd_train_regressor,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "ablate": cmd_ablate,
}

_HELP = {
    "synth": "generate a synthetic corpus with labels and event streams",
    "embed": "train word vectors on reward descriptions",
    "cluster": "build the semantic difficulty model and cluster report",
    "featurize": "extract per-time-point feature tables",
    "select": "report collinearity and relevance screening results",
    "train-classifier": "fit the on-time/late boosted-tree model",
    "train-regressor": "fit the delivery-duration model",
    "evaluate": "cross-validated comparison against the baselines",
    "predict": "per-project forecast across time points",
    "ablate": "accuracy impact of removing feature groups",
}

_TP_COMMANDS = {
    "featurize",
    "select",
    "train-classifier",
    "train-regressor",
    "evaluate",
    "predict",
    "ablate",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fulfillkit",
        description="Reward-delivery modeling pipeline for crowdfunding projects.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, handler in _COMMANDS.items():
        sub = subparsers.add_parser(name, help=_HELP[name])
        sub.set_defaults(handler=handler, tp=None)
        sub.add_argument("--config", default=None, help="run configuration INI file")
        sub.add_argument(
            "--seed", type=int, default=None, help="override run.master_seed"
        )
        sub.add_argument("--out", default=None, help="override run.out_dir")
        sub.add_argument(
            "--jobs",
            type=int,
            default=None,
            help="override run.jobs (stages currently run single-process)",
        )
        if name in _TP_COMMANDS:
            sub.add_argument(
                "--tp",
                action="append",
                choices=_TP_CHOICES,
                help="restrict to a time point (repeatable)",
            )
        if name == "predict":
            sub.add_argument("--project", required=True, help="project id to forecast")
            sub.add_argument(
                "--now",
                type=float,
                default=None,
                help="epoch-seconds vantage point; defaults to the last observed event",
            )
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides: dict[tuple[str, str], str] = {}
    if args.seed is not None:
        overrides[("run", "master_seed")] = str(args.seed)
    if args.out is not None:
        overrides[("run", "out_dir")] = args.out
    if args.jobs is not None:
        overrides[("run", "jobs")] = str(args.jobs)
    cfg = load_config(args.config, overrides=overrides)
    args.handler(cfg, args)
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        return run(argv)
    except FulfillkitError as exc:
        print(f"fulfillkit: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
