"""End-to-end experiment: ingest -> select -> detect -> train -> evaluate.

The experiment has two arms sharing one frozen test partition. Arm A
trains the five baseline classifiers on the full training partition; arm B
first drops the training rows the isolation forest flags as outliers, then
retrains. The report compares both arms per classifier.

Every stage reads and writes plain artifacts (CSV/JSON) in the output
directory, so the monolithic run and the stage-by-stage subcommands are
the same code path and produce identical bytes for identical seeds. All
stage seeds derive from the single master seed.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import classifiers as clf
from . import iforest
from .data import (
    Dataset,
    SplitSpec,
    apply_label_encoder,
    apply_scaler,
    fit_label_encoder,
    fit_scaler,
    load_csv,
    save_transforms,
    train_test_split,
    write_csv,
)
from .errors import IsoguardError, PipelineError
from .evaluation import (
    ClassifierEvaluation,
    ComparisonReport,
    compare,
    evaluate_predictions,
    render_table,
    report_to_json,
    write_roc_csv,
)
from .feature_selection import ExtraTreesParams, load_rfe, rfe_select, save_rfe
from .prng import derive_seed
from .synthetic import SyntheticSpec, generate_synthetic, write_injection_mask

MODELS = ("knn", "svm", "nb", "lr", "abc")


@dataclass(frozen=True)
class SplitSettings:
    test_fraction: float = 0.2
    stratified: bool = True


@dataclass(frozen=True)
class SelectSettings:
    target_count: int = 15
    step: int = 1
    n_trees: int = 50
    max_depth: int | None = None
    min_samples_split: int = 2
    sample_cap: int | None = None  # optional row cap for the selector fits on large data


@dataclass(frozen=True)
class ThresholdSettings:
    mode: str = "fixed"  # "fixed" or "contamination"
    tau: float = 0.5
    fraction: float = 0.1


@dataclass(frozen=True)
class ForestSettings:
    trees: int = 100
    subsample: int = 256  # clamped to the training row count at fit time
    threshold: ThresholdSettings = field(default_factory=ThresholdSettings)


@dataclass(frozen=True)
class ClassifierSettings:
    knn_k: int = 5
    nb_var_smoothing: float = 1e-9
    lr_learning_rate: float = 0.1
    lr_epochs: int = 300
    lr_l2: float = 1e-4
    svm_lambda: float = 1e-4
    svm_epochs: int = 300
    adaboost_stumps: int = 50


@dataclass(frozen=True)
class PipelineConfig:
    input: str
    target_column: str = "class"
    seed: int | None = None
    out_dir: str | None = None
    split: SplitSettings = field(default_factory=SplitSettings)
    select: SelectSettings = field(default_factory=SelectSettings)
    forest: ForestSettings = field(default_factory=ForestSettings)
    classifiers: ClassifierSettings = field(default_factory=ClassifierSettings)
    scatter_x: str | None = None
    scatter_y: str | None = None
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)


def _section(doc: dict, key: str, cls, current):
    raw = doc.get(key)
    if raw is None:
        return current
    if not isinstance(raw, dict):
        raise IsoguardError(f"config section {key!r} must be an object")
    known = {f.name for f in cls.__dataclass_fields__.values()} if hasattr(cls, "__dataclass_fields__") else set()
    unknown = set(raw) - known
    if unknown:
        raise IsoguardError(f"unknown keys in config section {key!r}: {sorted(unknown)}")
    if key == "forest" and "threshold" in raw:
        raw = dict(raw)
        raw["threshold"] = _section(raw, "threshold", ThresholdSettings, ThresholdSettings())
    return replace(current, **raw)


def config_from_dict(doc: dict) -> PipelineConfig:
    top_known = {
        "input",
        "target_column",
        "seed",
        "out_dir",
        "split",
        "select",
        "forest",
        "classifiers",
        "scatter_x",
        "scatter_y",
        "synthetic",
    }
    unknown = set(doc) - top_known
    if unknown:
        raise IsoguardError(f"unknown config keys: {sorted(unknown)}")
    if "input" not in doc:
        raise IsoguardError("config must name an input CSV path")
    cfg = PipelineConfig(input=str(doc["input"]))
    cfg = replace(
        cfg,
        target_column=str(doc.get("target_column", cfg.target_column)),
        seed=int(doc["seed"]) if doc.get("seed") is not None else None,
        out_dir=str(doc["out_dir"]) if doc.get("out_dir") is not None else None,
        scatter_x=doc.get("scatter_x"),
        scatter_y=doc.get("scatter_y"),
    )
    cfg = replace(
        cfg,
        split=_section(doc, "split", SplitSettings, cfg.split),
        select=_section(doc, "select", SelectSettings, cfg.select),
        forest=_section(doc, "forest", ForestSettings, cfg.forest),
        classifiers=_section(doc, "classifiers", ClassifierSettings, cfg.classifiers),
        synthetic=_section(doc, "synthetic", SyntheticSpec, cfg.synthetic),
    )
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise IsoguardError(f"no such config file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise IsoguardError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise IsoguardError(f"{path}: config must be a JSON object")
    return config_from_dict(doc)


def config_to_json(cfg: PipelineConfig) -> str:
    return json.dumps(asdict(cfg), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# artifact helpers


def _require_seed(cfg: PipelineConfig) -> int:
    if cfg.seed is None:
        raise IsoguardError("a master seed is required (config field 'seed' or --seed)")
    return cfg.seed


def _stage_error(stage: str, err: Exception) -> PipelineError:
    return PipelineError(f"{stage}: {err}")


def _read_artifact_csv(out: Path, name: str, target_column: str) -> Dataset:
    path = out / name
    if not path.exists():
        raise IsoguardError(f"missing artifact {name}; run the earlier stages into {out} first")
    return load_csv(path, target_column=target_column)


def _write_verdicts(path: Path, verdicts: list[iforest.OutlierVerdict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "score", "mean_path", "label"])
        for i, v in enumerate(verdicts):
            writer.writerow([i, repr(v.score.s), repr(v.score.mean_path_length), v.label])


def _read_verdict_labels(path: Path) -> np.ndarray:
    if not path.exists():
        raise IsoguardError(f"missing artifact {path.name}; run the detect stage first")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        return np.array([int(rec[3]) for rec in reader], dtype=np.int64)


def emit_scatter(
    ds: Dataset,
    verdict_labels: np.ndarray,
    x_col: str,
    y_col: str,
    full_path: str | Path,
    clean_path: str | Path,
) -> None:
    """Write (x, y, verdict, class) CSVs: the full data and the verdict=+1 subset."""
    xi = ds.column_index(x_col)
    yi = ds.column_index(y_col)
    if len(verdict_labels) != ds.n_rows:
        raise IsoguardError("verdicts are not aligned with the dataset rows")
    X = ds.matrix()

    def write(path: str | Path, keep: np.ndarray) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([x_col, y_col, "verdict", ds.target_name])
            for i in np.flatnonzero(keep):
                writer.writerow([repr(X[i, xi]), repr(X[i, yi]), int(verdict_labels[i]), int(ds.target[i])])

    write(full_path, np.ones(ds.n_rows, dtype=bool))
    write(clean_path, verdict_labels == 1)


# ---------------------------------------------------------------------------
# stages


def stage_ingest(cfg: PipelineConfig, out: Path) -> None:
    """Load, split, fit encoder+scaler on train only, transform both partitions."""
    try:
        seed = _require_seed(cfg)
        raw = load_csv(cfg.input, target_column=cfg.target_column)
        split = SplitSpec(
            test_fraction=cfg.split.test_fraction,
            seed=derive_seed(seed, "split"),
            stratified=cfg.split.stratified,
        )
        train_raw, test_raw = train_test_split(raw, split)
        encoder = fit_label_encoder(train_raw)
        train_enc = apply_label_encoder(train_raw, encoder)
        test_enc = apply_label_encoder(test_raw, encoder)
        scaler = fit_scaler(train_enc)
        train = apply_scaler(train_enc, scaler)
        test = apply_scaler(test_enc, scaler)
        save_transforms(encoder, scaler, out / "transforms.json")
        write_csv(train, out / "train.csv")
        write_csv(test, out / "test.csv")
    except IsoguardError as e:
        raise _stage_error("ingest", e) from e


def stage_select(cfg: PipelineConfig, out: Path) -> None:
    """Recursive feature elimination on the transformed training partition."""
    try:
        seed = _require_seed(cfg)
        train = _read_artifact_csv(out, "train.csv", cfg.target_column)
        X = train.matrix()
        y = train.target
        if cfg.select.sample_cap is not None and cfg.select.sample_cap < X.shape[0]:
            rng = np.random.default_rng(derive_seed(seed, "select-sample"))
            keep = np.sort(rng.permutation(X.shape[0])[: cfg.select.sample_cap])
            X, y = X[keep], y[keep]
        params = ExtraTreesParams(
            n_trees=cfg.select.n_trees,
            max_depth=cfg.select.max_depth,
            min_samples_split=cfg.select.min_samples_split,
            seed=derive_seed(seed, "select"),
        )
        result = rfe_select(X, y, target_count=cfg.select.target_count, step=cfg.select.step, params=params)
        save_rfe(result, list(train.feature_names), out / "rfe.json")
    except IsoguardError as e:
        raise _stage_error("select", e) from e


def _threshold_kwargs(ts: ThresholdSettings) -> dict:
    if ts.mode == "fixed":
        return {"threshold": ts.tau}
    if ts.mode == "contamination":
        return {"contamination": ts.fraction}
    raise IsoguardError(f"threshold mode must be 'fixed' or 'contamination', got {ts.mode!r}")


def stage_detect(cfg: PipelineConfig, out: Path) -> None:
    """Fit the isolation forest on selected training features; emit verdicts and scatter data."""
    try:
        seed = _require_seed(cfg)
        train = _read_artifact_csv(out, "train.csv", cfg.target_column)
        test = _read_artifact_csv(out, "test.csv", cfg.target_column)
        rfe_path = out / "rfe.json"
        if not rfe_path.exists():
            raise IsoguardError("missing artifact rfe.json; run the select stage first")
        rfe, column_names = load_rfe(rfe_path)
        selected = list(rfe.selected)
        X_train = train.matrix()[:, selected]
        m = min(cfg.forest.subsample, X_train.shape[0])
        forest = iforest.fit_forest(X_train, t=cfg.forest.trees, m=m, seed=derive_seed(seed, "forest"))
        kwargs = _threshold_kwargs(cfg.forest.threshold)
        verdicts_train = iforest.predict(forest, X_train, **kwargs)
        verdicts_test = iforest.predict(forest, test.matrix()[:, selected], **kwargs)
        iforest.save_forest(forest, out / "forest.json")
        _write_verdicts(out / "verdicts_train.csv", verdicts_train)
        _write_verdicts(out / "verdicts_test.csv", verdicts_test)

        # scatter axes default to the two most important surviving features
        by_importance = np.lexsort((np.array(selected), -rfe.final_importances))
        default_x = column_names[selected[by_importance[0]]]
        default_y = column_names[selected[by_importance[min(1, len(selected) - 1)]]]
        x_col = cfg.scatter_x or default_x
        y_col = cfg.scatter_y or default_y
        labels = np.array([v.label for v in verdicts_train], dtype=np.int64)
        emit_scatter(train, labels, x_col, y_col, out / "scatter_full.csv", out / "scatter_clean.csv")
    except IsoguardError as e:
        raise _stage_error("detect", e) from e


def _fit_all(X: np.ndarray, y: np.ndarray, cs: ClassifierSettings) -> dict[str, clf.ClassifierModel]:
    return {
        "knn": clf.knn_fit(X, y, k=cs.knn_k),
        "svm": clf.svm_fit(X, y, lam=cs.svm_lambda, epochs=cs.svm_epochs),
        "nb": clf.gnb_fit(X, y, var_smoothing=cs.nb_var_smoothing),
        "lr": clf.logreg_fit(X, y, learning_rate=cs.lr_learning_rate, epochs=cs.lr_epochs, l2=cs.lr_l2),
        "abc": clf.adaboost_fit(X, y, n_stumps=cs.adaboost_stumps),
    }


def stage_train(cfg: PipelineConfig, out: Path) -> None:
    """Train all five classifiers on both arms.

    Arm A uses the full training partition; arm B drops the rows the
    forest flagged -1. The test partition is never touched.
    """
    try:
        train = _read_artifact_csv(out, "train.csv", cfg.target_column)
        rfe, _ = load_rfe(out / "rfe.json") if (out / "rfe.json").exists() else (None, None)
        if rfe is None:
            raise IsoguardError("missing artifact rfe.json; run the select stage first")
        labels = _read_verdict_labels(out / "verdicts_train.csv")
        X = train.matrix()[:, list(rfe.selected)]
        y = train.target

        models = _fit_all(X, y, cfg.classifiers)
        for name, model in models.items():
            clf.save_model(model, out / f"model_{name}.json")

        keep = labels == 1
        y_clean = y[keep]
        for cls in (0, 1):
            if not (y_clean == cls).any():
                raise IsoguardError(
                    f"outlier removal emptied class {cls} in the training partition; "
                    "lower the threshold or contamination fraction"
                )
        if keep.all():  # nothing removed: arm B trains on the identical data
            clean_models = models
        else:
            clean_models = _fit_all(X[keep], y_clean, cfg.classifiers)
        for name, model in clean_models.items():
            clf.save_model(model, out / f"model_{name}_clean.json")
    except IsoguardError as e:
        raise _stage_error("train", e) from e


def stage_evaluate(cfg: PipelineConfig, out: Path) -> ComparisonReport:
    """Evaluate both arms on the shared test partition and write the reports."""
    try:
        train = _read_artifact_csv(out, "train.csv", cfg.target_column)
        test = _read_artifact_csv(out, "test.csv", cfg.target_column)
        rfe_path = out / "rfe.json"
        if not rfe_path.exists():
            raise IsoguardError("missing artifact rfe.json; run the select stage first")
        rfe, _ = load_rfe(rfe_path)
        labels = _read_verdict_labels(out / "verdicts_train.csv")
        X_test = test.matrix()[:, list(rfe.selected)]
        y_test = test.target

        arms: dict[str, dict[str, ClassifierEvaluation]] = {}
        for arm, suffix in (("before", ""), ("after", "_clean")):
            evaluations: dict[str, ClassifierEvaluation] = {}
            for name in MODELS:
                path = out / f"model_{name}{suffix}.json"
                if not path.exists():
                    raise IsoguardError(f"missing artifact {path.name}; run the train stage first")
                model = clf.load_model(path)
                evaluations[name] = evaluate_predictions(
                    y_test, clf.predict_model(model, X_test), clf.score_model(model, X_test)
                )
            arms[arm] = evaluations

        removed = int((labels == -1).sum())
        report = compare(
            arms["before"],
            arms["after"],
            outliers_removed=removed,
            n_train_before=train.n_rows,
            n_train_after=train.n_rows - removed,
            n_test=test.n_rows,
        )
        (out / "report.json").write_text(report_to_json(report) + "\n", encoding="utf-8")
        (out / "report.txt").write_text(render_table(report), encoding="utf-8")
        for name in MODELS:
            write_roc_csv(report.before[name].roc, out / f"roc_{name}.csv")
            write_roc_csv(report.after[name].roc, out / f"roc_{name}_clean.csv")
        return report
    except IsoguardError as e:
        raise _stage_error("evaluate", e) from e


def run_pipeline(cfg: PipelineConfig, out_dir: str | Path | None = None) -> ComparisonReport:
    """Run every stage in order into one output directory."""
    out = Path(out_dir if out_dir is not None else (cfg.out_dir or "."))
    out.mkdir(parents=True, exist_ok=True)
    _require_seed(cfg)
    (out / "config.resolved.json").write_text(config_to_json(cfg) + "\n", encoding="utf-8")
    stage_ingest(cfg, out)
    stage_select(cfg, out)
    stage_detect(cfg, out)
    stage_train(cfg, out)
    return stage_evaluate(cfg, out)


def run_synth(cfg: PipelineConfig, out_dir: str | Path | None = None) -> Path:
    """Generate the configured synthetic dataset; returns the CSV path."""
    out = Path(out_dir if out_dir is not None else (cfg.out_dir or "."))
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.synthetic
    if cfg.seed is not None:
        spec = replace(spec, seed=cfg.seed)
    ds, mask = generate_synthetic(spec)
    csv_path = out / "synthetic.csv"
    write_csv(ds, csv_path)
    write_injection_mask(mask, out / "synthetic_mask.csv")
    (out / "synthetic_spec.json").write_text(
        json.dumps(asdict(spec), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return csv_path
