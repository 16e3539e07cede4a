import hashlib
import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from isoguard.data import load_csv, write_csv
from isoguard.errors import IsoguardError, PipelineError
from isoguard.pipeline import (
    MODELS,
    ClassifierSettings,
    ForestSettings,
    PipelineConfig,
    SelectSettings,
    ThresholdSettings,
    config_from_dict,
    config_to_json,
    emit_scatter,
    load_config,
    run_pipeline,
    run_synth,
    stage_detect,
    stage_ingest,
    stage_select,
)
from isoguard.synthetic import SyntheticSpec, generate_synthetic


def small_config(tmp_path, seed=7, **overrides) -> PipelineConfig:
    """A fast pipeline config over a small synthetic dataset written to disk."""
    ds, _ = generate_synthetic(
        SyntheticSpec(n_normal=220, n_anomaly=60, n_informative=3, n_noise=4, seed=seed or 0)
    )
    csv_path = tmp_path / "input.csv"
    write_csv(ds, csv_path)
    base = dict(
        input=str(csv_path),
        seed=seed,
        out_dir=str(tmp_path / "run"),
        select=SelectSettings(target_count=4, step=1, n_trees=10, min_samples_split=20),
        forest=ForestSettings(
            trees=40, subsample=128, threshold=ThresholdSettings(mode="contamination", fraction=0.06)
        ),
        classifiers=ClassifierSettings(lr_epochs=100, svm_epochs=100, adaboost_stumps=15),
    )
    base.update(overrides)
    return PipelineConfig(**base)


def digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestConfig:
    def test_round_trip(self, tmp_path):
        cfg = small_config(tmp_path)
        doc = json.loads(config_to_json(cfg))
        again = config_from_dict(doc)
        assert again == cfg

    def test_defaults_from_minimal_dict(self):
        cfg = config_from_dict({"input": "x.csv"})
        assert cfg.select.target_count == 15
        assert cfg.forest.trees == 100
        assert cfg.forest.subsample == 256
        assert cfg.forest.threshold.mode == "fixed"
        assert cfg.forest.threshold.tau == 0.5
        assert cfg.classifiers.knn_k == 5
        assert cfg.split.test_fraction == 0.2 and cfg.split.stratified

    def test_unknown_keys_rejected(self):
        with pytest.raises(IsoguardError, match="unknown config keys"):
            config_from_dict({"input": "x.csv", "typo": 1})
        with pytest.raises(IsoguardError, match="unknown keys in config section"):
            config_from_dict({"input": "x.csv", "forest": {"tres": 10}})

    def test_missing_input_rejected(self):
        with pytest.raises(IsoguardError, match="input"):
            config_from_dict({})

    def test_load_config_errors(self, tmp_path):
        with pytest.raises(IsoguardError, match="no such config"):
            load_config(tmp_path / "absent.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(IsoguardError, match="invalid JSON"):
            load_config(bad)


class TestRunPipeline:
    def test_artifacts_and_accounting(self, tmp_path):
        cfg = small_config(tmp_path)
        report = run_pipeline(cfg)
        out = Path(cfg.out_dir)
        expected = [
            "config.resolved.json",
            "train.csv",
            "test.csv",
            "transforms.json",
            "rfe.json",
            "forest.json",
            "verdicts_train.csv",
            "verdicts_test.csv",
            "scatter_full.csv",
            "scatter_clean.csv",
            "report.json",
            "report.txt",
        ]
        expected += [f"model_{m}.json" for m in MODELS]
        expected += [f"model_{m}_clean.json" for m in MODELS]
        expected += [f"roc_{m}.csv" for m in MODELS]
        expected += [f"roc_{m}_clean.csv" for m in MODELS]
        for name in expected:
            assert (out / name).exists(), name

        # outlier-removal accounting: arm B training = arm A training - removals
        assert report.n_train_after == report.n_train_before - report.outliers_removed
        verdicts = (out / "verdicts_train.csv").read_text().strip().splitlines()[1:]
        flagged = sum(1 for ln in verdicts if ln.endswith(",-1"))
        assert flagged == report.outliers_removed
        doc = json.loads((out / "report.json").read_text())
        assert set(doc["original"]) == set(MODELS)

    def test_report_table_layout(self, tmp_path):
        cfg = small_config(tmp_path)
        run_pipeline(cfg)
        text = (Path(cfg.out_dir) / "report.txt").read_text()
        assert text.splitlines()[0].startswith("Dataset")
        assert sum(1 for ln in text.splitlines() if ln.startswith("Original dataset")) == 5
        assert sum(1 for ln in text.splitlines() if ln.startswith("Without Outlier")) == 5

    def test_test_partition_untouched_by_arms(self, tmp_path):
        cfg = small_config(tmp_path)
        run_pipeline(cfg)
        out = Path(cfg.out_dir)
        before = digest(out / "test.csv")
        # rerunning train+evaluate must not rewrite or depend on mutated test data
        from isoguard.pipeline import stage_evaluate, stage_train

        stage_train(cfg, out)
        stage_evaluate(cfg, out)
        assert digest(out / "test.csv") == before

    def test_threshold_one_yields_identical_arms(self, tmp_path):
        cfg = small_config(
            tmp_path,
            forest=ForestSettings(trees=30, subsample=64, threshold=ThresholdSettings(mode="fixed", tau=1.0)),
        )
        report = run_pipeline(cfg)
        assert report.outliers_removed == 0
        out = Path(cfg.out_dir)
        for m in MODELS:
            assert (out / f"model_{m}.json").read_bytes() == (out / f"model_{m}_clean.json").read_bytes()
            delta = report.after[m].anomaly_positive.accuracy - report.before[m].anomaly_positive.accuracy
            assert delta == 0.0

    def test_stage_isolation_matches_monolithic(self, tmp_path):
        cfg = small_config(tmp_path)
        mono = Path(cfg.out_dir)
        run_pipeline(cfg)
        staged = tmp_path / "staged"
        staged.mkdir()
        cfg2 = replace(cfg, out_dir=str(staged))
        stage_ingest(cfg2, staged)
        stage_select(cfg2, staged)
        stage_detect(cfg2, staged)
        for name in ("train.csv", "test.csv", "transforms.json", "rfe.json", "forest.json", "verdicts_train.csv"):
            assert (staged / name).read_bytes() == (mono / name).read_bytes(), name

    def test_determinism_byte_identical_reruns(self, tmp_path):
        cfg_a = small_config(tmp_path, out_dir=str(tmp_path / "a"))
        cfg_b = replace(cfg_a, out_dir=str(tmp_path / "b"))
        run_pipeline(cfg_a)
        run_pipeline(cfg_b)
        for name in ("report.json", "forest.json", "rfe.json", "report.txt") + tuple(
            f"model_{m}.json" for m in MODELS
        ):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name

    def test_resolved_config_reproduces_run(self, tmp_path):
        cfg = small_config(tmp_path)
        run_pipeline(cfg)
        out = Path(cfg.out_dir)
        # the emitted provenance file alone must reproduce every artifact
        replayed = load_config(out / "config.resolved.json")
        replay_out = tmp_path / "replay"
        run_pipeline(replace(replayed, out_dir=str(replay_out)))
        for name in ("report.json", "forest.json", "rfe.json", "transforms.json") + tuple(
            f"model_{m}.json" for m in MODELS
        ):
            assert (replay_out / name).read_bytes() == (out / name).read_bytes(), name

    def test_emptied_class_aborts_arm_b(self, tmp_path):
        # tiny minority class sits far out; an aggressive threshold removes it entirely
        rng = np.random.default_rng(0)
        X = np.vstack([rng.normal(0, 0.3, size=(60, 2)), [[9.0, 9.0], [9.5, 9.0], [9.0, 9.5], [9.5, 9.5]]])
        from isoguard.data import ColumnKind, Dataset

        ds = Dataset(
            ("a", "b"),
            (ColumnKind.NUMERIC, ColumnKind.NUMERIC),
            X,
            np.array([0] * 60 + [1] * 4),
        )
        csv_path = tmp_path / "tiny.csv"
        write_csv(ds, csv_path)
        cfg = PipelineConfig(
            input=str(csv_path),
            seed=5,
            out_dir=str(tmp_path / "run"),
            select=SelectSettings(target_count=1, step=1, n_trees=10),
            forest=ForestSettings(
                trees=30, subsample=32, threshold=ThresholdSettings(mode="contamination", fraction=0.3)
            ),
            classifiers=ClassifierSettings(knn_k=3, adaboost_stumps=5, lr_epochs=50, svm_epochs=50),
        )
        with pytest.raises(PipelineError, match="train: .*emptied class"):
            run_pipeline(cfg)

    def test_stage_errors_name_the_stage(self, tmp_path):
        cfg = small_config(tmp_path, input=str(tmp_path / "missing.csv"))
        with pytest.raises(PipelineError, match="^ingest:"):
            run_pipeline(cfg)

    def test_select_requires_ingest_artifacts(self, tmp_path):
        cfg = small_config(tmp_path)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with pytest.raises(PipelineError, match="select: missing artifact train.csv"):
            stage_select(cfg, out)

    def test_missing_seed_rejected(self, tmp_path):
        cfg = small_config(tmp_path, seed=None)
        with pytest.raises(IsoguardError, match="master seed"):
            run_pipeline(cfg)


class TestIntrusionShapedInput:
    def make_intrusion_csv(self, path: Path, n=400, seed=0) -> None:
        """41 feature columns, three of them nominal, binary class labels."""
        rng = np.random.default_rng(seed)
        numeric_names = [f"num_{i:02d}" for i in range(38)]
        header = ["duration", "protocol_type", "service", "flag"] + numeric_names[1:] + ["class"]
        protocols = ["tcp", "udp", "icmp"]
        services = ["http", "smtp", "ftp", "dns"]
        flags = ["SF", "S0", "REJ"]
        lines = [",".join(header)]
        labels = rng.integers(0, 2, n)
        for i in range(n):
            base = 3.0 * labels[i]
            row = [
                repr(float(rng.normal(base, 1.0))),
                protocols[int(rng.integers(3))],
                services[int(rng.integers(4))],
                flags[int(rng.integers(3))],
            ]
            row += [repr(float(rng.normal(base, 2.0))) for _ in numeric_names[1:]]
            row.append("anomaly" if labels[i] else "normal")
            lines.append(",".join(row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    def test_41_to_15_features_end_to_end(self, tmp_path):
        csv_path = tmp_path / "intrusion.csv"
        self.make_intrusion_csv(csv_path)
        cfg = PipelineConfig(
            input=str(csv_path),
            seed=17,
            out_dir=str(tmp_path / "run"),
            select=SelectSettings(target_count=15, step=5, n_trees=10, min_samples_split=30),
            forest=ForestSettings(
                trees=30, subsample=128, threshold=ThresholdSettings(mode="contamination", fraction=0.05)
            ),
            classifiers=ClassifierSettings(lr_epochs=80, svm_epochs=80, adaboost_stumps=10),
        )
        report = run_pipeline(cfg)
        out = Path(cfg.out_dir)
        rfe = json.loads((out / "rfe.json").read_text())
        assert len(rfe["column_names"]) == 41
        assert len(rfe["selected"]) == 15
        transforms = json.loads((out / "transforms.json").read_text())
        assert set(transforms["encoders"]) == {"protocol_type", "service", "flag"}
        assert len(transforms["scaler"]) == 41
        assert set(report.models) == set(MODELS)
        text = (out / "report.txt").read_text()
        assert "Original dataset" in text and "Without Outlier" in text


class TestScatter:
    def test_default_columns_are_top_two_by_importance(self, tmp_path):
        cfg = small_config(tmp_path)
        run_pipeline(cfg)
        out = Path(cfg.out_dir)
        rfe = json.loads((out / "rfe.json").read_text())
        ranked = sorted(
            zip(rfe["final_importances"], [-i for i in rfe["selected"]]), reverse=True
        )
        top = [rfe["column_names"][-int(neg)] for _, neg in ranked[:2]]
        header = (out / "scatter_full.csv").read_text().splitlines()[0].split(",")
        assert header[:2] == top
        assert header[2:] == ["verdict", "class"]

    def test_clean_subset_row_count(self, tmp_path):
        cfg = small_config(tmp_path)
        report = run_pipeline(cfg)
        out = Path(cfg.out_dir)
        full = len((out / "scatter_full.csv").read_text().strip().splitlines()) - 1
        clean = len((out / "scatter_clean.csv").read_text().strip().splitlines()) - 1
        assert full == report.n_train_before
        assert clean == full - report.outliers_removed

    def test_explicit_columns_honored(self, tmp_path):
        cfg = small_config(tmp_path, scatter_x="noise_01", scatter_y="inf_01")
        run_pipeline(cfg)
        header = (Path(cfg.out_dir) / "scatter_full.csv").read_text().splitlines()[0]
        assert header.startswith("noise_01,inf_01")

    def test_unknown_column_rejected(self, tmp_path):
        ds, mask = generate_synthetic(SyntheticSpec(n_normal=30, n_anomaly=10, seed=1))
        labels = np.ones(ds.n_rows, dtype=np.int64)
        with pytest.raises(IsoguardError, match="unknown column"):
            emit_scatter(ds, labels, "nope", "inf_01", "f.csv", "c.csv")


class TestRunSynth:
    def test_writes_dataset_and_mask(self, tmp_path):
        cfg = PipelineConfig(
            input="",
            seed=3,
            out_dir=str(tmp_path / "synth"),
            synthetic=SyntheticSpec(n_normal=50, n_anomaly=10),
        )
        path = run_synth(cfg)
        assert path.exists()
        ds = load_csv(path)
        assert ds.n_rows == 60
        mask_lines = (tmp_path / "synth" / "synthetic_mask.csv").read_text().strip().splitlines()
        assert len(mask_lines) == 61
        spec_doc = json.loads((tmp_path / "synth" / "synthetic_spec.json").read_text())
        assert spec_doc["seed"] == 3  # master seed overrides the spec seed
