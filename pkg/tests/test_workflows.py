"""End-to-end command workflows over a synthetic dataset tree."""

import json
import os

import numpy as np
import pytest

from conftest import write_gtsrb_tree
from tsrbench.cache import load_cache
from tsrbench.metrics import EvalReport
from tsrbench.pipeline import PIPELINE_ORDER, PipelineKind
from tsrbench.svm import load_model
from tsrbench.workflows import (
    REPORT_COLUMNS,
    LayoutError,
    UnknownFormat,
    cmd_bench,
    cmd_check,
    cmd_eval,
    cmd_features,
    cmd_train,
    cmd_tune,
    render_csv,
    render_markdown,
    render_report,
    resolve_test_layout,
    resolve_training_root,
)


class TestResolveLayout:
    def test_training_subdirectory(self, data_root):
        assert resolve_training_root(data_root).name == "training"

    def test_direct_root(self, data_root):
        direct = os.path.join(data_root, "training")
        assert str(resolve_training_root(direct)) == direct

    def test_gtsrb_archive_layout(self, tmp_path):
        write_gtsrb_tree(str(tmp_path), n_classes=2, per_class=3, n_test=2)
        archive = tmp_path / "GTSRB" / "Final_Training" / "Images"
        archive.parent.mkdir(parents=True)
        (tmp_path / "training").rename(archive)
        assert resolve_training_root(tmp_path) == archive

    def test_test_layout(self, data_root):
        test_dir, csv = resolve_test_layout(data_root)
        assert test_dir.name == "test"
        assert csv.name == "GT-final_test.csv"

    def test_missing_training_layout(self, tmp_path):
        with pytest.raises(LayoutError):
            resolve_training_root(tmp_path)

    def test_missing_test_layout(self, tmp_path):
        write_gtsrb_tree(str(tmp_path), n_classes=2, per_class=3, n_test=2)
        (tmp_path / "test" / "GT-final_test.csv").unlink()
        with pytest.raises(LayoutError):
            resolve_test_layout(tmp_path)


class TestCmdCheck:
    def test_counts_and_imbalance(self, data_root):
        result = cmd_check(data_root)
        assert result.class_counts == {0: 14, 1: 14, 2: 14, 3: 14}
        assert result.total == 56
        assert result.imbalance_ratio == 1.0

    def test_size_histogram_covers_every_sample(self, data_root):
        result = cmd_check(data_root)
        assert sum(result.size_histogram.values()) == 56
        # fixture sides are 24..47, so only the two small buckets fill
        assert set(result.size_histogram) == {"0-32", "33-64", "65-128", ">=129"}
        assert result.size_histogram["65-128"] == 0
        assert result.size_histogram[">=129"] == 0

    def test_imbalance_with_uneven_classes(self, tmp_path):
        write_gtsrb_tree(str(tmp_path), n_classes=2, per_class=6, n_test=2)
        extra = tmp_path / "training" / "00001" / "GT-00001.csv"
        lines = extra.read_text().strip().splitlines()
        extra.write_text("\n".join(lines[:4]) + "\n")  # prune class 1 to 3 rows
        result = cmd_check(tmp_path)
        assert result.class_counts == {0: 6, 1: 3}
        assert result.imbalance_ratio == 2.0


class TestCmdFeatures:
    def test_writes_three_caches(self, feature_caches):
        for split, count in (("train", 44), ("val", 12), ("test", 24)):
            cached = load_cache(feature_caches[split])
            assert cached.pipeline is PipelineKind.HOG
            assert cached.dim == 324
            assert len(cached.labels) == count
            assert cached.features.dtype == np.float32

    def test_result_counts_match_files(self, data_root, tmp_path):
        result = cmd_features(data_root, PipelineKind.YUV_HOG, 5, tmp_path / "f")
        assert (result.train_count, result.val_count, result.test_count) == (44, 12, 24)
        assert result.dim == 324
        assert result.train_path.endswith(".train")
        assert result.val_path.endswith(".val")
        assert result.test_path.endswith(".test")
        assert result.seconds > 0.0

    def test_same_seed_same_bytes(self, data_root, tmp_path):
        a = cmd_features(data_root, PipelineKind.HOG, 9, tmp_path / "a")
        b = cmd_features(data_root, PipelineKind.HOG, 9, tmp_path / "b")
        for pa, pb in zip((a.train_path, a.val_path, a.test_path),
                          (b.train_path, b.val_path, b.test_path)):
            assert open(pa, "rb").read() == open(pb, "rb").read()

    def test_seed_changes_the_split(self, data_root, tmp_path):
        a = cmd_features(data_root, PipelineKind.HOG, 1, tmp_path / "a")
        b = cmd_features(data_root, PipelineKind.HOG, 2, tmp_path / "b")
        assert not np.array_equal(
            load_cache(a.train_path).labels, load_cache(b.train_path).labels
        )


class TestCmdTrain:
    def test_model_and_pair_summaries(self, feature_caches, trained_model_path):
        model = load_model(trained_model_path)
        assert model.classes == [0, 1, 2, 3]
        assert len(model.pairs) == 6

    def test_result_fields(self, feature_caches, tmp_path):
        path = tmp_path / "m.tsrm"
        result = cmd_train(feature_caches["train"], c=5.0, gamma=0.3, out_model=path)
        assert result.model_path == str(path)
        assert result.classes == [0, 1, 2, 3]
        assert [(p.class_a, p.class_b) for p in result.pairs] == [
            (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3),
        ]
        for p in result.pairs:
            assert p.sv_count > 0
            assert p.converged


class TestRenderers:
    def reports(self):
        from tsrbench.metrics import ClassScores

        def rep(kind, f1):
            return EvalReport(
                pipeline=kind, split="validation",
                accuracy=0.5, macro_precision=0.25, macro_recall=1 / 3,
                macro_f1=f1, weighted_precision=0.75, weighted_recall=0.8,
                weighted_f1=0.9, per_class=(ClassScores(1.0, 1.0, 1.0, 2),),
            )

        return [rep(PipelineKind.HOG, 0.123456789), rep(PipelineKind.YUV_HOG, 1.0)]

    def test_csv_layout(self):
        text = render_csv(self.reports())
        lines = text.splitlines()
        assert lines[0] == "Method;F1 Score;Accuracy;Precision;Recall"
        assert lines[1] == "HOG;0.123457;0.500000;0.250000;0.333333"
        assert lines[2].startswith("YUV-HOG;1.000000")
        assert text.endswith("\n")

    def test_markdown_has_both_averaging_schemes(self):
        text = render_markdown(self.reports())
        assert "### Macro averages" in text
        assert "### Support-weighted averages" in text
        assert "| HOG | 0.123457 | 0.500000 | 0.250000 | 0.333333 |" in text
        assert "| HOG | 0.900000 | 0.500000 | 0.750000 | 0.800000 |" in text

    def test_render_report_dispatch(self):
        reports = self.reports()
        assert render_report(reports, "csv") == render_csv(reports)
        assert render_report(reports, "md") == render_markdown(reports)
        with pytest.raises(UnknownFormat):
            render_report(reports, "html")

    def test_report_columns_constant(self):
        assert REPORT_COLUMNS == ("Method", "F1 Score", "Accuracy", "Precision", "Recall")


class TestCmdEval:
    def test_eval_validation_cache(self, feature_caches, trained_model_path):
        result = cmd_eval(trained_model_path, feature_caches["val"])
        assert result.report.split == "validation"
        assert result.report.pipeline is PipelineKind.HOG
        assert 0.0 <= result.report.accuracy <= 1.0
        assert result.rendered.startswith("### Macro averages")
        assert result.written_to is None

    def test_split_inferred_from_suffix(self, feature_caches, trained_model_path):
        assert cmd_eval(trained_model_path, feature_caches["test"]).report.split == "test"
        assert cmd_eval(trained_model_path, feature_caches["train"]).report.split == "train"

    def test_split_override(self, feature_caches, trained_model_path):
        result = cmd_eval(trained_model_path, feature_caches["val"], split="holdout")
        assert result.report.split == "holdout"

    def test_writes_output_file(self, feature_caches, trained_model_path, tmp_path):
        out = tmp_path / "report.csv"
        result = cmd_eval(trained_model_path, feature_caches["val"], fmt="csv", out=out)
        assert result.written_to == str(out)
        assert out.read_text() == result.rendered

    def test_csv_round_trips_the_scores(self, feature_caches, trained_model_path):
        result = cmd_eval(trained_model_path, feature_caches["val"], fmt="csv")
        row = result.rendered.splitlines()[1].split(";")
        assert row[0] == "HOG"
        assert float(row[1]) == pytest.approx(result.report.macro_f1, abs=5e-7)
        assert float(row[2]) == pytest.approx(result.report.accuracy, abs=5e-7)
        assert float(row[3]) == pytest.approx(result.report.macro_precision, abs=5e-7)
        assert float(row[4]) == pytest.approx(result.report.macro_recall, abs=5e-7)

    def test_unknown_format(self, feature_caches, trained_model_path):
        with pytest.raises(UnknownFormat):
            cmd_eval(trained_model_path, feature_caches["val"], fmt="xml")

    def test_learns_the_synthetic_classes(self, feature_caches, trained_model_path):
        # geometry-driven classes should be nearly separable with HOG
        result = cmd_eval(trained_model_path, feature_caches["val"])
        assert result.report.accuracy >= 0.75


@pytest.fixture(scope="module")
def bench(data_root, tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    return cmd_bench(data_root, 3, out), out


class TestCmdBench:
    def test_no_failures_and_all_pipelines(self, bench):
        result, _ = bench
        assert result.failures == []
        assert [t.pipeline for t in result.timings] == list(PIPELINE_ORDER)

    def test_two_reports_per_pipeline(self, bench):
        result, _ = bench
        assert len(result.reports) == 14
        validation = [r for r in result.reports if r.split == "validation"]
        testing = [r for r in result.reports if r.split == "test"]
        assert [r.pipeline for r in validation] == list(PIPELINE_ORDER)
        assert [r.pipeline for r in testing] == list(PIPELINE_ORDER)

    def test_writes_the_contracted_file_set(self, bench):
        result, out = bench
        names = {os.path.basename(f) for f in result.files}
        expected = {"tables-1.md", "tables-1.csv", "tables-2.md", "tables-2.csv",
                    "timings.csv"}
        for kind in PIPELINE_ORDER:
            expected |= {
                f"features-{kind.value}.train",
                f"features-{kind.value}.val",
                f"features-{kind.value}.test",
                f"model-{kind.value}.tsrm",
            }
        assert names == expected
        for f in result.files:
            assert os.path.isfile(f)

    def test_tables_list_pipelines_in_order(self, bench):
        _, out = bench
        rows = (out / "tables-1.csv").read_text().splitlines()
        assert rows[0] == ";".join(REPORT_COLUMNS)
        assert [r.split(";")[0] for r in rows[1:]] == [k.value for k in PIPELINE_ORDER]

    def test_timings_cover_each_pipeline(self, bench):
        result, out = bench
        lines = (out / "timings.csv").read_text().splitlines()
        assert lines[0] == "pipeline;preprocess_seconds;train_seconds;eval_seconds"
        assert len(lines) == 8
        for t in result.timings:
            assert t.preprocess_seconds > 0.0
            assert t.train_seconds > 0.0
            assert t.eval_seconds > 0.0

    def test_same_seed_reproduces_tables_byte_for_byte(self, bench, data_root,
                                                       tmp_path_factory):
        _, first = bench
        second = tmp_path_factory.mktemp("bench-again")
        cmd_bench(data_root, 3, second)
        for name in ("tables-1.md", "tables-1.csv", "tables-2.md", "tables-2.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes(), name

    def test_test_table_parses_back_to_report_values(self, bench):
        result, out = bench
        testing = {r.pipeline.value: r for r in result.reports if r.split == "test"}
        for row in (out / "tables-2.csv").read_text().splitlines()[1:]:
            name, f1, acc, prec, rec = row.split(";")
            report = testing[name]
            assert f1 == f"{report.macro_f1:.6f}"
            assert acc == f"{report.accuracy:.6f}"
            assert prec == f"{report.macro_precision:.6f}"
            assert rec == f"{report.macro_recall:.6f}"

    def test_failures_are_collected_not_raised(self, tmp_path):
        # valid training layout, no test layout: every pipeline fails the
        # same way and the bench still returns
        write_gtsrb_tree(str(tmp_path), n_classes=2, per_class=6, n_test=2)
        import shutil

        shutil.rmtree(tmp_path / "test")
        with pytest.raises(LayoutError):
            cmd_bench(tmp_path, 0, tmp_path / "out")


@pytest.fixture(scope="module")
def tuned(feature_caches, tmp_path_factory):
    out = tmp_path_factory.mktemp("tune") / "params.json"
    return cmd_tune(feature_caches["train"], seed=4, out=out), out


class TestCmdTune:
    def test_winner_within_stage_two_box(self, tuned):
        result, _ = tuned
        assert 5.0 <= result.c <= 25.0
        assert 0.05 <= result.gamma <= 0.35

    def test_candidates_from_both_stages(self, tuned):
        result, _ = tuned
        assert [c.stage for c in result.candidates] == [1] * 10 + [2] * 10
        for cand in result.candidates:
            assert 0.0 <= cand.score <= 1.0

    def test_json_output(self, tuned):
        result, out = tuned
        data = json.loads(out.read_text())
        assert data == {"c": result.c, "gamma": result.gamma}
        assert result.written_to == str(out)

    def test_deterministic(self, feature_caches, tuned):
        result, _ = tuned
        again = cmd_tune(feature_caches["train"], seed=4)
        assert (again.c, again.gamma) == (result.c, result.gamma)
        assert [
            (c.stage, c.c, c.gamma, c.score) for c in again.candidates
        ] == [(c.stage, c.c, c.gamma, c.score) for c in result.candidates]

    def test_tiny_cache_rejected(self, tmp_path):
        from tsrbench.cache import FeatureCache, save_cache
        from tsrbench.tuning import TooFewSamples

        cache = FeatureCache(
            pipeline=PipelineKind.HOG,
            seed=0,
            labels=np.array([0, 1, 0], np.uint32),  # fewer samples than folds
            features=np.random.default_rng(0).random((3, 4)).astype(np.float32),
        )
        path = tmp_path / "tiny.train"
        save_cache(cache, path)
        with pytest.raises(TooFewSamples):
            cmd_tune(path, seed=0)
