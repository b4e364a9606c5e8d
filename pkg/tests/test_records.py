import json

import numpy as np
import pytest

from scalelens import (CorpusError, DatasetManifest, accuracy, error_mask,
                       group_runs, load_corpus, load_manifest,
                       per_class_accuracy, save_manifest, save_records)
from scalelens.synth import gen_scaling_corpus, make_balanced_manifest

from conftest import make_record


class TestManifest:
    def test_rejects_label_out_of_range(self):
        with pytest.raises(CorpusError, match="true_labels"):
            DatasetManifest(dataset_id="d", n_test=3, n_classes=2,
                            true_labels=np.array([0, 1, 2]))

    def test_rejects_bad_counts(self):
        with pytest.raises(CorpusError):
            DatasetManifest(dataset_id="d", n_test=0, n_classes=2,
                            true_labels=np.array([]))
        with pytest.raises(CorpusError):
            DatasetManifest(dataset_id="d", n_test=2, n_classes=1,
                            true_labels=np.array([0, 0]))

    def test_rejects_comma_in_identifier(self):
        with pytest.raises(CorpusError, match="comma"):
            DatasetManifest(dataset_id="a,b", n_test=2, n_classes=2,
                            true_labels=np.array([0, 1]))

    def test_balance_reported_not_required(self):
        m = DatasetManifest(dataset_id="d", n_test=3, n_classes=2,
                            true_labels=np.array([0, 0, 1]))
        assert not m.is_balanced
        assert m.class_support.tolist() == [2, 1]


class TestRecordValidation:
    def test_confidence_out_of_range_names_field_and_index(self, small_manifest):
        confs = np.full(60, 0.5)
        confs[17] = 1.2
        rec = make_record(small_manifest, small_manifest.true_labels, confs)
        with pytest.raises(CorpusError, match=r"confidences\[17\]"):
            rec.validate_against(small_manifest)

    def test_length_mismatch(self, small_manifest):
        rec = make_record(small_manifest, np.zeros(59, dtype=int),
                          np.full(59, 0.5))
        with pytest.raises(CorpusError, match="length 59"):
            rec.validate_against(small_manifest)

    def test_pred_label_out_of_range(self, small_manifest):
        preds = small_manifest.true_labels.copy()
        preds[3] = 6
        rec = make_record(small_manifest, preds)
        with pytest.raises(CorpusError, match=r"pred_labels\[3\]"):
            rec.validate_against(small_manifest)


class TestErrorMask:
    def test_all_correct(self, small_manifest):
        rec = make_record(small_manifest, small_manifest.true_labels)
        mask = error_mask(rec, small_manifest)
        assert mask.error_rate == 0.0
        assert mask.n_errors == 0

    def test_all_wrong(self, small_manifest):
        preds = (small_manifest.true_labels + 1) % 6
        rec = make_record(small_manifest, preds)
        assert error_mask(rec, small_manifest).error_rate == 1.0

    def test_published_accuracy_maps_to_error_rate(self):
        # 41.71% accuracy on a 10,000-sample test set
        manifest = make_balanced_manifest(10_000, 100, seed=0)
        n_errors = 10_000 - 4171
        bits = np.zeros(10_000, dtype=bool)
        bits[:n_errors] = True
        preds = manifest.true_labels.copy()
        preds[bits] = (preds[bits] + 1) % 100
        rec = make_record(manifest, preds, np.full(10_000, 0.4))
        mask = error_mask(rec, manifest)
        assert mask.error_rate == pytest.approx(0.5829, abs=1e-12)

    def test_error_rate_complements_accuracy_exactly(self, small_manifest):
        preds = small_manifest.true_labels.copy()
        preds[:13] = (preds[:13] + 1) % 6
        rec = make_record(small_manifest, preds)
        mask = error_mask(rec, small_manifest)
        assert mask.error_rate + accuracy(rec, small_manifest) == 1.0


class TestPerClassAccuracy:
    def test_perfect(self, small_manifest):
        rec = make_record(small_manifest, small_manifest.true_labels)
        pca = per_class_accuracy(rec, small_manifest)
        assert (pca.values == 1.0).all()

    def test_constant_prediction_on_balanced_manifest(self):
        manifest = make_balanced_manifest(1000, 100, seed=1)
        rec = make_record(manifest, np.zeros(1000, dtype=int),
                          np.full(1000, 0.5))
        pca = per_class_accuracy(rec, manifest)
        assert pca.values[0] == 1.0
        assert (pca.values[1:] == 0.0).all()

    def test_matches_brute_force_count(self, small_manifest):
        rng = np.random.default_rng(42)
        preds = rng.integers(0, 6, size=60)
        rec = make_record(small_manifest, preds)
        pca = per_class_accuracy(rec, small_manifest)
        truth = small_manifest.true_labels
        for cls in range(6):
            in_class = [i for i in range(60) if truth[i] == cls]
            hits = sum(1 for i in in_class if preds[i] == cls)
            assert pca.values[cls] == pytest.approx(hits / len(in_class))
        assert pca.overall_accuracy == pytest.approx(
            float(np.mean(preds == truth)), abs=1e-12)

    def test_zero_support_class_is_an_error(self):
        manifest = DatasetManifest(dataset_id="d", n_test=4, n_classes=3,
                                   true_labels=np.array([0, 0, 1, 1]))
        rec = make_record(manifest, np.array([0, 0, 1, 1]),
                          np.full(4, 0.5))
        with pytest.raises(CorpusError, match="zero test samples"):
            per_class_accuracy(rec, manifest)


class TestCorpusIO:
    def test_round_trip(self, tmp_path):
        manifest, records = gen_scaling_corpus(
            alpha=0.2, intercept=0.5, noise_sigma=0.02,
            sizes=[1000, 10_000, 100_000], n_seeds=2, seed=3,
            n_test=500, n_classes=10)
        save_manifest(manifest, tmp_path / "manifest.json")
        save_records(records, tmp_path / "records.jsonl")
        manifest2, records2 = load_corpus(tmp_path / "manifest.json",
                                          tmp_path / "records.jsonl")
        assert manifest2.to_dict() == manifest.to_dict()
        originals = {r.run_key: r.to_dict() for r in records}
        assert len(records2) == len(records)
        for rec in records2:
            assert rec.to_dict() == originals[rec.run_key]

    def test_ninety_run_shape(self, tmp_path):
        manifest, records = gen_scaling_corpus(
            alpha=0.15, intercept=0.4, noise_sigma=0.0,
            sizes=[2 ** k for k in range(10, 28)], n_seeds=5, seed=0,
            n_test=200, n_classes=10)
        assert len(records) == 18 * 5
        save_manifest(manifest, tmp_path / "m.json")
        save_records(records, tmp_path / "r.jsonl")
        _, loaded = load_corpus(tmp_path / "m.json", tmp_path / "r.jsonl")
        groups = group_runs(loaded)
        assert len(groups) == 18
        assert all(len(v) == 5 for v in groups.values())

    def test_duplicate_run_key_rejected(self, tmp_path, small_manifest):
        rec = make_record(small_manifest, small_manifest.true_labels)
        save_manifest(small_manifest, tmp_path / "m.json")
        save_records([rec, rec], tmp_path / "r.jsonl")
        with pytest.raises(CorpusError, match="duplicate run key"):
            load_corpus(tmp_path / "m.json", tmp_path / "r.jsonl")

    def test_parse_error_reports_line_number(self, tmp_path, small_manifest):
        save_manifest(small_manifest, tmp_path / "m.json")
        rec = make_record(small_manifest, small_manifest.true_labels)
        lines = [json.dumps(rec.to_dict()), "{not json"]
        (tmp_path / "r.jsonl").write_text("\n".join(lines) + "\n")
        with pytest.raises(CorpusError, match=r"r\.jsonl:2"):
            load_corpus(tmp_path / "m.json", tmp_path / "r.jsonl")

    def test_unknown_key_rejected(self, tmp_path, small_manifest):
        save_manifest(small_manifest, tmp_path / "m.json")
        rec = make_record(small_manifest, small_manifest.true_labels)
        doc = rec.to_dict()
        doc["logits"] = [1, 2, 3]
        (tmp_path / "r.jsonl").write_text(json.dumps(doc) + "\n")
        with pytest.raises(CorpusError, match="unknown keys"):
            load_corpus(tmp_path / "m.json", tmp_path / "r.jsonl")

    def test_length_mismatch_on_load(self, tmp_path, small_manifest):
        save_manifest(small_manifest, tmp_path / "m.json")
        rec = make_record(small_manifest, small_manifest.true_labels)
        doc = rec.to_dict()
        doc["pred_labels"] = doc["pred_labels"][:-1]
        (tmp_path / "r.jsonl").write_text(json.dumps(doc) + "\n")
        with pytest.raises(CorpusError, match="length 59"):
            load_corpus(tmp_path / "m.json", tmp_path / "r.jsonl")

    def test_records_dir_ingestion(self, tmp_path, small_manifest):
        save_manifest(small_manifest, tmp_path / "m.json")
        rdir = tmp_path / "records"
        rdir.mkdir()
        rec_a = make_record(small_manifest, small_manifest.true_labels, seed=0)
        rec_b = make_record(small_manifest, small_manifest.true_labels, seed=1)
        save_records([rec_a], rdir / "a.jsonl")
        save_records([rec_b], rdir / "b.jsonl")
        _, records = load_corpus(tmp_path / "m.json", rdir)
        assert {r.seed for r in records} == {0, 1}

    def test_manifest_round_trip_via_file(self, tmp_path):
        manifest = make_balanced_manifest(100, 5, seed=9)
        save_manifest(manifest, tmp_path / "m.json")
        loaded = load_manifest(tmp_path / "m.json")
        assert loaded.to_dict() == manifest.to_dict()
