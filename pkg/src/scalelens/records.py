"""Evaluation-record data model: manifests, run records, and derived masks.

Ground-truth labels live in a single dataset manifest; every run record
references it by ``dataset_id`` and stores only that run's predictions and
confidences. Error masks and per-class accuracies are always derived, never
stored, so they cannot drift out of sync with the predictions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

SCHEMA_VERSION = "1"

MANIFEST_KEYS = {"schema_version", "dataset_id", "n_test", "n_classes",
                 "true_labels", "class_names"}
MANIFEST_REQUIRED = MANIFEST_KEYS - {"class_names"}

RECORD_KEYS = {"schema_version", "dataset_id", "arch", "config_id",
               "width_param", "n_params", "macs", "seed", "pred_labels",
               "confidences", "final_train_loss", "top5_pred_labels"}
RECORD_REQUIRED = RECORD_KEYS - {"macs", "final_train_loss", "top5_pred_labels"}


class CorpusError(ValueError):
    """Raised when a manifest or record fails parsing or validation."""


def _identifier(value: str, name: str) -> str:
    if not isinstance(value, str) or not value:
        raise CorpusError(f"{name} must be a non-empty string, got {value!r}")
    if "," in value or "\n" in value:
        raise CorpusError(f"{name} {value!r} must not contain commas or newlines")
    return value


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DatasetManifest:
    """Ground truth for one test set, shared by all runs that evaluate on it."""

    dataset_id: str
    n_test: int
    n_classes: int
    true_labels: np.ndarray
    class_names: tuple[str, ...] | None = None
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self) -> None:
        _identifier(self.dataset_id, "dataset_id")
        if self.n_test <= 0:
            raise CorpusError(f"n_test must be positive, got {self.n_test}")
        if self.n_classes <= 1:
            raise CorpusError(f"n_classes must exceed 1, got {self.n_classes}")
        labels = np.asarray(self.true_labels, dtype=np.int64)
        if labels.shape != (self.n_test,):
            raise CorpusError(
                f"true_labels has length {labels.shape[0] if labels.ndim == 1 else labels.shape}, "
                f"expected n_test={self.n_test}")
        bad = np.flatnonzero((labels < 0) | (labels >= self.n_classes))
        if bad.size:
            i = int(bad[0])
            raise CorpusError(
                f"true_labels[{i}] = {labels[i]} outside [0, {self.n_classes})")
        object.__setattr__(self, "true_labels", _readonly(labels))
        if self.class_names is not None:
            names = tuple(self.class_names)
            if len(names) != self.n_classes:
                raise CorpusError(
                    f"class_names has length {len(names)}, expected {self.n_classes}")
            object.__setattr__(self, "class_names", names)

    @property
    def class_support(self) -> np.ndarray:
        """Number of test samples per class."""
        return np.bincount(self.true_labels, minlength=self.n_classes)

    @property
    def is_balanced(self) -> bool:
        support = self.class_support
        return bool(support.min() == support.max())

    def to_dict(self) -> dict:
        doc = {
            "schema_version": self.schema_version,
            "dataset_id": self.dataset_id,
            "n_test": self.n_test,
            "n_classes": self.n_classes,
            "true_labels": self.true_labels.tolist(),
        }
        if self.class_names is not None:
            doc["class_names"] = list(self.class_names)
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "DatasetManifest":
        _check_keys(doc, MANIFEST_REQUIRED, MANIFEST_KEYS, "manifest")
        names = doc.get("class_names")
        return cls(
            schema_version=str(doc["schema_version"]),
            dataset_id=doc["dataset_id"],
            n_test=int(doc["n_test"]),
            n_classes=int(doc["n_classes"]),
            true_labels=np.asarray(doc["true_labels"], dtype=np.int64),
            class_names=tuple(names) if names is not None else None,
        )


@dataclass(frozen=True)
class RunRecord:
    """One trained model's evaluation over the manifest's test set."""

    dataset_id: str
    arch: str
    config_id: str
    width_param: float
    n_params: int
    seed: int
    pred_labels: np.ndarray
    confidences: np.ndarray
    macs: int | None = None
    final_train_loss: float | None = None
    top5_pred_labels: np.ndarray | None = None
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self) -> None:
        _identifier(self.dataset_id, "dataset_id")
        _identifier(self.arch, "arch")
        _identifier(self.config_id, "config_id")
        if self.n_params <= 0:
            raise CorpusError(f"n_params must be positive, got {self.n_params}")
        if self.macs is not None and self.macs <= 0:
            raise CorpusError(f"macs must be positive, got {self.macs}")
        if self.final_train_loss is not None and self.final_train_loss < 0:
            raise CorpusError(
                f"final_train_loss must be nonnegative, got {self.final_train_loss}")
        preds = np.asarray(self.pred_labels, dtype=np.int64)
        confs = np.asarray(self.confidences, dtype=np.float64)
        if preds.ndim != 1 or confs.ndim != 1:
            raise CorpusError("pred_labels and confidences must be 1-d sequences")
        object.__setattr__(self, "pred_labels", _readonly(preds))
        object.__setattr__(self, "confidences", _readonly(confs))
        if self.top5_pred_labels is not None:
            top5 = np.asarray(self.top5_pred_labels, dtype=np.int64)
            if top5.ndim != 2 or top5.shape[1] != 5:
                raise CorpusError(
                    f"top5_pred_labels must be n_test x 5, got shape {top5.shape}")
            object.__setattr__(self, "top5_pred_labels", _readonly(top5))

    @property
    def run_key(self) -> tuple[str, str, int]:
        return (self.arch, self.config_id, self.seed)

    def validate_against(self, manifest: DatasetManifest) -> None:
        """Check lengths and value ranges against the manifest's test set."""
        if self.dataset_id != manifest.dataset_id:
            raise CorpusError(
                f"record dataset_id {self.dataset_id!r} does not match "
                f"manifest {manifest.dataset_id!r}")
        n = manifest.n_test
        if len(self.pred_labels) != n:
            raise CorpusError(
                f"pred_labels has length {len(self.pred_labels)}, expected n_test={n} "
                f"(run {self.run_key})")
        if len(self.confidences) != n:
            raise CorpusError(
                f"confidences has length {len(self.confidences)}, expected n_test={n} "
                f"(run {self.run_key})")
        bad = np.flatnonzero(
            (self.pred_labels < 0) | (self.pred_labels >= manifest.n_classes))
        if bad.size:
            i = int(bad[0])
            raise CorpusError(
                f"pred_labels[{i}] = {self.pred_labels[i]} outside "
                f"[0, {manifest.n_classes}) (run {self.run_key})")
        bad = np.flatnonzero(
            (self.confidences < 0.0) | (self.confidences > 1.0)
            | ~np.isfinite(self.confidences))
        if bad.size:
            i = int(bad[0])
            raise CorpusError(
                f"confidences[{i}] = {self.confidences[i]} outside [0, 1] "
                f"(run {self.run_key})")
        if self.top5_pred_labels is not None:
            if self.top5_pred_labels.shape[0] != n:
                raise CorpusError(
                    f"top5_pred_labels has {self.top5_pred_labels.shape[0]} rows, "
                    f"expected n_test={n} (run {self.run_key})")
            if (self.top5_pred_labels < 0).any() or \
                    (self.top5_pred_labels >= manifest.n_classes).any():
                raise CorpusError(
                    f"top5_pred_labels contains a class index outside "
                    f"[0, {manifest.n_classes}) (run {self.run_key})")

    def to_dict(self) -> dict:
        doc = {
            "schema_version": self.schema_version,
            "dataset_id": self.dataset_id,
            "arch": self.arch,
            "config_id": self.config_id,
            "width_param": self.width_param,
            "n_params": self.n_params,
            "seed": self.seed,
            "pred_labels": self.pred_labels.tolist(),
            "confidences": self.confidences.tolist(),
        }
        if self.macs is not None:
            doc["macs"] = self.macs
        if self.final_train_loss is not None:
            doc["final_train_loss"] = self.final_train_loss
        if self.top5_pred_labels is not None:
            doc["top5_pred_labels"] = self.top5_pred_labels.tolist()
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "RunRecord":
        _check_keys(doc, RECORD_REQUIRED, RECORD_KEYS, "record")
        top5 = doc.get("top5_pred_labels")
        return cls(
            schema_version=str(doc["schema_version"]),
            dataset_id=doc["dataset_id"],
            arch=doc["arch"],
            config_id=doc["config_id"],
            width_param=float(doc["width_param"]),
            n_params=int(doc["n_params"]),
            macs=int(doc["macs"]) if doc.get("macs") is not None else None,
            seed=int(doc["seed"]),
            pred_labels=np.asarray(doc["pred_labels"], dtype=np.int64),
            confidences=np.asarray(doc["confidences"], dtype=np.float64),
            final_train_loss=(float(doc["final_train_loss"])
                              if doc.get("final_train_loss") is not None else None),
            top5_pred_labels=np.asarray(top5, dtype=np.int64) if top5 is not None else None,
        )


@dataclass(frozen=True)
class ErrorMask:
    """Per-sample misclassification bitset for one run (1 = wrong)."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 1:
            raise ValueError("error mask must be 1-d")
        object.__setattr__(self, "bits", _readonly(bits))

    @property
    def n_test(self) -> int:
        return int(self.bits.shape[0])

    @property
    def n_errors(self) -> int:
        return int(np.count_nonzero(self.bits))

    @property
    def error_rate(self) -> float:
        return self.n_errors / self.n_test


@dataclass(frozen=True)
class PerClassAccuracy:
    """Accuracy per class plus the class supports it was computed over."""

    values: np.ndarray
    support: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        support = np.asarray(self.support, dtype=np.int64)
        if values.shape != support.shape or values.ndim != 1:
            raise ValueError("values and support must be 1-d with equal length")
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "support", _readonly(support))

    @property
    def n_classes(self) -> int:
        return int(self.values.shape[0])

    @property
    def overall_accuracy(self) -> float:
        """Support-weighted mean, equal to the plain top-1 accuracy."""
        return float(self.values @ self.support / self.support.sum())


def error_mask(record: RunRecord, manifest: DatasetManifest) -> ErrorMask:
    """Bit i is set iff prediction i differs from the true label."""
    record.validate_against(manifest)
    return ErrorMask(bits=record.pred_labels != manifest.true_labels)


def accuracy(record: RunRecord, manifest: DatasetManifest) -> float:
    """Top-1 accuracy; complements the error mask's rate exactly."""
    return 1.0 - error_mask(record, manifest).error_rate


def per_class_accuracy(record: RunRecord, manifest: DatasetManifest) -> PerClassAccuracy:
    record.validate_against(manifest)
    support = manifest.class_support
    if (support == 0).any():
        missing = int(np.flatnonzero(support == 0)[0])
        raise CorpusError(
            f"class {missing} has zero test samples; per-class accuracy undefined")
    correct = record.pred_labels == manifest.true_labels
    hits = np.bincount(manifest.true_labels[correct], minlength=manifest.n_classes)
    return PerClassAccuracy(values=hits / support, support=support)


# --------------------------------------------------------------------------
# Serialization: manifest is a single JSON document, records are JSON Lines.
# --------------------------------------------------------------------------

def _check_keys(doc: Mapping, required: set, allowed: set, what: str) -> None:
    if not isinstance(doc, Mapping):
        raise CorpusError(f"{what} must be a JSON object, got {type(doc).__name__}")
    missing = required - doc.keys()
    if missing:
        raise CorpusError(f"{what} missing required keys: {sorted(missing)}")
    unknown = doc.keys() - allowed
    if unknown:
        raise CorpusError(f"{what} has unknown keys: {sorted(unknown)}")


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: manifest is not valid JSON: {exc}") from exc
    return DatasetManifest.from_dict(doc)


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest.to_dict()) + "\n")


def iter_records(path: str | Path) -> Iterator[RunRecord]:
    """Parse one record per JSONL line; errors carry the line number."""
    path = Path(path)
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                yield RunRecord.from_dict(doc)
            except CorpusError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from exc


def save_records(records: Iterable[RunRecord], path: str | Path) -> None:
    with Path(path).open("w") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict()) + "\n")


def load_corpus(
    manifest_path: str | Path,
    records_path: str | Path,
) -> tuple[DatasetManifest, list[RunRecord]]:
    """Load and validate a corpus.

    ``records_path`` may be a single JSONL file or a directory of them
    (scanned in sorted name order). Every record is validated against the
    manifest, duplicate (arch, config_id, seed) keys are rejected, and the
    result is ordered by (arch, n_params, config_id, seed) so runs of one
    configuration are contiguous.
    """
    manifest = load_manifest(manifest_path)
    records_path = Path(records_path)
    if records_path.is_dir():
        files = sorted(p for p in records_path.iterdir()
                       if p.is_file() and p.suffix == ".jsonl")
        if not files:
            raise CorpusError(f"{records_path}: no .jsonl record files found")
    else:
        files = [records_path]

    records: list[RunRecord] = []
    seen: dict[tuple[str, str, int], str] = {}
    for file in files:
        for record in iter_records(file):
            record.validate_against(manifest)
            if record.run_key in seen:
                raise CorpusError(
                    f"duplicate run key {record.run_key} in {file} "
                    f"(first seen in {seen[record.run_key]})")
            seen[record.run_key] = str(file)
            records.append(record)
    if not records:
        raise CorpusError(f"{records_path}: corpus contains no records")
    records.sort(key=lambda r: (r.arch, r.n_params, r.config_id, r.seed))
    return manifest, records


def group_runs(records: Iterable[RunRecord]) -> dict[tuple[str, str], list[RunRecord]]:
    """Group records by configuration, each group sorted by seed."""
    groups: dict[tuple[str, str], list[RunRecord]] = {}
    for record in records:
        groups.setdefault((record.arch, record.config_id), []).append(record)
    for runs in groups.values():
        runs.sort(key=lambda r: r.seed)
    return groups
