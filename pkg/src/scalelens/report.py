"""Full-corpus report: every analysis, written as plot-ready CSV plus JSON.

Output is reproducible byte for byte: floats are fixed at 9 significant
digits, JSON keys are sorted, analyses merge in (arch, n_params) order
regardless of worker count, and every stochastic step derives its seed from
the single report seed.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from . import __version__
from .calibration import BIN_RULE, DEFAULT_BINS, CalibrationSummary, ece
from .fairness import DEFAULT_NULL_TRIALS, FairnessSummary, fairness_summary
from .overlap import (BOOTSTRAP_METHOD, BOOTSTRAP_PRNG, OverlapSummary,
                      bootstrap_ci, cross_config_overlap, cross_seed_baseline)
from .records import (DatasetManifest, RunRecord, error_mask, group_runs,
                      per_class_accuracy)
from .scaling import (DIMINISHING_THRESHOLD, SATURATED_THRESHOLD, ScalingFit,
                      classify_saturation, compare_exponents, fit_power_law,
                      local_exponents, scaling_points_from_runs)

T = TypeVar("T")
U = TypeVar("U")

DEFAULT_BOOTSTRAP_RESAMPLES = 10_000


@dataclass(frozen=True)
class ReportBundle:
    fingerprint: str
    version: str
    metadata: dict
    scaling: dict
    local_exponents: dict
    exponent_comparisons: list
    overlap_pairs: list[OverlapSummary]
    overlap_baselines: dict[str, OverlapSummary]
    fairness: dict[str, FairnessSummary]
    calibration: dict[str, dict]


def _fsig(value: float) -> float:
    """Fix a float at 9 significant digits for stable serialization."""
    if not np.isfinite(value):
        raise ValueError(f"non-finite value {value} in report output")
    return float(f"{value:.9g}")


def _rounded(obj):
    if isinstance(obj, float):
        return _fsig(obj)
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj


def corpus_fingerprint(manifest: DatasetManifest, records: Sequence[RunRecord]) -> str:
    """SHA-256 over the canonical serialization of the corpus."""
    digest = hashlib.sha256()
    digest.update(json.dumps(manifest.to_dict(), sort_keys=True,
                             separators=(",", ":")).encode())
    for record in sorted(records, key=lambda r: r.run_key):
        digest.update(json.dumps(record.to_dict(), sort_keys=True,
                                 separators=(",", ":")).encode())
    return digest.hexdigest()


def _pmap(fn: Callable[[T], U], items: Sequence[T], threads: int) -> list[U]:
    """Order-preserving map, optionally over a thread pool."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _config_label(arch: str, config_id: str) -> str:
    return f"{arch}/{config_id}"


def _fit_dict(fit: ScalingFit) -> dict:
    return asdict(fit)


def run_report(
    manifest: DatasetManifest,
    records: Sequence[RunRecord],
    out_dir: str | Path,
    seed: int = 0,
    n_bins: int = DEFAULT_BINS,
    bootstrap_resamples: int = DEFAULT_BOOTSTRAP_RESAMPLES,
    null_trials: int = DEFAULT_NULL_TRIALS,
    threads: int = 1,
) -> ReportBundle:
    """Run every corpus analysis and write CSVs plus report.json to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    groups = group_runs(records)
    # configurations in (arch, n_params) order define every output's ordering
    ordered = sorted(groups, key=lambda key: (key[0], groups[key][0].n_params))
    labels = {key: _config_label(*key) for key in ordered}
    arches = sorted({arch for arch, _ in ordered})

    # ---- per-run derived quantities (shared by several analyses) ----------
    def derive(key):
        runs = groups[key]
        return {
            "masks": {r.seed: error_mask(r, manifest) for r in runs},
            "pcas": [per_class_accuracy(r, manifest) for r in runs],
            "cals": [ece(r, manifest, n_bins=n_bins) for r in runs],
        }

    derived = dict(zip(ordered, _pmap(derive, ordered, threads)))

    # ---- scaling fits per architecture ------------------------------------
    scaling: dict[str, dict] = {}
    locals_out: dict[str, list[dict]] = {}
    fits_for_compare: dict[str, ScalingFit] = {}
    for arch in arches:
        arch_records = [r for r in records if r.arch == arch]
        entry: dict = {}
        err_points = scaling_points_from_runs(arch_records, manifest, "error_rate")
        distinct = len({p.n_params for p in err_points})
        if distinct >= 3:
            fit = fit_power_law(err_points, "error_rate")
            entry["error_rate"] = _fit_dict(fit)
            if fit.per_seed_alphas is not None and len(fit.per_seed_alphas) >= 2:
                fits_for_compare[arch] = fit
            loss_points = scaling_points_from_runs(arch_records, manifest, "train_loss")
            if len({p.n_params for p in loss_points}) >= 3:
                entry["train_loss"] = _fit_dict(fit_power_law(loss_points, "train_loss"))
        if distinct >= 2:
            locs = local_exponents(err_points)
            labels_by_cfg = {cfg: _config_label(a, cfg)
                             for a, cfg in ordered if a == arch}
            locals_out[arch] = [
                {
                    "config_lo": labels_by_cfg[le.config_lo],
                    "config_hi": labels_by_cfg[le.config_hi],
                    "n_lo": le.n_lo,
                    "n_hi": le.n_hi,
                    "alpha_local": le.alpha_local,
                    "label": lab,
                }
                for le, lab in zip(locs, classify_saturation(locs))
            ]
        if entry:
            scaling[arch] = entry

    comparisons = []
    for i, arch_a in enumerate(sorted(fits_for_compare)):
        for arch_b in sorted(fits_for_compare)[i + 1:]:
            t_stat, p_value, dof = compare_exponents(
                fits_for_compare[arch_a], fits_for_compare[arch_b])
            comparisons.append({
                "arch_a": arch_a, "arch_b": arch_b,
                "t_statistic": t_stat, "p_value": p_value, "dof": dof,
            })

    # ---- overlap matrix ----------------------------------------------------
    pair_keys = [(ka, kb) for i, ka in enumerate(ordered)
                 for kb in ordered[i + 1:]]

    def overlap_pair(indexed):
        idx, (ka, kb) = indexed
        summary = cross_config_overlap(
            derived[ka]["masks"], derived[kb]["masks"],
            config_a=labels[ka], config_b=labels[kb])
        ci = None
        if summary.n_pairs >= 2:
            ci = bootstrap_ci(summary.pair_values, bootstrap_resamples,
                              seed=seed + idx)
        return replace(summary, bootstrap_ci95=ci)

    overlap_pairs = _pmap(overlap_pair, list(enumerate(pair_keys)), threads)

    baselines = {}
    for key in ordered:
        if len(derived[key]["masks"]) >= 2:
            baselines[labels[key]] = cross_seed_baseline(
                derived[key]["masks"], config=labels[key])

    # ---- fairness and calibration per configuration ------------------------
    def fairness_for(indexed):
        idx, key = indexed
        return fairness_summary(
            derived[key]["pcas"], config_id=labels[key],
            null_trials=null_trials, null_seed=seed + 10_000 + idx)

    fairness = dict(zip(
        (labels[k] for k in ordered),
        _pmap(fairness_for, list(enumerate(ordered)), threads)))

    calibration: dict[str, dict] = {}
    for key in ordered:
        cals: list[CalibrationSummary] = derived[key]["cals"]
        eces = [c.ece for c in cals]
        entry = {
            "ece_mean": float(np.mean(eces)),
            "ece_std": float(np.std(eces, ddof=1)) if len(eces) >= 2 else None,
            "per_seed_ece": eces,
            "global_conf": float(np.mean([c.global_conf for c in cals])),
            "global_acc": float(np.mean([c.global_acc for c in cals])),
            "global_gap": float(np.mean([c.global_gap for c in cals])),
            "n_bins": n_bins,
        }
        correct = [c.mean_conf_correct for c in cals if c.mean_conf_correct is not None]
        incorrect = [c.mean_conf_incorrect for c in cals
                     if c.mean_conf_incorrect is not None]
        entry["mean_conf_correct"] = float(np.mean(correct)) if correct else None
        entry["mean_conf_incorrect"] = float(np.mean(incorrect)) if incorrect else None
        calibration[labels[key]] = entry

    metadata = {
        "tool_version": __version__,
        "seed": seed,
        "n_bins": n_bins,
        "bin_rule": BIN_RULE,
        "bootstrap": BOOTSTRAP_METHOD,
        "bootstrap_resamples": bootstrap_resamples,
        "bootstrap_note": ("seed pairs sharing a trained run are correlated; "
                           "resampling treats pair values as i.i.d."),
        "prng": BOOTSTRAP_PRNG,
        "null_trials": null_trials,
        "saturated_threshold": SATURATED_THRESHOLD,
        "diminishing_threshold": DIMINISHING_THRESHOLD,
        "class_balance": manifest.is_balanced,
    }

    bundle = ReportBundle(
        fingerprint=corpus_fingerprint(manifest, records),
        version=__version__,
        metadata=metadata,
        scaling=scaling,
        local_exponents=locals_out,
        exponent_comparisons=comparisons,
        overlap_pairs=overlap_pairs,
        overlap_baselines=baselines,
        fairness=fairness,
        calibration=calibration,
    )

    _write_csvs(bundle, manifest, derived, groups, ordered, labels, out)
    (out / "report.json").write_bytes(report_json_bytes(bundle))
    return bundle


def report_json_bytes(bundle: ReportBundle) -> bytes:
    doc = {
        "fingerprint": bundle.fingerprint,
        "version": bundle.version,
        "metadata": bundle.metadata,
        "scaling": bundle.scaling,
        "local_exponents": bundle.local_exponents,
        "exponent_comparisons": bundle.exponent_comparisons,
        "overlap": {
            "pairs": [_overlap_dict(s) for s in bundle.overlap_pairs],
            "cross_seed_baselines": {
                label: _overlap_dict(s)
                for label, s in bundle.overlap_baselines.items()
            },
        },
        "fairness": {label: _fairness_dict(s)
                     for label, s in bundle.fairness.items()},
        "calibration": bundle.calibration,
    }
    return (json.dumps(_rounded(doc), sort_keys=True, indent=1) + "\n").encode()


def _overlap_dict(summary: OverlapSummary) -> dict:
    doc = asdict(summary)
    doc["pair_values"] = list(summary.pair_values)
    if summary.bootstrap_ci95 is not None:
        doc["bootstrap_ci95"] = list(summary.bootstrap_ci95)
    return doc


def _fairness_dict(summary: FairnessSummary) -> dict:
    doc = asdict(summary)
    doc["per_seed_ginis"] = list(summary.per_seed_ginis)
    doc["bottom_k"] = {str(k): v for k, v in summary.bottom_k.items()}
    doc["top_k"] = {str(k): v for k, v in summary.top_k.items()}
    return doc


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Comma-separated, LF endings, no quoting (identifiers exclude commas)."""
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path.write_text(csv_text(header, rows), newline="\n")


def _write_csvs(bundle, manifest, derived, groups, ordered, labels, out: Path):
    from .records import accuracy as record_accuracy

    rows = []
    for key in ordered:
        runs = groups[key]
        accs = [100.0 * record_accuracy(r, manifest) for r in runs]
        errs = [derived[key]["masks"][r.seed].error_rate for r in runs]
        eces = [c.ece for c in derived[key]["cals"]]
        rows.append((
            labels[key], runs[0].n_params,
            float(np.mean(accs)),
            float(np.std(accs, ddof=1)) if len(accs) >= 2 else None,
            float(np.mean(errs)),
            float(np.mean(eces)),
        ))
    write_csv(out / "scaling.csv",
              ["config", "n_params", "acc_mean", "acc_std", "err_mean", "ece_mean"],
              rows)

    rows = []
    for arch in sorted(bundle.local_exponents):
        for entry in bundle.local_exponents[arch]:
            rows.append((arch, entry["config_lo"], entry["config_hi"],
                         entry["n_lo"], entry["n_hi"], entry["alpha_local"],
                         entry["label"]))
    write_csv(out / "local_exponents.csv",
              ["arch", "config_lo", "config_hi", "n_lo", "n_hi",
               "alpha_local", "label"],
              rows)

    label_list = [labels[k] for k in ordered]
    cell = {}
    for summary in bundle.overlap_pairs:
        cell[(summary.config_a, summary.config_b)] = summary.mean
        cell[(summary.config_b, summary.config_a)] = summary.mean
    for label, summary in bundle.overlap_baselines.items():
        cell[(label, label)] = summary.mean
    rows = []
    for la in label_list:
        rows.append([la] + [cell.get((la, lb)) for lb in label_list])
    write_csv(out / "jaccard_matrix.csv", ["config"] + label_list, rows)

    rows = []
    for key in ordered:
        label = labels[key]
        s = bundle.fairness[label]
        rows.append((
            label, groups[key][0].n_params, s.gini_mean, s.gini_std,
            s.null_gini, s.bottom_k.get(5), s.bottom_k.get(10),
            s.bottom_k.get(20), s.top_k.get(5),
        ))
    write_csv(out / "fairness.csv",
              ["config", "n_params", "gini_mean", "gini_std", "null_gini",
               "bottom_5", "bottom_10", "bottom_20", "top_5"],
              rows)

    rows = []
    for key in ordered:
        label = labels[key]
        c = bundle.calibration[label]
        rows.append((
            label, groups[key][0].n_params, c["ece_mean"], c["ece_std"],
            c["global_conf"], c["global_acc"], c["global_gap"],
            c["mean_conf_correct"], c["mean_conf_incorrect"],
        ))
    write_csv(out / "calibration.csv",
              ["config", "n_params", "ece_mean", "ece_std", "global_conf",
               "global_acc", "global_gap", "mean_conf_correct",
               "mean_conf_incorrect"],
              rows)
