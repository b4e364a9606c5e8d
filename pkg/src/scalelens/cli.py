"""Command-line interface.

Exit codes: 0 success, 1 analysis or validation failure (a machine-readable
error JSON goes to stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import DEFAULT_BINS, ece
from .fairness import DEFAULT_NULL_TRIALS, fairness_summary
from .overlap import bootstrap_ci, cross_config_overlap, cross_seed_baseline
from .records import (CorpusError, error_mask, group_runs, load_corpus,
                      per_class_accuracy, save_manifest, save_records)
from .report import (DEFAULT_BOOTSTRAP_RESAMPLES, _config_label, _rounded,
                     csv_text, run_report, write_csv)
from .scaling import (classify_saturation, fit_power_law, local_exponents,
                      scaling_points_from_runs)
from .spectral import (DEFAULT_FIT_RANGE, NAIVE_WIDTH_COUNTING_GAMMA,
                       covariance_spectrum, fit_spectral_decay, implied_gamma,
                       predict_alpha)
from . import synth as synthmod


class UsageError(Exception):
    """Missing or inconsistent command-line options (exit code 2)."""


def _dump(doc) -> str:
    return json.dumps(_rounded(doc), sort_keys=True, indent=1)


def _require_corpus(args) -> tuple:
    if not args.manifest or not args.records:
        raise UsageError("this subcommand needs --manifest and --records")
    return load_corpus(args.manifest, args.records)


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("SCALELENS_THREADS")
    return max(1, int(env)) if env else 1


def _out_dir(args) -> Path | None:
    if args.out_dir is None:
        return None
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# subcommand implementations
# --------------------------------------------------------------------------

def cmd_validate(args) -> int:
    manifest, records = _require_corpus(args)
    groups = group_runs(records)
    seeds = [len(runs) for runs in groups.values()]
    print(f"ok: {len(records)} records, {len(groups)} configs, "
          f"{min(seeds)}-{max(seeds)} seeds per config, "
          f"dataset {manifest.dataset_id} "
          f"(n_test={manifest.n_test}, n_classes={manifest.n_classes}, "
          f"balanced={manifest.is_balanced})")
    return 0


def cmd_fit_scaling(args) -> int:
    manifest, records = _require_corpus(args)
    arches = sorted({r.arch for r in records})
    fits = {}
    for arch in arches:
        points = scaling_points_from_runs(
            [r for r in records if r.arch == arch], manifest, args.metric)
        if len({p.n_params for p in points}) < 3:
            continue
        fits[arch] = asdict(fit_power_law(points, args.metric))
    if not fits:
        raise CorpusError("no architecture has 3 distinct sizes to fit")
    if args.format == "csv":
        rows = [(arch, f["metric"], f["alpha"], f["intercept"], f["r_squared"],
                 f["alpha_mean"], f["alpha_std"],
                 f["alpha_ci95"][0] if f["alpha_ci95"] else None,
                 f["alpha_ci95"][1] if f["alpha_ci95"] else None,
                 f["n_points"]) for arch, f in fits.items()]
        header = ["arch", "metric", "alpha", "intercept", "r_squared",
                  "alpha_mean", "alpha_std", "ci_lo", "ci_hi", "n_points"]
        out = _out_dir(args)
        if out:
            write_csv(out / "fit_scaling.csv", header, rows)
            print(f"wrote {out / 'fit_scaling.csv'}")
        else:
            print(csv_text(header, rows), end="")
    else:
        text = _dump(fits)
        out = _out_dir(args)
        if out:
            (out / "fit_scaling.json").write_text(text + "\n")
            print(f"wrote {out / 'fit_scaling.json'}")
        else:
            print(text)
    return 0


def cmd_local_exponents(args) -> int:
    manifest, records = _require_corpus(args)
    arches = sorted({r.arch for r in records})
    result = {}
    rows = []
    for arch in arches:
        points = scaling_points_from_runs(
            [r for r in records if r.arch == arch], manifest, "error_rate")
        if len({p.n_params for p in points}) < 2:
            continue
        locs = local_exponents(points)
        labels = classify_saturation(locs)
        result[arch] = [dict(asdict(le), label=lab)
                        for le, lab in zip(locs, labels)]
        rows.extend((arch, le.config_lo, le.config_hi, le.n_lo, le.n_hi,
                     le.alpha_local, lab) for le, lab in zip(locs, labels))
    if not result:
        raise CorpusError("no architecture has 2 distinct sizes")
    out = _out_dir(args)
    if args.format == "csv" or out:
        header = ["arch", "config_lo", "config_hi", "n_lo", "n_hi",
                  "alpha_local", "label"]
        if out:
            write_csv(out / "local_exponents.csv", header, rows)
            print(f"wrote {out / 'local_exponents.csv'}")
        else:
            print(csv_text(header, rows), end="")
    else:
        print(_dump(result))
    return 0


def cmd_jaccard_matrix(args) -> int:
    manifest, records = _require_corpus(args)
    groups = group_runs(records)
    ordered = sorted(groups, key=lambda key: (key[0], groups[key][0].n_params))
    labels = [_config_label(*key) for key in ordered]
    masks = {key: {r.seed: error_mask(r, manifest) for r in groups[key]}
             for key in ordered}

    pairs = []
    cell = {}
    for i, ka in enumerate(ordered):
        for j, kb in enumerate(ordered[i + 1:], start=i + 1):
            summary = cross_config_overlap(
                masks[ka], masks[kb], config_a=labels[i], config_b=labels[j])
            ci = (bootstrap_ci(summary.pair_values, args.resamples, seed=args.seed)
                  if summary.n_pairs >= 2 else None)
            doc = asdict(summary)
            doc["bootstrap_ci95"] = list(ci) if ci else None
            pairs.append(doc)
            cell[(labels[i], labels[j])] = summary.mean
            cell[(labels[j], labels[i])] = summary.mean
    for i, key in enumerate(ordered):
        if len(masks[key]) >= 2:
            baseline = cross_seed_baseline(masks[key], config=labels[i])
            pairs.append(asdict(baseline))
            cell[(labels[i], labels[i])] = baseline.mean

    out = _out_dir(args)
    if out:
        rows = [[la] + [cell.get((la, lb)) for lb in labels] for la in labels]
        write_csv(out / "jaccard_matrix.csv", ["config"] + labels, rows)
        (out / "jaccard_pairs.json").write_text(_dump(pairs) + "\n")
        print(f"wrote {out / 'jaccard_matrix.csv'} and {out / 'jaccard_pairs.json'}")
    else:
        print(_dump(pairs))
    return 0


def cmd_fairness(args) -> int:
    manifest, records = _require_corpus(args)
    groups = group_runs(records)
    ordered = sorted(groups, key=lambda key: (key[0], groups[key][0].n_params))
    summaries = {}
    rows = []
    for idx, key in enumerate(ordered):
        label = _config_label(*key)
        pcas = [per_class_accuracy(r, manifest) for r in groups[key]]
        s = fairness_summary(pcas, config_id=label, ranking=args.ranking,
                             null_trials=args.null_trials,
                             null_seed=args.seed + idx)
        doc = asdict(s)
        doc["bottom_k"] = {str(k): v for k, v in s.bottom_k.items()}
        doc["top_k"] = {str(k): v for k, v in s.top_k.items()}
        summaries[label] = doc
        rows.append((label, groups[key][0].n_params, s.gini_mean, s.gini_std,
                     s.null_gini, s.bottom_k.get(5), s.bottom_k.get(10),
                     s.bottom_k.get(20), s.top_k.get(5)))
    out = _out_dir(args)
    if out:
        write_csv(out / "fairness.csv",
                  ["config", "n_params", "gini_mean", "gini_std", "null_gini",
                   "bottom_5", "bottom_10", "bottom_20", "top_5"], rows)
        (out / "fairness.json").write_text(_dump(summaries) + "\n")
        print(f"wrote {out / 'fairness.csv'} and {out / 'fairness.json'}")
    else:
        print(_dump(summaries))
    return 0


def cmd_calibration(args) -> int:
    manifest, records = _require_corpus(args)
    groups = group_runs(records)
    ordered = sorted(groups, key=lambda key: (key[0], groups[key][0].n_params))
    summaries = {}
    reliability_rows = []
    for key in ordered:
        label = _config_label(*key)
        per_seed = []
        for record in groups[key]:
            c = ece(record, manifest, n_bins=args.bins)
            per_seed.append(c)
            for b, stat in enumerate(c.bin_stats, start=1):
                reliability_rows.append(
                    (label, record.seed, b, stat.lo, stat.hi, stat.count,
                     stat.mean_confidence, stat.accuracy))
        summaries[label] = [asdict(c) for c in per_seed]
    out = _out_dir(args)
    if out:
        write_csv(out / "reliability.csv",
                  ["config", "seed", "bin", "lo", "hi", "count", "conf", "acc"],
                  reliability_rows)
        (out / "calibration.json").write_text(_dump(summaries) + "\n")
        print(f"wrote {out / 'reliability.csv'} and {out / 'calibration.json'}")
    else:
        print(_dump(summaries))
    return 0


def _load_matrix(args) -> np.ndarray:
    if args.matrix:
        matrix = np.load(args.matrix, allow_pickle=False)
        return np.asarray(matrix, dtype=np.float64)
    if args.images:
        try:
            from PIL import Image
        except ImportError as exc:
            raise CorpusError(
                "reading image directories requires Pillow "
                "(pip install pillow)") from exc
        root = Path(args.images)
        files = sorted(p for p in root.iterdir()
                       if p.suffix.lower() in {".png", ".jpg", ".jpeg", ".bmp"})
        if not files:
            raise CorpusError(f"{root}: no image files found")
        rows = []
        shape = None
        for file in files:
            arr = np.asarray(Image.open(file).convert("RGB"), dtype=np.float64)
            if shape is None:
                shape = arr.shape
            elif arr.shape != shape:
                raise CorpusError(
                    f"{file}: image shape {arr.shape} differs from {shape}")
            rows.append(arr.reshape(-1) / 255.0)
        return np.stack(rows)
    raise UsageError("spectral needs --matrix FILE.npy or --images DIR")


def cmd_spectral(args) -> int:
    matrix = _load_matrix(args)
    spectrum = covariance_spectrum(matrix)
    fit = fit_spectral_decay(spectrum, args.k_min, args.k_max)
    doc = asdict(fit)
    doc["predicted_alpha"] = (predict_alpha(fit.beta, args.gamma)
                              if fit.beta > 1.0 else None)
    doc["gamma_used"] = args.gamma
    if args.alpha is not None and fit.beta > 1.0:
        doc["implied_gamma"] = implied_gamma(args.alpha, fit.beta)
    out = _out_dir(args)
    if out:
        write_csv(out / "eigenvalues.csv", ["k", "eigenvalue"],
                  [(k + 1, float(v)) for k, v in enumerate(spectrum.eigenvalues)])
        (out / "spectral_fit.json").write_text(_dump(doc) + "\n")
        print(f"wrote {out / 'eigenvalues.csv'} and {out / 'spectral_fit.json'}")
    else:
        print(_dump(doc))
    return 0


def cmd_predict_alpha(args) -> int:
    if (args.gamma is None) == (args.alpha is None):
        raise UsageError("give exactly one of --gamma (predict the scaling "
                         "exponent) or --alpha (invert for rank efficiency)")
    if args.gamma is not None:
        print(f"{predict_alpha(args.beta, args.gamma):.9g}")
    else:
        print(f"{implied_gamma(args.alpha, args.beta):.9g}")
    return 0


def cmd_synth(args) -> int:
    params = json.loads(args.params) if args.params else {}
    spec = synthmod.SynthSpec(kind=args.kind, params=params, seed=args.seed)
    out = _out_dir(args)
    if out is None:
        raise UsageError("synth needs --out-dir")
    if spec.kind == "planted_spectrum":
        matrix = synthmod.gen_planted_spectrum(seed=spec.seed, **params)
        np.save(out / "matrix.npy", matrix)
        print(f"wrote {out / 'matrix.npy'}")
        return 0
    if spec.kind == "power_law_curve":
        manifest, records = synthmod.gen_scaling_corpus(seed=spec.seed, **params)
    elif spec.kind == "overlap_masks":
        manifest, records = synthmod.gen_overlap_corpus(seed=spec.seed, **params)
    elif spec.kind == "calibration_profile":
        manifest, records = synthmod.gen_calibration_corpus(seed=spec.seed, **params)
    elif spec.kind == "binomial_classes":
        manifest, records = synthmod.gen_binomial_class_corpus(seed=spec.seed, **params)
    else:
        raise CorpusError(f"unhandled synth kind {spec.kind!r}")
    save_manifest(manifest, out / "manifest.json")
    save_records(records, out / "records.jsonl")
    print(f"wrote {out / 'manifest.json'} and {out / 'records.jsonl'} "
          f"({len(records)} records)")
    return 0


def cmd_report(args) -> int:
    manifest, records = _require_corpus(args)
    out = _out_dir(args)
    if out is None:
        raise UsageError("report needs --out-dir")
    run_report(
        manifest, records, out,
        seed=args.seed,
        n_bins=args.bins,
        bootstrap_resamples=args.resamples,
        null_trials=args.null_trials,
        threads=_threads(args),
    )
    print(f"wrote report to {out}")
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scalelens",
        description="Scaling, error-overlap, fairness, calibration, and "
                    "spectral analyses over model evaluation records.")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", help="dataset manifest JSON path")
    common.add_argument("--records", help="run-record JSONL file or directory")
    common.add_argument("--out-dir", help="directory for output files")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for all stochastic steps")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default SCALELENS_THREADS or 1); "
                             "never changes numeric output")

    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common],
                   help="validate a corpus against its manifest")

    p = sub.add_parser("fit-scaling", parents=[common],
                       help="power-law fit of a metric vs parameter count")
    p.add_argument("--metric", choices=("error_rate", "train_loss"),
                   default="error_rate")

    sub.add_parser("local-exponents", parents=[common],
                   help="finite-difference exponents between adjacent sizes")

    p = sub.add_parser("jaccard-matrix", parents=[common],
                       help="error-set overlap matrix with null models")
    p.add_argument("--resamples", type=int, default=DEFAULT_BOOTSTRAP_RESAMPLES)

    p = sub.add_parser("fairness", parents=[common],
                       help="per-class inequality metrics")
    p.add_argument("--ranking", choices=("per_seed", "pooled"),
                   default="per_seed",
                   help="how the hardest classes are chosen for bottom-k")
    p.add_argument("--null-trials", type=int, default=DEFAULT_NULL_TRIALS)

    p = sub.add_parser("calibration", parents=[common],
                       help="expected calibration error and confidence split")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)

    p = sub.add_parser("spectral", parents=[common],
                       help="covariance eigenspectrum and decay-exponent fit")
    p.add_argument("--matrix", help="NPY file, one sample per row")
    p.add_argument("--images", help="directory of equally-sized images")
    p.add_argument("--k-min", type=int, default=DEFAULT_FIT_RANGE[0])
    p.add_argument("--k-max", type=int, default=DEFAULT_FIT_RANGE[1])
    p.add_argument("--gamma", type=float, default=NAIVE_WIDTH_COUNTING_GAMMA,
                   help="rank efficiency used for the predicted exponent")
    p.add_argument("--alpha", type=float, default=None,
                   help="measured exponent to invert for rank efficiency")

    p = sub.add_parser("predict-alpha", parents=[common],
                       help="map spectral decay and rank efficiency to the "
                            "scaling exponent, or invert it")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)

    p = sub.add_parser("synth", parents=[common],
                       help="write a synthetic corpus with planted parameters")
    p.add_argument("--kind", choices=synthmod.SYNTH_KINDS, required=True)
    p.add_argument("--params", help="JSON object of generator parameters")

    p = sub.add_parser("report", parents=[common],
                       help="run every analysis and write CSVs plus report.json")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--resamples", type=int, default=DEFAULT_BOOTSTRAP_RESAMPLES)
    p.add_argument("--null-trials", type=int, default=DEFAULT_NULL_TRIALS)

    return parser


_COMMANDS = {
    "validate": cmd_validate,
    "fit-scaling": cmd_fit_scaling,
    "local-exponents": cmd_local_exponents,
    "jaccard-matrix": cmd_jaccard_matrix,
    "fairness": cmd_fairness,
    "calibration": cmd_calibration,
    "spectral": cmd_spectral,
    "predict-alpha": cmd_predict_alpha,
    "synth": cmd_synth,
    "report": cmd_report,
}


def cli_dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 2
    except (CorpusError, ValueError, OSError) as exc:
        json.dump({"error": {"type": type(exc).__name__, "message": str(exc)}},
                  sys.stderr)
        sys.stderr.write("\n")
        return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
