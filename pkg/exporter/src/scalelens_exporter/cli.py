"""export-run command line: one checkpoint in, one record line out."""

from __future__ import annotations

import argparse
import json
import sys

from .export import ExportError, ExportJob, export_run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="export-run",
        description="Evaluate a trained checkpoint over a test set and append "
                    "a scalelens run record.")
    parser.add_argument("--checkpoint", required=True,
                        help="pickled nn.Module or TorchScript file")
    parser.add_argument("--dataset", required=True,
                        help="'cifar100[:root]' or a .pt file with images/labels")
    parser.add_argument("--arch", required=True)
    parser.add_argument("--config-id", required=True)
    parser.add_argument("--width", type=float, required=True,
                        help="width parameter of the configuration")
    parser.add_argument("--seed", type=int, required=True,
                        help="training seed the checkpoint came from")
    parser.add_argument("--out", required=True,
                        help="records JSONL path (appended to if present)")
    parser.add_argument("--manifest-out",
                        help="manifest path (default: manifest.json next to --out)")
    parser.add_argument("--batch-size", type=int, default=256)
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv: list[str] | None = None) -> None:
    args = build_parser().parse_args(argv)
    job = ExportJob(
        checkpoint=args.checkpoint, dataset=args.dataset, arch=args.arch,
        config_id=args.config_id, width_param=args.width, seed=args.seed,
        out=args.out, manifest_out=args.manifest_out,
        batch_size=args.batch_size, device=args.device)
    try:
        record = export_run(job)
    except ExportError as exc:
        json.dump({"error": {"type": "ExportError", "message": str(exc)}},
                  sys.stderr)
        sys.stderr.write("\n")
        sys.exit(1)
    print(f"wrote run ({job.arch}, {job.config_id}, seed {job.seed}) to "
          f"{job.out}: n_params={record['n_params']}, "
          f"accuracy={record['accuracy']:.4f}")


if __name__ == "__main__":
    main()
