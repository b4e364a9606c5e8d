"""Checkpoint evaluation and record export.

Runs a trained model over a test set in the dataset's native order and writes
the manifest/record files the scalelens toolkit ingests. No training, no
augmentation, no checkpoint selection: one checkpoint in, one record out.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import torch
import torch.nn.functional as F

SCHEMA_VERSION = "1"
PROB_SUM_TOLERANCE = 1e-3


class ExportError(RuntimeError):
    """Checkpoint/dataset mismatch or an invalid model output."""


@dataclass(frozen=True)
class ExportJob:
    checkpoint: str | Path
    dataset: str | Path
    arch: str
    config_id: str
    width_param: float
    seed: int
    out: str | Path
    manifest_out: str | Path | None = None
    batch_size: int = 256
    device: str = "cpu"


def load_checkpoint(path: str | Path, device: str = "cpu") -> torch.nn.Module:
    """Load a pickled nn.Module (optionally under a 'model' key) or TorchScript."""
    path = Path(path)
    try:
        obj = torch.load(path, map_location=device, weights_only=False)
    except Exception:
        try:
            return torch.jit.load(str(path), map_location=device)
        except Exception as exc:
            raise ExportError(f"{path}: not a loadable checkpoint: {exc}") from exc
    if isinstance(obj, dict) and isinstance(obj.get("model"), torch.nn.Module):
        obj = obj["model"]
    if not isinstance(obj, torch.nn.Module):
        raise ExportError(
            f"{path}: checkpoint holds {type(obj).__name__}, expected a full "
            f"nn.Module (bare state dicts carry no architecture)")
    return obj.to(device)


def load_dataset(spec: str | Path) -> dict:
    """Resolve a dataset spec to images, labels, and identity.

    Accepts ``cifar100`` / ``cifar100:<root>`` (torchvision test split, native
    order) or a path to a ``.pt`` file holding a dict with ``images``
    (N x C x H x W), ``labels`` (N), and optional ``class_names`` /
    ``dataset_id``.
    """
    spec = str(spec)
    if spec == "cifar100" or spec.startswith("cifar100:"):
        try:
            from torchvision import datasets, transforms
        except ImportError as exc:
            raise ExportError(
                "cifar100 dataset support needs torchvision "
                "(pip install scalelens-exporter[cifar])") from exc
        root = spec.partition(":")[2] or str(Path.home() / ".cache" / "scalelens")
        ds = datasets.CIFAR100(root, train=False, download=True,
                               transform=transforms.ToTensor())
        images = torch.stack([ds[i][0] for i in range(len(ds))])
        labels = torch.tensor(ds.targets, dtype=torch.long)
        return {"images": images, "labels": labels,
                "class_names": list(ds.classes), "dataset_id": "cifar100-test"}

    path = Path(spec)
    if not path.exists():
        raise ExportError(f"dataset {spec!r} not found")
    blob = torch.load(path, map_location="cpu", weights_only=False)
    if not isinstance(blob, dict) or "images" not in blob or "labels" not in blob:
        raise ExportError(f"{path}: expected a dict with 'images' and 'labels'")
    images = blob["images"].float()
    labels = blob["labels"].long()
    if images.shape[0] != labels.shape[0]:
        raise ExportError(
            f"{path}: {images.shape[0]} images vs {labels.shape[0]} labels")
    return {"images": images, "labels": labels,
            "class_names": blob.get("class_names"),
            "dataset_id": blob.get("dataset_id", path.stem)}


def _manifest_dict(data: dict) -> dict:
    labels = data["labels"]
    n_classes = int(labels.max().item()) + 1
    doc = {
        "schema_version": SCHEMA_VERSION,
        "dataset_id": data["dataset_id"],
        "n_test": int(labels.shape[0]),
        "n_classes": n_classes,
        "true_labels": labels.tolist(),
    }
    if data.get("class_names") is not None:
        doc["class_names"] = list(data["class_names"])
    return doc


def count_trainable_params(model: torch.nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


def evaluate(model: torch.nn.Module, data: dict, batch_size: int = 256,
             device: str = "cpu") -> dict:
    """Inference over the full set in index order; returns prediction arrays.

    The dataset order is the manifest order by construction: batches are
    taken as consecutive index slices, never shuffled, and the processed
    count is asserted against the dataset length.
    """
    images, labels = data["images"], data["labels"]
    n = images.shape[0]
    n_classes = int(labels.max().item()) + 1
    model.eval()
    preds, confs, top5 = [], [], []
    processed = 0
    with torch.no_grad():
        for start in range(0, n, batch_size):
            batch = images[start:start + batch_size].to(device)
            logits = model(batch)
            if logits.ndim != 2:
                raise ExportError(
                    f"model output has shape {tuple(logits.shape)}, expected "
                    f"(batch, n_classes)")
            if logits.shape[1] != n_classes:
                raise ExportError(
                    f"model emits {logits.shape[1]} classes but the dataset "
                    f"has {n_classes}")
            probs = F.softmax(logits.double(), dim=1)
            sums = probs.sum(dim=1)
            if not torch.isfinite(probs).all() or \
                    (sums - 1.0).abs().max().item() > PROB_SUM_TOLERANCE:
                raise ExportError(
                    "softmax outputs are not a probability distribution "
                    "(non-finite or sums far from 1)")
            conf, pred = probs.max(dim=1)
            preds.append(pred.cpu())
            confs.append(conf.cpu())
            if n_classes >= 5:
                top5.append(probs.topk(5, dim=1).indices.cpu())
            processed += batch.shape[0]
    assert processed == n, "evaluation must cover the full set in order"
    out = {
        "pred_labels": torch.cat(preds).tolist(),
        "confidences": torch.cat(confs).tolist(),
    }
    if top5:
        out["top5_pred_labels"] = torch.cat(top5).tolist()
    out["accuracy"] = float((torch.cat(preds) == labels).double().mean().item())
    return out


def export_run(job: ExportJob) -> dict:
    """Evaluate the checkpoint and append one record line to ``job.out``.

    Writes the manifest next to the records (or to ``job.manifest_out``) when
    missing; an existing manifest must agree with the dataset. Returns the
    record that was written.
    """
    model = load_checkpoint(job.checkpoint, device=job.device)
    data = load_dataset(job.dataset)
    manifest = _manifest_dict(data)

    manifest_path = Path(job.manifest_out) if job.manifest_out else \
        Path(job.out).parent / "manifest.json"
    if manifest_path.exists():
        existing = json.loads(manifest_path.read_text())
        for key in ("dataset_id", "n_test", "n_classes", "true_labels"):
            if existing.get(key) != manifest[key]:
                raise ExportError(
                    f"{manifest_path}: existing manifest disagrees with the "
                    f"dataset on {key!r}")
    else:
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        manifest_path.write_text(json.dumps(manifest) + "\n")

    result = evaluate(model, data, batch_size=job.batch_size, device=job.device)
    record = {
        "schema_version": SCHEMA_VERSION,
        "dataset_id": manifest["dataset_id"],
        "arch": job.arch,
        "config_id": job.config_id,
        "width_param": float(job.width_param),
        "n_params": count_trainable_params(model),
        "seed": int(job.seed),
        "pred_labels": result["pred_labels"],
        "confidences": result["confidences"],
    }
    if "top5_pred_labels" in result:
        record["top5_pred_labels"] = result["top5_pred_labels"]

    out_path = Path(job.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("a") as fh:
        fh.write(json.dumps(record) + "\n")
    record["accuracy"] = result["accuracy"]
    return record
