"""CIFAR-100 access for the spectral pipeline.

Builds the 50,000 x 3,072 training-image matrix (raw intensities in [0, 1],
one flattened image per row) from the standard python-pickle distribution.
The archive is fetched once into a cache directory and reused afterwards;
point SCALELENS_DATA at an existing copy to skip the download.
"""

from __future__ import annotations

import hashlib
import os
import pickle
import tarfile
import urllib.error
import urllib.request
from pathlib import Path

import numpy as np

CIFAR100_URL = "https://www.cs.toronto.edu/~kriz/cifar-100-python.tar.gz"
CIFAR100_MD5 = "eb9058c3a382ffc7106e4002c42a8d85"
_ARCHIVE_NAME = "cifar-100-python.tar.gz"
_TRAIN_MEMBER = "cifar-100-python/train"


class DatasetUnavailableError(RuntimeError):
    """CIFAR-100 is not cached locally and could not be downloaded."""


def default_data_dir() -> Path:
    env = os.environ.get("SCALELENS_DATA")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "scalelens"


def _md5(path: Path) -> str:
    digest = hashlib.md5()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def fetch_cifar100(data_dir: str | Path | None = None, download: bool = True) -> Path:
    """Return the path of the verified CIFAR-100 archive, downloading if needed."""
    root = Path(data_dir) if data_dir is not None else default_data_dir()
    archive = root / _ARCHIVE_NAME
    if archive.exists() and _md5(archive) == CIFAR100_MD5:
        return archive
    if not download:
        raise DatasetUnavailableError(
            f"CIFAR-100 archive not found at {archive} and download disabled")
    root.mkdir(parents=True, exist_ok=True)
    tmp = archive.with_suffix(".part")
    try:
        urllib.request.urlretrieve(CIFAR100_URL, tmp)
    except (urllib.error.URLError, OSError) as exc:
        raise DatasetUnavailableError(
            f"could not download CIFAR-100 from {CIFAR100_URL}: {exc}") from exc
    if _md5(tmp) != CIFAR100_MD5:
        tmp.unlink(missing_ok=True)
        raise DatasetUnavailableError("downloaded CIFAR-100 archive failed md5 check")
    tmp.replace(archive)
    return archive


def load_cifar100_train_matrix(
    data_dir: str | Path | None = None,
    download: bool = True,
) -> np.ndarray:
    """The 50,000 x 3,072 matrix of flattened training images in [0, 1]."""
    archive = fetch_cifar100(data_dir, download=download)
    with tarfile.open(archive, "r:gz") as tar:
        member = tar.extractfile(_TRAIN_MEMBER)
        if member is None:
            raise DatasetUnavailableError(
                f"archive {archive} lacks member {_TRAIN_MEMBER}")
        batch = pickle.load(member, encoding="bytes")
    data = np.asarray(batch[b"data"], dtype=np.float64)
    if data.shape != (50_000, 3_072):
        raise DatasetUnavailableError(
            f"unexpected CIFAR-100 train shape {data.shape}")
    return data / 255.0
