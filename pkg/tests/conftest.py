import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from scalelens import DatasetManifest, RunRecord


@pytest.fixture
def small_manifest() -> DatasetManifest:
    """60 samples, 6 classes, balanced, deterministic order."""
    labels = np.tile(np.arange(6), 10)
    return DatasetManifest(dataset_id="toy", n_test=60, n_classes=6,
                           true_labels=labels)


def make_record(manifest, pred_labels, confidences=None, *, arch="net",
                config_id="cfg", seed=0, n_params=1000, **kwargs) -> RunRecord:
    if confidences is None:
        confidences = np.full(manifest.n_test, 0.5)
    return RunRecord(
        dataset_id=manifest.dataset_id, arch=arch, config_id=config_id,
        width_param=1.0, n_params=n_params, seed=seed,
        pred_labels=np.asarray(pred_labels), confidences=np.asarray(confidences),
        **kwargs)
