import numpy as np
import pytest

from clusterreg.dataio import save_panel_long
from clusterreg.pipeline import PipelineConfig
from clusterreg.preprocess import FeatureMatrix
from clusterreg.synth import generate_synthetic

TRAIN_YEARS = list(range(2000, 2015))
TEST_YEARS = list(range(2015, 2020))


@pytest.fixture(scope="session")
def synthetic_case(tmp_path_factory):
    """Noiseless default-size synthetic panel on disk, with its truth."""
    panel, truth = generate_synthetic(seed=2024)
    root = tmp_path_factory.mktemp("synthetic")
    path = root / "panel.csv"
    save_panel_long(panel, path)
    config = PipelineConfig(
        data_path=str(path),
        train_years=list(TRAIN_YEARS),
        test_years=list(TEST_YEARS),
    )
    return panel, truth, path, config


@pytest.fixture(scope="session")
def synthetic_report(synthetic_case):
    """One default pipeline run over the synthetic panel, shared by tests."""
    from clusterreg.pipeline import run_pipeline

    _, _, _, config = synthetic_case
    return run_pipeline(config)


@pytest.fixture
def two_blobs():
    """Six 1-d points forming two tight far-apart groups."""
    values = np.array([[0.0], [0.5], [1.0], [10.0], [10.5], [11.0]])
    return FeatureMatrix(
        entities=tuple(f"p{i}" for i in range(6)),
        features=("x",),
        values=values,
    )


def map_partitions(promoted_labels, truth_labels):
    """Bijection detected-cluster-id -> planted-cluster-id, or None if the
    partitions differ."""
    detected: dict[int, set[int]] = {}
    planted: dict[int, set[int]] = {}
    for i, lab in enumerate(promoted_labels):
        detected.setdefault(lab, set()).add(i)
    for i, lab in enumerate(truth_labels):
        planted.setdefault(lab, set()).add(i)
    mapping = {}
    for did, members in detected.items():
        for pid, pmembers in planted.items():
            if members == pmembers:
                mapping[did] = pid
                break
        else:
            return None
    if len(mapping) != len(planted):
        return None
    return mapping
