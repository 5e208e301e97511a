import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from hsfc_cluster.dataio import write_csv
from hsfc_cluster.models import DataMatrix, HardPartition


@pytest.fixture(scope="session")
def iris() -> DataMatrix:
    datasets = pytest.importorskip("sklearn.datasets")
    return DataMatrix(values=datasets.load_iris().data)


@pytest.fixture()
def iris_csv(tmp_path: Path, iris: DataMatrix) -> Path:
    return write_csv(tmp_path / "iris.csv", iris)


@pytest.fixture()
def two_blobs() -> tuple[DataMatrix, HardPartition]:
    rng = np.random.default_rng(11)
    left = rng.normal(0.0, 0.5, size=(10, 1))
    right = rng.normal(50.0, 0.5, size=(10, 1))
    X = DataMatrix(values=np.vstack([left, right]))
    truth = HardPartition(labels=np.repeat([0, 1], 10), n_clusters=2)
    return X, truth


@pytest.fixture()
def small_instance() -> DataMatrix:
    rng = np.random.default_rng(5)
    return DataMatrix(values=rng.normal(size=(5, 2)) * 2.0)
