import numpy as np
import pytest

from hsfc_cluster.errors import DimensionMismatchError
from hsfc_cluster.models import (
    CentroidMatrix,
    ClusteringResult,
    DataMatrix,
    HardPartition,
    MembershipMatrix,
    MethodTag,
    squared_distances,
    validate_dims,
)


def _uniform_memberships(n: int, K: int) -> MembershipMatrix:
    return MembershipMatrix(mu=np.full((n, K), 1.0 / K))


def test_validate_dims_accepts_consistent_shapes():
    X = DataMatrix(values=np.zeros((150, 4)))
    G = CentroidMatrix(g=np.zeros((3, 4)))
    validate_dims(X, G, _uniform_memberships(150, 3))


def test_validate_dims_rejects_feature_mismatch():
    X = DataMatrix(values=np.zeros((150, 4)))
    G = CentroidMatrix(g=np.zeros((3, 2)))
    with pytest.raises(DimensionMismatchError) as info:
        validate_dims(X, G, _uniform_memberships(150, 3))
    assert info.value.pair == "p"


def test_validate_dims_rejects_object_count_mismatch():
    X = DataMatrix(values=np.zeros((150, 4)))
    G = CentroidMatrix(g=np.zeros((3, 4)))
    with pytest.raises(DimensionMismatchError) as info:
        validate_dims(X, G, _uniform_memberships(10, 3))
    assert info.value.pair == "n"


def test_validate_dims_rejects_cluster_count_mismatch():
    X = DataMatrix(values=np.zeros((6, 2)))
    G = CentroidMatrix(g=np.zeros((2, 2)))
    with pytest.raises(DimensionMismatchError) as info:
        validate_dims(X, G, _uniform_memberships(6, 3))
    assert info.value.pair == "K"


def test_data_matrix_is_read_only_copy():
    source = np.array([[1.0, 2.0], [3.0, 4.0]])
    X = DataMatrix(values=source)
    source[0, 0] = 99.0
    assert X.values[0, 0] == 1.0
    with pytest.raises(ValueError):
        X.values[0, 0] = 5.0
    assert (X.n, X.p) == (2, 2)
    assert X.row(1).tolist() == [3.0, 4.0]


@pytest.mark.parametrize(
    "values",
    [
        np.zeros((0, 2)),
        np.zeros(3),
        np.array([[1.0, np.nan]]),
        np.array([[np.inf, 1.0]]),
    ],
)
def test_data_matrix_rejects_bad_input(values):
    with pytest.raises(ValueError):
        DataMatrix(values=values)


def test_data_matrix_feature_names_must_match_width():
    with pytest.raises(ValueError):
        DataMatrix(values=np.zeros((2, 2)), feature_names=("a",))


def test_membership_matrix_checks_bounds_and_row_sums():
    MembershipMatrix(mu=[[0.2, 0.8], [1.0, 0.0]])
    with pytest.raises(ValueError):
        MembershipMatrix(mu=[[1.2, -0.2]])
    with pytest.raises(ValueError, match="row 1"):
        MembershipMatrix(mu=[[0.5, 0.5], [0.5, 0.4]])


def test_membership_column_sum_report():
    inside = MembershipMatrix(mu=[[0.9, 0.1], [0.2, 0.8]])
    assert inside.column_sums().tolist() == pytest.approx([1.1, 0.9])
    assert inside.column_sums_in_bounds() is True

    empty_column = MembershipMatrix(mu=[[1.0, 0.0], [1.0, 0.0]])
    assert empty_column.column_sums_in_bounds() is False


def test_hard_partition_validation_and_cardinalities():
    part = HardPartition(labels=[0, 2, 2, 1, 2], n_clusters=3)
    assert part.n == 5
    assert part.cardinalities().tolist() == [1, 1, 3]
    assert HardPartition.from_labels([1, 1, 0]).n_clusters == 2
    with pytest.raises(ValueError):
        HardPartition(labels=[0, 3], n_clusters=3)
    with pytest.raises(ValueError):
        HardPartition(labels=[], n_clusters=1)


def test_clustering_result_checks_cluster_count():
    G = CentroidMatrix(g=np.zeros((2, 1)))
    with pytest.raises(DimensionMismatchError):
        ClusteringResult(
            centroids=G,
            memberships=_uniform_memberships(4, 3),
            objective=1.0,
            objective_trace=(2.0, 1.0),
            iterations=2,
            seed=0,
            method_tag=MethodTag.FCM,
        )


def test_squared_distances_matches_direct_computation():
    X = DataMatrix(values=[[0.0, 0.0], [3.0, 4.0]])
    G = CentroidMatrix(g=[[0.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(squared_distances(X, G), [[0.0, 2.0], [25.0, 13.0]])
