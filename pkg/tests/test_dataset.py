import numpy as np
import pytest

from ipbc import Dataset, DatasetError, generate_blobs, load_csv, standardize, write_csv


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestLoadCsv:
    def test_label_column_stripped(self, tmp_path):
        path = _write(tmp_path, "a,b,label\n1,2,x\n3,4,y\n5,6,x\n")
        ds = load_csv(path, label_column="label")
        assert ds.n == 3 and ds.d == 2
        assert ds.feature_names == ["a", "b"]
        # first-appearance encoding: x -> 0, y -> 1
        assert ds.labels.tolist() == [0, 1, 0]
        assert ds.point_ids == ["0", "1", "2"]

    def test_without_label_column_kept_as_feature(self, tmp_path):
        path = _write(tmp_path, "a,b,label\n1,2,7\n3,4,8\n5,6,7\n")
        ds = load_csv(path)
        assert ds.d == 3
        assert ds.labels is None

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = _write(tmp_path, "a,b\n1,2\n3,abc\n")
        with pytest.raises(DatasetError, match=r"row 3.*'b'.*'abc'"):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError, match="cannot open"):
            load_csv(str(tmp_path / "nope.csv"))

    def test_ragged_row(self, tmp_path):
        path = _write(tmp_path, "a,b\n1,2\n3\n")
        with pytest.raises(DatasetError, match="row 3"):
            load_csv(path)

    def test_absent_label_column(self, tmp_path):
        path = _write(tmp_path, "a,b\n1,2\n")
        with pytest.raises(DatasetError, match="'target'"):
            load_csv(path, label_column="target")

    def test_empty_data(self, tmp_path):
        path = _write(tmp_path, "a,b\n")
        with pytest.raises(DatasetError, match="no data rows"):
            load_csv(path)

    def test_non_finite_rejected(self, tmp_path):
        path = _write(tmp_path, "a,b\n1,inf\n")
        with pytest.raises(DatasetError, match="non-finite"):
            load_csv(path)

    def test_round_trip(self, tmp_path):
        ds = generate_blobs(10, 3, 2, 5.0, 0.7, seed=3)
        path = str(tmp_path / "rt.csv")
        write_csv(ds, path)
        back = load_csv(path, label_column="label")
        # 9 significant digits round-trips doubles written at that precision
        np.testing.assert_allclose(back.features, ds.features, rtol=1e-8)
        assert back.labels.tolist() == ds.labels.tolist()
        write_csv(back, str(tmp_path / "rt2.csv"))
        assert (tmp_path / "rt.csv").read_bytes() == (tmp_path / "rt2.csv").read_bytes()


class TestGenerateBlobs:
    def test_single_point_at_center(self):
        ds = generate_blobs(1, 2, 1, 0.0, 0.0, seed=0)
        assert ds.n == 1
        np.testing.assert_array_equal(ds.features, np.zeros((1, 2)))

    def test_deterministic(self):
        a = generate_blobs(20, 4, 3, 8.0, 1.0, seed=7)
        b = generate_blobs(20, 4, 3, 8.0, 1.0, seed=7)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_overlap_pair_center_distances(self):
        # Oracle: empirical class means approximate the true centers, so the
        # overlap pair should sit near sep/2 and every other pair near sep.
        ds = generate_blobs(100, 10, 3, 10.0, 1.0, overlap_pair=(1, 2), seed=1)
        means = np.vstack([ds.features[ds.labels == c].mean(axis=0) for c in range(3)])
        d12 = np.linalg.norm(means[1] - means[2])
        d01 = np.linalg.norm(means[0] - means[1])
        d02 = np.linalg.norm(means[0] - means[2])
        assert abs(d12 - 5.0) < 0.8
        assert abs(d01 - 10.0) < 0.8
        assert abs(d02 - 10.0) < 0.8

    def test_labels_partition_rows(self):
        ds = generate_blobs(5, 3, 4, 6.0, 0.5, seed=2)
        assert ds.labels.shape == (20,)
        assert set(ds.labels.tolist()) == {0, 1, 2, 3}
        assert all((ds.labels == c).sum() == 5 for c in range(4))

    def test_invalid_overlap_pair(self):
        with pytest.raises(DatasetError, match="overlap_pair"):
            generate_blobs(5, 3, 2, 6.0, 0.5, overlap_pair=(0, 2))

    def test_too_many_clusters_for_dimension(self):
        with pytest.raises(DatasetError, match="equidistant"):
            generate_blobs(5, 2, 4, 6.0, 0.5)


class TestStandardize:
    def test_two_value_column_hand_case(self):
        # population sd of [1, 3] is 1, so the column maps to [-1, 1]
        ds = Dataset(features=np.array([[1.0], [3.0]]))
        out = standardize(ds)
        np.testing.assert_allclose(out.features, [[-1.0], [1.0]])

    def test_constant_column_zeroed(self):
        ds = Dataset(features=np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]))
        out = standardize(ds)
        np.testing.assert_array_equal(out.features[:, 0], np.zeros(3))

    def test_idempotent(self, rng):
        ds = Dataset(features=rng.normal(3.0, 2.5, size=(40, 6)))
        once = standardize(ds)
        twice = standardize(once)
        np.testing.assert_allclose(twice.features, once.features, atol=1e-9)

    def test_needs_two_points(self):
        with pytest.raises(DatasetError):
            standardize(Dataset(features=np.array([[1.0, 2.0]])))

    def test_preserves_labels_and_names(self, tight_blobs):
        out = standardize(tight_blobs)
        assert out.feature_names == tight_blobs.feature_names
        np.testing.assert_array_equal(out.labels, tight_blobs.labels)


class TestDatasetInvariants:
    def test_rejects_non_finite(self):
        with pytest.raises(DatasetError):
            Dataset(features=np.array([[1.0, np.nan]]))

    def test_rejects_label_length_mismatch(self):
        with pytest.raises(DatasetError):
            Dataset(features=np.eye(3), labels=np.array([0, 1]))

    def test_rejects_duplicate_feature_names(self):
        with pytest.raises(DatasetError):
            Dataset(features=np.eye(2), feature_names=["a", "a"])

    def test_rejects_negative_labels(self):
        with pytest.raises(DatasetError):
            Dataset(features=np.eye(2), labels=np.array([0, -1]))
