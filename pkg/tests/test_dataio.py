import csv
import re
import struct
from collections import Counter

import numpy as np
import pytest

from kernel_tsne.dataio import (
    LabeledDataset,
    generate_blobs,
    load_csv,
    load_idx,
    read_report_json,
    render_scatter_svg,
    write_dataset_csv,
    write_embedding_csv,
    write_idx,
    write_report_json,
)
from kernel_tsne.errors import DimensionError, FormatError, InputError, ParameterError
from kernel_tsne.metrics import TrustworthinessReport


class TestBlobs:
    def test_defaults(self):
        ds = generate_blobs()
        assert ds.X.shape == (2000, 100)
        assert Counter(ds.labels.tolist()) == {c: 200 for c in range(10)}

    def test_one_point_per_cluster(self):
        ds = generate_blobs(n=10)
        assert sorted(ds.labels.tolist()) == list(range(10))

    def test_deterministic(self):
        assert np.array_equal(generate_blobs(n=50, d=3, seed=7).X, generate_blobs(n=50, d=3, seed=7).X)
        assert not np.array_equal(generate_blobs(n=50, d=3, seed=7).X, generate_blobs(n=50, d=3, seed=8).X)

    def test_tiny_spread_collapses_to_centers(self):
        ds = generate_blobs(n=100, d=4, clusters=5, spread=1e-9)
        for c in range(5):
            pts = ds.X[ds.labels == c]
            assert np.max(np.abs(pts - pts[0])) < 1e-7
            assert np.all(np.abs(pts) <= 10.0 + 1e-7)

    @pytest.mark.parametrize("kwargs", [{"n": 0}, {"clusters": 0}, {"n": 5, "clusters": 6}, {"spread": 0.0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ParameterError):
            generate_blobs(**kwargs)


class TestLabeledDataset:
    def test_subsample_sorted_and_seeded(self):
        ds = generate_blobs(n=100, d=2)
        sub = ds.subsample(30, seed=1)
        assert sub.n == 30
        assert np.array_equal(sub.X, ds.subsample(30, seed=1).X)
        idx = [int(np.flatnonzero((ds.X == row).all(1))[0]) for row in sub.X]
        assert idx == sorted(idx)

    def test_standardized(self):
        ds = LabeledDataset(np.c_[np.arange(5.0), np.full(5, 3.0)])
        Z = ds.standardized().X
        np.testing.assert_allclose(Z.mean(0), 0, atol=1e-15)
        assert Z[:, 0].std() == pytest.approx(1.0) and np.all(Z[:, 1] == 0)

    def test_rejects_nan(self):
        with pytest.raises(InputError):
            LabeledDataset(np.array([[1.0, np.nan]]))

    def test_label_length(self):
        with pytest.raises(DimensionError):
            LabeledDataset(np.zeros((3, 2)), [0, 1])


class TestCSV:
    def write(self, tmp_path, text, name="data.csv"):
        p = tmp_path / name
        p.write_text(text)
        return p

    def test_header_and_label_column(self, tmp_path):
        p = self.write(tmp_path, "a,b,label\n1,2,0\n3,4,1\n")
        ds = load_csv(p, label_column="label")
        np.testing.assert_array_equal(ds.X, [[1, 2], [3, 4]])
        assert ds.labels.tolist() == [0, 1]

    def test_headerless_index_label(self, tmp_path):
        ds = load_csv(self.write(tmp_path, "5,1.5,2\n7,2.5,3\n"), label_column=0)
        assert ds.labels.tolist() == [5, 7]
        np.testing.assert_array_equal(ds.X, [[1.5, 2], [2.5, 3]])

    def test_nan_names_row_and_column(self, tmp_path):
        p = self.write(tmp_path, "a,b\n1,2\n3,nan\n")
        with pytest.raises(FormatError, match=r"row 3, column 2"):
            load_csv(p)

    def test_non_numeric(self, tmp_path):
        with pytest.raises(FormatError, match=r"row 2, column 1.*'x'"):
            load_csv(self.write(tmp_path, "1,2\nx,4\n"))

    def test_ragged(self, tmp_path):
        with pytest.raises(FormatError, match="row 3 has 3 columns"):
            load_csv(self.write(tmp_path, "a,b\n1,2\n3,4,5\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError, match="nope.csv"):
            load_csv(tmp_path / "nope.csv")

    def test_unknown_label_name(self, tmp_path):
        with pytest.raises(FormatError, match="'cls'"):
            load_csv(self.write(tmp_path, "a,b\n1,2\n"), label_column="cls")

    def test_round_trip(self, tmp_path):
        ds = generate_blobs(n=20, d=3, clusters=4)
        write_dataset_csv(ds, tmp_path / "blobs.csv")
        back = load_csv(tmp_path / "blobs.csv", label_column="label")
        assert np.array_equal(back.X, ds.X) and np.array_equal(back.labels, ds.labels)


class TestIDX:
    def fixture(self, tmp_path):
        img, lab = tmp_path / "img.idx", tmp_path / "lab.idx"
        img.write_bytes(struct.pack(">4I", 0x803, 1, 2, 2) + bytes([0, 128, 255, 64]))
        lab.write_bytes(struct.pack(">2I", 0x801, 1) + bytes([7]))
        return img, lab

    def test_pixel_scaling(self, tmp_path):
        ds = load_idx(*self.fixture(tmp_path))
        np.testing.assert_allclose(ds.X, [[0.0, 128 / 255, 1.0, 64 / 255]], rtol=1e-15)
        assert ds.labels.tolist() == [7]

    def test_count_mismatch(self, tmp_path):
        img, lab = self.fixture(tmp_path)
        lab.write_bytes(struct.pack(">2I", 0x801, 2) + bytes([7, 1]))
        with pytest.raises(FormatError, match="2 labels for 1 images"):
            load_idx(img, lab)

    def test_bad_magic(self, tmp_path):
        img, _ = self.fixture(tmp_path)
        img.write_bytes(struct.pack(">4I", 0x801, 1, 2, 2) + bytes(4))
        with pytest.raises(FormatError, match="magic"):
            load_idx(img)

    def test_truncated(self, tmp_path):
        img, _ = self.fixture(tmp_path)
        img.write_bytes(img.read_bytes()[:-1])
        with pytest.raises(FormatError, match="truncated"):
            load_idx(img)

    def test_round_trip(self, tmp_path, rng):
        images = rng.integers(0, 256, size=(5, 3, 4), dtype=np.uint8)
        labels = rng.integers(0, 10, size=5)
        write_idx(images, tmp_path / "i", labels, tmp_path / "l")
        ds = load_idx(tmp_path / "i", tmp_path / "l")
        np.testing.assert_array_equal(np.round(ds.X * 255).astype(np.uint8), images.reshape(5, -1))
        assert ds.labels.tolist() == labels.tolist()


class TestWriters:
    def test_embedding_csv(self, tmp_path, rng):
        Y = rng.normal(size=(6, 2))
        write_embedding_csv(Y, [0, 1, 0, 1, 2, 2], tmp_path / "e.csv")
        rows = list(csv.reader((tmp_path / "e.csv").open()))
        assert rows[0] == ["y1", "y2", "label"] and len(rows) == 7
        # repr floats round-trip exactly
        assert np.array_equal(np.array([[float(c) for c in r[:2]] for r in rows[1:]]), Y)

    def test_embedding_csv_label_mismatch(self, tmp_path):
        with pytest.raises(DimensionError):
            write_embedding_csv(np.zeros((3, 2)), [0, 1], tmp_path / "e.csv")

    def test_report_json(self, tmp_path):
        rep = TrustworthinessReport([10, 50], [0.9, 0.8], n=200, repeats=3, name="x", metadata={"gamma": 0.01})
        write_report_json(rep, tmp_path / "r.json")
        assert read_report_json(tmp_path / "r.json") == rep.to_dict()

    def test_svg(self, tmp_path, rng):
        Y = rng.normal(size=(25, 2))
        text = render_scatter_svg(Y, np.arange(25) % 3, tmp_path / "s.svg", title="a<b")
        assert text == (tmp_path / "s.svg").read_text()
        assert text.count("<circle") == 25
        assert len(set(re.findall(r'fill="(#[0-9a-f]{6})"', text))) == 3
        assert "a&lt;b" in text
        xs = [float(v) for v in re.findall(r'cx="([\d.]+)"', text)]
        assert min(xs) >= 40 - 1e-6 and max(xs) <= 760 + 1e-6

    def test_svg_needs_two_columns(self):
        with pytest.raises(DimensionError):
            render_scatter_svg(np.zeros((4, 3)))

    def test_svg_single_point(self):
        assert render_scatter_svg(np.zeros((1, 2))).count("<circle") == 1
