import math

import numpy as np
import pytest

from terrapath.dataset import (
    DatasetSpec,
    generate_sample,
    load_manifest,
    load_sample_channels,
    write_dataset,
)
from terrapath.encoding import EncodingConfig, default_sigma, gaussian_encode
from terrapath.grid import octile
from terrapath.rasters import (
    RasterFormatError,
    read_ascii_grid,
    read_nnpr,
    read_path_text,
    write_ascii_grid,
    write_nnpr,
    write_path_text,
)
from terrapath.search import path_stats

from oracles import dijkstra_weighted_cost


def test_normalized_peak_and_sigma_point():
    enc = gaussian_encode(32, (16, 16), EncodingConfig(sigma=4.0))
    assert enc[16, 16] == pytest.approx(1.0, abs=1e-15)
    # cell at Euclidean distance sigma from the centre
    assert enc[16, 20] == pytest.approx(math.exp(-0.5), abs=1e-9)


def test_raw_peak_value():
    enc = gaussian_encode(16, (8, 8), EncodingConfig(sigma=64.0, normalize_peak=False))
    assert enc[8, 8] == pytest.approx(1.0 / (2.0 * math.pi * 4096.0), abs=1e-12)


def test_encoding_symmetry():
    enc = gaussian_encode(33, (16, 16), EncodingConfig(sigma=5.0))
    for dx, dy in ((3, 2), (7, 0), (5, 5), (0, 9)):
        assert enc[16 + dy, 16 + dx] == pytest.approx(enc[16 - dy, 16 - dx], abs=1e-15)


def test_encoding_argmax_unique_and_decay():
    enc = gaussian_encode(21, (4, 13), EncodingConfig(sigma=21 / 4))
    flat_argmax = np.argmax(enc)
    assert (flat_argmax % 21, flat_argmax // 21) == (4, 13)
    # strict decay along a ray
    row = enc[13, 4:]
    assert np.all(np.diff(row) < 0)


def test_encoding_validation():
    with pytest.raises(ValueError):
        EncodingConfig(sigma=0.0)
    with pytest.raises(ValueError):
        gaussian_encode(16, (16, 0), EncodingConfig(sigma=2.0))


def test_default_sigma():
    assert default_sigma(64) == 16.0


def test_sample_determinism():
    spec = DatasetSpec(count=4, size=32, seed=1)
    a = generate_sample(spec, 0)
    b = generate_sample(spec, 0)
    assert np.array_equal(a.cost.costs, b.cost.costs)
    assert np.array_equal(a.label, b.label)
    assert np.array_equal(a.start_enc, b.start_enc)
    assert a.meta == b.meta
    c = generate_sample(spec, 1)
    assert not np.array_equal(a.cost.costs, c.cost.costs) or not np.array_equal(a.label, c.label)


def test_flat_terrain_label_is_octile():
    spec = DatasetSpec(count=1, size=32, seed=3, ruggedness=0.0)
    sample = generate_sample(spec, 0)
    stats = path_stats(sample.label, sample.cost, spec.omega)
    assert stats.length == pytest.approx(octile(sample.meta.start, sample.meta.goal), abs=1e-9)


def test_labels_match_dijkstra():
    spec = DatasetSpec(count=20, size=32, seed=11)
    for index in range(20):
        sample = generate_sample(spec, index)
        stats = path_stats(sample.label, sample.cost, spec.omega)
        want = dijkstra_weighted_cost(
            sample.cost.costs, sample.meta.start, sample.meta.goal, spec.omega
        )
        assert stats.weighted_cost == pytest.approx(want, abs=1e-9)


def test_label_validity_and_raster():
    spec = DatasetSpec(count=3, size=48, seed=5)
    sample = generate_sample(spec, 2)
    # validates adjacency + obstacle avoidance internally
    path_stats(sample.label, sample.cost, spec.omega)
    assert sample.label_raster.sum() == len(sample.label)
    assert sample.label_raster[sample.label[:, 1], sample.label[:, 0]].all()
    sep = math.hypot(
        sample.meta.start[0] - sample.meta.goal[0],
        sample.meta.start[1] - sample.meta.goal[1],
    )
    assert sep >= spec.separation


def test_min_separation_validation():
    with pytest.raises(ValueError):
        DatasetSpec(count=1, size=16, min_separation=16 * math.sqrt(2.0))
    with pytest.raises(ValueError):
        DatasetSpec(count=0, size=16)


def test_nnpr_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.normal(size=(3, 64, 64)).astype(np.float32)
    path = tmp_path / "x.nnpr"
    write_nnpr(path, data)
    back = read_nnpr(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, data)


def test_nnpr_bad_magic(tmp_path):
    path = tmp_path / "bad.nnpr"
    path.write_bytes(b"XXXX" + bytes(12))
    with pytest.raises(RasterFormatError, match="magic"):
        read_nnpr(path)


def test_nnpr_truncated(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "t.nnpr"
    write_nnpr(path, rng.normal(size=(2, 8, 8)).astype(np.float32))
    raw = path.read_bytes()
    path.write_bytes(raw[:-7])
    with pytest.raises(RasterFormatError, match="size mismatch"):
        read_nnpr(path)
    short = tmp_path / "s.nnpr"
    short.write_bytes(raw[:10])
    with pytest.raises(RasterFormatError, match="truncated"):
        read_nnpr(short)


def test_nnpr_dimension_overflow(tmp_path):
    with pytest.raises(RasterFormatError, match="overflow"):
        write_nnpr(tmp_path / "o.nnpr", np.zeros((70000, 1, 1), dtype=np.float32))


def test_ascii_grid_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    values = rng.normal(size=(5, 7))
    path = tmp_path / "g.txt"
    write_ascii_grid(path, values, cell_size=2.5)
    back, cs = read_ascii_grid(path)
    assert cs == 2.5
    assert np.array_equal(back, values)


def test_ascii_grid_bad_counts(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("3 2 1.0\n1 2 3 4\n")
    with pytest.raises(RasterFormatError):
        read_ascii_grid(path)


def test_path_text_round_trip(tmp_path):
    cells = np.array([[0, 1], [1, 2], [2, 2]], dtype=np.int32)
    path = tmp_path / "p.txt"
    write_path_text(path, cells)
    assert path.read_text() == "0 1\n1 2\n2 2\n"
    assert np.array_equal(read_path_text(path), cells)


def test_dataset_write_and_manifest(tmp_path):
    spec = DatasetSpec(count=3, size=32, seed=9)
    manifest = write_dataset(spec, tmp_path / "ds")
    records = load_manifest(manifest)
    assert len(records) == 3
    for idx, rec in enumerate(records):
        assert rec["index"] == idx
        assert rec["omega"] == spec.omega
        assert rec["seed"] == spec.seed
        channels = load_sample_channels(rec)
        assert channels.shape == (3, 32, 32)
        label = read_path_text(rec["label_path"])
        assert tuple(label[0]) == tuple(rec["start"])
        assert tuple(label[-1]) == tuple(rec["goal"])
        sample = generate_sample(spec, idx)
        np.testing.assert_allclose(channels[0], sample.cost.costs, atol=1e-7)
        assert np.array_equal(label, sample.label)


def test_dataset_bytes_deterministic(tmp_path):
    spec = DatasetSpec(count=2, size=32, seed=4)
    m1 = write_dataset(spec, tmp_path / "a")
    m2 = write_dataset(spec, tmp_path / "b")
    assert m1.read_text() == m2.read_text()
    for rec1, rec2 in zip(load_manifest(m1), load_manifest(m2)):
        b1 = open(rec1["sample_path"], "rb").read()
        b2 = open(rec2["sample_path"], "rb").read()
        assert b1 == b2


def test_sigma_override():
    spec = DatasetSpec(count=1, size=32, seed=2, sigma=32 / 7)
    sample = generate_sample(spec, 0)
    assert sample.meta.sigma == pytest.approx(32 / 7)
    cx, cy = sample.meta.start
    enc = sample.start_enc
    assert enc[cy, cx] == pytest.approx(1.0)
