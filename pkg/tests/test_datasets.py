import numpy as np
import pytest

from rformer.datasets import (
    CsvSchema,
    SchemaError,
    SineConfig,
    dump_csv,
    gen_sine_dataset,
    load_csv,
    load_dataset_dir,
    split_indices,
)


@pytest.fixture(scope="module")
def small():
    return gen_sine_dataset(SineConfig(num_samples=60, num_classes=7, seq_len=50, seed=3))


def test_default_config_matches_reported_sizes():
    cfg = SineConfig()
    assert (cfg.num_samples, cfg.num_classes, cfg.seq_len, cfg.t_end) == (1000, 100, 2000, 6.0)
    w = cfg.omegas()
    assert w[0] == 10 and w[-1] == pytest.approx(500)
    np.testing.assert_allclose(np.diff(w), 490 / 99)


def test_default_dataset_shape():
    ds = gen_sine_dataset(SineConfig(seq_len=20))
    assert len(ds.series) == 1000
    assert sorted(set(ds.labels())) == list(range(100))


def test_noiseless_is_pure_sine():
    cfg = SineConfig(num_samples=5, num_classes=5, seq_len=100, trend=0.0, phase_scale=0.0, noise=0.0)
    ds = gen_sine_dataset(cfg)
    for s in ds.series:
        np.testing.assert_array_equal(s.values[:, 0], np.sin(cfg.omegas()[s.label] * s.timestamps))


def test_timestamps_are_linspace(small):
    for s in small.series:
        np.testing.assert_array_equal(s.timestamps, np.linspace(0, 6, 50))


def test_class_balance(small):
    counts = np.bincount(small.labels(), minlength=7)
    assert counts.min() >= 60 // 7 and counts.max() <= 60 // 7 + 1


def test_determinism(small):
    again = gen_sine_dataset(SineConfig(num_samples=60, num_classes=7, seq_len=50, seed=3))
    for a, b in zip(small.series, again.series):
        assert np.array_equal(a.values, b.values) and a.label == b.label
    for k in small.splits:
        assert np.array_equal(small.splits[k], again.splits[k])
    other = gen_sine_dataset(SineConfig(num_samples=60, num_classes=7, seq_len=50, seed=4))
    assert not np.array_equal(small.series[0].values, other.series[0].values)


def test_splits_partition(small):
    idx = np.concatenate([small.splits[k] for k in ("train", "val", "test")])
    assert sorted(idx.tolist()) == list(range(60))
    assert len(small.splits["train"]) == 42
    a, b = split_indices(100, (0.7, 0.15, 0.15), 1), split_indices(100, (0.7, 0.15, 0.15), 1)
    assert all(np.array_equal(a[k], b[k]) for k in a)


def test_config_validation():
    with pytest.raises(ValueError):
        SineConfig(num_samples=5, num_classes=10)
    with pytest.raises(ValueError):
        SineConfig(omega_min=5, omega_max=5)
    with pytest.raises(ValueError):
        SineConfig(t_end=0)


def test_csv_roundtrip(small, tmp_path):
    dump_csv(small, tmp_path)
    back = load_dataset_dir(tmp_path)
    assert len(back.series) == len(small.series)
    for a, b in zip(small.series, back.series):
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.timestamps, b.timestamps)
        assert a.label == b.label
    for k in ("train", "val", "test"):
        assert np.array_equal(back.splits[k], small.splits[k])


def test_minimal_csv(tmp_path):
    p = tmp_path / "toy.csv"
    p.write_text("time,x,y\n0,1.0,5\n1,2.0,5\n")
    (s,) = load_csv(p, CsvSchema(value_columns=("x",), id_column=None, target_column="y"))
    assert len(s) == 2 and s.label == 5.0


def test_missing_target_column(tmp_path):
    p = tmp_path / "toy.csv"
    p.write_text("time,x\n0,1.0\n1,2.0\n")
    with pytest.raises(SchemaError):
        load_csv(p, CsvSchema(value_columns=("x",), id_column=None, target_column="y"))


def test_ragged_and_non_numeric(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("time,x,y\n0,1.0,5\n1,2.0\n")
    with pytest.raises(SchemaError):
        load_csv(p, CsvSchema(value_columns=("x",), id_column=None, target_column="y"))
    p.write_text("time,x,y\n0,abc,5\n1,2.0,5\n")
    with pytest.raises(SchemaError):
        load_csv(p, CsvSchema(value_columns=("x",), id_column=None, target_column="y"))


def test_unsorted_time(tmp_path):
    p = tmp_path / "u.csv"
    p.write_text("time,x,y\n1,2.0,5\n0,1.0,5\n2,3.0,5\n")
    schema = CsvSchema(value_columns=("x",), id_column=None, target_column="y")
    with pytest.raises(SchemaError):
        load_csv(p, schema)
    (s,) = load_csv(p, CsvSchema(value_columns=("x",), id_column=None, target_column="y", sort_time=True))
    np.testing.assert_array_equal(s.values[:, 0], [1.0, 2.0, 3.0])


def test_implicit_time_index_and_grouping(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("id;a;b;target\n1;0.5;1;9\n1;0.7;2;9\n2;1.5;3;4\n2;1.0;4;4\n2;2.0;5;4\n")
    out = load_csv(p, CsvSchema(value_columns=("a", "b"), time_column=None, id_column="id", target_column="target",
                                delimiter=";"))
    assert [len(s) for s in out] == [2, 3]
    np.testing.assert_array_equal(out[1].timestamps, [0, 1, 2])
    assert out[1].dim == 2 and out[1].label == 4.0


def test_hr_shaped_file(tmp_path):
    # 4000 steps, two value channels plus time, one scalar target per record
    rng = np.random.default_rng(0)
    rows = ["series_id,time,ppg,ecg,hr"]
    for sid in range(2):
        hr = 60 + sid
        for i in range(4000):
            rows.append(f"{sid},{i / 125},{rng.normal()},{rng.normal()},{hr}")
    p = tmp_path / "hr.csv"
    p.write_text("\n".join(rows) + "\n")
    out = load_csv(p, CsvSchema(value_columns=("ppg", "ecg"), target_column="hr"))
    assert [(len(s), s.dim, s.label) for s in out] == [(4000, 2, 60.0), (4000, 2, 61.0)]
