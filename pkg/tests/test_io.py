from __future__ import annotations

import json

import numpy as np
import pytest

from sbstacy.data import CensoredSample
from sbstacy.io import (
    DataFormatError,
    IngestConfig,
    discretize,
    export_sample,
    ingest,
    load_config,
    make_grid,
    write_melanoma_csv,
)
from sbstacy.process import TimeGrid

from conftest import melanoma_or_skip


def _write(path, text):
    path.write_text(text)
    return path


def test_right_closed_bins():
    grid = TimeGrid.uniform(3, 10.0)
    bins, status = discretize([0.5, 10.0, 10.0001, 20.0, 30.0], [1, 2, 0, 1, 1], grid)
    assert bins.tolist() == [1, 1, 2, 2, 3]
    assert status.tolist() == [1, 2, 0, 1, 1]


def test_times_past_grid_are_censored():
    grid = TimeGrid.uniform(2, 1.0)
    bins, status = discretize([1.0, 2.5], [1, 2], grid)
    assert bins.tolist() == [1, 2] and status.tolist() == [1, 0]
    with pytest.raises(DataFormatError):
        discretize([0.0], [1], grid)


def test_make_grid_variants():
    assert make_grid([0.5, 9.5], 2.0).horizon == 5
    assert make_grid([10.0], 2.0).horizon == 5
    assert make_grid([1.0], 1.0, horizon=7).horizon == 7
    g = make_grid([1.0], bin_edges=[0.0, 1.0, 5.0])
    assert np.allclose(g.edges, [0, 1, 5])
    with pytest.raises(ValueError):
        make_grid([1.0], 0.0)


def test_ingest_basic(tmp_path):
    path = _write(tmp_path / "d.csv", "time,status,age,sex\n1.5,1,50,1\n3,0,60,0\n2.0,2,55,1\n")
    sample, grid = ingest(path, {"bin_width": 1.0, "covariates": ["sex"]})
    assert grid.horizon == 3
    assert sample.times.tolist() == [2, 3, 2]
    assert sample.causes.tolist() == [1, 0, 2]
    assert sample.covariate_names == ("intercept", "sex")
    assert np.array_equal(sample.X, [[1, 1], [1, 0], [1, 1]])
    assert sample.k == 2 and len(sample.profiles) == 2


@pytest.mark.parametrize(
    "body, message",
    [
        ("time,status\n1,1\n2,x\n", "row 3: status"),
        ("time,status\n1,1\n-2,1\n", "row 3: time must be positive"),
        ("time,status\n1,1\nabc,1\n", "row 3: time 'abc'"),
        ("time,status,z\n1,1,2\n2,1\n", "row 3: expected 3 fields"),
        ("time,status,z\n1,1,\n", "row 2: missing value"),
        ("time,status,z\n1,1,q\n", "row 2: covariate 'z'"),
        ("time,status\n1,5\n", "row 2: status '5' outside 0..2"),
        ("t,status\n1,1\n", "missing required column 'time'"),
        ("time,status\n", "no data rows"),
    ],
)
def test_ingest_errors_name_the_row(tmp_path, body, message):
    path = _write(tmp_path / "bad.csv", body)
    with pytest.raises(DataFormatError, match=message):
        ingest(path, {"k": 2})


def test_unknown_settings_rejected():
    with pytest.raises(ValueError):
        IngestConfig.from_dict({"bin_size": 3})


def test_export_ingest_round_trip(tmp_path, rng):
    grid = TimeGrid.uniform(8, 30.0)
    n = 40
    X = np.column_stack([np.ones(n), rng.integers(0, 2, n), rng.normal(size=n)])
    sample = CensoredSample(rng.integers(1, 9, n), rng.integers(0, 3, n), grid, 2, X, ("intercept", "a", "b"))
    path = tmp_path / "s.csv"
    export_sample(sample, path)
    back, grid2 = ingest(path, {"bin_width": 30.0, "horizon": 8, "k": 2})
    assert grid2 == grid
    assert np.array_equal(back.times, sample.times)
    assert np.array_equal(back.causes, sample.causes)
    assert np.array_equal(back.X, sample.X)
    assert back.covariate_names == sample.covariate_names


def test_load_config_formats(tmp_path):
    j = _write(tmp_path / "c.json", json.dumps({"m": 2.0}))
    y = _write(tmp_path / "c.yaml", "m: 2.0\ndata:\n  bin_width: 5\n")
    assert load_config(j) == {"m": 2.0}
    assert load_config(y) == {"m": 2.0, "data": {"bin_width": 5}}
    assert load_config(_write(tmp_path / "e.yaml", "")) == {}
    with pytest.raises(ValueError):
        load_config(_write(tmp_path / "l.json", "[1, 2]"))


def test_melanoma_coding(tmp_path):
    time, status, sex = melanoma_or_skip()
    assert time.size == 205
    assert [int(np.sum(status == s)) for s in (1, 2, 0)] == [57, 14, 134]
    assert int(np.sum(sex == 0)) == 126 and int(np.sum(sex == 1)) == 79
    path = tmp_path / "mel.csv"
    write_melanoma_csv(path)
    sample, grid = ingest(path, {"bin_width": 100.0})
    assert sample.n == 205 and sample.k == 2 and grid.horizon == 56
    assert len(sample.profiles) == 2
