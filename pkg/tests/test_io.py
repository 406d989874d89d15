import hashlib
import struct
import time

import numpy as np
import pytest

from figeo.distance import DistanceMatrix
from figeo.exceptions import InvalidConfig, InvalidData
from figeo.io import (DistanceCache, content_hash, emit_scatter_svg, load_timeseries,
                      read_distance_cache, read_embedding, read_sidecar, sidecar_path,
                      write_distance_cache, write_embedding, write_sidecar, write_table,
                      write_theta, write_timeseries)


def _dm(n=5, seed=0):
    X = np.random.default_rng(seed).standard_normal((n, 2))
    D = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
    np.fill_diagonal(D, 0.0)
    return DistanceMatrix(0.5 * (D + D.T), "fig")


def test_load_plain_numeric(tmp_path):
    p = tmp_path / "x.csv"
    X = np.random.default_rng(1).standard_normal((1000, 3))
    np.savetxt(p, X, delimiter=",")
    ts = load_timeseries(p)
    assert (ts.n, ts.d) == (1000, 3) and ts.labels is None


def test_round_trip_with_labels(tmp_path):
    p = tmp_path / "x.csv"
    X = np.random.default_rng(2).standard_normal((6, 2))
    write_timeseries(p, X, labels=["a", "b", "a", "c", "c", "a"])
    ts = load_timeseries(p)
    np.testing.assert_array_equal(ts.X, X)
    assert list(ts.labels) == ["a", "b", "a", "c", "c", "a"]
    assert ts.columns == ("x1", "x2")


def test_nan_row_cited(tmp_path):
    p = tmp_path / "x.csv"
    X = np.ones((10, 2))
    X[7, 1] = np.nan
    write_timeseries(p, X)
    with pytest.raises(InvalidData, match="row 7"):
        load_timeseries(p)


def test_parse_errors_cite_line(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("t,x1\n0,1.0\n1,abc\n")
    with pytest.raises(InvalidData, match="line 3"):
        load_timeseries(p)
    p.write_text("x1,x2\n1,2\n3\n")
    with pytest.raises(InvalidData, match="line 3"):
        load_timeseries(p)
    with pytest.raises(InvalidData):
        load_timeseries(tmp_path / "missing.csv")


def test_theta_csv(tmp_path):
    p = tmp_path / "theta.csv"
    write_theta(p, np.array([[1.0, 2.0], [3.0, 0.5]]))
    assert p.read_text().splitlines() == ["t,theta1,theta2", "0,1.0,2.0", "1,3.0,0.5"]


def test_distance_cache_header(tmp_path):
    p = tmp_path / "d.figd"
    dm = _dm(5)
    key = hashlib.sha256(b"x").hexdigest()
    write_distance_cache(p, dm, key)
    raw = p.read_bytes()
    assert raw[:4] == b"FIGD"
    assert struct.unpack("<I", raw[4:8])[0] == 1
    assert struct.unpack("<Q", raw[8:16])[0] == 5
    assert raw[16] == 0
    assert raw[17:49] == bytes.fromhex(key)
    assert len(raw) == 49 + 8 * 10
    back, stored = read_distance_cache(p)
    np.testing.assert_array_equal(back.D, dm.D)
    assert stored == key and back.method == "fig"


def test_distance_cache_rejects_corruption(tmp_path):
    p = tmp_path / "d.figd"
    write_distance_cache(p, _dm(4), bytes(32))
    raw = p.read_bytes()
    (tmp_path / "bad.figd").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(InvalidData):
        read_distance_cache(tmp_path / "bad.figd")
    (tmp_path / "short.figd").write_bytes(raw[:-8])
    with pytest.raises(InvalidData):
        read_distance_cache(tmp_path / "short.figd")


def test_cache_dir_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("FIG_CACHE_DIR", str(tmp_path / "c"))
    cache = DistanceCache()
    key = content_hash(np.zeros((3, 2)), "fig", "abc")
    assert cache.get(key) is None
    cache.put(key, _dm(3))
    assert (tmp_path / "c" / f"{key}.figd").exists()
    np.testing.assert_array_equal(cache.get(key).D, _dm(3).D)


def test_content_hash_sensitivity():
    X = np.zeros((3, 2))
    h = content_hash(X, "fig", "a")
    assert h == content_hash(X.copy(), "fig", "a")
    assert h != content_hash(X, "dig", "a")
    assert h != content_hash(X, "fig", "b")
    Y = X.copy()
    Y[1, 1] = 1e-300
    assert h != content_hash(Y, "fig", "a")


def test_embedding_csv_and_sidecar(tmp_path):
    p = tmp_path / "e.csv"
    Y = np.random.default_rng(3).standard_normal((4, 2))
    write_embedding(p, Y, labels=["u", "v", "u", "v"], index=[0, 5, 10, 15])
    index, labels, back = read_embedding(p)
    np.testing.assert_array_equal(back, Y)
    assert list(index) == [0, 5, 10, 15] and list(labels) == ["u", "v", "u", "v"]
    assert p.read_text().splitlines()[0] == "index,label,y1,y2"
    write_sidecar(sidecar_path(p), [("t", 4), ("config.windows.l1", "10")])
    assert read_sidecar(sidecar_path(p)) == {"t": "4", "config.windows.l1": "10"}


def test_write_table(tmp_path):
    p = tmp_path / "r.csv"
    write_table(p, [{"method": "fig", "mantel_r": 0.1, "seed": 2}], ("method", "seed", "mantel_r", "runtime_s"))
    assert p.read_text() == "method,seed,mantel_r,runtime_s\nfig,2,0.1,\n"


def test_svg_two_points_two_labels(tmp_path):
    p = tmp_path / "s.svg"
    emit_scatter_svg(np.array([[0.0, 0.0], [1.0, 1.0]]), ["a", "b"], p)
    text = p.read_text()
    assert text.count("<circle") == 2
    legend = text[text.index('<g font-family="sans-serif" font-size="12">'):]
    assert legend.count("<rect") == 2
    assert ">a</text>" in legend and ">b</text>" in legend


def test_svg_deterministic(tmp_path):
    Y = np.random.default_rng(4).standard_normal((50, 3))
    labels = np.arange(50) % 4
    emit_scatter_svg(Y, labels, tmp_path / "a.svg")
    emit_scatter_svg(Y, labels, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_svg_rejects_high_dimension(tmp_path):
    with pytest.raises(InvalidConfig):
        emit_scatter_svg(np.zeros((5, 4)), None, tmp_path / "x.svg")
    with pytest.raises(InvalidData):
        emit_scatter_svg(np.zeros((5, 2)), ["a"], tmp_path / "x.svg")


def test_svg_thousand_points_fast(tmp_path):
    Y = np.random.default_rng(5).standard_normal((1000, 2))
    start = time.perf_counter()
    emit_scatter_svg(Y, np.arange(1000) % 5, tmp_path / "big.svg")
    assert time.perf_counter() - start < 1.0
    assert (tmp_path / "big.svg").read_text().count("<circle") == 1000
