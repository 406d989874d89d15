import numpy as np
import pytest

from figeo.cli import main
from figeo.io import load_timeseries, read_distance_cache, read_embedding, read_sidecar


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("FIG_CACHE_DIR", str(tmp_path / "cache"))
    return tmp_path / "cache"


def test_unknown_command(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err.lower()
    assert main([]) == 1


def test_bad_flag_and_bad_value(capsys):
    assert main(["simulate", "--bogus"]) == 1
    assert main(["simulate", "--n", "1"]) == 1


def test_missing_input(tmp_path):
    assert main(["distance", str(tmp_path / "none.csv")]) == 1


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("windows.l9=3\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_internal_error_exit_two(monkeypatch, tmp_path):
    import figeo.cli as cli

    def boom(args, cfg):
        raise RuntimeError("boom")

    monkeypatch.setitem(cli.HANDLERS, "plot", boom)
    assert main(["plot", "x.csv", "--out", str(tmp_path / "p.svg")]) == 2


def test_simulate_writes_series_and_angles(tmp_path):
    assert main(["simulate", "--n", "1000", "--sigma", "0.1", "--seed", "1", "--out", str(tmp_path)]) == 0
    ts = load_timeseries(tmp_path / "X.csv")
    assert (ts.n, ts.d) == (1000, 3)
    theta = load_timeseries(tmp_path / "theta.csv")
    assert (theta.n, theta.d) == (1000, 2)
    meta = read_sidecar(tmp_path / "X.csv.meta")
    assert meta["config.simulate.sigma"] == "0.1" and "config_hash" in meta


def test_simulate_surrogate(tmp_path):
    assert main(["simulate", "--kind", "surrogate", "--segments", "40", "--d", "2",
                 "--segment-length", "8", "--out", str(tmp_path)]) == 0
    ts = load_timeseries(tmp_path / "X.csv")
    assert ts.n == 320 and ts.labels is not None


def test_distance_cache_reuse(tmp_path, cache_dir, capsys):
    main(["simulate", "--n", "80", "--out", str(tmp_path)])
    x = str(tmp_path / "X.csv")
    assert main(["distance", x, "--l1", "5", "--l2", "5", "--out", str(tmp_path / "a.figd")]) == 0
    assert "computed" in capsys.readouterr().out
    assert main(["distance", x, "--l1", "5", "--l2", "5", "--out", str(tmp_path / "b.figd")]) == 0
    assert "reused cached" in capsys.readouterr().out
    assert (tmp_path / "a.figd").read_bytes() == (tmp_path / "b.figd").read_bytes()
    assert main(["distance", x, "--l1", "5", "--l2", "6", "--out", str(tmp_path / "c.figd")]) == 0
    assert "computed" in capsys.readouterr().out
    assert read_distance_cache(tmp_path / "a.figd")[0].n == 80


def test_embed_end_to_end_and_mantel(tmp_path, cache_dir, capsys):
    main(["simulate", "--n", "120", "--out", str(tmp_path)])
    x = str(tmp_path / "X.csv")
    args = ["embed", x, "--method", "fig", "--l1", "10", "--l2", "10", "--r", "2"]
    assert main(args + ["--out", str(tmp_path / "e1.csv"), "--plot", str(tmp_path / "e1.svg")]) == 0
    assert main(args + ["--out", str(tmp_path / "e2.csv")]) == 0
    assert (tmp_path / "e1.csv").read_bytes() == (tmp_path / "e2.csv").read_bytes()
    _, _, Y = read_embedding(tmp_path / "e1.csv")
    assert Y.shape == (120, 2)
    assert (tmp_path / "e1.svg").read_text().count("<circle") == 120
    meta = read_sidecar(tmp_path / "e1.csv.meta")
    assert meta["config.windows.l1"] == "10" and "embed.t" in meta
    capsys.readouterr()
    assert main(["mantel", str(tmp_path / "e1.csv"), str(tmp_path / "e2.csv")]) == 0
    assert capsys.readouterr().out.strip() == "r=1.0"


def test_embed_from_cache_and_plot(tmp_path, cache_dir):
    main(["simulate", "--n", "60", "--out", str(tmp_path)])
    main(["distance", str(tmp_path / "X.csv"), "--method", "dig", "--out", str(tmp_path / "d.figd")])
    assert main(["embed", str(tmp_path / "d.figd"), "--r", "3", "--out", str(tmp_path / "e.csv")]) == 0
    assert main(["plot", str(tmp_path / "e.csv"), "--out", str(tmp_path / "e.svg")]) == 0
    assert (tmp_path / "e.svg").exists()


def test_config_file_and_override(tmp_path, cache_dir):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("simulate.n=50\nsimulate.sigma=0.2\n")
    assert main(["simulate", "--config", str(cfg), "--n", "40", "--out", str(tmp_path)]) == 0
    assert load_timeseries(tmp_path / "X.csv").n == 40
    meta = read_sidecar(tmp_path / "X.csv.meta")
    assert meta["config.simulate.n"] == "40" and meta["config.simulate.sigma"] == "0.2"
    # A sidecar doubles as a config file.
    out2 = tmp_path / "again"
    assert main(["simulate", "--config", str(tmp_path / "X.csv.meta"), "--out", str(out2)]) == 0
    assert (out2 / "X.csv").read_bytes() == (tmp_path / "X.csv").read_bytes()


def test_bench_small(tmp_path):
    assert main(["bench", "--n", "40", "--d", "2", "--repetitions", "3", "--l1", "5", "--l2", "5",
                 "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "bench_results.csv").read_text().splitlines()
    assert lines[0] == "method,repetition,runtime_s" and len(lines) == 7
