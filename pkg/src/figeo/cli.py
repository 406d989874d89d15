"""Command-line interface: ``figeo <subcommand> [options]``.

Every subcommand accepts ``--config FILE`` (``section.key=value`` lines, or
the ``.meta`` sidecar of an earlier output); flags given on the command line
override file values. Exit status is 0 on success, 1 for invalid data,
configuration or usage, and 2 for any other failure.
"""

import argparse
from pathlib import Path
import sys
import traceback

import numpy as np

from . import __version__
from .config import DISTANCE_KEYS, PipelineConfig
from .evaluation import (benchmark_data, benchmark_distance_stage, mantel, noise_sweep,
                         surrogate_sampling, window_sweep)
from .exceptions import InvalidConfig, InvalidData
from .features import stride_centers
from .io import (RESULT_COLUMNS, SUMMARY_COLUMNS, DistanceCache, content_hash, emit_scatter_svg,
                 load_timeseries, read_distance_cache, read_embedding, read_sidecar, sidecar_path,
                 write_distance_cache, write_embedding, write_sidecar, write_table, write_theta,
                 write_timeseries)
from .pipeline import distance_from_config, embedding_distances, embedding_from_config
from .simulation import simulate_sphere_walk, simulate_staged_surrogate

COMMANDS = ("simulate", "distance", "embed", "mantel", "sweep-noise", "sweep-window", "bench", "plot")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _opt(parser, flag, key, kind=str, help=None):
    parser.add_argument(flag, dest=key, type=kind, default=None, help=help)


def _distance_options(p):
    _opt(p, "--method", "method", help="fig, dig or euclidean")
    _opt(p, "--b", "basis.b", int, "Fourier functions per dimension")
    _opt(p, "--l1", "windows.l1", int, "samples per local estimate")
    _opt(p, "--l2", "windows.l2", int, "estimates per local covariance")
    _opt(p, "--stride", "windows.stride", int)
    _opt(p, "--offset", "windows.offset", int)
    _opt(p, "--k", "fpca.k", help="components per local model, or 'all'")
    _opt(p, "--normalization", "fpca.normalization", help="exp or inv_sqrt")
    _opt(p, "--bins", "dig.n_bins", int, "histogram bins per dimension")


def _embed_options(p):
    _opt(p, "--r", "embed.r", int, "embedding dimension")
    _opt(p, "--knn", "embed.knn", int)
    _opt(p, "--alpha", "embed.alpha", float)
    _opt(p, "--t", "embed.t", help="diffusion time, or 'auto'")
    _opt(p, "--t-max", "embed.t_max", int)


def build_parser():
    parser = _Parser(prog="figeo", description="Functional information geometry for time series.")
    parser.add_argument("--version", action="version", version=f"figeo {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="{" + ",".join(COMMANDS) + "}")

    def command(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="key=value config file or output sidecar")
        return p

    p = command("simulate", "simulate the sphere walk or the staged surrogate")
    p.add_argument("--kind", choices=("sphere", "surrogate"), default="sphere")
    _opt(p, "--n", "simulate.n", int, "number of walk steps")
    _opt(p, "--sigma", "simulate.sigma", float, "observation noise")
    _opt(p, "--step", "simulate.step", float, "walk step size")
    _opt(p, "--segments", "surrogate.segments", int)
    _opt(p, "--d", "surrogate.d", int)
    _opt(p, "--segment-length", "surrogate.segment_length", int)
    _opt(p, "--seed", "seeds", str)
    _opt(p, "--out", "paths.out", help="output directory")

    p = command("distance", "distance matrix of a series, cached by content hash")
    p.add_argument("input", help="time-series CSV")
    _distance_options(p)
    p.add_argument("--out", help="output cache file (default: <paths.out>/distance.figd)")
    _opt(p, "--cache-dir", "paths.cache")
    p.add_argument("--no-cache", action="store_true")

    p = command("embed", "embed a series or a distance cache")
    p.add_argument("input", help="time-series CSV or .figd distance cache")
    _distance_options(p)
    _embed_options(p)
    p.add_argument("--out", help="embedding CSV (default: <paths.out>/embedding.csv)")
    p.add_argument("--plot", help="also write an SVG scatter plot here")
    _opt(p, "--cache-dir", "paths.cache")
    p.add_argument("--no-cache", action="store_true")

    p = command("mantel", "Mantel correlation between two inputs")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--n-perm", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)

    p = command("sweep-noise", "Mantel agreement with the hidden angles across noise levels")
    _opt(p, "--sigmas", "sweep.sigmas", help="comma-separated noise levels")
    _opt(p, "--seeds", "seeds")
    _opt(p, "--n", "simulate.n", int)
    _opt(p, "--step", "simulate.step", float)
    _distance_options(p)
    _embed_options(p)
    _opt(p, "--out", "paths.out", help="output directory")

    p = command("sweep-window", "embedding agreement across covariance windows")
    _opt(p, "--windows", "sweep.windows", help="comma-separated covariance windows")
    _opt(p, "--seeds", "seeds")
    _opt(p, "--segments", "surrogate.segments", int)
    _opt(p, "--d", "surrogate.d", int)
    _opt(p, "--segment-length", "surrogate.segment_length", int)
    _embed_options(p)
    _opt(p, "--out", "paths.out", help="output directory")

    p = command("bench", "time the distance stage of each method")
    _opt(p, "--n", "bench.n", int)
    _opt(p, "--d", "bench.d", int)
    _opt(p, "--repetitions", "bench.repetitions", int)
    _opt(p, "--seeds", "seeds")
    _distance_options(p)
    _opt(p, "--out", "paths.out", help="output directory")

    p = command("plot", "SVG scatter plot of an embedding CSV")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--title", default="")
    return parser


def load_config(path):
    """Config from a key=value file or from the ``config.*`` lines of a sidecar."""
    if path is None:
        return PipelineConfig()
    text = Path(path).read_text(encoding="utf-8") if Path(path).exists() else None
    if text is None:
        raise InvalidConfig(f"config file {path} not found")
    if any(line.startswith("config.") for line in text.splitlines()):
        lines = [line[len("config."):] for line in text.splitlines() if line.startswith("config.")]
        return PipelineConfig.from_text("\n".join(lines))
    return PipelineConfig.from_text(text)


def resolve_config(args):
    cfg = load_config(getattr(args, "config", None))
    overrides = {k: v for k, v in vars(args).items() if "." in k or k in ("method", "seeds")}
    return cfg.updated(overrides)


def _out_dir(cfg):
    out = Path(cfg["paths.out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _meta(cfg, **extra):
    return list(extra.items()) + [("config_hash", cfg.digest())] + cfg.lines()


def cmd_simulate(args, cfg):
    out = _out_dir(cfg)
    seed = cfg["seeds"][0]
    if args.kind == "sphere":
        walk = simulate_sphere_walk(cfg["simulate.n"], cfg["simulate.step"], cfg["simulate.sigma"], seed)
        write_timeseries(out / "X.csv", walk.X)
        write_theta(out / "theta.csv", walk.theta)
        meta = _meta(cfg, kind="sphere", seed=seed, **{k: v for k, v in walk.metadata().items()
                                                       if k not in ("seed",)})
        write_sidecar(sidecar_path(out / "theta.csv"), meta)
    else:
        X, labels = simulate_staged_surrogate(cfg["surrogate.segments"], cfg["surrogate.d"], seed,
                                              cfg["surrogate.segment_length"])
        write_timeseries(out / "X.csv", X, labels)
        meta = _meta(cfg, kind="surrogate", seed=seed, rng="PCG64")
    write_sidecar(sidecar_path(out / "X.csv"), meta)
    print(f"wrote {out / 'X.csv'}")
    return 0


def _cached_distance(ts, cfg, use_cache):
    method = cfg["method"]
    key = content_hash(ts.X, method, cfg.digest(DISTANCE_KEYS[method]))
    cache = DistanceCache(cfg["paths.cache"] or None) if use_cache else None
    dm = cache.get(key) if cache is not None else None
    hit = dm is not None
    if not hit:
        dm = distance_from_config(ts.X, cfg)
        if cache is not None:
            cache.put(key, dm)
    return dm, key, hit


def cmd_distance(args, cfg):
    ts = load_timeseries(args.input)
    dm, key, hit = _cached_distance(ts, cfg, not args.no_cache)
    path = Path(args.out) if args.out else _out_dir(cfg) / "distance.figd"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_distance_cache(path, dm, key)
    write_sidecar(sidecar_path(path), _meta(cfg, input=args.input, n=dm.n, method=dm.method,
                                            distance_hash=key))
    print(f"{'reused cached' if hit else 'computed'} {dm.method} distances for {dm.n} rows -> {path}")
    return 0


def cmd_embed(args, cfg):
    labels = None
    if str(args.input).endswith(".figd"):
        dm, key = read_distance_cache(args.input)
        index = np.arange(dm.n)
    else:
        ts = load_timeseries(args.input)
        dm, key, _ = _cached_distance(ts, cfg, not args.no_cache)
        index = stride_centers(ts.n, cfg["windows.stride"], cfg["windows.offset"])
        labels = ts.labels[index] if ts.labels is not None else None
    result = embedding_from_config(dm, cfg)
    path = Path(args.out) if args.out else _out_dir(cfg) / "embedding.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_embedding(path, result.Y, labels, index)
    meta = [("input", args.input), ("method", dm.method), ("distance_hash", key)]
    meta += [(f"embed.{k}", v) for k, v in result.metadata.items()]
    write_sidecar(sidecar_path(path), meta + [("config_hash", cfg.digest())] + cfg.lines())
    if args.plot:
        emit_scatter_svg(result, labels, args.plot, title=f"{dm.method} embedding")
    print(f"embedded {len(result.Y)} rows into {result.r} dimensions (t={result.metadata['t']}) -> {path}")
    return 0


def _distances_of(path):
    path = str(path)
    if path.endswith(".figd"):
        return read_distance_cache(path)[0].D
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if header[:2] == ["index", "label"]:
        return embedding_distances(read_embedding(path)[2])
    return embedding_distances(load_timeseries(path).X)


def cmd_mantel(args, cfg):
    seed = cfg["seeds"][0] if args.seed is None else args.seed
    res = mantel(_distances_of(args.a), _distances_of(args.b), args.n_perm, seed)
    line = f"r={res.r!r}"
    if res.p_value is not None:
        line += f" p={res.p_value!r} n_perm={res.n_perm}"
    print(line)
    return 0


def _timed_rows(rows, cfg):
    if cfg["output.timings"]:
        return rows
    return [dict(r, runtime_s=None) for r in rows]


def cmd_sweep_noise(args, cfg):
    out = _out_dir(cfg)
    table = noise_sweep(cfg["sweep.sigmas"], cfg["seeds"], cfg)
    write_table(out / "noise_results.csv", _timed_rows(table.rows, cfg), RESULT_COLUMNS)
    summary = table.summary()
    write_table(out / "noise_summary.csv", summary, SUMMARY_COLUMNS)
    pts = np.array([[s["sigma_or_window"], s["mantel_mean"]] for s in summary])
    emit_scatter_svg(pts, [s["method"] for s in summary], out / "noise_summary.svg",
                     title="Mantel correlation with hidden angles", xlabel="observation noise sigma",
                     ylabel="mean Mantel r", connect=True)
    meta = _meta(cfg, experiment="noise", rows=len(table.rows))
    for name in ("noise_results.csv", "noise_summary.csv", "noise_summary.svg"):
        write_sidecar(sidecar_path(out / name), meta)
    top = max(cfg["sweep.sigmas"])
    print(" ".join(f"{m}@{top!r}={table.mean(m, top):.4f}" for m in ("raw", "fig", "dig")))
    return 0


def cmd_sweep_window(args, cfg):
    out = _out_dir(cfg)
    grids, table = window_sweep(cfg["sweep.windows"], cfg, cfg["seeds"])
    write_table(out / "window_results.csv", _timed_rows(table.rows, cfg), RESULT_COLUMNS)
    summary = table.summary()
    write_table(out / "window_summary.csv", summary, SUMMARY_COLUMNS)
    windows = cfg["sweep.windows"]
    cols = ["method", "window"] + [f"mean_{w}" for w in windows] + [f"std_{w}" for w in windows]
    grid_rows = []
    for method, g in grids.items():
        for a, w in enumerate(windows):
            row = {"method": method, "window": w}
            row.update({f"mean_{v}": float(g.M[a, b]) for b, v in enumerate(windows)})
            row.update({f"std_{v}": float(g.M_std[a, b]) for b, v in enumerate(windows)})
            grid_rows.append(row)
    write_table(out / "window_grid.csv", grid_rows, cols)
    pts = np.array([[s["sigma_or_window"], s["mantel_mean"]] for s in summary])
    emit_scatter_svg(pts, [s["method"] for s in summary], out / "window_summary.svg",
                     title="Agreement between embeddings across windows",
                     xlabel="covariance window", ylabel="mean pairwise Mantel r", connect=True)
    l1, stride, offset = surrogate_sampling(cfg)
    meta = _meta(cfg, experiment="window", sampling_l1=l1, sampling_stride=stride,
                 sampling_offset=offset,
                 **{f"{m}_summary_mean": g.summary_mean for m, g in grids.items()},
                 **{f"{m}_summary_std": g.summary_std for m, g in grids.items()})
    for name in ("window_results.csv", "window_summary.csv", "window_grid.csv", "window_summary.svg"):
        write_sidecar(sidecar_path(out / name), meta)
    print(" ".join(f"{m}={g.summary_mean:.4f}+-{g.summary_std:.4f}" for m, g in grids.items()))
    return 0


def cmd_bench(args, cfg):
    out = _out_dir(cfg)
    X = benchmark_data(cfg["bench.n"], cfg["bench.d"], cfg["seeds"][0])
    timing = benchmark_distance_stage(X, cfg, cfg["bench.repetitions"])
    write_table(out / "bench_results.csv", timing.rows, ("method", "repetition", "runtime_s"))
    write_table(out / "bench_summary.csv", timing.summary(),
                ("method", "repetitions", "median_s", "mean_s", "std_s"))
    write_sidecar(sidecar_path(out / "bench_results.csv"), _meta(cfg, experiment="bench"))
    print(" ".join(f"{s['method']}={s['median_s']:.2f}s" for s in timing.summary()))
    return 0


def cmd_plot(args, cfg):
    _, labels, Y = read_embedding(args.input)
    emit_scatter_svg(Y, labels, args.out, title=args.title)
    print(f"wrote {args.out}")
    return 0


HANDLERS = {"simulate": cmd_simulate, "distance": cmd_distance, "embed": cmd_embed,
            "mantel": cmd_mantel, "sweep-noise": cmd_sweep_noise, "sweep-window": cmd_sweep_window,
            "bench": cmd_bench, "plot": cmd_plot}


def main(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if not argv or (argv[0] not in COMMANDS and argv[0] not in ("-h", "--help", "--version")):
            raise UsageError(parser.format_help() + (f"\nfigeo: unknown command {argv[0]!r}" if argv else ""))
        args = parser.parse_args(argv)
        cfg = resolve_config(args)
        return HANDLERS[args.command](args, cfg)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (InvalidData, InvalidConfig) as exc:
        print(f"figeo: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
