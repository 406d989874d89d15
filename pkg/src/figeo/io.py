"""Reading and writing series, distance caches, embeddings, tables and plots.

Distance cache layout (little-endian)::

    b"FIGD" | u32 version | u64 n | u8 method tag | 32-byte hash | n(n-1)/2 float64

The float64 block is the strict upper triangle in row-major order.
"""

import csv
from dataclasses import dataclass
import hashlib
import math
import os
from pathlib import Path
import struct

import numpy as np

from .distance import DistanceMatrix
from .exceptions import InvalidConfig, InvalidData

MAGIC = b"FIGD"
CACHE_VERSION = 1
METHOD_TAGS = {"fig": 0, "dig": 1, "euclidean": 2}
_HEADER = struct.Struct("<4sIQB32s")


def _num(value):
    """Shortest text that reads back to the same float (or int)."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


@dataclass
class TimeSeries:
    X: np.ndarray
    labels: np.ndarray = None
    t: np.ndarray = None
    columns: tuple = ()

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_timeseries(path):
    """Read a numeric CSV with optional ``t``/``index`` and ``label`` columns.

    A header row is detected when any field of the first row is not a
    number. Rows must already be in time order.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            records = list(csv.reader(fh))
    except OSError as exc:
        raise InvalidData(f"cannot read {path}: {exc}") from None
    records = [(i + 1, r) for i, r in enumerate(records) if any(f.strip() for f in r)]
    if not records:
        raise InvalidData(f"{path} is empty")
    first = [f.strip() for f in records[0][1]]
    if any(not _is_number(f) for f in first):
        columns = first
        records = records[1:]
    else:
        columns = [f"x{j + 1}" for j in range(len(first))]
    lowered = [c.lower() for c in columns]
    label_col = lowered.index("label") if "label" in lowered else None
    time_col = next((lowered.index(k) for k in ("t", "index") if k in lowered), None)
    value_cols = [j for j in range(len(columns)) if j not in (label_col, time_col)]
    if not value_cols:
        raise InvalidData(f"{path} has no value columns")
    X = np.empty((len(records), len(value_cols)))
    labels, times = [], []
    for row, (lineno, fields) in enumerate(records):
        if len(fields) != len(columns):
            raise InvalidData(f"line {lineno}: expected {len(columns)} fields, got {len(fields)}")
        for k, j in enumerate(value_cols):
            try:
                X[row, k] = float(fields[j])
            except ValueError:
                raise InvalidData(f"line {lineno}: {fields[j]!r} in column {columns[j]!r} "
                                  "is not a number") from None
            if not math.isfinite(X[row, k]):
                raise InvalidData(f"non-finite value at row {row} (line {lineno}), "
                                  f"column {columns[j]!r}")
        if label_col is not None:
            labels.append(fields[label_col].strip())
        if time_col is not None:
            times.append(fields[time_col].strip())
    if len(records) == 0:
        raise InvalidData(f"{path} has a header but no rows")
    return TimeSeries(X=X, labels=np.array(labels) if label_col is not None else None,
                      t=np.array(times) if time_col is not None else None,
                      columns=tuple(columns[j] for j in value_cols))


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_timeseries(path, X, labels=None, t=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    t = np.arange(len(X)) if t is None else t
    header = ["t"] + [f"x{j + 1}" for j in range(X.shape[1])] + (["label"] if labels is not None else [])
    rows = []
    for i in range(len(X)):
        row = [_num(t[i])] + [_num(v) for v in X[i]]
        if labels is not None:
            row.append(_num(labels[i]))
        rows.append(row)
    _write_csv(path, header, rows)


def write_theta(path, theta):
    theta = np.asarray(theta, dtype=float)
    _write_csv(path, ["t", "theta1", "theta2"],
               [[str(i), _num(a), _num(b)] for i, (a, b) in enumerate(theta)])


def _hash_bytes(config_hash):
    if isinstance(config_hash, (bytes, bytearray)):
        raw = bytes(config_hash)
    else:
        raw = bytes.fromhex(config_hash)
    if len(raw) != 32:
        raise InvalidConfig("config hash must be 32 bytes")
    return raw


def write_distance_cache(path, dm, config_hash):
    D = np.asarray(dm.D, dtype="<f8")
    n = len(D)
    header = _HEADER.pack(MAGIC, CACHE_VERSION, n, METHOD_TAGS[dm.method], _hash_bytes(config_hash))
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(D[np.triu_indices(n, k=1)].astype("<f8").tobytes())
    os.replace(tmp, path)


def read_distance_cache(path):
    """Return ``(DistanceMatrix, hash_hex)`` from a cache file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise InvalidData(f"{path}: truncated distance cache")
    magic, version, n, tag, digest = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise InvalidData(f"{path}: not a distance cache (bad magic)")
    if version != CACHE_VERSION:
        raise InvalidData(f"{path}: unsupported cache version {version}")
    methods = {v: k for k, v in METHOD_TAGS.items()}
    if tag not in methods:
        raise InvalidData(f"{path}: unknown method tag {tag}")
    count = n * (n - 1) // 2
    body = raw[_HEADER.size:]
    if len(body) != 8 * count:
        raise InvalidData(f"{path}: expected {count} entries, found {len(body) // 8}")
    D = np.zeros((n, n))
    D[np.triu_indices(n, k=1)] = np.frombuffer(body, dtype="<f8")
    D = D + D.T
    return DistanceMatrix(D, methods[tag], {}), digest.hex()


def content_hash(X, method, config_digest):
    """Hex SHA-256 of the data bytes, the method and the distance settings."""
    X = np.ascontiguousarray(np.asarray(X, dtype="<f8"))
    h = hashlib.sha256()
    h.update(struct.pack("<QQ", *X.shape) if X.ndim == 2 else struct.pack("<Q", X.size))
    h.update(X.tobytes())
    h.update(method.encode())
    h.update(config_digest.encode())
    return h.hexdigest()


class DistanceCache:
    """Directory of distance caches named by content hash.

    The directory is ``directory``, else ``$FIG_CACHE_DIR``, else
    ``~/.cache/figeo``.
    """

    def __init__(self, directory=None):
        directory = directory or os.environ.get("FIG_CACHE_DIR") or Path.home() / ".cache" / "figeo"
        self.directory = Path(directory)

    def path(self, key):
        return self.directory / f"{key}.figd"

    def get(self, key):
        path = self.path(key)
        if not path.exists():
            return None
        dm, stored = read_distance_cache(path)
        return dm if stored == key else None

    def put(self, key, dm):
        self.directory.mkdir(parents=True, exist_ok=True)
        write_distance_cache(self.path(key), dm, key)
        return self.path(key)


def write_embedding(path, Y, labels=None, index=None):
    Y = np.asarray(Y, dtype=float)
    index = np.arange(len(Y)) if index is None else index
    header = ["index", "label"] + [f"y{k + 1}" for k in range(Y.shape[1])]
    rows = [[_num(index[i]), "" if labels is None else _num(labels[i])] + [_num(v) for v in Y[i]]
            for i in range(len(Y))]
    _write_csv(path, header, rows)


def read_embedding(path):
    """Return ``(index, labels, Y)``; empty labels come back as ``None``."""
    with open(path, newline="", encoding="utf-8") as fh:
        records = list(csv.reader(fh))
    header = records[0]
    if header[:2] != ["index", "label"] or not header[2:]:
        raise InvalidData(f"{path}: expected header index,label,y1..yr")
    body = records[1:]
    index = np.array([int(r[0]) for r in body])
    labels = np.array([r[1] for r in body])
    Y = np.array([[float(v) for v in r[2:]] for r in body]).reshape(len(body), len(header) - 2)
    return index, (labels if any(labels) else None), Y


def sidecar_path(path):
    return Path(str(path) + ".meta")


def write_sidecar(path, items):
    """Write ``key=value`` lines; ``items`` is a dict or a list of pairs."""
    pairs = items.items() if isinstance(items, dict) else items
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in pairs:
            fh.write(f"{key}={_num(value)}\n")


def read_sidecar(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line and "=" in line:
                key, value = line.split("=", 1)
                out[key] = value
    return out


def write_table(path, rows, columns):
    _write_csv(path, columns, [[_num(r.get(c)) for c in columns] for r in rows])


RESULT_COLUMNS = ("method", "sigma_or_window", "seed", "mantel_r", "runtime_s")
SUMMARY_COLUMNS = ("method", "sigma_or_window", "n_seeds", "mantel_mean", "mantel_std")


# Categorical colors, assigned to labels in sorted order.
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
# Fixed view for 3-D embeddings: azimuth 45 degrees, elevation 30 degrees.
_VIEW = np.array([[math.cos(math.pi / 4), -math.sin(math.pi / 4), 0.0],
                  [math.sin(math.pi / 4) * math.sin(math.pi / 6),
                   math.cos(math.pi / 4) * math.sin(math.pi / 6), math.cos(math.pi / 6)]])


def _escape(text):
    return (str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def _label_key(label):
    return (0, float(label), "") if _is_number(str(label)) else (1, 0.0, str(label))


def emit_scatter_svg(E, labels, path, title="", xlabel="", ylabel="", connect=False,
                     width=640, height=480):
    """Write a standalone SVG scatter plot of a 2-D or 3-D point set.

    One ``circle`` per point, colored by label, with a legend and axes.
    Three-dimensional input is drawn in a fixed orthographic view. With
    ``connect`` the points of each label are also joined in x order.
    """
    Y = np.asarray(getattr(E, "Y", E), dtype=float)
    if Y.ndim != 2 or Y.shape[1] not in (2, 3):
        r = Y.shape[1] if Y.ndim == 2 else Y.ndim
        raise InvalidConfig(f"can only plot 2 or 3 dimensions, got {r}")
    if Y.shape[1] == 3:
        Y = Y @ _VIEW.T
        xlabel = xlabel or "view x"
        ylabel = ylabel or "view y"
    n = len(Y)
    labels = np.array(["all"] * n if labels is None else [str(v) for v in labels])
    if len(labels) != n:
        raise InvalidData(f"{len(labels)} labels for {n} points")
    classes = sorted(set(labels.tolist()), key=_label_key)
    color = {c: PALETTE[k % len(PALETTE)] for k, c in enumerate(classes)}

    left, right, top, bottom = 60, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    lo = Y.min(axis=0) if n else np.zeros(2)
    hi = Y.max(axis=0) if n else np.ones(2)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    lo = lo - 0.05 * span
    span = 1.1 * span

    def sx(v):
        return left + (v - lo[0]) / span[0] * pw

    def sy(v):
        return top + ph - (v - lo[1]) / span[1] * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>']
    if title:
        out.append(f'<text x="{width / 2:.2f}" y="22" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="15">{_escape(title)}</text>')
    out.append(f'<g stroke="#000000" stroke-width="1"><line x1="{left}" y1="{top + ph}" '
               f'x2="{left + pw}" y2="{top + ph}"/><line x1="{left}" y1="{top}" x2="{left}" '
               f'y2="{top + ph}"/></g>')
    ticks = []
    for k in range(5):
        fx = lo[0] + span[0] * k / 4
        fy = lo[1] + span[1] * k / 4
        ticks.append(f'<text x="{sx(fx):.2f}" y="{top + ph + 16}" text-anchor="middle">{fx:.3g}</text>')
        ticks.append(f'<text x="{left - 6}" y="{sy(fy) + 4:.2f}" text-anchor="end">{fy:.3g}</text>')
    out.append('<g font-family="sans-serif" font-size="10" fill="#333333">' + "".join(ticks) + "</g>")
    if xlabel:
        out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12">{_escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="12" transform="rotate(-90 16 {top + ph / 2:.2f})">{_escape(ylabel)}</text>')
    if connect:
        for c in classes:
            pts = Y[labels == c]
            pts = pts[np.argsort(pts[:, 0], kind="stable")]
            coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color[c]}" stroke-width="1.5"/>')
    out.append('<g stroke="none" fill-opacity="0.8">')
    for (x, y), c in zip(Y, labels):
        out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{color[c]}"/>')
    out.append("</g>")
    legend = ['<g font-family="sans-serif" font-size="12">']
    for k, c in enumerate(classes):
        y = top + 10 + 18 * k
        legend.append(f'<rect x="{left + pw + 20}" y="{y - 9}" width="10" height="10" fill="{color[c]}"/>'
                      f'<text x="{left + pw + 36}" y="{y}">{_escape(c)}</text>')
    legend.append("</g>")
    out.extend(legend)
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
    return Path(path)
