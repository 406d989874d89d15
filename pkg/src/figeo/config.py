"""Pipeline configuration in a flat ``section.key=value`` text format.

Example::

    # experiment record
    basis.b=7
    windows.l1=10
    windows.l2=10
    method=fig
    seeds=0,1,2,3,4

Blank lines and ``#`` comments are ignored. Every key is validated on load
and unknown keys are rejected. :meth:`PipelineConfig.to_text` writes every
key in sorted order, so loading and re-emitting a config is idempotent and
:meth:`PipelineConfig.digest` identifies it.
"""

import hashlib
import math

from .exceptions import InvalidConfig


def _int(minimum):
    def parse(raw):
        try:
            value = int(str(raw).strip())
        except ValueError:
            raise InvalidConfig(f"expected an integer, got {raw!r}") from None
        if value < minimum:
            raise InvalidConfig(f"expected an integer >= {minimum}, got {value}")
        return value
    return parse


def _float(minimum=None, strict=False):
    def parse(raw):
        try:
            value = float(str(raw).strip())
        except ValueError:
            raise InvalidConfig(f"expected a number, got {raw!r}") from None
        if not math.isfinite(value):
            raise InvalidConfig(f"expected a finite number, got {raw!r}")
        if minimum is not None and (value < minimum or (strict and value == minimum)):
            raise InvalidConfig(f"expected a number {'>' if strict else '>='} {minimum}, got {value}")
        return value
    return parse


def _choice(*options):
    def parse(raw):
        value = str(raw).strip().lower()
        if value not in options:
            raise InvalidConfig(f"expected one of {options}, got {raw!r}")
        return value
    return parse


def _optional_int(word, minimum=1):
    inner = _int(minimum)

    def parse(raw):
        if raw is None or str(raw).strip().lower() == word:
            return None
        return inner(raw)
    return parse


def _list(item):
    def parse(raw):
        parts = raw if isinstance(raw, (list, tuple)) else str(raw).split(",")
        values = [item(p) for p in parts if str(p).strip() != ""]
        if not values:
            raise InvalidConfig("expected a non-empty comma-separated list")
        return values
    return parse


def _bool(raw):
    if isinstance(raw, bool):
        return raw
    value = str(raw).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise InvalidConfig(f"expected a boolean, got {raw!r}")


def _text(raw):
    return str(raw).strip()


# key -> (parser, default)
SCHEMA = {
    "basis.family": (_choice("fourier"), "fourier"),
    "basis.b": (_int(1), 7),
    "windows.l1": (_int(1), 10),
    "windows.l2": (_int(1), 10),
    "windows.stride": (_int(1), 1),
    "windows.offset": (_int(0), 0),
    "fpca.k": (_optional_int("all"), None),
    "fpca.normalization": (_choice("exp", "inv_sqrt"), "exp"),
    "dig.n_bins": (_int(2), 20),
    "embed.knn": (_int(1), 5),
    "embed.alpha": (_float(0.0, strict=True), 40.0),
    "embed.t": (_optional_int("auto"), None),
    "embed.t_max": (_int(2), 100),
    "embed.r": (_int(1), 2),
    "embed.mds_tol": (_float(0.0), 1e-6),
    "embed.mds_max_iter": (_int(0), 500),
    "method": (_choice("fig", "dig", "euclidean"), "fig"),
    "seeds": (_list(_int(0)), [0, 1, 2, 3, 4]),
    "simulate.n": (_int(2), 1000),
    "simulate.sigma": (_float(0.0), 0.0),
    "simulate.step": (_float(0.0), 0.01),
    "surrogate.segments": (_int(40), 200),
    "surrogate.d": (_int(2), 6),
    "surrogate.segment_length": (_int(1), 64),
    "sweep.sigmas": (_list(_float(0.0)), [0.0, 0.05, 0.1, 0.15]),
    "sweep.windows": (_list(_int(1)), [10, 50, 100, 150, 200]),
    "bench.n": (_int(2), 5000),
    "bench.d": (_int(1), 18),
    "bench.repetitions": (_int(3), 5),
    "output.timings": (_bool, False),
    "paths.out": (_text, "."),
    "paths.cache": (_text, ""),
}


def _format(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_format(v) for v in value)
    return str(value)


class PipelineConfig:
    """Validated set of pipeline settings.

    Values are read with item access (``cfg["windows.l1"]``). ``None`` stands
    for "all components" (``fpca.k``) and "pick automatically" (``embed.t``).
    """

    def __init__(self, values=None, **overrides):
        self._values = {key: default for key, (_, default) in SCHEMA.items()}
        merged = dict(values or {})
        merged.update({k.replace("__", "."): v for k, v in overrides.items()})
        for key, raw in merged.items():
            self._set(key, raw)

    def _set(self, key, raw):
        if key not in SCHEMA:
            raise InvalidConfig(f"unknown config key {key!r}")
        parser, default = SCHEMA[key]
        if raw is None and default is None:
            self._values[key] = None
            return
        try:
            self._values[key] = parser(raw)
        except InvalidConfig as exc:
            raise InvalidConfig(f"{key}: {exc}") from None

    def __getitem__(self, key):
        return self._values[key]

    def __eq__(self, other):
        return isinstance(other, PipelineConfig) and self.to_text() == other.to_text()

    def __repr__(self):
        changed = {k: v for k, v in self._values.items() if v != SCHEMA[k][1]}
        return f"PipelineConfig({changed!r})"

    def as_dict(self):
        return dict(self._values)

    def updated(self, values):
        """Copy with ``values`` applied on top; ``None`` entries are ignored."""
        merged = self.as_dict()
        merged.update({k: v for k, v in values.items() if v is not None})
        return PipelineConfig(merged)

    @classmethod
    def from_text(cls, text):
        values = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidConfig(f"line {lineno}: expected key=value, got {line!r}")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key in values:
                raise InvalidConfig(f"line {lineno}: duplicate key {key!r}")
            if key not in SCHEMA:
                raise InvalidConfig(f"line {lineno}: unknown config key {key!r}")
            values[key] = raw if raw != "" or SCHEMA[key][1] is not None else None
        return cls(values)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_text(fh.read())
        except OSError as exc:
            raise InvalidConfig(f"cannot read config {path}: {exc}") from None

    def to_text(self):
        return "".join(f"{key}={_format(self._values[key])}\n" for key in sorted(self._values))

    def lines(self, prefix="config."):
        """``(key, value)`` pairs for echoing into a metadata sidecar."""
        return [(prefix + key, _format(self._values[key])) for key in sorted(self._values)]

    def digest(self, keys=None):
        """SHA-256 of the canonical text, optionally restricted to ``keys``."""
        keys = sorted(self._values) if keys is None else sorted(keys)
        text = "".join(f"{k}={_format(self._values[k])}\n" for k in keys)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


# Keys that change a distance matrix; the cache is keyed on these plus the data.
DISTANCE_KEYS = {
    "fig": ("basis.family", "basis.b", "windows.l1", "windows.l2", "windows.stride",
            "windows.offset", "fpca.k", "fpca.normalization"),
    "dig": ("dig.n_bins", "windows.l1", "windows.l2", "windows.stride", "windows.offset"),
    "euclidean": ("windows.stride", "windows.offset"),
}
