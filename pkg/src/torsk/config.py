"""Run configuration: an INI file parsed and validated in full before any work starts.

Example::

    [dataset]
    kind = mackey
    steps = 4000
    anomalies = 2500:50:0.13, 3000:50:0.13

    [input_map.0]
    type = RandomMatrix
    size = 1000

    [window]
    l_train = 2000

Every key is checked against the schema below; unknown sections or keys
raise :class:`ConfigError` naming the offending ``section.key``.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from .datasets import AnomalySpec, BlobParams, MackeyGlassParams
from .detection import NormalityConfig, WindowPlan
from .input_maps import SPATIAL_TABLE, InputMapSpec, MapKind, table_specs
from .reservoir import ReservoirConfig
from .training import SolverMethod, SolverSpec


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _pair(s: str) -> tuple[int, int]:
    parts = [p for p in re.split(r"[,x\s]+", s.strip()) if p]
    if len(parts) == 1:
        return int(parts[0]), int(parts[0])
    if len(parts) == 2:
        return int(parts[0]), int(parts[1])
    raise ValueError(f"expected one or two integers, got {s!r}")


def _size(s: str):
    parts = [p for p in re.split(r"[,x\s]+", s.strip()) if p]
    return int(parts[0]) if len(parts) == 1 else _pair(s)


def _anomalies(s: str) -> list[tuple]:
    out = []
    for item in filter(None, (p.strip() for p in s.split(","))):
        fields = item.split(":")
        if len(fields) not in (2, 3):
            raise ValueError(f"anomaly {item!r} is not start:length[:gamma]")
        out.append((int(fields[0]), int(fields[1])) + ((float(fields[2]),) if len(fields) == 3 else ()))
    return out


def _optional(parse: Callable) -> Callable:
    return lambda s: None if s.strip().lower() in ("", "none") else parse(s)


_SCHEMA: dict[str, dict[str, Callable]] = {
    "dataset": {
        "kind": lambda s: s.strip().lower(),
        "steps": int,
        "seed": _optional(int),
        "discard": int,
        "anomalies": _anomalies,
        "mg_beta": float,
        "mg_gamma": float,
        "mg_n": float,
        "mg_tau": float,
        "mg_dt": float,
        "mg_x0": float,
        "grid": _pair,
        "blob_sigma": float,
        "alpha": float,
        "beta_freq": float,
        "dt": float,
        "norm_steps": _optional(int),
    },
    "input_maps": {"preset": lambda s: s.strip().lower(), "hidden_size": int, "scale": float, "seed": int},
    "input_map": {
        "type": MapKind.parse,
        "size": _size,
        "scale": float,
        "sigma": _optional(float),
        "seed": _optional(int),
        "axis": _optional(int),
    },
    "reservoir": {"spectral_radius": float, "sparsity": float, "bias_scale": float, "seed": int},
    "solver": {"method": SolverMethod.parse, "beta": float, "rcond": float},
    "imed": {"enabled": _bool, "sigma": float, "loss": _bool},
    "trend": {"degree": int, "cycle_length": _optional(Fraction), "resample_factor": _optional(Fraction),
              "dct_block": _optional(int)},
    "window": {"l_trans": int, "l_train": int, "l_pred": int, "stride": _optional(int)},
    "normality": {"m": int, "n": int, "threshold": float},
    "output": {"directory": str},
    "predict": {"input": str, "start": int, "steps": int},
    "detect": {"input": str},
    "bifurcation": {"w": float, "b": float, "x0": float, "steps": int},
}

_ALIASES = {("reservoir", "rho"): "spectral_radius", ("normality", "n_small"): "n"}
_DATASET_KINDS = ("mackey", "lissajous", "chaotic-blob")


@dataclass
class DatasetConfig:
    kind: str = "mackey"
    steps: int = 4000
    seed: int | None = 0
    discard: int = 0
    anomalies: list = field(default_factory=list)
    mg: MackeyGlassParams = field(default_factory=MackeyGlassParams)
    blob: BlobParams = field(default_factory=BlobParams)
    norm_steps: int | None = None


@dataclass
class RunConfig:
    dataset: DatasetConfig
    input_maps: list
    reservoir: ReservoirConfig
    solver: SolverSpec
    imed_enabled: bool
    imed_sigma: float
    imed_loss: bool
    trend_degree: int
    cycle_length: Fraction | None
    resample_factor: Fraction | None
    dct_block: int | None
    window: WindowPlan
    normality: NormalityConfig
    output_dir: Path
    predict: dict
    detect: dict
    bifurcation: dict
    source: Path | None = None

    @property
    def metric(self) -> str:
        return "imed" if self.imed_enabled else "euclidean"


def _section_schema(name: str) -> tuple[str, dict]:
    if name in _SCHEMA:
        return name, _SCHEMA[name]
    m = re.fullmatch(r"input_map\.(\d+)", name)
    if m:
        return "input_map", _SCHEMA["input_map"]
    raise ConfigError(name, "unknown section")


def _parse_raw(parser: configparser.ConfigParser) -> dict[str, dict[str, Any]]:
    values: dict[str, dict[str, Any]] = {}
    for section in parser.sections():
        kind, schema = _section_schema(section)
        out = {}
        for key, raw in parser.items(section, raw=True):
            canon = _ALIASES.get((kind, key), key)
            if canon not in schema:
                raise ConfigError(f"{section}.{key}", "unknown key")
            try:
                out[canon] = schema[canon](raw)
            except (ValueError, ZeroDivisionError) as err:
                raise ConfigError(f"{section}.{key}", f"invalid value {raw!r} ({err})") from None
        values[section] = out
    return values


def _build(section: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValueError, TypeError) as err:
        raise ConfigError(section, str(err)) from None


def _dataset(raw: dict) -> DatasetConfig:
    kind = raw.get("kind", "mackey")
    if kind not in _DATASET_KINDS:
        raise ConfigError("dataset.kind", f"must be one of {', '.join(_DATASET_KINDS)}, got {kind!r}")
    mg_defaults = MackeyGlassParams()
    mg = _build(
        "dataset",
        MackeyGlassParams,
        beta=raw.get("mg_beta", mg_defaults.beta),
        gamma=raw.get("mg_gamma", mg_defaults.gamma),
        n_exponent=raw.get("mg_n", mg_defaults.n_exponent),
        tau=raw.get("mg_tau", mg_defaults.tau),
        dt=raw.get("mg_dt", mg_defaults.dt),
        x0=raw.get("mg_x0", mg_defaults.x0),
    )
    bd = BlobParams()
    blob = _build(
        "dataset",
        BlobParams,
        grid=raw.get("grid", bd.grid),
        blob_sigma=raw.get("blob_sigma", bd.blob_sigma),
        alpha=raw.get("alpha", bd.alpha),
        beta_freq=raw.get("beta_freq", bd.beta_freq),
        dt=raw.get("dt", bd.dt),
    )
    anomalies = [_build("dataset.anomalies", AnomalySpec, *a) for a in raw.get("anomalies", [])]
    steps = raw.get("steps", 4000)
    if steps < 1:
        raise ConfigError("dataset.steps", "must be positive")
    for a in anomalies:
        if a.start_step < 0 or a.stop_step > steps:
            raise ConfigError("dataset.anomalies", f"anomaly {a.start_step}:{a.length_steps} outside [0, {steps})")
    return DatasetConfig(kind, steps, raw.get("seed", 0), raw.get("discard", 0), anomalies, mg, blob,
                         raw.get("norm_steps"))


def _input_maps(values: dict, frame_hint: tuple[int, int]) -> list:
    numbered = sorted(
        (int(name.split(".")[1]), name) for name in values if name.startswith("input_map.")
    )
    preset = values.get("input_maps", {})
    if numbered and "preset" in preset:
        raise ConfigError("input_maps.preset", "cannot be combined with [input_map.N] sections")
    if numbered:
        specs = []
        for _, name in numbered:
            raw = values[name]
            if "type" not in raw:
                raise ConfigError(f"{name}.type", "missing")
            specs.append(
                _build(name, InputMapSpec, raw["type"], raw.get("size", (1, 1)), raw.get("scale", 1.0),
                       raw.get("sigma"), raw.get("seed"), raw.get("axis"))
            )
        return specs
    kind = preset.get("preset", "random")
    seed = preset.get("seed", 0)
    if kind == "random":
        return [InputMapSpec("RandomMatrix", preset.get("hidden_size", 1000), preset.get("scale", 1.0), seed=seed)]
    if kind == "spatial":
        if frame_hint != (30, 30):
            return table_specs(_rescaled_table(frame_hint), seed=seed)
        return table_specs(SPATIAL_TABLE, seed=seed)
    raise ConfigError("input_maps.preset", f"must be 'random' or 'spatial', got {kind!r}")


def _rescaled_table(shape: tuple[int, int]) -> tuple:
    # table entries sized for 30x30 frames, shrunk proportionally
    M, N = shape
    rows = []
    for kind, (a, b), scale in SPATIAL_TABLE:
        rows.append((kind, (max(1, round(a * M / 30)), max(1, round(b * N / 30))), scale))
    return tuple(rows)


def load_config(path=None, text: str | None = None) -> RunConfig:
    """Parse and validate a run configuration from ``path`` or ``text``."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str.lower
    try:
        if text is not None:
            parser.read_string(text)
        else:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
    except OSError as err:
        raise ConfigError("config", f"cannot read {path}: {err}") from None
    except configparser.Error as err:
        raise ConfigError("config", f"malformed file: {err}") from None
    values = _parse_raw(parser)

    ds = _dataset(values.get("dataset", {}))
    frame_hint = (1, 1) if ds.kind == "mackey" else ds.blob.grid
    specs = _input_maps(values, frame_hint)

    r = values.get("reservoir", {})
    rd = ReservoirConfig()
    reservoir = _build("reservoir", ReservoirConfig, r.get("spectral_radius", rd.spectral_radius),
                       r.get("sparsity", rd.sparsity), r.get("bias_scale", rd.bias_scale), r.get("seed", rd.seed))
    s = values.get("solver", {})
    sd = SolverSpec()
    solver = _build("solver", SolverSpec, s.get("method", sd.method), s.get("beta", sd.beta), s.get("rcond", sd.svd_rcond))
    im = values.get("imed", {})
    if not im.get("sigma", 1.0) > 0:
        raise ConfigError("imed.sigma", "must be positive")
    tr = values.get("trend", {})
    if tr.get("degree", 2) not in (0, 1, 2, 3):
        raise ConfigError("trend.degree", "must be 0, 1, 2 or 3")
    w = values.get("window", {})
    wd = WindowPlan()
    window = _build("window", WindowPlan, w.get("l_trans", wd.l_trans), w.get("l_train", wd.l_train),
                    w.get("l_pred", wd.l_pred), w.get("stride"))
    nm = values.get("normality", {})
    nd = NormalityConfig()
    normality = _build("normality", NormalityConfig, nm.get("m", nd.m), nm.get("n", nd.n_small),
                       nm.get("threshold", nd.threshold))
    out = values.get("output", {}).get("directory", "out")
    pr = {"input": None, "start": 0, "steps": 300, **values.get("predict", {})}
    if pr["steps"] < 0 or pr["start"] < 0:
        raise ConfigError("predict", "start and steps must be >= 0")
    bf = {"w": 3.0, "b": 0.1, "x0": -0.5, "steps": 50, **values.get("bifurcation", {})}
    if bf["steps"] < 1:
        raise ConfigError("bifurcation.steps", "must be >= 1")
    base = Path(path).parent if path is not None else Path.cwd()
    return RunConfig(
        dataset=ds,
        input_maps=specs,
        reservoir=reservoir,
        solver=solver,
        imed_enabled=im.get("enabled", False),
        imed_sigma=im.get("sigma", 1.0),
        imed_loss=im.get("loss", False),
        trend_degree=tr.get("degree", 2),
        cycle_length=tr.get("cycle_length"),
        resample_factor=tr.get("resample_factor"),
        dct_block=tr.get("dct_block"),
        window=window,
        normality=normality,
        output_dir=Path(out) if Path(out).is_absolute() else base / out,
        predict=pr,
        detect={"input": None, **values.get("detect", {})},
        bifurcation=bf,
        source=Path(path) if path is not None else None,
    )
