"""Command-line front end: ``torsk generate|predict|detect|bifurcation --config FILE``.

Exit codes: 0 on success, 2 for configuration errors (the message names the
offending key), 3 for runtime or numerical errors.  ``TORSK_THREADS`` caps the
number of BLAS/LAPACK threads.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import bifurcation as bif
from .config import ConfigError, RunConfig, load_config
from .dataio import TensorFormatError, ensure_dir, read_tensor, write_table, write_tensor
from .datasets import chaotic_blob, lissajous_blob, mackey_glass
from .detection import error_sequence, sliding_detect
from .esn import SpatialESN
from .imed import GKernel
from .reservoir import PredictionDivergedError
from .svg import write_heatmap_svg
from .trend import CycleBaseline, trivial_predict

log = logging.getLogger("torsk")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def generate_dataset(cfg: RunConfig) -> np.ndarray:
    ds = cfg.dataset
    if ds.kind == "mackey":
        return mackey_glass(ds.mg, ds.steps, ds.anomalies, seed=ds.seed, discard=ds.discard)
    if ds.kind == "lissajous":
        return lissajous_blob(ds.blob, ds.steps)
    return chaotic_blob(ds.mg, ds.blob, ds.steps, ds.anomalies, seed=ds.seed, norm_steps=ds.norm_steps,
                        discard=ds.discard)


def _input_path(cfg: RunConfig, value: str | None, key: str) -> Path | None:
    if value is None:
        return None
    p = Path(value)
    if not p.is_absolute() and cfg.source is not None:
        p = cfg.source.parent / p
    if not p.with_suffix(".header").exists() and not Path(str(p) + ".header").exists():
        raise ConfigError(key, f"no tensor found at {p}")
    return p


def _load_series(cfg: RunConfig, path: Path | None) -> np.ndarray:
    return read_tensor(path) if path is not None else generate_dataset(cfg)


def _write_anomalies(out: Path, cfg: RunConfig) -> None:
    rows = [(a.start_step, a.stop_step, a.gamma_anomalous) for a in cfg.dataset.anomalies]
    write_table(out / "anomalies.csv", ["start", "end", "gamma"], rows)


def cmd_generate(cfg: RunConfig, out: Path) -> None:
    series = generate_dataset(cfg)
    ensure_dir(out)
    write_tensor(series, out / "series")
    _write_anomalies(out, cfg)
    log.info("wrote %s series of shape %s to %s", cfg.dataset.kind, series.shape, out)


def _esn(cfg: RunConfig) -> SpatialESN:
    return SpatialESN(
        input_maps=cfg.input_maps,
        spectral_radius=cfg.reservoir.spectral_radius,
        sparsity=cfg.reservoir.sparsity,
        bias_scale=cfg.reservoir.bias_scale,
        l_trans=cfg.window.l_trans,
        solver=cfg.solver.method.value,
        beta=cfg.solver.beta,
        rcond=cfg.solver.svd_rcond,
        imed_sigma=cfg.imed_sigma if cfg.imed_loss else None,
        random_state=cfg.reservoir.seed,
    )


def cmd_predict(cfg: RunConfig, out: Path, series: np.ndarray) -> None:
    start, steps = cfg.predict["start"], cfg.predict["steps"]
    L = cfg.window.l_trans + cfg.window.l_train
    if series.shape[0] < start + L + steps:
        raise ValueError(
            f"input has {series.shape[0]} frames, need start + l_trans + l_train + steps = {start + L + steps}"
        )
    train = series[start:start + L]
    truth = series[start + L:start + L + steps]
    frames_shape = truth.shape[1:]
    preds = {}
    esn = _esn(cfg).fit(train)
    preds["esn"] = esn.predict(steps, on_diverge="hold")
    preds["trivial"] = trivial_predict(train[-1], steps)
    if cfg.cycle_length is not None:
        base = CycleBaseline(cfg.cycle_length, cfg.trend_degree, cfg.resample_factor, cfg.dct_block).fit(train)
        preds["cycle"] = base.predict(steps)

    ensure_dir(out)
    kernel = None
    if cfg.metric == "imed" and series.ndim == 3:
        kernel = GKernel(series.shape[1:], cfg.imed_sigma)
    errors = {}
    for name, p in preds.items():
        p = np.asarray(p, dtype=np.float64).reshape((steps,) + frames_shape)
        errors[name] = error_sequence(p, truth, cfg.metric, kernel=kernel) if steps else np.zeros(0)
        # tensors need a positive length; steps == 0 leaves only the CSV header
        if steps:
            write_tensor(p, out / f"{name}_prediction")
    if steps:
        write_tensor(truth, out / "truth")
    names = list(preds)
    rows = [[start + L + i] + [float(errors[n][i]) for n in names] for i in range(steps)]
    write_table(out / "errors.csv", ["t"] + names, rows)


def cmd_detect(cfg: RunConfig, out: Path, series: np.ndarray) -> None:
    res = sliding_detect(
        series,
        cfg.reservoir,
        cfg.input_maps,
        cfg.solver,
        cfg.window,
        cfg.metric,
        cfg.normality,
        imed_sigma=cfg.imed_sigma,
        imed_loss=cfg.imed_loss,
        progress=lambda i, n: log.info("window %d/%d", i, n),
    )
    ensure_dir(out)
    covered = np.flatnonzero(res.covered)
    write_table(out / "errors.csv", ["t", "value"], ([int(t), float(res.errors[t])] for t in covered))
    write_table(out / "scores.csv", ["t", "value"], ([int(t), float(res.scores[t])] for t in covered))
    write_table(out / "flags.csv", ["t"], ([int(t)] for t in res.flagged_steps))
    keys = ["window", "train_start", "train_end", "pred_start", "pred_end", "diverged"]
    write_table(out / "window_log.csv", keys, ([w[k] for k in keys] for w in res.window_log))
    if res.count_map is not None:
        grid = res.count_map
        write_table(out / "count_map.csv", ["row", "col", "count"],
                    ([i, j, int(grid[i, j])] for i in range(grid.shape[0]) for j in range(grid.shape[1])))
        write_tensor(grid, out / "count_map")
        write_heatmap_svg(out / "count_map.svg", grid, title="anomaly count per pixel")
        write_tensor(res.pixel_scores[res.covered], out / "pixel_scores")
    log.info("%d flagged steps out of %d predicted", res.flags.sum(), covered.size)


def _fmt(x: float) -> str:
    return f"{x:.12e}"


def cmd_bifurcation(cfg: RunConfig, out: Path) -> None:
    p = cfg.bifurcation
    w, b, x0, steps = p["w"], p["b"], p["x0"], p["steps"]
    ensure_dir(out)
    traj = bif.iterate_map(w, b, x0, steps)
    write_table(out / "trajectory.csv", ["t", "x"], ([t, _fmt(x)] for t, x in enumerate(traj)))
    fps = bif.fixed_points(w, b)
    write_table(out / "fixed_points.csv", ["x_star", "stability", "slope"],
                ([_fmt(fp.x_star), fp.stability.value, _fmt(bif.derivative(w, b, fp.x_star))] for fp in fps))
    write_table(out / "cycles.csv", ["x1", "x2"], ([_fmt(a), _fmt(c)] for a, c in bif.period2_cycles(w, b)))
    write_table(out / "cobweb.csv", ["x", "y"], ([_fmt(x), _fmt(y)] for x, y in bif.cobweb_trace(w, b, x0, steps)))


def _thread_limit():
    value = os.environ.get("TORSK_THREADS")
    if not value:
        return nullcontext()
    try:
        n = int(value)
        if n < 1:
            raise ValueError
    except ValueError:
        raise ConfigError("TORSK_THREADS", f"must be a positive integer, got {value!r}") from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="torsk", description="Spatial echo state networks for anomaly detection.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("generate", "write a synthetic dataset and its anomaly manifest"),
        ("predict", "train once and compare ESN, cycle and trivial predictions"),
        ("detect", "run sliding-window anomaly detection"),
        ("bifurcation", "fixed points, cycles and cobweb trace of the one-unit network"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="run configuration (INI)")
        p.add_argument("--out", help="output directory, overrides [output] directory")
        if name in ("predict", "detect"):
            p.add_argument("--input", help="input tensor, overrides the config; default: generate [dataset]")
        if name == "predict":
            p.add_argument("--start", type=int)
            p.add_argument("--steps", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if getattr(args, "start", None) is not None:
            cfg.predict["start"] = args.start
        if getattr(args, "steps", None) is not None:
            cfg.predict["steps"] = args.steps
        if cfg.predict["start"] < 0 or cfg.predict["steps"] < 0:
            raise ConfigError("predict", "start and steps must be >= 0")
        out = Path(args.out) if args.out else cfg.output_dir
        path = None
        if args.command in ("predict", "detect"):
            key = f"{args.command}.input"
            path = _input_path(cfg, args.input or getattr(cfg, args.command)["input"], key)
        limits = _thread_limit()
    except ConfigError as err:
        print(f"torsk: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        with limits:
            if args.command == "generate":
                cmd_generate(cfg, out)
            elif args.command == "bifurcation":
                cmd_bifurcation(cfg, out)
            else:
                series = _load_series(cfg, path)
                (cmd_predict if args.command == "predict" else cmd_detect)(cfg, out, series)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, PredictionDivergedError, TensorFormatError,
            OSError) as err:
        print(f"torsk: error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
