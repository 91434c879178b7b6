"""Command-line pipeline: simulate, transform, estimate, evaluate, render.

Exit statuses: 0 success, 2 usage or parameter errors, 3 data errors,
4 config-guideline warnings escalated by --strict.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, RAW_FORMAT, io
from .adaptive import EstimatorConfig, run_adaptive, reconstruct_kernel
from .backend import active_backend_name, num_threads
from .errors import ConfigError, DataError, ParameterError, TvspecError
from .evaluate import (detect_break, freq_average, optimal_global_bandwidth,
                       squared_error, truth_plane)
from .preperiodogram import RawGrid, preperiodogram_modified
from .simulate import ModelSpec, generate
from .smoother import EstimationGrid, smooth_nonadaptive

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_STRICT = 4

MODEL_NAMES = {
    "wn-break": "white_noise_break",
    "tvma2": "tvma2",
    "tvma2-break": "break_tvma2",
    "white_noise_break": "white_noise_break",
    "break_tvma2": "break_tvma2",
}

# paper-scale break locations, rescaled to the requested length
BREAK_FRACTIONS = {"white_noise_break": 576 / 1024, "break_tvma2": 410 / 1024}


def _model_from_args(args, T: int) -> ModelSpec:
    kind = MODEL_NAMES.get(args.model)
    if kind is None:
        raise ParameterError(f"unknown model {args.model!r}")
    if kind == "tvma2":
        return ModelSpec(kind=kind)
    t0 = args.t0 if args.t0 is not None else int(round(BREAK_FRACTIONS[kind] * T))
    if kind == "white_noise_break":
        return ModelSpec(kind=kind, T=T, t0=t0, sigma1=args.sigma1,
                         sigma2=args.sigma2)
    return ModelSpec(kind=kind, T=T, t0=t0, sigma=args.sigma)


def _check_config(config: EstimatorConfig, T: int, strict: bool) -> None:
    warnings = config.warnings(T)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if strict and warnings:
        raise SystemExit(EXIT_STRICT)


def _manifest_dir(out_path: Path) -> Path:
    return out_path if out_path.is_dir() else out_path.parent


# ---------------------------------------------------------------------------
# subcommands

def _cmd_simulate(args) -> int:
    t_start = time.perf_counter()
    spec = _model_from_args(args, args.T)
    series = generate(spec, args.T, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_series_csv(out, series)
    if args.truth:
        grid = EstimationGrid(RawGrid(args.T))
        io.write_plane_csv(args.truth, grid.rescaled_times(), grid.freqs(),
                           truth_plane(spec, grid))
    io.write_manifest(_manifest_dir(out), "simulate", vars(args),
                      seed=args.seed,
                      timings={"total": time.perf_counter() - t_start})
    return 0


def _cmd_preperiodogram(args) -> int:
    t_start = time.perf_counter()
    series = io.read_series_csv(args.infile)
    raw = preperiodogram_modified(series)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.format == "csv":
        io.write_raw_csv(out, raw)
    else:
        io.write_raw_bin(out, raw)
    io.write_manifest(_manifest_dir(out), "preperiodogram", vars(args),
                      inputs={args.infile: io.sha256_file(args.infile)},
                      timings={"total": time.perf_counter() - t_start})
    return 0


def _cmd_baseline(args) -> int:
    t_start = time.perf_counter()
    raw = io.read_raw_bin(args.raw)
    plane = smooth_nonadaptive(raw, args.bt, args.bf)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_plane(out, plane)
    io.write_manifest(_manifest_dir(out), "baseline", vars(args),
                      inputs={args.raw: io.sha256_file(args.raw)},
                      timings={"total": time.perf_counter() - t_start})
    return 0


def _cmd_estimate(args) -> int:
    t_start = time.perf_counter()
    raw = io.read_raw_bin(args.raw)
    config = io.read_config(args.config) if args.config else EstimatorConfig()
    _check_config(config, raw.grid.T, args.strict)
    result = run_adaptive(raw, config)
    out = Path(args.out)
    io.save_run_result(out, result, with_history=not args.no_history)
    timings = {f"iteration_{d.k}": d.elapsed for d in result.diagnostics}
    timings["total"] = time.perf_counter() - t_start
    io.write_manifest(out, "estimate", vars(args),
                      inputs={args.raw: io.sha256_file(args.raw)},
                      config=result.config, timings=timings)
    return 0


def _cmd_evaluate(args) -> int:
    t_start = time.perf_counter()
    u, lam, values = io.read_plane_csv(args.est)
    if args.truth_model:
        if MODEL_NAMES[args.truth_model] != "tvma2" and not args.T:
            raise ParameterError("--T is required with a break --truth-model")
        spec = _model_from_args(argparse.Namespace(
            model=args.truth_model, t0=args.t0, sigma=args.sigma,
            sigma1=args.sigma1, sigma2=args.sigma2), args.T or 0)
        from .simulate import true_spectrum
        tv = true_spectrum(spec, u[:, None], lam[None, :])
    elif args.truth:
        tu, tl, tv = io.read_plane_csv(args.truth)
        if tv.shape != values.shape:
            raise DataError("truth plane shape does not match estimate")
    else:
        raise ParameterError("one of --truth-model or --truth is required")
    se = (values - tv) ** 2
    q = np.quantile(se, [0.0, 0.25, 0.5, 0.75, 1.0])
    report = {
        "mse": float(se.mean()),
        "se_quantiles": {"q0": q[0], "q25": q[1], "q50": q[2],
                         "q75": q[3], "q100": q[4]},
        "n_points": int(se.size),
    }
    Path(args.report).write_text(json.dumps(report, indent=2) + "\n")
    io.write_manifest(_manifest_dir(Path(args.report)), "evaluate", vars(args),
                      inputs={args.est: io.sha256_file(args.est)},
                      timings={"total": time.perf_counter() - t_start})
    return 0


def _cmd_kernel(args) -> int:
    result = io.load_run_result(args.result)
    rk = reconstruct_kernel(result, args.u, getattr(args, "lambda"))
    raw_grid = result.grid.raw
    taus = raw_grid.times()
    lams = raw_grid.freqs()
    lines = ["tau,lambda,weight,penalty"]
    for i in range(raw_grid.n_time):
        row_w = rk.weights[i]
        row_p = rk.penalty[i]
        for j in range(raw_grid.n_freq):
            if row_w[j] != 0.0 or not math.isnan(row_p[j]):
                lines.append(f"{io._fmt(taus[i])},{io._fmt(lams[j])},"
                             f"{io._fmt(row_w[j])},{io._fmt(row_p[j])}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    return 0


def _cmd_render(args) -> int:
    u, lam, values = io.read_plane_csv(args.plane)
    io.render_ppm(args.out, values)
    return 0


def _cmd_demo(args) -> int:
    t_start = time.perf_counter()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = _model_from_args(args, args.T)
    config = io.read_config(args.config) if args.config else EstimatorConfig()
    _check_config(config, args.T, args.strict)

    series = generate(spec, args.T, args.seed)
    io.write_series_csv(out / "series.csv", series)
    raw = preperiodogram_modified(series)
    io.write_raw_bin(out / "raw.bin", raw)

    result = run_adaptive(raw, config)
    io.save_run_result(out / "adaptive", result)
    grid = result.grid
    io.write_plane_csv(out / "truth.csv", grid.rescaled_times(), grid.freqs(),
                       truth_plane(spec, grid))

    d = result.diagnostics[-1]
    na_same = smooth_nonadaptive(raw, d.search_bt_median, d.search_bf_median, grid)
    io.write_plane(out / "na_same.csv", na_same)
    bt_o, bf_o, na_opt, rep_opt = optimal_global_bandwidth(raw, spec, grid=grid)
    io.write_plane(out / "na_opt.csv", na_opt)

    rep_ad, _ = squared_error(result.final, spec)
    rep_same, _ = squared_error(na_same, spec)
    det = detect_break(grid.rescaled_times(), freq_average(result.final))
    summary = {
        "model": spec.kind,
        "T": args.T,
        "seed": args.seed,
        "iterations": result.k_max,
        "stop_reason": result.stop_reason,
        "mse_adaptive": rep_ad.mse,
        "mse_na_same_window": rep_same.mse,
        "mse_na_opt": rep_opt.mse,
        "median_se_adaptive": rep_ad.se_quantiles[2],
        "median_se_na_same_window": rep_same.se_quantiles[2],
        "median_se_na_opt": rep_opt.se_quantiles[2],
        "na_opt_bandwidths": [bt_o, bf_o],
        "na_same_bandwidths": [d.search_bt_median, d.search_bf_median],
        "break_location": det.u_hat,
        "break_confident": det.confident,
        "backend": active_backend_name(),
        "threads": num_threads(),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    timings = {f"iteration_{d.k}": d.elapsed for d in result.diagnostics}
    timings["total"] = time.perf_counter() - t_start
    io.write_manifest(out, "demo", vars(args), config=result.config,
                      seed=args.seed, timings=timings)
    print(json.dumps(summary, indent=2))
    return 0


# ---------------------------------------------------------------------------

def _add_model_args(p, with_sigmas: bool = True):
    p.add_argument("--t0", type=int, default=None,
                   help="break index in samples (default: paper-scaled)")
    if with_sigmas:
        p.add_argument("--sigma", type=float, default=1.0,
                       help="pre-break noise level of tvma2-break")
        p.add_argument("--sigma1", type=float, default=1.0)
        p.add_argument("--sigma2", type=float, default=math.sqrt(10.0))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tvspec",
        description="Adaptive time-varying spectral density estimation.")
    ap.add_argument("--version", action="version",
                    version=f"tvspec {__version__} (raw format {RAW_FORMAT})")
    ap.add_argument("--strict", action="store_true",
                    help="escalate config warnings to exit status 4")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a sample path of a test-bed model")
    p.add_argument("--model", required=True, choices=sorted(MODEL_NAMES))
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    _add_model_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", default=None,
                   help="also write the closed-form density on the grid")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("preperiodogram", help="raw time-frequency plane of a series")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("bin", "csv"), default="bin")
    p.set_defaults(func=_cmd_preperiodogram)

    p = sub.add_parser("baseline", help="nonadaptive smoothing at fixed bandwidths")
    p.add_argument("--raw", required=True)
    p.add_argument("--bt", type=float, required=True)
    p.add_argument("--bf", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("estimate", help="adaptive estimation")
    p.add_argument("--raw", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--no-history", action="store_true")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("evaluate", help="squared-error report against a truth")
    p.add_argument("--est", required=True)
    p.add_argument("--truth-model", default=None, choices=sorted(MODEL_NAMES))
    p.add_argument("--truth", default=None)
    p.add_argument("--T", type=int, default=None,
                   help="series length (needed by break truth models)")
    _add_model_args(p)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("kernel", help="reconstruct the smoothing kernel of one point")
    p.add_argument("--result", required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--lambda", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("render", help="rasterize a plane CSV to a PPM heatmap")
    p.add_argument("--plane", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("demo", help="full pipeline on one example model")
    p.add_argument("--example", dest="model", required=True,
                   choices=("wn-break", "tvma2", "tvma2-break"))
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    _add_model_args(p)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_demo)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TvspecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
