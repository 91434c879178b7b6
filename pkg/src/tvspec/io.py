"""File formats: binary plane containers, CSV planes/series, config, manifests.

``raw.bin`` container (little-endian): magic ``TVSPEC01``, three uint64
fields (T, rows, cols), then rows*cols float64 values, row-major with time
as the leading axis.  The history container ``TVSPECH1`` stores the grid
descriptor (T, d_t, d_f, n_snapshots, rows, cols) followed by five planes
per snapshot (estimate, weight sum, auxiliary weight sum, memory
coefficient, negativity flag).

Numbers in CSV files carry 17 significant digits so doubles round-trip.
"""
from __future__ import annotations

import hashlib
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from . import __version__
from .adaptive import (AdaptiveState, EstimatorConfig, IterationDiagnostics,
                       RunResult)
from .errors import ConfigError, DataError
from .preperiodogram import RawGrid, RawPlane
from .simulate import TimeSeries
from .smoother import EstimationGrid, Plane

RAW_MAGIC = b"TVSPEC01"
HISTORY_MAGIC = b"TVSPECH1"

FMT = "%.17g"


def _fmt(x: float) -> str:
    return FMT % x


# ---------------------------------------------------------------------------
# binary containers

def write_raw_bin(path: Union[str, Path], raw: RawPlane) -> None:
    v = raw.values
    header = RAW_MAGIC + np.array([raw.grid.T, v.shape[0], v.shape[1]],
                                  dtype="<u8").tobytes()
    Path(path).write_bytes(header + np.ascontiguousarray(v, dtype="<f8").tobytes())


def read_raw_bin(path: Union[str, Path]) -> RawPlane:
    buf = Path(path).read_bytes()
    if buf[:8] != RAW_MAGIC:
        raise DataError(f"{path}: not a raw plane container (bad magic)")
    T, rows, cols = (int(x) for x in np.frombuffer(buf[8:32], dtype="<u8"))
    data = np.frombuffer(buf[32:], dtype="<f8")
    if data.size != rows * cols:
        raise DataError(f"{path}: truncated container")
    return RawPlane(grid=RawGrid(T), values=data.reshape(rows, cols).copy())


def write_history_bin(path: Union[str, Path], result: RunResult) -> None:
    if result.history is None:
        raise DataError("run result holds no history")
    grid = result.grid
    n_gt, n_gf = grid.shape
    parts = [HISTORY_MAGIC,
             np.array([grid.T, grid.d_t, grid.d_f, len(result.history),
                       n_gt, n_gf], dtype="<u8").tobytes()]
    for snap in result.history:
        for plane in (snap.f_hat, snap.N_hat, snap.N_tilde, snap.theta,
                      snap.neg.astype(float)):
            parts.append(np.ascontiguousarray(plane, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_history_bin(path: Union[str, Path]):
    """Returns (grid, [AdaptiveState, ...])."""
    buf = Path(path).read_bytes()
    if buf[:8] != HISTORY_MAGIC:
        raise DataError(f"{path}: not a history container (bad magic)")
    T, d_t, d_f, n_snap, n_gt, n_gf = (int(x) for x in
                                       np.frombuffer(buf[8:56], dtype="<u8"))
    grid = EstimationGrid(RawGrid(T), d_t, d_f)
    plane_len = n_gt * n_gf
    data = np.frombuffer(buf[56:], dtype="<f8")
    if data.size != 5 * n_snap * plane_len:
        raise DataError(f"{path}: truncated container")
    history = []
    for i in range(n_snap):
        block = data[5 * i * plane_len:(5 * i + 5) * plane_len]
        f_hat, n_hat, n_til, theta, neg = (
            block[j * plane_len:(j + 1) * plane_len].reshape(n_gt, n_gf).copy()
            for j in range(5))
        history.append(AdaptiveState(
            f_hat=f_hat, N_hat=n_hat, N_tilde=n_til,
            b_eff=np.sqrt(n_hat) / (2.0 * T), theta=theta, neg=neg > 0.5))
    return grid, history


# ---------------------------------------------------------------------------
# CSV formats

def write_series_csv(path: Union[str, Path], series: TimeSeries) -> None:
    lines = ["t,value"]
    lines += [f"{t},{_fmt(v)}" for t, v in enumerate(series.values, start=1)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_series_csv(path: Union[str, Path], model_tag: str = "custom_csv",
                    seed: int = 0) -> TimeSeries:
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0].strip().lower() != "t,value":
        raise DataError(f"{path}: expected header 't,value'")
    values = []
    for ln in text[1:]:
        parts = ln.split(",")
        if len(parts) != 2:
            raise DataError(f"{path}: malformed row {ln!r}")
        values.append(float(parts[1]))
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{path}: non-finite values in series")
    return TimeSeries(values=arr, T=len(arr), model_tag=model_tag, seed=seed)


def write_plane_csv(path: Union[str, Path], grid_u: np.ndarray,
                    grid_lam: np.ndarray, values: np.ndarray) -> None:
    lines = ["u,lambda,f"]
    for i, u in enumerate(grid_u):
        su = _fmt(u)
        row = values[i]
        lines += [f"{su},{_fmt(lam)},{_fmt(row[j])}" for j, lam in enumerate(grid_lam)]
    Path(path).write_text("\n".join(lines) + "\n")


def write_plane(path: Union[str, Path], plane: Plane) -> None:
    write_plane_csv(path, plane.grid.rescaled_times(), plane.grid.freqs(),
                    plane.values)


def write_raw_csv(path: Union[str, Path], raw: RawPlane) -> None:
    """Long-format alternative to the binary raw container: tau,j,value."""
    lines = ["tau,j,value"]
    taus = raw.grid.times()
    for i, tau in enumerate(taus):
        st = _fmt(tau)
        row = raw.values[i]
        lines += [f"{st},{j},{_fmt(row[j])}" for j in range(raw.grid.n_freq)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_plane_csv(path: Union[str, Path]):
    """Returns (u, lam, values) from the long format written by write_plane_csv."""
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0].strip().lower() != "u,lambda,f":
        raise DataError(f"{path}: expected header 'u,lambda,f'")
    us, lams, vals = [], [], []
    for ln in text[1:]:
        parts = ln.split(",")
        if len(parts) != 3:
            raise DataError(f"{path}: malformed row {ln!r}")
        us.append(float(parts[0]))
        lams.append(float(parts[1]))
        vals.append(float(parts[2]))
    u = np.unique(np.asarray(us))
    lam = np.unique(np.asarray(lams))
    values = np.asarray(vals)
    if values.size != u.size * lam.size:
        raise DataError(f"{path}: plane is not a complete grid")
    order = np.lexsort((lams, us))
    return u, lam, values[order].reshape(u.size, lam.size)


# ---------------------------------------------------------------------------
# configuration

_CONFIG_FIELDS = {f for f in EstimatorConfig.__dataclass_fields__}


def read_config(path: Union[str, Path]) -> EstimatorConfig:
    """Flat TOML document with EstimatorConfig field names; unknown keys error."""
    try:
        doc = _toml.loads(Path(path).read_text())
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    unknown = set(doc) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    return EstimatorConfig(**doc)


def config_to_toml(config: EstimatorConfig) -> str:
    lines = []
    for key, val in asdict(config).items():
        if val is None:
            continue
        if isinstance(val, bool):
            lines.append(f"{key} = {'true' if val else 'false'}")
        elif isinstance(val, int):
            lines.append(f"{key} = {val}")
        else:
            lines.append(f"{key} = {_fmt(val)}")
    return "\n".join(lines) + "\n"


def write_config(path: Union[str, Path], config: EstimatorConfig) -> None:
    Path(path).write_text(config_to_toml(config))


# ---------------------------------------------------------------------------
# run results and manifests

def write_diagnostics_jsonl(path: Union[str, Path],
                            diagnostics: List[IterationDiagnostics]) -> None:
    with open(path, "w") as fh:
        for d in diagnostics:
            fh.write(json.dumps(asdict(d)) + "\n")


def read_diagnostics_jsonl(path: Union[str, Path]) -> List[IterationDiagnostics]:
    out = []
    for ln in Path(path).read_text().strip().splitlines():
        out.append(IterationDiagnostics(**json.loads(ln)))
    return out


def save_run_result(out_dir: Union[str, Path], result: RunResult,
                    with_history: bool = True) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_plane(out / "final.csv", result.final)
    write_diagnostics_jsonl(out / "diagnostics.jsonl", result.diagnostics)
    write_config(out / "config.toml", result.config)
    if with_history and result.history is not None:
        write_history_bin(out / "history.bin", result)


def load_run_result(result_dir: Union[str, Path]) -> RunResult:
    rdir = Path(result_dir)
    config = read_config(rdir / "config.toml")
    diagnostics = read_diagnostics_jsonl(rdir / "diagnostics.jsonl")
    hist_path = rdir / "history.bin"
    if not hist_path.exists():
        raise DataError(f"{rdir}: history.bin missing (run was saved without history)")
    grid, history = read_history_bin(hist_path)
    final = Plane(grid=grid, values=history[-1].f_hat,
                  meta={"estimator": "adaptive"})
    return RunResult(final=final, history=history, diagnostics=diagnostics,
                     config=config, grid=grid)


def sha256_file(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Union[str, Path], command: str, args: Dict,
                   inputs: Optional[Dict[str, str]] = None,
                   config: Optional[EstimatorConfig] = None,
                   seed: Optional[int] = None,
                   timings: Optional[Dict[str, float]] = None) -> None:
    doc = {
        "command": command,
        "args": {k: v for k, v in args.items() if not k.startswith("_")},
        "inputs": inputs or {},
        "config": None if config is None else asdict(config),
        "seed": seed,
        "version": __version__,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "timings": timings or {},
    }
    Path(out_dir, "manifest.json").write_text(json.dumps(doc, indent=2,
                                                         default=str) + "\n")


# ---------------------------------------------------------------------------
# rendering

def render_ppm(path: Union[str, Path], values: np.ndarray,
               sidecar: Optional[Union[str, Path]] = None) -> None:
    """Rasterize a plane to a binary PPM heatmap (linear grayscale).

    Rows run top-to-bottom in increasing u, columns left-to-right in
    increasing lambda; min -> black, max -> white, recorded in the sidecar.
    """
    v = np.asarray(values, dtype=float)
    vmin, vmax = float(v.min()), float(v.max())
    scale = 255.0 / (vmax - vmin) if vmax > vmin else 0.0
    gray = np.clip(np.rint((v - vmin) * scale), 0, 255).astype(np.uint8)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    header = f"P6\n{v.shape[1]} {v.shape[0]}\n255\n".encode()
    Path(path).write_bytes(header + rgb.tobytes())
    side = Path(sidecar) if sidecar else Path(str(path) + ".json")
    side.write_text(json.dumps({"min": vmin, "max": vmax,
                                "rows": v.shape[0], "cols": v.shape[1],
                                "colormap": "linear-gray"}, indent=2) + "\n")
