import json
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from tvspec import io
from tvspec.adaptive import EstimatorConfig, run_adaptive
from tvspec.errors import ConfigError, DataError
from tvspec.preperiodogram import preperiodogram_modified
from tvspec.simulate import ModelSpec, generate

from conftest import random_series, synthetic_plane


class TestContainers:
    def test_raw_roundtrip(self, tmp_path):
        raw = synthetic_plane(12, seed=1)
        p = tmp_path / "raw.bin"
        io.write_raw_bin(p, raw)
        back = io.read_raw_bin(p)
        assert back.grid.T == 12
        assert np.array_equal(back.values, raw.values)

    def test_raw_magic_checked(self, tmp_path):
        p = tmp_path / "x.bin"
        p.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
        with pytest.raises(DataError):
            io.read_raw_bin(p)

    def test_history_roundtrip(self, tmp_path):
        raw = synthetic_plane(12, seed=2)
        res = run_adaptive(raw, EstimatorConfig(k_hard=2, d_t=2), n_threads=1)
        io.write_history_bin(tmp_path / "h.bin", res)
        grid, history = io.read_history_bin(tmp_path / "h.bin")
        assert grid.shape == res.grid.shape
        assert len(history) == len(res.history)
        for a, b in zip(history, res.history):
            assert np.array_equal(a.f_hat, b.f_hat)
            assert np.array_equal(a.N_hat, b.N_hat)
            assert np.array_equal(a.theta, b.theta)
            assert np.array_equal(a.neg, b.neg)


class TestCsv:
    def test_series_roundtrip(self, tmp_path):
        s = random_series(40, seed=3)
        p = tmp_path / "series.csv"
        io.write_series_csv(p, s)
        back = io.read_series_csv(p)
        assert np.array_equal(back.values, s.values)

    def test_plane_roundtrip(self, tmp_path):
        u = np.array([0.1, 0.2, 0.3])
        lam = np.array([0.0, 1.0])
        vals = np.arange(6.0).reshape(3, 2) * math.pi
        p = tmp_path / "plane.csv"
        io.write_plane_csv(p, u, lam, vals)
        u2, lam2, v2 = io.read_plane_csv(p)
        assert np.array_equal(u2, u)
        assert np.array_equal(lam2, lam)
        assert np.array_equal(v2, vals)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(DataError):
            io.read_series_csv(p)


class TestConfigFile:
    def test_roundtrip(self, tmp_path):
        cfg = EstimatorConfig(b_t0=0.1, gamma_t=1.25, d_t=2).resolved()
        p = tmp_path / "config.toml"
        io.write_config(p, cfg)
        back = io.read_config(p)
        assert back == cfg

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "config.toml"
        p.write_text("b_t0 = 0.1\nbogus_key = 3\n")
        with pytest.raises(ConfigError):
            io.read_config(p)


class TestRunResultPersistence:
    def test_save_load_reconstruct(self, tmp_path):
        raw = synthetic_plane(16, seed=4)
        res = run_adaptive(raw, EstimatorConfig(k_hard=3), n_threads=1)
        io.save_run_result(tmp_path / "run", res)
        back = io.load_run_result(tmp_path / "run")
        assert np.array_equal(back.final.values, res.final.values)
        from tvspec.adaptive import reconstruct_kernel
        rk1 = reconstruct_kernel(res, 0.5, 1.0)
        rk2 = reconstruct_kernel(back, 0.5, 1.0)
        assert np.allclose(rk1.weights, rk2.weights, rtol=1e-12, atol=1e-300)


class TestRender:
    def test_ppm_written(self, tmp_path):
        vals = np.linspace(0, 1, 12).reshape(3, 4)
        p = tmp_path / "img.ppm"
        io.render_ppm(p, vals)
        data = p.read_bytes()
        assert data.startswith(b"P6\n4 3\n255\n")
        assert len(data) == len(b"P6\n4 3\n255\n") + 3 * 12
        side = json.loads((tmp_path / "img.ppm.json").read_text())
        assert side["min"] == 0.0 and side["max"] == 1.0


def run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "tvspec.cli"] + args,
                          cwd=cwd, capture_output=True, text=True)


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    """simulate -> preperiodogram shared by the CLI tests."""
    d = tmp_path_factory.mktemp("cli")
    r = run_cli(["simulate", "--model", "tvma2", "--T", "48", "--seed", "5",
                 "--out", "series.csv", "--truth", "truth.csv"], d)
    assert r.returncode == 0, r.stderr
    r = run_cli(["preperiodogram", "--in", "series.csv", "--out", "raw.bin"], d)
    assert r.returncode == 0, r.stderr
    return d


class TestCli:
    def test_simulate_deterministic(self, pipeline_dir, tmp_path):
        r = run_cli(["simulate", "--model", "tvma2", "--T", "48", "--seed", "5",
                     "--out", str(tmp_path / "s2.csv")], pipeline_dir)
        assert r.returncode == 0
        assert (tmp_path / "s2.csv").read_text() == \
            (pipeline_dir / "series.csv").read_text()

    def test_baseline_and_evaluate(self, pipeline_dir):
        r = run_cli(["baseline", "--raw", "raw.bin", "--bt", "0.3",
                     "--bf", "1.5", "--out", "plane.csv"], pipeline_dir)
        assert r.returncode == 0, r.stderr
        r = run_cli(["evaluate", "--est", "plane.csv", "--truth-model", "tvma2",
                     "--report", "report.json"], pipeline_dir)
        assert r.returncode == 0, r.stderr
        rep = json.loads((pipeline_dir / "report.json").read_text())
        assert set(rep) >= {"mse", "se_quantiles", "n_points"}

    def test_evaluate_against_truth_file(self, pipeline_dir):
        r = run_cli(["evaluate", "--est", "truth.csv", "--truth", "truth.csv",
                     "--report", "r0.json"], pipeline_dir)
        assert r.returncode == 0, r.stderr
        assert json.loads((pipeline_dir / "r0.json").read_text())["mse"] == 0.0

    def test_estimate_kernel_render(self, pipeline_dir):
        (pipeline_dir / "config.toml").write_text(
            "k_hard = 2\nd_t = 2\nd_f = 2\n")
        r = run_cli(["estimate", "--raw", "raw.bin", "--config", "config.toml",
                     "--out", "run"], pipeline_dir)
        assert r.returncode == 0, r.stderr
        out = pipeline_dir / "run"
        assert (out / "final.csv").exists()
        assert (out / "diagnostics.jsonl").exists()
        assert (out / "manifest.json").exists()
        r = run_cli(["kernel", "--result", "run", "--u", "0.5",
                     "--lambda", "1.0", "--out", "kernel.csv"], pipeline_dir)
        assert r.returncode == 0, r.stderr
        assert (pipeline_dir / "kernel.csv").read_text().startswith(
            "tau,lambda,weight,penalty")
        r = run_cli(["render", "--plane", "run/final.csv",
                     "--out", "final.ppm"], pipeline_dir)
        assert r.returncode == 0, r.stderr
        assert (pipeline_dir / "final.ppm").read_bytes().startswith(b"P6\n")

    def test_unknown_flag_exits_2(self, pipeline_dir):
        r = run_cli(["simulate", "--bogus"], pipeline_dir)
        assert r.returncode == 2
        assert "usage" in r.stderr.lower() or "error" in r.stderr.lower()

    def test_bad_data_exits_3(self, pipeline_dir, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,value\n1,nan\n2,1.0\n")
        r = run_cli(["preperiodogram", "--in", str(bad), "--out",
                     str(tmp_path / "x.bin")], pipeline_dir)
        assert r.returncode == 3

    def test_strict_escalates_warnings(self, pipeline_dir, tmp_path):
        (tmp_path / "warn.toml").write_text("b_t0 = 0.02\nb_f0 = 0.1\nk_hard = 1\n")
        r = run_cli(["--strict", "estimate", "--raw", "raw.bin", "--config",
                     str(tmp_path / "warn.toml"), "--out", str(tmp_path / "w")],
                    pipeline_dir)
        assert r.returncode == 4
        assert "warning" in r.stderr

    def test_preperiodogram_csv_format(self, pipeline_dir, tmp_path):
        r = run_cli(["preperiodogram", "--in", "series.csv", "--format", "csv",
                     "--out", str(tmp_path / "raw.csv")], pipeline_dir)
        assert r.returncode == 0, r.stderr
        lines = (tmp_path / "raw.csv").read_text().splitlines()
        assert lines[0] == "tau,j,value"
        assert lines[1].startswith("1,0,")
        # 2T-1 rows of T+1 frequencies for T=48
        assert len(lines) == 1 + 95 * 49

    def test_demo_summary_contract(self, tmp_path):
        cfg = tmp_path / "demo.toml"
        cfg.write_text("d_t = 2\nd_f = 2\nk_hard = 3\n")
        r = run_cli(["demo", "--example", "wn-break", "--T", "64", "--seed", "7",
                     "--config", str(cfg), "--out", str(tmp_path / "demo")],
                    tmp_path)
        assert r.returncode == 0, r.stderr
        summary = json.loads((tmp_path / "demo" / "summary.json").read_text())
        assert {"mse_adaptive", "mse_na_same_window", "mse_na_opt",
                "break_location"} <= set(summary)
        assert (tmp_path / "demo" / "manifest.json").exists()

    def test_thread_count_invariance_of_outputs(self, pipeline_dir, tmp_path):
        env1 = dict(os.environ, TVSPEC_THREADS="1")
        env2 = dict(os.environ, TVSPEC_THREADS="2")
        (pipeline_dir / "cfg_det.toml").write_text("k_hard = 2\n")
        outs = []
        for name, env in (("t1", env1), ("t2", env2)):
            r = subprocess.run(
                [sys.executable, "-m", "tvspec.cli", "estimate", "--raw",
                 "raw.bin", "--config", "cfg_det.toml", "--out",
                 str(tmp_path / name)],
                cwd=pipeline_dir, env=env, capture_output=True, text=True)
            assert r.returncode == 0, r.stderr
            outs.append(tmp_path / name)
        for fn in ("final.csv", "history.bin", "diagnostics.jsonl"):
            a = (outs[0] / fn).read_bytes()
            b = (outs[1] / fn).read_bytes()
            if fn == "diagnostics.jsonl":
                # timings differ; compare without the elapsed field
                strip = lambda raw: [
                    {k: v for k, v in json.loads(ln).items() if k != "elapsed"}
                    for ln in raw.decode().strip().splitlines()]
                assert strip(a) == strip(b)
            else:
                assert a == b
