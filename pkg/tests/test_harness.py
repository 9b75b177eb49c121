import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from ermcd.harness import (
    ConfigError,
    compare_runs,
    config_hash,
    run_experiment,
    validate_config,
)
from ermcd.trace import COLUMNS, Trace


def base_config(**overrides):
    cfg = {
        "problem": {
            "source": {
                "synthetic": {
                    "n": 30,
                    "d": 8,
                    "sparsity": 0.6,
                    "norm_law": "uniform",
                    "seed": 1,
                }
            },
            "loss": "quadratic",
            "regularizer": "l2",
            "lambda": "1/n",
        },
        "method": "sdca",
        "sampling": {"rule": "serial", "probs": "importance"},
        "budget": {"epochs": 12, "target_gap": None},
        "seeds": [1, 2],
    }
    cfg.update(overrides)
    return cfg


class TestConfig:
    def test_hash_stable_under_key_order(self):
        a = {"x": 1, "y": {"b": 2, "a": 3}}
        b = {"y": {"a": 3, "b": 2}, "x": 1}
        assert config_hash(a) == config_hash(b)

    def test_incompatible_method_sampling(self):
        with pytest.raises(ConfigError):
            validate_config(base_config(method="nsync",
                                        sampling={"rule": "tau_nice", "tau": 2}))
        with pytest.raises(ConfigError):
            validate_config(
                base_config(method="adasdca",
                            sampling={"rule": "serial", "probs": "uniform"})
            )
        with pytest.raises(ConfigError):
            validate_config(base_config(method="mystery"))

    def test_adaptive_without_sampling_ok(self):
        cfg = base_config(method="adasdca")
        cfg.pop("sampling")
        validate_config(cfg)


class TestRunExperiment:
    def test_deterministic_bytes(self, tmp_path):
        cfg = base_config(output_dir="runs")
        a = run_experiment(cfg, out_root=str(tmp_path))
        files = sorted(
            f for f in os.listdir(tmp_path / "runs") if f.endswith(".csv")
        )
        before = {f: (tmp_path / "runs" / f).read_bytes() for f in files}
        run_experiment(cfg, out_root=str(tmp_path))
        after = {f: (tmp_path / "runs" / f).read_bytes() for f in files}
        assert before == after
        assert len(a) == 2

    def test_target_stops_early(self, tmp_path):
        cfg = base_config(budget={"epochs": 400, "target_gap": 1e-8})
        traces = run_experiment(cfg, out_root=str(tmp_path))
        for t in traces:
            assert t.final_gap <= 1e-8
            assert t.column("epoch")[-1] < 400

    def test_seed_fanout_and_index(self, tmp_path):
        cfg = base_config(
            seeds=list(range(1, 6)),
            output_dir="runs",
            budget={"epochs": 30, "target_gap": 1e-8},
        )
        run_experiment(cfg, out_root=str(tmp_path))
        files = os.listdir(tmp_path / "runs")
        assert sum(f.endswith(".csv") for f in files) == 5
        index = json.loads((tmp_path / "runs" / "index.json").read_text())
        assert index[-1]["mean_epochs_to_target"] is not None
        assert len(index[-1]["per_seed"]) == 5

    def test_effective_pass_accounting_matches_expectation(self):
        # touched nonzeros per iteration should track E sum_{j in S} nnz_j
        cfg = base_config(
            method="quartz",
            sampling={"rule": "tau_nice", "tau": 5},
            budget={"epochs": 60, "target_gap": None},
            seeds=[3],
        )
        traces = run_experiment(cfg)
        t = traces[0]
        from ermcd.harness import build_problem

        prob = build_problem(cfg["problem"])
        X = prob.dataset.X
        iters_per_epoch = math.ceil(30 / 5)
        expected_per_epoch = iters_per_epoch * 5 * X.col_nnz().mean() / X.nnz
        deltas = np.diff(t.column("effective_passes"))
        assert abs(deltas.mean() - expected_per_epoch) / expected_per_epoch < 0.02

    def test_every_method_runs(self, tmp_path):
        methods = [
            ("sdca", {"rule": "serial", "probs": "uniform"}),
            ("quartz", {"rule": "bucket", "tau": 3, "probs": "practical"}),
            ("dfsdca", {"rule": "chunked", "tau": 2}),
            ("nsync", {"rule": "serial", "probs": "importance"}),
            ("adasdca", None),
            ("adasdca_plus", None),
        ]
        for method, sampling in methods:
            cfg = base_config(method=method, seeds=[1],
                              budget={"epochs": 3, "target_gap": None})
            if sampling is None:
                cfg.pop("sampling")
            else:
                cfg["sampling"] = sampling
            traces = run_experiment(cfg, out_root=str(tmp_path))
            assert len(traces[0].rows) >= 2

    def test_trace_invariants_hold_across_methods(self, tmp_path):
        # effective passes strictly increase; the gap column never dips
        # below the numerical floor when the dual is defined
        for method, sampling in [
            ("sdca", {"rule": "serial", "probs": "uniform"}),
            ("quartz", {"rule": "tau_nice", "tau": 4}),
            ("dfsdca", {"rule": "serial", "probs": "importance"}),
            ("adasdca_plus", None),
        ]:
            cfg = base_config(method=method, seeds=[4],
                              budget={"epochs": 8, "target_gap": None})
            if sampling is None:
                cfg.pop("sampling")
            else:
                cfg["sampling"] = sampling
            t = run_experiment(cfg, out_root=str(tmp_path))[0]
            passes = t.column("effective_passes")
            assert np.all(np.diff(passes) > 0), method
            gaps = t.column("gap")
            assert np.all(gaps[np.isfinite(gaps)] >= -1e-9), method

    def test_adasdca_plus_default_decay_is_ten(self, tmp_path):
        cfg = base_config(method="adasdca_plus", seeds=[1],
                          budget={"epochs": 2, "target_gap": None})
        cfg.pop("sampling")
        traces = run_experiment(cfg, out_root=str(tmp_path))
        assert traces[0].meta["m"] == 10.0


class TestTraceFile:
    def test_round_trip(self, tmp_path):
        t = Trace(meta={"method": "x", "seed": 0})
        t.append(epoch=0, effective_passes=0.0, primal=1.0, dual=0.5, gap=0.5)
        t.append(epoch=1, effective_passes=1.0, primal=0.7, dual=0.6, gap=0.1,
                 lambda_x=0.3)
        path = str(tmp_path / "t.csv")
        t.write(path)
        back = Trace.read(path)
        assert back.column("gap").tolist() == [0.5, 0.1]
        assert np.isnan(back.column("lambda_x")[0])
        assert back.meta["method"] == "x"

    def test_header_checked(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="header"):
            Trace.read(str(p))

    def test_wall_clock_not_in_csv(self, tmp_path):
        t = Trace()
        t.append(epoch=0, effective_passes=0.0, gap=1.0, wall=123.456)
        text = t.to_csv_text()
        assert "123.456" not in text
        assert tuple(text.splitlines()[0].split(",")) == COLUMNS

    def test_crossing_interpolates(self):
        t = Trace()
        t.append(epoch=0, effective_passes=0.0, gap=1.0)
        t.append(epoch=1, effective_passes=1.0, gap=1e-2)
        t.append(epoch=2, effective_passes=2.0, gap=1e-4)
        x = t.crossing(1e-3)
        assert 1.0 < x < 2.0
        assert t.crossing(1e-9) is None


class TestCompareRuns:
    def _mk(self, gaps):
        t = Trace()
        for k, g in enumerate(gaps):
            t.append(epoch=k, effective_passes=float(k), gap=g)
        return t

    def test_identical_sets_ratio_one(self):
        a = [self._mk([1, 1e-3, 1e-6]) for _ in range(3)]
        b = [self._mk([1, 1e-3, 1e-6]) for _ in range(3)]
        r = compare_runs(a, b, 1e-5)
        assert r.mean_ratio == pytest.approx(1.0)

    def test_censored_marked(self):
        a = [self._mk([1, 1e-6])]
        b = [self._mk([1, 0.5])]
        r = compare_runs(a, b, 1e-5)
        assert r.per_seed_ratio == ["censored"]
        assert r.censored_b == 1
        assert r.mean_ratio is None

    def test_speedup_direction(self):
        fast = [self._mk([1, 1e-6, 1e-9])]
        slow = [self._mk([1, 1e-2, 1e-6])]
        r = compare_runs(fast, slow, 1e-5)
        assert r.mean_ratio > 1.0


class TestCli:
    def run_cli(self, *args, cwd=None):
        return subprocess.run(
            [sys.executable, "-m", "ermcd.cli", *args],
            capture_output=True,
            text=True,
            cwd=cwd,
        )

    def test_bounds_passthrough(self):
        r = self.run_cli("bounds", "--d", "3", "--n", "3", "--alpha", "5")
        assert r.returncode == 0
        payload = json.loads(r.stdout)
        from ermcd.faceoff import binary_bounds

        b = binary_bounds(5, 3, 3)
        assert payload["L_alpha_n"] == b.min_c_d
        assert payload["U_alpha_d_n"] == b.max_c_p

    def test_unknown_flag_exits_one(self):
        r = self.run_cli("bounds", "--nope")
        assert r.returncode == 1

    def test_infeasible_bounds_exits_one(self):
        r = self.run_cli("bounds", "--d", "3", "--n", "3", "--alpha", "100")
        assert r.returncode == 1

    def test_gen_faceoff_pipeline(self, tmp_path):
        data = str(tmp_path / "dense.libsvm")
        r = self.run_cli(
            "gen-synthetic", "--n", "6", "--d", "30", "--sparsity", "1.0",
            "--norm-law", "constant:1", "--seed", "1", "-o", data,
        )
        assert r.returncode == 0
        r = self.run_cli("faceoff", data, "--gamma", "4")
        assert r.returncode == 0
        payload = json.loads(r.stdout)
        # dense with d >> n: everything boils down to d vs n
        assert payload["recommended"] == "primal"

    def test_run_and_compare(self, tmp_path):
        data_cfg = {
            "problem": {
                "source": {
                    "synthetic": {"n": 30, "d": 8, "sparsity": 0.6,
                                  "norm_law": "extreme", "law_param": 25.0,
                                  "seed": 2}
                },
                "loss": "quadratic",
                "regularizer": "l2",
                "lambda": 0.02,
            },
            "method": "sdca",
            "sampling": {"rule": "serial", "probs": "importance"},
            "budget": {"epochs": 1200, "target_gap": 1e-9},
            "seeds": [1, 2],
            "output_dir": "imp",
        }
        cfg_a = tmp_path / "a.json"
        cfg_a.write_text(json.dumps(data_cfg))
        data_cfg2 = dict(data_cfg)
        data_cfg2["sampling"] = {"rule": "serial", "probs": "uniform"}
        data_cfg2["output_dir"] = "unif"
        cfg_b = tmp_path / "b.json"
        cfg_b.write_text(json.dumps(data_cfg2))
        env = dict(os.environ, ERMCD_OUT=str(tmp_path))
        for cfg in (cfg_a, cfg_b):
            r = subprocess.run(
                [sys.executable, "-m", "ermcd.cli", "run", str(cfg)],
                capture_output=True, text=True, env=env,
            )
            assert r.returncode == 0, r.stderr
        r = self.run_cli(
            "compare",
            str(tmp_path / "imp" / "*.csv"),
            str(tmp_path / "unif" / "*.csv"),
            "--target", "1e-8",
        )
        assert r.returncode == 0
        payload = json.loads(r.stdout)
        assert payload["mean_ratio"] > 1.0  # uniform needs more passes

    def test_missing_file_is_runtime_failure(self):
        r = self.run_cli("faceoff", "no-such-file.libsvm")
        assert r.returncode == 2

    def test_eso_check_command(self, tmp_path):
        data = str(tmp_path / "d.libsvm")
        self.run_cli("gen-synthetic", "--n", "20", "--d", "10", "--sparsity",
                     "0.5", "--seed", "3", "-o", data)
        r = self.run_cli("eso-check", data, "--sampling", "tau_nice", "--tau",
                         "4", "--trials", "2000", "--h-draws", "10")
        assert r.returncode == 0
        assert json.loads(r.stdout)["passed"]
