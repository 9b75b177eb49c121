"""Experiment configuration, orchestration, and trace persistence.

A config is a single JSON document (schema below); (config, seed) fully
determines every byte of the emitted trace CSVs. Timing goes to the
.meta.json sidecars. An index.json per output directory accumulates one
summary row per run.

Config schema::

    {
      "problem": {
        "source": {"libsvm": "path"} |
                  {"synthetic": {"n":..,"d":..,"sparsity":..,
                                 "norm_law":..,"law_param":..,"seed":..}},
        "loss": "quadratic" | "logistic" | "smoothed_hinge",
        "gamma_sh": 1.0,
        "regularizer": "l2",
        "lambda": 0.01 | "1/n",
        "normalize": false
      },
      "method": "sdca" | "adasdca" | "adasdca_plus" | "quartz" |
                "dfsdca" | "nsync",
      "method_options": {"m": 10, "option": "II"},
      "sampling": {"rule": "serial", "probs": "uniform" | "importance"} |
                  {"rule": "tau_nice", "tau": 8} |
                  {"rule": "bucket", "tau": 8,
                   "probs": "uniform" | "practical" | "alternating"} |
                  {"rule": "chunked", "tau": 4},
      "budget": {"epochs": 50, "target_gap": null},
      "seeds": [1, 2, 3],
      "output_dir": "runs/exp1"
    }

The output root may also come from the ERMCD_OUT environment variable;
output_dir is then resolved relative to it.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ermcd import __version__
from ermcd.dual_solvers import adasdca_plus_run, adasdca_run, quartz_run, sdca_run
from ermcd.eso import attach_eso, v_serial, u_serial
from ermcd.losses import Loss, Problem, Regularizer
from ermcd.primal_solvers import dfsdca_run, nsync_run
from ermcd.rng import stream
from ermcd.sampling import (
    Sampling,
    bucket_probs_alternating,
    bucket_probs_practical,
    bucket_sampling,
    chunked_sampling,
    naive_chunks,
    random_buckets,
    serial_sampling,
    tau_nice_sampling,
    uniform_serial_sampling,
)
from ermcd.sparse_data import (
    Dataset,
    SyntheticSpec,
    generate_synthetic,
    normalize_by_avg_col_norm,
    parse_libsvm,
)
from ermcd.trace import Trace

_METHODS = ("sdca", "adasdca", "adasdca_plus", "quartz", "dfsdca", "nsync")

_COMPAT = {
    "sdca": {"serial"},
    "adasdca": {"adaptive"},
    "adasdca_plus": {"adaptive"},
    "quartz": {"serial", "tau_nice", "bucket"},
    "dfsdca": {"serial", "tau_nice", "bucket", "chunked"},
    "nsync": {"serial", "full"},
}


class ConfigError(ValueError):
    pass


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def load_dataset(problem_cfg: dict) -> Dataset:
    src = problem_cfg["source"]
    if "libsvm" in src:
        with open(src["libsvm"]) as f:
            ds = parse_libsvm(f)
    elif "synthetic" in src:
        ds = generate_synthetic(SyntheticSpec(**src["synthetic"]))
    else:
        raise ConfigError("problem.source must name libsvm or synthetic")
    if problem_cfg.get("normalize", False):
        ds = normalize_by_avg_col_norm(ds)
    return ds


def build_problem(problem_cfg: dict) -> Problem:
    ds = load_dataset(problem_cfg)
    kind = problem_cfg.get("loss", "quadratic")
    loss = Loss(kind=kind, gamma_sh=problem_cfg.get("gamma_sh", 1.0))
    reg_kind = problem_cfg.get("regularizer", "l2")
    reg = Regularizer(kind=reg_kind)
    lam = problem_cfg.get("lambda", "1/n")
    if lam == "1/n":
        lam = 1.0 / ds.X.n
    return Problem(dataset=ds, loss=loss, reg=reg, lam=lam)


def build_sampling(cfg: dict, problem: Problem, seed: int) -> Sampling:
    """Realize a sampling spec against the problem's data."""
    X = problem.dataset.X
    n = X.n
    rule = cfg["rule"]
    if rule == "serial":
        probs = cfg.get("probs", "uniform")
        if probs == "uniform":
            s = uniform_serial_sampling(n)
        elif probs == "importance":
            from ermcd.sampling import importance_probs

            s = serial_sampling(importance_probs(v_serial(X), problem.nlg))
        elif probs == "explicit":
            s = serial_sampling(np.asarray(cfg["p"], dtype=float))
        else:
            raise ConfigError(f"unknown serial probs {probs!r}")
    elif rule == "tau_nice":
        s = tau_nice_sampling(n, int(cfg["tau"]))
    elif rule == "bucket":
        tau = int(cfg["tau"])
        buckets = random_buckets(n, tau, stream(seed, "buckets"))
        probs = cfg.get("probs", "practical")
        if probs == "uniform":
            p = np.empty(n)
            for g in buckets.groups:
                p[list(g)] = 1.0 / len(g)
        elif probs == "practical":
            p_unif = np.empty(n)
            for g in buckets.groups:
                p_unif[list(g)] = 1.0 / len(g)
            from ermcd.eso import v_bucket

            p = bucket_probs_practical(
                v_bucket(X, buckets, p_unif), problem.nlg, buckets
            )
        elif probs == "alternating":
            p, _, _ = bucket_probs_alternating(X, buckets, problem.nlg)
        else:
            raise ConfigError(f"unknown bucket probs {probs!r}")
        s = bucket_sampling(buckets, p)
    elif rule == "chunked":
        groups = naive_chunks(X.col_nnz())
        s = chunked_sampling(groups, int(cfg["tau"]))
    else:
        raise ConfigError(f"unknown sampling rule {rule!r}")
    return attach_eso(X, s)


def validate_config(config: dict) -> None:
    method = config.get("method")
    if method not in _METHODS:
        raise ConfigError(f"unknown method {method!r}")
    sampling_cfg = config.get("sampling")
    if method in ("adasdca", "adasdca_plus"):
        if sampling_cfg is not None:
            raise ConfigError(f"{method} manages its own adaptive sampling")
        return
    if sampling_cfg is None:
        raise ConfigError(f"{method} needs a sampling spec")
    rule = sampling_cfg.get("rule")
    allowed = _COMPAT[method]
    if rule not in allowed:
        raise ConfigError(
            f"method {method} supports samplings {sorted(allowed)}, got {rule!r}"
        )


def run_experiment(config: dict, out_root: Optional[str] = None) -> list[Trace]:
    """Run the configured experiment once per seed and persist traces.

    Returns the traces in seed order; writes one CSV + sidecar per seed
    plus a summary row per seed into index.json, all atomically.
    """
    validate_config(config)
    chash = config_hash(config)
    problem = build_problem(config["problem"])
    budget = config.get("budget", {})
    epochs = int(budget.get("epochs", 10))
    target = budget.get("target_gap")
    method = config["method"]
    opts = config.get("method_options", {})
    seeds = config.get("seeds", [0])

    out_dir = config.get("output_dir")
    if out_dir is not None:
        root = out_root or os.environ.get("ERMCD_OUT", ".")
        out_dir = os.path.join(root, out_dir)
        os.makedirs(out_dir, exist_ok=True)

    traces = []
    summaries = []
    for seed in seeds:
        rng = stream(seed, "solver")
        if method == "adasdca":
            trace = adasdca_run(problem, epochs, rng, target_gap=target)
        elif method == "adasdca_plus":
            trace = adasdca_plus_run(
                problem,
                m=float(opts.get("m", 10.0)),
                option=opts.get("option", "II"),
                epochs=epochs,
                rng=rng,
                target_gap=target,
            )
        else:
            sampling = build_sampling(config["sampling"], problem, seed)
            if method == "sdca":
                trace = sdca_run(problem, sampling.p, epochs, rng, target_gap=target)
            elif method == "quartz":
                trace = quartz_run(problem, sampling, epochs, rng, target_gap=target)
            elif method == "dfsdca":
                trace = dfsdca_run(problem, sampling, epochs, rng, target_gap=target)
            else:  # nsync over feature coordinates
                X = problem.dataset.X
                rule = config["sampling"]["rule"]
                if rule == "full":
                    from ermcd.primal_solvers import full_batch_u
                    from ermcd.sampling import SERIAL

                    s = Sampling(rule=SERIAL, n=X.d, p=np.full(X.d, 1.0 / X.d))
                    u = full_batch_u(X)
                else:
                    probs = config["sampling"].get("probs", "uniform")
                    u = u_serial(X)
                    if probs == "importance":
                        from ermcd.sampling import importance_probs

                        s = serial_sampling(importance_probs(u, problem.nlg))
                    else:
                        s = uniform_serial_sampling(X.d)
                trace = nsync_run(problem, s, epochs, rng, u=u, target_gap=target)
        trace.meta.update(
            {
                "config_hash": chash,
                "seed": seed,
                "method": method,
                "version": __version__,
            }
        )
        epochs_to_target = None
        if target is not None:
            crossing = trace.crossing(target, x="epoch")
            epochs_to_target = crossing
        summaries.append(
            {
                "config_hash": chash,
                "seed": seed,
                "final_gap": trace.final_gap,
                "epochs_to_target": epochs_to_target,
            }
        )
        if out_dir is not None:
            trace.write(os.path.join(out_dir, f"{chash}_seed{seed}.csv"))
        traces.append(trace)

    if out_dir is not None:
        vals = [s["epochs_to_target"] for s in summaries]
        known = [v for v in vals if v is not None]
        index_path = os.path.join(out_dir, "index.json")
        index = []
        if os.path.exists(index_path):
            with open(index_path) as f:
                index = json.load(f)
        index.append(
            {
                "config_hash": chash,
                "seeds": list(seeds),
                "per_seed": summaries,
                "mean_epochs_to_target": float(np.mean(known)) if known else None,
                "std_epochs_to_target": float(np.std(known)) if known else None,
            }
        )
        tmp = index_path + ".tmp"
        with open(tmp, "w") as f:
            json.dump(index, f, indent=1)
        os.replace(tmp, index_path)
    return traces


@dataclass
class ComparisonResult:
    per_seed_ratio: list
    mean_ratio: Optional[float]
    std_ratio: Optional[float]
    censored_a: int
    censored_b: int
    theoretical_ratio: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "per_seed_ratio": self.per_seed_ratio,
            "mean_ratio": self.mean_ratio,
            "std_ratio": self.std_ratio,
            "censored_a": self.censored_a,
            "censored_b": self.censored_b,
            "theoretical_ratio": self.theoretical_ratio,
        }


def compare_runs(
    traces_a: list[Trace],
    traces_b: list[Trace],
    target_gap: float,
    x: str = "effective_passes",
) -> ComparisonResult:
    """Per-seed ratio of the x-axis values at the first target crossing.

    Ratio is B's crossing over A's (so >1 means A is faster). Seeds where
    either side never reaches the target are marked censored, never
    silently dropped into the mean. When both sides carry a theoretical
    rate in meta["theta"], their ratio is reported alongside.
    """
    ratios = []
    censored_a = censored_b = 0
    for ta, tb in zip(traces_a, traces_b):
        xa = ta.crossing(target_gap, x=x)
        xb = tb.crossing(target_gap, x=x)
        if xa is None:
            censored_a += 1
        if xb is None:
            censored_b += 1
        if xa is None or xb is None:
            ratios.append("censored")
        else:
            ratios.append(xb / xa)
    clean = [r for r in ratios if r != "censored"]
    theo = None
    th_a = traces_a[0].meta.get("theta") if traces_a else None
    th_b = traces_b[0].meta.get("theta") if traces_b else None
    if th_a and th_b:
        theo = th_a / th_b
    return ComparisonResult(
        per_seed_ratio=ratios,
        mean_ratio=float(np.mean(clean)) if clean else None,
        std_ratio=float(np.std(clean)) if clean else None,
        censored_a=censored_a,
        censored_b=censored_b,
        theoretical_ratio=theo,
    )
