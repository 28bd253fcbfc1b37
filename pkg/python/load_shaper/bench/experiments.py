"""
Experiment matrix
=================
1) run_one     – one (instance, method) solve with timing, pseudogap and DNF flag
2) run_matrix  – every (N, seed, method) of an ExperimentSpec + summary table
3) summarize   – mean / std / Student-t 95% half-width per (N, method, metric)

Outputs: runs.csv, summary.csv, manifest.json (+ per-run CG traces and load
profiles when requested).
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from ..community.generator import generate_community
from ..community.sampling import GenConfig
from ..core.model import CANONICAL_APPLIANCES, CommunityInstance, Schedule
from ..core.settings import BENCH_CONFIG, SOLVER_CONFIG
from ..solvers.centralized import solve_centralized
from ..solvers.restricted_master import run_restricted_master_heuristic, write_trace_csv
from .profiles import export_load_profile, profile_sparsity


METHODS = ("central@1e-4", "central@1e-2", "dw@5", "dw@10", "dw@inf")
ORACLE = "central@1e-4"

SUMMARY_METRICS = ("wall_s", "pseudogap")

PACKAGES = ("numpy", "scipy", "pandas", "pydantic", "python-dotenv")


# =========================================================
# Types
# =========================================================

@dataclass(frozen=True)
class ExperimentSpec:
    homes: Tuple[int, ...]
    seeds: Tuple[int, ...]
    methods: Tuple[str, ...] = ("central@1e-4", "dw@5")
    time_budget_s: float = BENCH_CONFIG["time_budget_s"]
    output_dir: str = BENCH_CONFIG["output_dir"]
    intervals: int = 96
    eps: float = SOLVER_CONFIG["cg_eps"]
    appliances: Tuple[str, ...] = CANONICAL_APPLIANCES
    export_profiles: bool = False
    export_traces: bool = False

    def __post_init__(self):
        if not self.homes or not self.seeds or not self.methods:
            raise ValueError("ExperimentSpec needs nonempty homes, seeds and methods")

        if not self.time_budget_s > 0:
            raise ValueError(f"time_budget_s must be > 0, got {self.time_budget_s}")

        for m in self.methods:
            parse_method(m)


@dataclass
class MatrixResult:
    runs: pd.DataFrame
    summary: pd.DataFrame
    paths: Dict[str, Path] = field(default_factory=dict)


# =========================================================
# Helpers
# =========================================================

def parse_method(method: str) -> Tuple[str, float]:
    """"central@1e-4" -> ("central", 1e-4); "dw@inf" -> ("dw", inf)."""
    kind, sep, raw = method.partition("@")

    if kind not in ("central", "dw") or not sep:
        raise ValueError(f"unknown method {method!r}; expected central@<gap> or dw@<kappa>")

    try:
        param = float(raw)
    except ValueError:
        raise ValueError(f"method {method!r}: cannot parse parameter {raw!r}") from None

    if kind == "central" and not param >= 0:
        raise ValueError(f"method {method!r}: gap must be >= 0")
    if kind == "dw" and not param >= 1:
        raise ValueError(f"method {method!r}: kappa must be >= 1 or inf")

    return kind, param


def pseudogap(obj_method: float, obj_oracle: float) -> float:
    """(z_method - z*) / z*; 0 when both are 0, inf (flagged) when only z* is."""
    if obj_oracle == 0.0:
        return 0.0 if abs(obj_method) <= 1e-9 else math.inf

    return (obj_method - obj_oracle) / obj_oracle


def package_versions() -> Dict[str, str]:
    out: Dict[str, str] = {}

    for name in PACKAGES:
        try:
            out[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            out[name] = "missing"

    return out


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]

    return value


# =========================================================
# Runs
# =========================================================

def run_one(
    instance: CommunityInstance,
    method: str,
    budget_s: float,
    eps: Optional[float] = None,
) -> Tuple[dict, Schedule, object]:
    kind, param = parse_method(method)
    started = time.perf_counter()

    if kind == "central":
        res = solve_centralized(instance, rel_gap=param, time_limit=budget_s, verbose=False)
        record = {
            "obj": res.obj,
            "bound": res.bound,
            "achieved_gap": res.rel_gap,
            "cg_iters": 0,
            "status": res.status,
        }
        schedule = res.schedule
    else:
        res = run_restricted_master_heuristic(instance, eps=eps, kappa=param, time_limit=budget_s)
        record = {
            "obj": res.obj,
            "bound": res.xi,
            "achieved_gap": res.rel_gap,
            "cg_iters": res.iterations,
            "status": res.status,
        }
        schedule = res.schedule

    wall = time.perf_counter() - started
    record["wall_s"] = wall
    record["dnf"] = bool(wall > budget_s)
    return record, schedule, res


def summarize(runs: pd.DataFrame) -> pd.DataFrame:
    """Long format: one row per (N, method, metric), DNF runs excluded."""
    rows: List[dict] = []

    for (N, method), group in runs.groupby(["N", "method"], sort=True):
        done = group[~group["dnf"]]

        for metric in SUMMARY_METRICS:
            values = done[metric].to_numpy(dtype=float)
            values = values[np.isfinite(values)]
            n = len(values)
            mean = float(values.mean()) if n else math.nan
            std = float(values.std(ddof=1)) if n > 1 else math.nan
            half = float(stats.t.ppf(0.975, n - 1) * std / math.sqrt(n)) if n > 1 else math.nan

            rows.append(
                {
                    "N": int(N),
                    "method": method,
                    "metric": metric,
                    "n": n,
                    "dnf": int(group["dnf"].sum()),
                    "mean": mean,
                    "std": std,
                    "ci95": half,
                }
            )

    return pd.DataFrame(rows, columns=["N", "method", "metric", "n", "dnf", "mean", "std", "ci95"])


def run_matrix(spec: ExperimentSpec, verbose: bool = True) -> MatrixResult:
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    records: List[dict] = []

    for N in spec.homes:
        for seed in spec.seeds:
            config = GenConfig(N=N, seed=seed, intervals=spec.intervals, appliances=spec.appliances)
            instance = generate_community(config, verbose=False)

            solved: Dict[str, dict] = {}
            order = list(spec.methods)

            # the oracle runs first so every row can carry its pseudogap
            if ORACLE in order:
                order.remove(ORACLE)
                order.insert(0, ORACLE)

            oracle_obj: Optional[float] = None

            if ORACLE not in spec.methods:
                ref, _, _ = run_one(instance, ORACLE, spec.time_budget_s)
                oracle_obj = ref["obj"]

            for method in order:
                record, schedule, res = run_one(instance, method, spec.time_budget_s, spec.eps)

                if method == ORACLE:
                    oracle_obj = record["obj"]

                record.update(
                    {
                        "N": N,
                        "seed": seed,
                        "method": method,
                        "pseudogap": pseudogap(record["obj"], oracle_obj),
                        **profile_sparsity(instance, schedule),
                    }
                )
                solved[method] = record

                stem = f"N{N}_s{seed}_{method.replace('@', '_')}"

                if spec.export_profiles:
                    export_load_profile(instance, schedule, out / "profiles" / f"{stem}.csv")
                if spec.export_traces and hasattr(res, "history"):
                    write_trace_csv(res.history, out / "traces" / f"{stem}.csv")

                if verbose:
                    print(
                        f"[bench] N={N} seed={seed} method={method} obj={record['obj']:.6g} "
                        f"pseudogap={record['pseudogap']:.3e} wall_s={record['wall_s']:.2f} "
                        f"dnf={record['dnf']}"
                    )

            records.extend(solved[m] for m in spec.methods)

    columns = [
        "N", "seed", "method", "status", "obj", "bound", "achieved_gap", "pseudogap",
        "cg_iters", "wall_s", "dnf", "zero_fraction", "abs_dev_optimal", "abs_dev_desirable",
    ]
    runs = pd.DataFrame(records, columns=columns)
    summary = summarize(runs)

    paths = {
        "runs": out / "runs.csv",
        "summary": out / "summary.csv",
        "manifest": out / "manifest.json",
    }
    runs.to_csv(paths["runs"], index=False)
    summary.to_csv(paths["summary"], index=False)

    manifest = {
        "spec": asdict(spec),
        "oracle": ORACLE,
        "versions": package_versions(),
        "solver_config": SOLVER_CONFIG,
    }
    paths["manifest"].write_text(json.dumps(_json_safe(manifest), indent=2), encoding="utf-8")

    if verbose:
        print(
            f"[bench] runs={len(runs)} summary_rows={len(summary)} dnf={int(runs['dnf'].sum())} "
            f"out={out}"
        )

    return MatrixResult(runs=runs, summary=summary, paths=paths)
