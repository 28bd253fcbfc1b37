import math
import os

from dotenv import load_dotenv

load_dotenv()


def _env_float(name: str, default: str) -> float:
    raw = os.getenv(name, default).strip().lower()

    if raw in {"inf", "infinity", "none"}:
        return math.inf

    return float(raw)


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in {"1", "true", "yes", "on"}


SOLVER_CONFIG = {
    "feas_tol": float(os.getenv("LOAD_SHAPER_FEAS_TOL", "1e-7")),
    "int_tol": float(os.getenv("LOAD_SHAPER_INT_TOL", "1e-6")),
    "rc_tol": float(os.getenv("LOAD_SHAPER_RC_TOL", "1e-7")),
    "pivot_tol": float(os.getenv("LOAD_SHAPER_PIVOT_TOL", "1e-9")),
    "refactor_every": int(os.getenv("LOAD_SHAPER_REFACTOR_EVERY", "64")),
    "stall_limit": int(os.getenv("LOAD_SHAPER_STALL_LIMIT", "50")),
    "max_lp_iters": int(os.getenv("LOAD_SHAPER_MAX_LP_ITERS", "200000")),
    "cg_eps": float(os.getenv("LOAD_SHAPER_CG_EPS", "1e-3")),
    "cg_kappa": _env_float("LOAD_SHAPER_CG_KAPPA", "5"),
    "cg_max_iters": int(os.getenv("LOAD_SHAPER_CG_MAX_ITERS", "500")),
    "final_rmp_gap": float(os.getenv("LOAD_SHAPER_FINAL_RMP_GAP", "1e-4")),
    "final_rmp_time_s": float(os.getenv("LOAD_SHAPER_FINAL_RMP_TIME_S", "300")),
    "pricing_workers": int(os.getenv("LOAD_SHAPER_PRICING_WORKERS", "1")),
    "verbose": _env_bool("LOAD_SHAPER_VERBOSE", "0"),
}

GEN_CONFIG = {
    "intervals": int(os.getenv("LOAD_SHAPER_K", "96")),
    "interval_hours": float(os.getenv("LOAD_SHAPER_DT_HOURS", "0.25")),
    "weather_low_c": float(os.getenv("LOAD_SHAPER_WEATHER_LOW_C", "-2")),
    "weather_high_c": float(os.getenv("LOAD_SHAPER_WEATHER_HIGH_C", "8")),
    "max_resamples": int(os.getenv("LOAD_SHAPER_MAX_RESAMPLES", "20")),
}

BENCH_CONFIG = {
    "time_budget_s": float(os.getenv("LOAD_SHAPER_BUDGET_S", "900")),
    "output_dir": os.getenv("LOAD_SHAPER_OUTPUT_DIR", "./bench_out"),
}
