from __future__ import annotations

import time
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import AuditError
from ..core.model import CommunityInstance, HomeSpec, baseline_objective, target_profile, validate_instance
from .baseline import build_baseline
from .sampling import GenConfig, sample_home
from .weather import ingest_weather_csv, synth_weather


def home_rng(seed: int, home_id: int, attempt: int) -> np.random.Generator:
    """Independent stream per (seed, home, attempt); order of generation is irrelevant."""
    return np.random.default_rng([seed, home_id, attempt])


def community_weather(config: GenConfig) -> np.ndarray:
    if config.weather_csv:
        return ingest_weather_csv(config.weather_csv, config.grid)

    return synth_weather(config.grid, config.weather_low_c, config.weather_high_c)


def generate_home(config: GenConfig, weather: np.ndarray, home_id: int) -> Tuple[HomeSpec, int]:
    """Sample until the baseline passes its audit; returns the home and the resample count."""
    last: Optional[AuditError] = None

    for attempt in range(config.max_resamples):
        home = sample_home(home_rng(config.seed, home_id, attempt), config, weather, home_id)

        try:
            baseline = build_baseline(home, weather, config.grid)
        except AuditError as exc:
            last = exc
            continue

        return home.with_baseline(baseline), attempt

    raise AuditError(
        f"home {home_id}: no audit-feasible baseline after {config.max_resamples} draws ({last})",
        home=home_id,
        tags=last.tags if last else (),
    )


def generate_community(
    config: GenConfig,
    target: Optional[Sequence[float]] = None,
    weather: Optional[np.ndarray] = None,
    verbose: bool = True,
) -> CommunityInstance:
    started = time.perf_counter()
    grid = config.grid
    weather = community_weather(config) if weather is None else np.asarray(weather, dtype=float)

    homes: List[HomeSpec] = []
    resamples = 0

    for i in range(config.N):
        home, extra = generate_home(config, weather, i)
        homes.append(home)
        resamples += extra

    q = target_profile(homes, grid) if target is None else np.asarray(target, dtype=float)
    instance = CommunityInstance(grid=grid, homes=tuple(homes), weather=weather, target=q, seed=config.seed)
    validate_instance(instance)

    if verbose:
        print(
            f"[gen] N={config.N} K={grid.K} seed={config.seed} resamples={resamples} "
            f"q={float(q[0]):.4f} baseline_obj={baseline_objective(instance):.6g} "
            f"elapsed_s={time.perf_counter() - started:.2f}"
        )

    return instance
